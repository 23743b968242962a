#pragma once

// Umbrella header: the numerical library without the CLI layer.

#include "chernoff/covariance.hpp"
#include "chernoff/dimred.hpp"
#include "chernoff/divergence.hpp"
#include "chernoff/errors.hpp"
#include "chernoff/gaussian_tree.hpp"
#include "chernoff/geneig.hpp"
#include "chernoff/simulate.hpp"
#include "chernoff/tree_ops.hpp"
