#include <gtest/gtest.h>

#include "chernoff/chernoff.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace chernoff;

namespace {

TreeSpec chain3() { return {3, {{1, 2, 0.5}, {2, 3, 0.6}}}; }

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(ValidateTree, AcceptsChain) { EXPECT_EQ(validate_tree(chain3()), chain3()); }

TEST(ValidateTree, RejectsCycle) {
  TreeSpec t{3, {{1, 2, 0.5}, {2, 3, 0.6}, {1, 3, 0.1}}};
  EXPECT_THROW(validate_tree(t), CycleError);
}

TEST(ValidateTree, RejectsUnitWeight) {
  EXPECT_THROW(validate_tree({2, {{1, 2, 1.0}}}), WeightOutOfRange);
  EXPECT_THROW(validate_tree({2, {{1, 2, -1.0}}}), WeightOutOfRange);
  EXPECT_THROW(validate_tree({2, {{1, 2, std::nan("")}}}), WeightOutOfRange);
}

TEST(ValidateTree, RejectsDuplicateEdge) {
  EXPECT_THROW(validate_tree({3, {{1, 2, 0.5}, {2, 1, 0.3}}}), DuplicateEdge);
}

TEST(ValidateTree, RejectsMissingEdges) {
  EXPECT_THROW(validate_tree({4, {{1, 2, 0.5}, {3, 4, 0.2}}}), DisconnectedError);
}

TEST(ValidateTree, RejectsBadNodeIds) {
  EXPECT_THROW(validate_tree({2, {{1, 3, 0.5}}}), InvalidNode);
  EXPECT_THROW(validate_tree({0, {}}), InvalidNode);
  EXPECT_THROW(validate_tree({2, {{2, 2, 0.5}}}), CycleError);
}

TEST(ValidateTree, ZeroWeightWarns) {
  std::vector<std::string> warnings;
  validate_tree({2, {{1, 2, 0.0}}}, &warnings);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("weight 0"), std::string::npos);
}

TEST(BuildCovariance, SingleEdge) {
  const auto s = build_covariance({2, {{1, 2, 0.5}}});
  Eigen::Matrix2d expected;
  expected << 1, 0.5, 0.5, 1;
  EXPECT_EQ(s.matrix(), Eigen::MatrixXd(expected));
  EXPECT_TRUE(s.normalized());
}

TEST(BuildCovariance, PathProduct) {
  EXPECT_NEAR(build_covariance(chain3()).matrix()(0, 2), 0.30, 1e-15);
}

TEST(BuildCovariance, SingleNode) {
  EXPECT_EQ(build_covariance({1, {}}).matrix(), Eigen::MatrixXd::Identity(1, 1));
}

TEST(BuildCovariance, RandomTreeInverseMatchesPrecision) {
  testgen::Rng rng(101);
  const auto t = testgen::random_tree(rng, 8);
  const Eigen::MatrixXd inv = oracle::lu_inverse(build_covariance(t).matrix());
  EXPECT_LE(max_abs(inv - tree_precision(t).matrix()), 1e-10);
}

TEST(TreePrecision, SingleEdge) {
  const auto u = tree_precision({2, {{1, 2, 0.5}}}).matrix();
  EXPECT_NEAR(u(0, 0), 4.0 / 3.0, 1e-15);
  EXPECT_NEAR(u(0, 1), -2.0 / 3.0, 1e-15);
  EXPECT_NEAR(u(1, 1), 4.0 / 3.0, 1e-15);
}

TEST(TreePrecision, DiagonalFormula) {
  EXPECT_NEAR(tree_precision(chain3()).matrix()(1, 1), 1.0 + 0.25 / 0.75 + 0.36 / 0.64, 1e-14);
  EXPECT_NEAR(tree_precision(chain3()).matrix()(1, 1), 1.8958333333333333, 1e-14);
  EXPECT_EQ(tree_precision(chain3()).matrix()(0, 2), 0.0);
}

TEST(TreePrecision, RandomTreeProductIsIdentity) {
  testgen::Rng rng(102);
  const auto t = testgen::random_tree(rng, 10);
  const Eigen::MatrixXd p = build_covariance(t).matrix() * tree_precision(t).matrix();
  EXPECT_LE(max_abs(p - Eigen::MatrixXd::Identity(10, 10)), 1e-9);
}

TEST(TreeDeterminant, TwoEdges) { EXPECT_NEAR(tree_determinant(chain3()), 0.48, 1e-15); }

TEST(TreeDeterminant, SingleNodeIsOne) { EXPECT_EQ(tree_determinant({1, {}}), 1.0); }

TEST(TreeDeterminant, RandomTreeMatchesLu) {
  testgen::Rng rng(103);
  const auto t = testgen::random_tree(rng, 12);
  const double dense = oracle::lu_determinant(build_covariance(t).matrix());
  EXPECT_LE(std::abs(tree_determinant(t) - dense) / dense, 1e-10);
}

TEST(TreeProperties, ClosedFormsOnRandomTrees) {
  testgen::Rng rng(104);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = testgen::uniform_int(rng, 1, 15);
    const auto t = testgen::random_tree(rng, n);
    const auto sigma = build_covariance(t);
    for (int k = 0; k < n; ++k) ASSERT_EQ(sigma.matrix()(k, k), 1.0);
    const Eigen::MatrixXd p = sigma.matrix() * tree_precision(t).matrix();
    ASSERT_LE(max_abs(p - Eigen::MatrixXd::Identity(n, n)), 1e-9) << "trial " << trial;
    const double dense = oracle::lu_determinant(sigma.matrix());
    ASSERT_LE(std::abs(tree_determinant(t) - dense) / dense, 1e-10) << "trial " << trial;
  }
}

TEST(TreeProperties, PathProductMatchesLiteralWalk) {
  testgen::Rng rng(105);
  for (int trial = 0; trial < 50; ++trial) {
    const auto t = testgen::random_tree(rng, 9);
    const auto sigma = build_covariance(t).matrix();
    for (int a = 1; a <= 9; ++a) {
      for (int b = 1; b <= 9; ++b) {
        const auto path = detail::tree_path(t, a, b);
        double prod = 1.0;
        for (size_t k = 0; k + 1 < path.size(); ++k) {
          prod *= t.edges[detail::find_edge(t, path[k] + 1, path[k + 1] + 1)].w;
        }
        ASSERT_NEAR(sigma(a - 1, b - 1), prod, 1e-15);
      }
    }
  }
}

TEST(TreeProperties, GraftKeepsDeterminant) {
  testgen::Rng rng(106);
  for (int trial = 0; trial < 40; ++trial) {
    const auto c = testgen::star_chain(rng);
    chernoff::GraftChain chain(c.base, c.ops);
    for (const auto& t : chain.trees()) {
      ASSERT_NEAR(tree_determinant(t), tree_determinant(c.base), 1e-15);
    }
  }
}

TEST(CovarianceMatrix, RejectsAsymmetric) {
  Eigen::Matrix2d m;
  m << 1, 0.5, 0.4, 1;
  EXPECT_THROW(CovarianceMatrix{Eigen::MatrixXd(m)}, NotSymmetric);
}

TEST(CovarianceMatrix, RejectsIndefinite) {
  Eigen::Matrix2d m;
  m << 1, 2, 2, 1;
  EXPECT_THROW(CovarianceMatrix{Eigen::MatrixXd(m)}, NotPositiveDefinite);
}
