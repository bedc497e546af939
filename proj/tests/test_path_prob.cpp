#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>

#include "slimshap/path_prob.hpp"
#include "slimshap/rng.hpp"

using namespace slimshap;

namespace {

Eigen::MatrixXd gauss_matrix(int n, int p, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd X(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) X(i, j) = rng.gauss();
  return X;
}

Dataset step_dataset(const Eigen::MatrixXd& X) {
  Eigen::VectorXd y(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) y(i) = (X(i, 0) < 0 ? 5.0 : -5.0) + X(i, 2);
  return Dataset::from_matrix(X, y);
}

SlimTree one_split_tree(const Eigen::MatrixXd& X) {
  SlimConfig cfg;
  cfg.max_depth = 1;
  SlimTree tree = fit_slim(step_dataset(X), cfg);
  REQUIRE(tree.nodes.size() == 3);
  REQUIRE(tree.nodes[0].feature == 0);
  return tree;
}

// Three-level tree with five terminals, used to pin down deterministic pruning.
SlimTree hand_tree() {
  SlimTree tree;
  tree.p = 5;
  tree.depth = 3;
  tree.nodes.resize(9);
  auto split = [&](int id, int feature, double threshold, int left, int right, int depth) {
    tree.nodes[static_cast<std::size_t>(id)].feature = feature;
    tree.nodes[static_cast<std::size_t>(id)].threshold = threshold;
    tree.nodes[static_cast<std::size_t>(id)].left = left;
    tree.nodes[static_cast<std::size_t>(id)].right = right;
    tree.nodes[static_cast<std::size_t>(id)].depth = depth;
  };
  split(0, 1, 0.0, 1, 6, 0);
  split(1, 0, 0.0, 2, 3, 1);
  tree.nodes[2].depth = 2;
  split(3, 4, 0.0, 4, 5, 2);
  tree.nodes[4].depth = tree.nodes[5].depth = 3;
  split(6, 3, 0.5, 7, 8, 1);
  tree.nodes[7].depth = tree.nodes[8].depth = 2;
  tree.terminals = {2, 4, 5, 7, 8};
  return tree;
}

}  // namespace

TEST_CASE("a subset containing the split variable routes deterministically") {
  Eigen::MatrixXd X = gauss_matrix(900, 3, 21);
  SlimTree tree = one_split_tree(X);
  NodeModelBank bank = fit_node_models(tree, X, PathProbConfig{}, 5);

  FeatureSubset u = FeatureSubset::from_members({0}, 3);
  for (int i = 0; i < 40; ++i) {
    Eigen::RowVectorXd x = X.row(i);
    const double q = conditional_split_prob(tree, bank, 0, u, x);
    CHECK((q == 0.0 || q == 1.0));
    CHECK(q == (x(0) < tree.nodes[0].threshold ? 1.0 : 0.0));
    Eigen::VectorXd probs = terminal_probabilities(tree, bank, u, x);
    const int routed = route_row(tree, x);
    const int slot = routed == tree.terminals[0] ? 0 : 1;
    CHECK(probs(slot) == 1.0);
    CHECK(probs(1 - slot) == 0.0);
  }
}

TEST_CASE("subsets missing the candidate set fall back to the empirical fraction") {
  Eigen::MatrixXd X = gauss_matrix(1200, 6, 22);
  SlimTree tree = one_split_tree(X);
  NodeModelBank bank = fit_node_models(tree, X, PathProbConfig{}, 6);
  const NodeModels& models = bank.nodes[0];
  REQUIRE(models.top_vars.size() == 3);

  // empirical fraction must reproduce the stored training partition exactly
  CHECK(models.empirical_left ==
        static_cast<double>(tree.nodes[0].left_count) / static_cast<double>(tree.nodes[0].count));

  std::vector<int> outside;
  for (int j = 1; j < 6; ++j)
    if (std::find(models.top_vars.begin(), models.top_vars.end(), j) == models.top_vars.end())
      outside.push_back(j);
  REQUIRE(outside.size() == 2);
  FeatureSubset u = FeatureSubset::from_members(outside, 6);
  Eigen::RowVectorXd x = X.row(11);
  CHECK(conditional_split_prob(tree, bank, 0, u, x) == doctest::Approx(models.empirical_left));
}

TEST_CASE("a strongly dependent feature is selected and drives the branch probability") {
  const int n = 3000;
  Rng rng(23);
  Eigen::MatrixXd X(n, 4);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = rng.gauss();
    X(i, 1) = X(i, 0) + 0.1 * rng.gauss();  // near-copy of the split variable
    X(i, 2) = rng.gauss();
    X(i, 3) = rng.gauss();
  }
  SlimTree tree = one_split_tree(X);
  NodeModelBank bank = fit_node_models(tree, X, PathProbConfig{}, 7);
  const NodeModels& models = bank.nodes[0];

  REQUIRE(std::find(models.top_vars.begin(), models.top_vars.end(), 1) != models.top_vars.end());
  for (int j = 0; j < 4; ++j)
    CHECK(models.selector_importance(1) >= models.selector_importance(j));

  FeatureSubset u = FeatureSubset::from_members({1}, 4);
  Eigen::RowVectorXd lo = Eigen::RowVectorXd::Zero(4), hi = Eigen::RowVectorXd::Zero(4);
  lo(1) = -3.0;
  hi(1) = 3.0;
  CHECK(conditional_split_prob(tree, bank, 0, u, lo) > 0.9);
  CHECK(conditional_split_prob(tree, bank, 0, u, hi) < 0.1);

  // saturated inputs stay strictly inside (0,1)
  lo(1) = -100.0;
  hi(1) = 100.0;
  CHECK(conditional_split_prob(tree, bank, 0, u, lo) <= 1.0 - 1e-6);
  CHECK(conditional_split_prob(tree, bank, 0, u, hi) >= 1e-6);
}

TEST_CASE("the empty subset reproduces empirical terminal frequencies") {
  Eigen::MatrixXd X = gauss_matrix(2000, 3, 24);
  Eigen::VectorXd y(2000);
  for (int i = 0; i < 2000; ++i)
    y(i) = (X(i, 0) < 0 ? 4.0 : -4.0) + (X(i, 1) < 0.3 ? 2.0 : -1.0) + 0.3 * X(i, 2);
  SlimConfig cfg;
  cfg.max_depth = 2;
  SlimTree tree = fit_slim(Dataset::from_matrix(X, y), cfg);
  REQUIRE(tree.terminals.size() >= 3);
  NodeModelBank bank = fit_node_models(tree, X, PathProbConfig{}, 8);

  FeatureSubset empty(0u, 3);
  Eigen::RowVectorXd x = X.row(0);
  Eigen::VectorXd probs = terminal_probabilities(tree, bank, empty, x);
  for (std::size_t t = 0; t < tree.terminals.size(); ++t) {
    const double frac =
        static_cast<double>(tree.nodes[static_cast<std::size_t>(tree.terminals[t])].count) / 2000.0;
    CHECK(probs(static_cast<Eigen::Index>(t)) == doctest::Approx(frac).epsilon(1e-12));
  }
  CHECK(probs.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("the full subset is a one-hot on the routed terminal") {
  Eigen::MatrixXd X = gauss_matrix(1500, 3, 25);
  Eigen::VectorXd y(1500);
  for (int i = 0; i < 1500; ++i) y(i) = (X(i, 0) < 0 ? 3.0 : -3.0) + (X(i, 1) < 0 ? 1.0 : 0.0);
  SlimConfig cfg;
  cfg.max_depth = 2;
  SlimTree tree = fit_slim(Dataset::from_matrix(X, y), cfg);
  NodeModelBank bank = fit_node_models(tree, X, PathProbConfig{}, 9);

  FeatureSubset full = FeatureSubset::from_members({0, 1, 2}, 3);
  for (int i = 0; i < 30; ++i) {
    Eigen::RowVectorXd x = X.row(i);
    Eigen::VectorXd probs = terminal_probabilities(tree, bank, full, x);
    const int routed = route_row(tree, x);
    for (std::size_t t = 0; t < tree.terminals.size(); ++t)
      CHECK(probs(static_cast<Eigen::Index>(t)) == (tree.terminals[t] == routed ? 1.0 : 0.0));
  }
}

TEST_CASE("known coordinates prune impossible branches to exact zeros") {
  SlimTree tree = hand_tree();
  Eigen::MatrixXd X = gauss_matrix(4000, 5, 26);
  NodeModelBank bank = fit_node_models(tree, X, PathProbConfig{}, 10);

  FeatureSubset u = FeatureSubset::from_members({0, 3}, 5);
  Eigen::RowVectorXd x(5);
  x << -2.0, 1.0, 3.0, 0.0, 1.0;
  Eigen::VectorXd probs = terminal_probabilities(tree, bank, u, x);
  // x0 = -2 rules out the right side under the first left child; x3 = 0 rules out
  // the rightmost terminal; only the root split stays probabilistic.
  const double q = conditional_split_prob(tree, bank, 0, u, x);
  CHECK(q > 0.0);
  CHECK(q < 1.0);
  CHECK(probs(0) == q);
  CHECK(probs(1) == 0.0);
  CHECK(probs(2) == 0.0);
  CHECK(probs(3) == 1.0 - q);
  CHECK(probs(4) == 0.0);
  CHECK(probs.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("terminal masses sum to one for arbitrary subsets") {
  Eigen::MatrixXd X = gauss_matrix(1600, 4, 27);
  Eigen::VectorXd y(1600);
  for (int i = 0; i < 1600; ++i) y(i) = X(i, 0) * X(i, 1) + X(i, 2);
  SlimConfig cfg;
  cfg.max_depth = 3;
  SlimTree tree = fit_slim(Dataset::from_matrix(X, y), cfg);
  REQUIRE(tree.nodes.size() > 1);
  NodeModelBank bank = fit_node_models(tree, X, PathProbConfig{}, 11);

  for (const FeatureSubset& u : enumerate_subsets(4)) {
    for (int i = 0; i < 5; ++i) {
      Eigen::VectorXd probs = terminal_probabilities(tree, bank, u, X.row(100 + 7 * i));
      CHECK(probs.minCoeff() >= 0.0);
      CHECK(probs.sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("the cached sweep reproduces row-by-row evaluation exactly") {
  Eigen::MatrixXd X = gauss_matrix(1600, 4, 28);
  Eigen::VectorXd y(1600);
  for (int i = 0; i < 1600; ++i) y(i) = X(i, 0) * X(i, 1) - X(i, 3);
  SlimConfig cfg;
  cfg.max_depth = 3;
  SlimTree tree = fit_slim(Dataset::from_matrix(X, y), cfg);
  REQUIRE(tree.nodes.size() > 1);
  NodeModelBank bank = fit_node_models(tree, X, PathProbConfig{}, 12);

  Eigen::MatrixXd queries = X.topRows(60);
  BranchProbCache cache = build_branch_cache(tree, bank, queries);
  for (const FeatureSubset& u : enumerate_subsets(4)) {
    Eigen::MatrixXd mat = terminal_prob_matrix(tree, bank, cache, u);
    REQUIRE(mat.rows() == 60);
    for (int i = 0; i < 60; ++i) {
      Eigen::VectorXd direct = terminal_probabilities(tree, bank, u, queries.row(i));
      CHECK((mat.row(i).transpose() - direct).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("bank shape matches the tree and the configured candidate budget") {
  Eigen::MatrixXd X = gauss_matrix(1600, 5, 29);
  Eigen::VectorXd y(1600);
  for (int i = 0; i < 1600; ++i)
    y(i) = (X(i, 0) < 0 ? 3.0 : -3.0) + (X(i, 1) < 0.5 ? 1.5 : 0.0) + 0.2 * X(i, 4);
  SlimConfig cfg;
  cfg.max_depth = 2;
  SlimTree tree = fit_slim(Dataset::from_matrix(X, y), cfg);
  NodeModelBank bank = fit_node_models(tree, X, PathProbConfig{}, 13);

  int splits = 0;
  for (std::size_t m = 0; m < tree.nodes.size(); ++m) {
    const SlimNode& node = tree.nodes[m];
    const NodeModels& models = bank.nodes[m];
    if (node.feature < 0) {
      CHECK(models.top_vars.empty());
      CHECK(models.event.empty());
      continue;
    }
    ++splits;
    CHECK(models.top_vars.size() == 3);
    CHECK(std::is_sorted(models.top_vars.begin(), models.top_vars.end()));
    CHECK(std::find(models.top_vars.begin(), models.top_vars.end(), node.feature) ==
          models.top_vars.end());
    CHECK(models.event.size() == 8);
    CHECK(models.selector_importance(node.feature) == 0.0);
    for (std::uint32_t s = 1; s < 8; ++s)
      CHECK((models.event[s].constant || !models.event[s].trees.empty()));
  }
  CHECK(bank.n_split_nodes == splits);
  CHECK(bank.n_event_models == 7 * splits);
}

TEST_CASE("bank fitting is reproducible and thread-count invariant") {
  Eigen::MatrixXd X = gauss_matrix(1000, 4, 30);
  SlimTree tree = one_split_tree(X);
  NodeModelBank a = fit_node_models(tree, X, PathProbConfig{}, 99, 1);
  NodeModelBank b = fit_node_models(tree, X, PathProbConfig{}, 99, 3);

  BranchProbCache ca = build_branch_cache(tree, a, X.topRows(50), 1);
  BranchProbCache cb = build_branch_cache(tree, b, X.topRows(50), 4);
  for (const FeatureSubset& u : enumerate_subsets(4)) {
    Eigen::MatrixXd ma = terminal_prob_matrix(tree, a, ca, u);
    Eigen::MatrixXd mb = terminal_prob_matrix(tree, b, cb, u);
    CHECK((ma - mb).cwiseAbs().maxCoeff() == 0.0);
  }

  NodeModelBank c = fit_node_models(tree, X, PathProbConfig{}, 100, 1);
  bool any_diff = false;
  BranchProbCache cc = build_branch_cache(tree, c, X.topRows(50), 1);
  for (const FeatureSubset& u : enumerate_subsets(4)) {
    if (u.contains(0) || u.empty()) continue;  // deterministic / empirical keys ignore the seed
    if (((terminal_prob_matrix(tree, a, ca, u) - terminal_prob_matrix(tree, c, cc, u))
             .cwiseAbs()
             .maxCoeff()) > 0.0)
      any_diff = true;
  }
  CHECK(any_diff);
}

TEST_CASE("invalid inputs are rejected") {
  Eigen::MatrixXd X = gauss_matrix(600, 3, 31);
  SlimTree tree = one_split_tree(X);
  NodeModelBank bank = fit_node_models(tree, X, PathProbConfig{}, 14);
  CHECK_THROWS_AS(conditional_split_prob(tree, bank, 1, FeatureSubset(0u, 3), X.row(0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(fit_node_models(tree, gauss_matrix(10, 4, 1), PathProbConfig{}, 1),
                  std::invalid_argument);
  PathProbConfig bad;
  bad.top_vars = 0;
  CHECK_THROWS_AS(fit_node_models(tree, X, bad, 1), std::invalid_argument);
}
