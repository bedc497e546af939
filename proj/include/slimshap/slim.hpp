#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "slimshap/dataset.hpp"
#include "slimshap/spline.hpp"

namespace slimshap {

// Surrogate tree with additive spline models in every node: internal nodes
// split on one feature, and each node carries the GAM fitted to the rows it
// receives (terminals use theirs for prediction, internal ones make depth
// truncation and tuning cheap).
struct SlimConfig {
  int max_depth = 5;
  int min_node_size = 30;
  int n_knots = 10;
  int candidate_quantiles = 16;
  double min_rel_improvement = 1e-3;
  double ridge = kDefaultRidge;
};

struct SlimNode {
  int feature = -1;  // -1 marks a terminal
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int parent = -1;
  int depth = 0;
  int count = 0;       // training rows reaching the node
  int left_count = 0;  // of those, how many satisfy x < threshold
  int terminal_index = -1;
  SubsetGamFit gam;  // over all features, fitted on this node's rows
};

struct SlimTree {
  std::vector<SlimNode> nodes;       // preorder, root at 0
  std::vector<int> terminals;        // node ids of terminals, left-to-right
  std::vector<SplineBasis1D> basis;  // training-data quantile knots, all features
  int p = 0;
  int depth = 0;
  double train_mse = 0.0;
  double train_r2 = 0.0;
};

// Greedy growth against Dataset::predictions. Rows route left iff
// x_feature < threshold, so ties go right. A node splits only when the best
// candidate improves its residual sum of squares by min_rel_improvement
// relative and both children keep min_node_size rows.
SlimTree fit_slim(const Dataset& data, const SlimConfig& config);

Eigen::VectorXd predict_slim(const SlimTree& tree, const Eigen::MatrixXd& rows);

// terminal node id a row routes to (optionally stopping at a depth cap)
int route_row(const SlimTree& tree, const Eigen::RowVectorXd& row, int max_depth = -1);

struct FidelityReport {
  double mse_fidelity = 0.0;  // against the surrogate's target (model predictions)
  double r2_fidelity = 0.0;
  std::optional<double> mse_accuracy;  // against an original response, when given
  std::optional<double> r2_accuracy;
};

FidelityReport evaluate_fidelity(const SlimTree& tree, const Dataset& data,
                                 const std::optional<Eigen::VectorXd>& original_response = std::nullopt);

// Depth chosen on a 90/10 split (seeded shuffle): grow once at max_depth on
// the training part, score each depth truncation on the holdout, keep the
// smallest depth within 0.005 R^2 of the best, then refit on all rows.
struct TunedSlim {
  SlimTree tree;
  int chosen_depth = 0;
  std::vector<double> holdout_r2;  // by depth, 0..max_depth
};

TunedSlim fit_slim_tuned(const Dataset& data, const SlimConfig& config, std::uint64_t seed);

// training rows reaching every node (routing by the stored splits)
std::vector<std::vector<int>> node_training_rows(const SlimTree& tree, const Eigen::MatrixXd& X);

}  // namespace slimshap
