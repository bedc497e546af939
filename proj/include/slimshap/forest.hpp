#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace slimshap {

// Classification random forest over a binary response. Implemented from
// scratch so that fits are bit-reproducible from the seed alone: bootstrap
// draws, feature sampling and tie-breaking are all fully specified.
struct ForestConfig {
  int n_trees = 10;
  int max_depth = 10;
  int max_features = 0;  // 0 means ceil(sqrt(d))
  int min_leaf = 5;
  std::uint64_t seed = 0;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf: fraction of positive labels
};

struct ClassificationTree {
  std::vector<TreeNode> nodes;  // node 0 is the root
};

struct ForestModel {
  std::vector<ClassificationTree> trees;
  int d = 0;
  ForestConfig config;
  bool constant = false;  // single-class training labels
  double constant_value = 0.0;
  std::vector<double> raw_importance;  // mean per-tree impurity decrease, unnormalized
};

// labels must be 0/1; throws on fewer than two rows or other label values.
// Trees are independent given (seed, tree index), so the thread count never
// changes the fitted model.
ForestModel fit_forest(const Eigen::MatrixXd& X, const std::vector<int>& labels,
                       const ForestConfig& config, int threads = 1);

double predict_proba_row(const ForestModel& model, const Eigen::RowVectorXd& row);
Eigen::VectorXd predict_proba(const ForestModel& model, const Eigen::MatrixXd& rows);

// Impurity-decrease importance normalized to sum one; uniform when no split
// anywhere contributed (constant models included).
std::vector<double> gini_importance(const ForestModel& model);

}  // namespace slimshap
