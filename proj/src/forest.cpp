#include "slimshap/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "slimshap/parallel.hpp"
#include "slimshap/rng.hpp"

namespace slimshap {

namespace {

struct TreeBuilder {
  const Eigen::MatrixXd& X;
  const std::vector<int>& y;
  const ForestConfig& cfg;
  int max_features;
  Rng rng;
  ClassificationTree tree;
  std::vector<double> importance;  // per feature, n-weighted gini decrease / bootstrap size
  std::vector<int> feat_pool;

  // scratch reused across nodes
  std::vector<std::pair<double, int>> sorted;  // (value, label)

  TreeBuilder(const Eigen::MatrixXd& X_, const std::vector<int>& y_, const ForestConfig& cfg_,
              int max_features_, Rng rng_)
      : X(X_), y(y_), cfg(cfg_), max_features(max_features_), rng(rng_) {
    importance.assign(static_cast<std::size_t>(X.cols()), 0.0);
    feat_pool.resize(static_cast<std::size_t>(X.cols()));
    std::iota(feat_pool.begin(), feat_pool.end(), 0);
  }

  static double gini(double pos, double n) {
    const double q = pos / n;
    return 2.0 * q * (1.0 - q);
  }

  int build(std::vector<int>& rows, int depth) {
    const int n = static_cast<int>(rows.size());
    int pos = 0;
    for (int r : rows) pos += y[static_cast<std::size_t>(r)];

    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[static_cast<std::size_t>(node_id)].value = static_cast<double>(pos) / n;

    if (depth >= cfg.max_depth || n < 2 * cfg.min_leaf || pos == 0 || pos == n) return node_id;

    // sample candidate features without replacement, then scan them ascending
    // so equal gains resolve to the lowest feature and threshold
    for (int k = 0; k < max_features; ++k) {
      const int j = k + static_cast<int>(rng.below(static_cast<std::uint64_t>(X.cols() - k)));
      std::swap(feat_pool[static_cast<std::size_t>(k)], feat_pool[static_cast<std::size_t>(j)]);
    }
    std::vector<int> feats(feat_pool.begin(), feat_pool.begin() + max_features);
    std::sort(feats.begin(), feats.end());

    const double parent = n * gini(pos, n);
    double best_gain = 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;
    for (int f : feats) {
      sorted.clear();
      for (int r : rows)
        sorted.emplace_back(X(r, f), y[static_cast<std::size_t>(r)]);
      std::sort(sorted.begin(), sorted.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      int pos_left = 0;
      for (int i = 0; i + 1 < n; ++i) {
        pos_left += sorted[static_cast<std::size_t>(i)].second;
        if (sorted[static_cast<std::size_t>(i)].first == sorted[static_cast<std::size_t>(i + 1)].first)
          continue;  // not a boundary between distinct values
        const int n_left = i + 1, n_right = n - n_left;
        if (n_left < cfg.min_leaf || n_right < cfg.min_leaf) continue;
        const double gain = parent - n_left * gini(pos_left, n_left) -
                            n_right * gini(pos - pos_left, n_right);
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = f;
          best_threshold = 0.5 * (sorted[static_cast<std::size_t>(i)].first +
                                  sorted[static_cast<std::size_t>(i + 1)].first);
        }
      }
    }
    if (best_feature < 0) return node_id;

    importance[static_cast<std::size_t>(best_feature)] += best_gain / static_cast<double>(y.size());

    std::vector<int> left_rows, right_rows;
    for (int r : rows)
      (X(r, best_feature) < best_threshold ? left_rows : right_rows).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    auto& node = tree.nodes[static_cast<std::size_t>(node_id)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    const int left_id = build(left_rows, depth + 1);
    tree.nodes[static_cast<std::size_t>(node_id)].left = left_id;
    const int right_id = build(right_rows, depth + 1);
    tree.nodes[static_cast<std::size_t>(node_id)].right = right_id;
    return node_id;
  }
};

}  // namespace

ForestModel fit_forest(const Eigen::MatrixXd& X, const std::vector<int>& labels,
                       const ForestConfig& config, int threads) {
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  if (n < 2) throw std::invalid_argument("fit_forest: need at least two rows");
  if (d < 1) throw std::invalid_argument("fit_forest: need at least one feature");
  if (static_cast<int>(labels.size()) != n)
    throw std::invalid_argument("fit_forest: label count does not match rows");
  int pos = 0;
  for (int v : labels) {
    if (v != 0 && v != 1) throw std::invalid_argument("fit_forest: labels must be 0 or 1");
    pos += v;
  }

  ForestModel model;
  model.d = d;
  model.config = config;
  model.config.max_features = config.max_features > 0
                                  ? std::min(config.max_features, d)
                                  : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d))));
  model.raw_importance.assign(static_cast<std::size_t>(d), 0.0);

  if (pos == 0 || pos == n) {
    model.constant = true;
    model.constant_value = pos == 0 ? 0.0 : 1.0;
    return model;
  }

  const Rng root(config.seed);
  model.trees.resize(static_cast<std::size_t>(config.n_trees));
  std::vector<std::vector<double>> tree_importance(static_cast<std::size_t>(config.n_trees));
  parallel_for(config.n_trees, threads, [&](int t) {
    Rng rng = root.derive(0x7472656573ull, static_cast<std::uint64_t>(t));
    std::vector<int> rows(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      rows[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    TreeBuilder builder(X, labels, model.config, model.config.max_features, rng);
    builder.build(rows, 0);
    model.trees[static_cast<std::size_t>(t)] = std::move(builder.tree);
    tree_importance[static_cast<std::size_t>(t)] = std::move(builder.importance);
  });
  // merge in tree order so the result never depends on scheduling
  for (const auto& imp : tree_importance)
    for (int j = 0; j < d; ++j)
      model.raw_importance[static_cast<std::size_t>(j)] += imp[static_cast<std::size_t>(j)] / config.n_trees;
  return model;
}

double predict_proba_row(const ForestModel& model, const Eigen::RowVectorXd& row) {
  if (row.size() != model.d)
    throw std::invalid_argument("predict_proba: row width does not match the model");
  if (model.constant) return model.constant_value;
  double acc = 0.0;
  for (const auto& tree : model.trees) {
    int at = 0;
    for (;;) {
      const TreeNode& node = tree.nodes[static_cast<std::size_t>(at)];
      if (node.feature < 0) {
        acc += node.value;
        break;
      }
      at = row(node.feature) < node.threshold ? node.left : node.right;
    }
  }
  return acc / static_cast<double>(model.trees.size());
}

Eigen::VectorXd predict_proba(const ForestModel& model, const Eigen::MatrixXd& rows) {
  Eigen::VectorXd out(rows.rows());
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    out(i) = predict_proba_row(model, Eigen::RowVectorXd(rows.row(i)));
  return out;
}

std::vector<double> gini_importance(const ForestModel& model) {
  const double total = std::accumulate(model.raw_importance.begin(), model.raw_importance.end(), 0.0);
  std::vector<double> out(model.raw_importance.size());
  if (total <= 0.0) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(out.size()));
    return out;
  }
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = model.raw_importance[j] / total;
  return out;
}

}  // namespace slimshap
