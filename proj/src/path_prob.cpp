#include "slimshap/path_prob.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "slimshap/parallel.hpp"
#include "slimshap/rng.hpp"

namespace slimshap {

namespace {

constexpr std::uint64_t kPathTag = 0x70617468u;  // namespaces per-model seed derivation

double clip_prob(double q, double clip) {
  return std::min(1.0 - clip, std::max(clip, q));
}

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& X, const std::vector<int>& rows,
                               const std::vector<int>& cols) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = X(rows[i], cols[j]);
  return out;
}

std::vector<int> mask_members(const std::vector<int>& top_vars, std::uint32_t smask) {
  std::vector<int> cols;
  for (std::size_t i = 0; i < top_vars.size(); ++i)
    if (smask & (1u << i)) cols.push_back(top_vars[i]);
  return cols;
}

// smask over bank top_vars selected by u; top_vars is ascending so the mask is canonical.
std::uint32_t subset_event_mask(const NodeModels& models, const FeatureSubset& u) {
  std::uint32_t smask = 0;
  for (std::size_t i = 0; i < models.top_vars.size(); ++i)
    if (u.contains(models.top_vars[i])) smask |= (1u << i);
  return smask;
}

}  // namespace

NodeModelBank fit_node_models(const SlimTree& tree, const Eigen::MatrixXd& X,
                              const PathProbConfig& config, std::uint64_t seed, int threads) {
  if (X.cols() != tree.p) throw std::invalid_argument("column count does not match the tree");
  if (config.top_vars < 1) throw std::invalid_argument("top_vars must be at least 1");
  NodeModelBank bank;
  bank.config = config;
  bank.seed = seed;
  bank.nodes.resize(tree.nodes.size());

  const auto rows_per_node = node_training_rows(tree, X);
  const int p = tree.p;

  for (std::size_t m = 0; m < tree.nodes.size(); ++m) {
    const SlimNode& node = tree.nodes[m];
    if (node.feature < 0) continue;
    NodeModels& models = bank.nodes[m];
    const std::vector<int>& rows = rows_per_node[m];
    const int n_m = static_cast<int>(rows.size());
    if (n_m < 2) throw std::runtime_error("splitting node with fewer than 2 training rows");

    std::vector<int> labels(static_cast<std::size_t>(n_m));
    int n_left = 0;
    for (int i = 0; i < n_m; ++i) {
      labels[static_cast<std::size_t>(i)] = X(rows[static_cast<std::size_t>(i)], node.feature) <
                                                    node.threshold
                                                ? 1
                                                : 0;
      n_left += labels[static_cast<std::size_t>(i)];
    }
    models.empirical_left = static_cast<double>(n_left) / static_cast<double>(n_m);

    // Rank the other features by how well they predict the branch, then keep the top few.
    std::vector<int> other;
    other.reserve(static_cast<std::size_t>(p - 1));
    for (int j = 0; j < p; ++j)
      if (j != node.feature) other.push_back(j);
    Eigen::MatrixXd X_sel = gather_columns(X, rows, other);
    ForestConfig sel_cfg = config.forest;
    sel_cfg.seed = Rng(seed).derive(kPathTag, static_cast<std::uint64_t>(m), 0).seed();
    ForestModel selector = fit_forest(X_sel, labels, sel_cfg, threads);
    const std::vector<double> imp = gini_importance(selector);
    models.selector_importance = Eigen::VectorXd::Zero(p);
    for (std::size_t j = 0; j < other.size(); ++j) models.selector_importance(other[j]) = imp[j];

    const int keep = std::min(config.top_vars, p - 1);
    std::vector<int> order = other;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      const double ia = models.selector_importance(a);
      const double ib = models.selector_importance(b);
      if (ia != ib) return ia > ib;
      return a < b;
    });
    models.top_vars.assign(order.begin(), order.begin() + keep);
    std::sort(models.top_vars.begin(), models.top_vars.end());

    const std::uint32_t n_masks = 1u << models.top_vars.size();
    models.event.resize(n_masks);
    for (std::uint32_t smask = 1; smask < n_masks; ++smask) {
      const std::vector<int> cols = mask_members(models.top_vars, smask);
      Eigen::MatrixXd X_ev = gather_columns(X, rows, cols);
      ForestConfig ev_cfg = config.forest;
      ev_cfg.seed = Rng(seed).derive(kPathTag, static_cast<std::uint64_t>(m), smask).seed();
      models.event[smask] = fit_forest(X_ev, labels, ev_cfg, threads);
      ++bank.n_event_models;
    }
    ++bank.n_split_nodes;
  }
  return bank;
}

double conditional_split_prob(const SlimTree& tree, const NodeModelBank& bank, int node,
                              const FeatureSubset& u, const Eigen::RowVectorXd& x) {
  const SlimNode& sn = tree.nodes.at(static_cast<std::size_t>(node));
  if (sn.feature < 0) throw std::invalid_argument("terminal nodes have no split probability");
  if (u.contains(sn.feature)) return x(sn.feature) < sn.threshold ? 1.0 : 0.0;

  const NodeModels& models = bank.nodes.at(static_cast<std::size_t>(node));
  const double clip = bank.config.clip;
  const std::uint32_t smask = subset_event_mask(models, u);
  if (smask == 0) return clip_prob(models.empirical_left, clip);

  const std::vector<int> cols = mask_members(models.top_vars, smask);
  Eigen::VectorXd xe(static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) xe(static_cast<Eigen::Index>(j)) = x(cols[j]);
  return clip_prob(predict_proba_row(models.event[smask], xe), clip);
}

Eigen::VectorXd terminal_probabilities(const SlimTree& tree, const NodeModelBank& bank,
                                       const FeatureSubset& u, const Eigen::RowVectorXd& x) {
  // Children follow their parents in the node array, so one forward pass suffices.
  std::vector<double> reach(tree.nodes.size(), 0.0);
  reach[0] = 1.0;
  for (std::size_t m = 0; m < tree.nodes.size(); ++m) {
    const SlimNode& node = tree.nodes[m];
    if (node.feature < 0) continue;
    const double pm = reach[m];
    if (pm == 0.0) {
      reach[static_cast<std::size_t>(node.left)] = 0.0;
      reach[static_cast<std::size_t>(node.right)] = 0.0;
      continue;
    }
    const double q = conditional_split_prob(tree, bank, static_cast<int>(m), u, x);
    const double left = pm * q;
    reach[static_cast<std::size_t>(node.left)] = left;
    reach[static_cast<std::size_t>(node.right)] = pm - left;  // children sum to the parent exactly
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(tree.terminals.size()));
  for (std::size_t t = 0; t < tree.terminals.size(); ++t)
    out(static_cast<Eigen::Index>(t)) = reach[static_cast<std::size_t>(tree.terminals[t])];
  return out;
}

BranchProbCache build_branch_cache(const SlimTree& tree, const NodeModelBank& bank,
                                   const Eigen::MatrixXd& rows, int threads) {
  if (rows.cols() != tree.p) throw std::invalid_argument("column count does not match the tree");
  BranchProbCache cache;
  cache.n_rows = static_cast<int>(rows.rows());
  cache.nodes.resize(tree.nodes.size());
  const double clip = bank.config.clip;
  for (std::size_t m = 0; m < tree.nodes.size(); ++m) {
    const SlimNode& node = tree.nodes[m];
    if (node.feature < 0) continue;
    const NodeModels& models = bank.nodes[m];
    BranchProbCache::NodeCache& nc = cache.nodes[m];
    nc.det.resize(rows.rows());
    for (Eigen::Index i = 0; i < rows.rows(); ++i)
      nc.det(i) = rows(i, node.feature) < node.threshold ? 1.0 : 0.0;
    const std::uint32_t n_masks = 1u << models.top_vars.size();
    nc.by_mask.resize(n_masks);
    for (std::uint32_t smask = 1; smask < n_masks; ++smask) {
      const std::vector<int> cols = mask_members(models.top_vars, smask);
      Eigen::VectorXd& out = nc.by_mask[smask];
      out.resize(rows.rows());
      const ForestModel& forest = models.event[smask];
      parallel_for(static_cast<int>(rows.rows()), threads, [&](int i) {
        Eigen::VectorXd xe(static_cast<Eigen::Index>(cols.size()));
        for (std::size_t j = 0; j < cols.size(); ++j)
          xe(static_cast<Eigen::Index>(j)) = rows(i, cols[j]);
        out(i) = clip_prob(predict_proba_row(forest, xe), clip);
      });
    }
  }
  return cache;
}

Eigen::MatrixXd terminal_prob_matrix(const SlimTree& tree, const NodeModelBank& bank,
                                     const BranchProbCache& cache, const FeatureSubset& u) {
  const Eigen::Index n = cache.n_rows;
  const double clip = bank.config.clip;
  std::vector<Eigen::VectorXd> reach(tree.nodes.size());
  reach[0] = Eigen::VectorXd::Ones(n);
  for (std::size_t m = 0; m < tree.nodes.size(); ++m) {
    const SlimNode& node = tree.nodes[m];
    if (node.feature < 0) continue;
    const NodeModels& models = bank.nodes[m];
    const BranchProbCache::NodeCache& nc = cache.nodes[m];
    const Eigen::VectorXd& pm = reach[m];
    Eigen::VectorXd& left = reach[static_cast<std::size_t>(node.left)];
    Eigen::VectorXd& right = reach[static_cast<std::size_t>(node.right)];
    if (u.contains(node.feature)) {
      left = pm.cwiseProduct(nc.det);
      right = pm - left;
    } else {
      const std::uint32_t smask = subset_event_mask(models, u);
      if (smask == 0) {
        const double q = std::min(1.0 - clip, std::max(clip, models.empirical_left));
        left = pm * q;
        right = pm - left;
      } else {
        left = pm.cwiseProduct(nc.by_mask[smask]);
        right = pm - left;
      }
    }
  }
  Eigen::MatrixXd out(n, static_cast<Eigen::Index>(tree.terminals.size()));
  for (std::size_t t = 0; t < tree.terminals.size(); ++t)
    out.col(static_cast<Eigen::Index>(t)) = reach[static_cast<std::size_t>(tree.terminals[t])];
  return out;
}

}  // namespace slimshap
