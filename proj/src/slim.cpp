#include "slimshap/slim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "slimshap/rng.hpp"

namespace slimshap {

namespace {

struct Grower {
  const Eigen::MatrixXd& X;
  const Eigen::VectorXd& y;
  const SlimConfig& cfg;
  const CompactDesign& design;
  const std::vector<int> all_features;
  Eigen::VectorXd ones;
  SlimTree& tree;
  double rss_floor;  // below this a node counts as perfectly fitted

  // rows is consumed; returns the node id
  int build(std::vector<int>&& rows, int depth, int parent) {
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    {
      SlimNode& node = tree.nodes.back();
      node.parent = parent;
      node.depth = depth;
      node.count = static_cast<int>(rows.size());
    }
    SubsetGamFit fit = fit_subset_gam(design, all_features, y, ones, cfg.ridge, &rows);
    tree.nodes[static_cast<std::size_t>(node_id)].gam = std::move(fit);
    const double parent_rss = tree.nodes[static_cast<std::size_t>(node_id)].gam.weighted_rss;

    bool split_ok = depth < cfg.max_depth &&
                    static_cast<int>(rows.size()) >= 2 * cfg.min_node_size &&
                    parent_rss > rss_floor;
    int best_feature = -1;
    double best_threshold = 0.0, best_children_rss = 0.0;
    if (split_ok) {
      std::vector<double> vals(rows.size());
      std::vector<int> side_rows;
      for (int f = 0; f < static_cast<int>(X.cols()); ++f) {
        for (std::size_t k = 0; k < rows.size(); ++k) vals[k] = X(rows[k], f);
        std::sort(vals.begin(), vals.end());
        double prev_t = std::numeric_limits<double>::quiet_NaN();
        for (int q = 1; q <= cfg.candidate_quantiles; ++q) {
          // interior empirical quantiles of the node's own values
          const double h = static_cast<double>(vals.size() - 1) * q /
                           (cfg.candidate_quantiles + 1);
          const std::size_t lo = static_cast<std::size_t>(h);
          const double t = vals[lo] + (h - static_cast<double>(lo)) *
                                          (vals[std::min(lo + 1, vals.size() - 1)] - vals[lo]);
          if (t == prev_t || t <= vals.front() || t > vals.back()) continue;
          prev_t = t;
          int n_left = 0;
          for (std::size_t k = 0; k < rows.size(); ++k)
            if (X(rows[k], f) < t) ++n_left;
          const int n_right = static_cast<int>(rows.size()) - n_left;
          if (n_left < cfg.min_node_size || n_right < cfg.min_node_size) continue;

          double children_rss = 0.0;
          for (int side = 0; side < 2; ++side) {
            side_rows.clear();
            for (std::size_t k = 0; k < rows.size(); ++k)
              if ((X(rows[k], f) < t) == (side == 0)) side_rows.push_back(rows[k]);
            SubsetGamFit child =
                fit_subset_gam(design, all_features, y, ones, cfg.ridge, &side_rows);
            children_rss += child.weighted_rss;
          }
          if (best_feature < 0 || children_rss < best_children_rss) {
            best_children_rss = children_rss;
            best_feature = f;
            best_threshold = t;
          }
        }
      }
      if (best_feature >= 0 &&
          (parent_rss - best_children_rss) < cfg.min_rel_improvement * parent_rss)
        best_feature = -1;
    }

    if (best_feature < 0) {
      tree.nodes[static_cast<std::size_t>(node_id)].terminal_index =
          static_cast<int>(tree.terminals.size());
      tree.terminals.push_back(node_id);
      tree.depth = std::max(tree.depth, depth);
      return node_id;
    }

    std::vector<int> left_rows, right_rows;
    for (int r : rows) (X(r, best_feature) < best_threshold ? left_rows : right_rows).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    {
      SlimNode& node = tree.nodes[static_cast<std::size_t>(node_id)];
      node.feature = best_feature;
      node.threshold = best_threshold;
      node.left_count = static_cast<int>(left_rows.size());
    }
    const int left_id = build(std::move(left_rows), depth + 1, node_id);
    tree.nodes[static_cast<std::size_t>(node_id)].left = left_id;
    const int right_id = build(std::move(right_rows), depth + 1, node_id);
    tree.nodes[static_cast<std::size_t>(node_id)].right = right_id;
    return node_id;
  }
};

double variance_of(const Eigen::VectorXd& v) {
  const double mean = v.mean();
  return (v.array() - mean).square().sum() / static_cast<double>(v.size());
}

}  // namespace

SlimTree fit_slim(const Dataset& data, const SlimConfig& config) {
  if (!data.has_predictions())
    throw std::invalid_argument("fit_slim: dataset carries no model predictions");
  if (data.n() < std::max(2 * config.min_node_size, 2))
    throw std::invalid_argument("fit_slim: too few rows for the configured node size");
  if (config.max_depth < 0) throw std::invalid_argument("fit_slim: negative max_depth");

  SlimTree tree;
  tree.p = data.p();
  tree.basis = build_basis_all(data, config.n_knots);
  const CompactDesign design = expand_design(data.X, tree.basis);

  std::vector<int> all_features(static_cast<std::size_t>(data.p()));
  for (int f = 0; f < data.p(); ++f) all_features[static_cast<std::size_t>(f)] = f;

  const double tss = variance_of(data.predictions) * data.n();
  Grower grower{data.X,
                data.predictions,
                config,
                design,
                std::move(all_features),
                Eigen::VectorXd::Ones(data.n()),
                tree,
                1e-10 * std::max(tss, 1e-300)};
  std::vector<int> rows(static_cast<std::size_t>(data.n()));
  for (int i = 0; i < data.n(); ++i) rows[static_cast<std::size_t>(i)] = i;
  grower.build(std::move(rows), 0, -1);

  Eigen::VectorXd fitted = predict_slim(tree, data.X);
  tree.train_mse = (fitted - data.predictions).squaredNorm() / data.n();
  const double var = variance_of(data.predictions);
  tree.train_r2 = var > 0 ? 1.0 - tree.train_mse / var : (tree.train_mse == 0 ? 1.0 : 0.0);
  return tree;
}

int route_row(const SlimTree& tree, const Eigen::RowVectorXd& row, int max_depth) {
  int at = 0;
  for (;;) {
    const SlimNode& node = tree.nodes[static_cast<std::size_t>(at)];
    if (node.feature < 0 || (max_depth >= 0 && node.depth >= max_depth)) return at;
    at = row(node.feature) < node.threshold ? node.left : node.right;
  }
}

Eigen::VectorXd predict_slim(const SlimTree& tree, const Eigen::MatrixXd& rows) {
  if (rows.cols() != tree.p)
    throw std::invalid_argument("predict_slim: row width does not match the tree");
  const CompactDesign design = expand_design(rows, tree.basis);
  std::vector<int> all_features(static_cast<std::size_t>(tree.p));
  for (int f = 0; f < tree.p; ++f) all_features[static_cast<std::size_t>(f)] = f;
  Eigen::VectorXd out(rows.rows());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const int node = route_row(tree, Eigen::RowVectorXd(rows.row(i)));
    out(i) = predict_subset_gam_row(design, all_features,
                                    tree.nodes[static_cast<std::size_t>(node)].gam,
                                    static_cast<int>(i));
  }
  return out;
}

FidelityReport evaluate_fidelity(const SlimTree& tree, const Dataset& data,
                                 const std::optional<Eigen::VectorXd>& original_response) {
  if (!data.has_predictions())
    throw std::invalid_argument("evaluate_fidelity: dataset carries no model predictions");
  Eigen::VectorXd fitted = predict_slim(tree, data.X);
  FidelityReport report;
  report.mse_fidelity = (fitted - data.predictions).squaredNorm() / data.n();
  const double var = variance_of(data.predictions);
  report.r2_fidelity =
      var > 0 ? 1.0 - report.mse_fidelity / var : (report.mse_fidelity == 0 ? 1.0 : 0.0);
  if (original_response) {
    if (original_response->size() != data.n())
      throw std::invalid_argument("evaluate_fidelity: response length mismatch");
    report.mse_accuracy = (fitted - *original_response).squaredNorm() / data.n();
    const double var_y = variance_of(*original_response);
    report.r2_accuracy = var_y > 0 ? 1.0 - *report.mse_accuracy / var_y : 0.0;
  }
  return report;
}

TunedSlim fit_slim_tuned(const Dataset& data, const SlimConfig& config, std::uint64_t seed) {
  TunedSlim out;
  if (config.max_depth == 0 || data.n() < 20) {
    out.tree = fit_slim(data, config);
    out.chosen_depth = config.max_depth == 0 ? 0 : out.tree.depth;
    out.holdout_r2.assign(static_cast<std::size_t>(config.max_depth) + 1, out.tree.train_r2);
    return out;
  }

  // seeded shuffle, fixed 90/10 partition
  std::vector<int> order(static_cast<std::size_t>(data.n()));
  for (int i = 0; i < data.n(); ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng = Rng(seed).derive(0x74756e65ull);
  for (int i = data.n() - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  const int n_train = std::max(data.n() * 9 / 10, 2 * config.min_node_size);
  const int n_hold = data.n() - n_train;
  if (n_hold < 5) {
    // the split floor ate the holdout; scoring depths on a handful of rows
    // would just pick at random
    out.tree = fit_slim(data, config);
    out.chosen_depth = out.tree.depth;
    out.holdout_r2.assign(static_cast<std::size_t>(config.max_depth) + 1, out.tree.train_r2);
    return out;
  }

  Eigen::MatrixXd Xtr(n_train, data.p());
  Eigen::VectorXd ytr(n_train);
  Eigen::MatrixXd Xho(n_hold, data.p());
  Eigen::VectorXd yho(n_hold);
  for (int i = 0; i < data.n(); ++i) {
    const int src = order[static_cast<std::size_t>(i)];
    if (i < n_train) {
      Xtr.row(i) = data.X.row(src);
      ytr(i) = data.predictions(src);
    } else {
      Xho.row(i - n_train) = data.X.row(src);
      yho(i - n_train) = data.predictions(src);
    }
  }
  SlimTree grown = fit_slim(Dataset::from_matrix(Xtr, ytr, data.feature_names), config);

  // truncating a greedily grown tree at depth k reproduces the depth-k fit,
  // because split decisions never look ahead
  const CompactDesign hold_design = expand_design(Xho, grown.basis);
  std::vector<int> all_features(static_cast<std::size_t>(data.p()));
  for (int f = 0; f < data.p(); ++f) all_features[static_cast<std::size_t>(f)] = f;
  const double var_hold = n_hold > 0 ? variance_of(yho) : 0.0;

  out.holdout_r2.resize(static_cast<std::size_t>(config.max_depth) + 1);
  for (int k = 0; k <= config.max_depth; ++k) {
    double sse = 0.0;
    for (int i = 0; i < n_hold; ++i) {
      const int node = route_row(grown, Eigen::RowVectorXd(Xho.row(i)), k);
      const double pred = predict_subset_gam_row(
          hold_design, all_features, grown.nodes[static_cast<std::size_t>(node)].gam, i);
      const double r = pred - yho(i);
      sse += r * r;
    }
    const double mse = n_hold > 0 ? sse / n_hold : 0.0;
    out.holdout_r2[static_cast<std::size_t>(k)] =
        var_hold > 0 ? 1.0 - mse / var_hold : (mse == 0 ? 1.0 : 0.0);
  }

  const double best = *std::max_element(out.holdout_r2.begin(), out.holdout_r2.end());
  int chosen = config.max_depth;
  for (int k = 0; k <= config.max_depth; ++k)
    if (out.holdout_r2[static_cast<std::size_t>(k)] >= best - 0.005) {
      chosen = k;
      break;
    }
  out.chosen_depth = chosen;

  SlimConfig final_config = config;
  final_config.max_depth = chosen;
  out.tree = fit_slim(data, final_config);
  return out;
}

std::vector<std::vector<int>> node_training_rows(const SlimTree& tree, const Eigen::MatrixXd& X) {
  std::vector<std::vector<int>> rows(tree.nodes.size());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    int at = 0;
    for (;;) {
      rows[static_cast<std::size_t>(at)].push_back(static_cast<int>(i));
      const SlimNode& node = tree.nodes[static_cast<std::size_t>(at)];
      if (node.feature < 0) break;
      at = X(i, node.feature) < node.threshold ? node.left : node.right;
    }
  }
  return rows;
}

}  // namespace slimshap
