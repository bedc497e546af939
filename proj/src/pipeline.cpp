#include "slimshap/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "slimshap/parallel.hpp"
#include "slimshap/rng.hpp"

namespace slimshap {

namespace {

constexpr std::uint64_t kSlimTag = 0x736c696du;  // per-stage seed namespaces
constexpr std::uint64_t kBankTag = 0x62616e6bu;

double population_variance(const Eigen::VectorXd& v) {
  if (v.size() == 0) return 0.0;
  const double mean = v.mean();
  return (v.array() - mean).square().sum() / static_cast<double>(v.size());
}

SubsetGamFit constant_fit(double value) {
  SubsetGamFit fit;
  fit.beta = Eigen::VectorXd::Constant(1, value);
  fit.intercept_only = true;
  return fit;
}

// Per-terminal conditional-expectation models for one coalition: the training
// predictions are regressed on the coalition's features, each terminal weighting
// rows by how likely their known coordinates make that terminal. The target is
// always the prediction a row actually received — a terminal's own leaf model is
// never evaluated outside its region, where its extrapolation is meaningless.
struct SubsetModels {
  std::vector<SubsetGamFit> fits;  // per terminal slot
  int n_fallback = 0;
};

SubsetModels fit_subset_models(const FittedPipeline& pipe, const std::vector<int>& members,
                               const Eigen::MatrixXd& W_train, double ridge) {
  const std::size_t n_term = pipe.tree().terminals.size();
  const Eigen::VectorXd& response = pipe.train.predictions;
  SubsetModels out;
  out.fits.resize(n_term);
  for (std::size_t t = 0; t < n_term; ++t) {
    const Eigen::VectorXd w = W_train.col(static_cast<Eigen::Index>(t));
    const double wsum = w.sum();
    if (w.maxCoeff() < kWeightFloor) {
      // terminal unreachable given these coordinates; any bounded constant does
      out.fits[t] = constant_fit(wsum > 0.0 ? w.dot(response) / wsum : pipe.base_value);
      ++out.n_fallback;
      continue;
    }
    out.fits[t] = fit_subset_gam(pipe.train_design, members, response, w, ridge);
  }
  return out;
}

Eigen::VectorXd evaluate_subset(const SubsetModels& models, const std::vector<int>& members,
                                const CompactDesign& design, const Eigen::MatrixXd& W) {
  const Eigen::Index n = W.rows();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (std::size_t t = 0; t < models.fits.size(); ++t) {
    const SubsetGamFit& fit = models.fits[t];
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = W(i, static_cast<Eigen::Index>(t));
      if (w == 0.0) continue;  // deterministically pruned branch
      out(i) += w * predict_subset_gam_row(design, members, fit, static_cast<int>(i));
    }
  }
  return out;
}

}  // namespace

int FittedPipeline::effective_gamma() const {
  return config.gamma == 0 ? max_gamma(p()) : config.gamma;
}

FittedPipeline fit_pipeline(const Dataset& data, const PipelineConfig& config) {
  if (!data.has_predictions())
    throw std::invalid_argument("training data must carry model predictions");
  FittedPipeline pipe;
  pipe.train = data;
  pipe.config = config;
  if (config.gamma != 0 && (config.gamma < 1 || config.gamma > max_gamma(data.p())))
    throw std::invalid_argument("threshold must satisfy 1 <= gamma <= ceil(p/2)");

  if (config.tune_depth) {
    pipe.tuned = fit_slim_tuned(data, config.slim, Rng(config.seed).derive(kSlimTag, 0, 0).seed());
  } else {
    pipe.tuned.tree = fit_slim(data, config.slim);
    pipe.tuned.chosen_depth = pipe.tuned.tree.depth;
    pipe.tuned.holdout_r2.assign(1, pipe.tuned.tree.train_r2);
  }
  const SlimTree& tree = pipe.tuned.tree;

  pipe.bank = fit_node_models(tree, data.X, config.path,
                              Rng(config.seed).derive(kBankTag, 0, 0).seed(), config.threads);
  rebuild_derived(pipe);
  return pipe;
}

void rebuild_derived(FittedPipeline& pipe) {
  const SlimTree& tree = pipe.tuned.tree;
  const Dataset& data = pipe.train;
  pipe.train_cache = build_branch_cache(tree, pipe.bank, data.X, pipe.config.threads);
  pipe.train_design = expand_design(data.X, tree.basis);
  pipe.train_slim_pred = predict_slim(tree, data.X);
  pipe.base_value = data.predictions.mean();
}

ValueSweep compute_values(const FittedPipeline& pipe, const std::vector<FeatureSubset>& subsets,
                          const Eigen::MatrixXd& explain) {
  const auto t0 = std::chrono::steady_clock::now();
  const SlimTree& tree = pipe.tree();
  const int n_sub = static_cast<int>(subsets.size());
  const Eigen::Index n_explain = explain.rows();
  if (n_explain > 0 && explain.cols() != tree.p)
    throw std::invalid_argument("explain rows must match the feature count");

  ValueSweep sweep;
  sweep.subsets = subsets;
  sweep.ok.assign(static_cast<std::size_t>(n_sub), 1);
  sweep.global_values = Eigen::VectorXd::Zero(n_sub);
  sweep.explain_values = Eigen::MatrixXd::Zero(n_explain, n_sub);
  sweep.base_value = pipe.base_value;

  BranchProbCache explain_cache;
  CompactDesign explain_design;
  Eigen::VectorXd explain_slim;
  if (n_explain > 0) {
    explain_cache = build_branch_cache(tree, pipe.bank, explain, pipe.config.threads);
    explain_design = expand_design(explain, tree.basis);
    explain_slim = predict_slim(tree, explain);
  }

  const double full_var = population_variance(pipe.train_slim_pred);
  std::vector<int> fallback_counts(static_cast<std::size_t>(n_sub), 0);

  parallel_for(n_sub, pipe.config.threads, [&](int k) {
    const FeatureSubset& u = subsets[static_cast<std::size_t>(k)];
    if (u.empty()) return;  // values are centered: the empty coalition is exactly zero
    if (u.full()) {
      sweep.global_values(k) = full_var;
      if (n_explain > 0)
        sweep.explain_values.col(k) = explain_slim.array() - pipe.base_value;
      return;
    }
    try {
      const std::vector<int> members = u.members();
      Eigen::MatrixXd W_train = terminal_prob_matrix(tree, pipe.bank, pipe.train_cache, u);
      SubsetModels models =
          fit_subset_models(pipe, members, W_train, pipe.config.slim.ridge);
      fallback_counts[static_cast<std::size_t>(k)] = models.n_fallback;
      Eigen::VectorXd v_train = evaluate_subset(models, members, pipe.train_design, W_train);
      sweep.global_values(k) = population_variance(v_train);
      if (n_explain > 0) {
        Eigen::MatrixXd W_explain = terminal_prob_matrix(tree, pipe.bank, explain_cache, u);
        sweep.explain_values.col(k) =
            evaluate_subset(models, members, explain_design, W_explain).array() -
            pipe.base_value;
      }
    } catch (const std::exception&) {
      sweep.ok[static_cast<std::size_t>(k)] = 0;
    }
  });

  for (int k = 0; k < n_sub; ++k) {
    sweep.n_fallback_fits += fallback_counts[static_cast<std::size_t>(k)];
    if (!sweep.ok[static_cast<std::size_t>(k)]) ++sweep.n_failed_subsets;
  }
  const double success = n_sub == 0 ? 1.0
                                    : static_cast<double>(n_sub - sweep.n_failed_subsets) /
                                          static_cast<double>(n_sub);
  if (success < pipe.config.min_success_fraction)
    throw std::runtime_error("coalition value computation failed for too many subsets");
  sweep.elapsed_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
  return sweep;
}

AttributionResult compute_attributions(const FittedPipeline& pipe, const Eigen::MatrixXd& explain) {
  const int p = pipe.p();
  const int gamma = pipe.effective_gamma();
  const std::vector<FeatureSubset> family = threshold_subsets(p, gamma);
  ValueSweep sweep = compute_values(pipe, family, explain);

  std::vector<FeatureSubset> kept;
  std::vector<int> kept_idx;
  for (int k = 0; k < static_cast<int>(family.size()); ++k) {
    if (!sweep.ok[static_cast<std::size_t>(k)]) continue;
    kept.push_back(family[static_cast<std::size_t>(k)]);
    kept_idx.push_back(k);
  }
  ShapleySolver solver = build_solver(kept, p);

  Eigen::VectorXd c_global(static_cast<Eigen::Index>(kept_idx.size()));
  for (std::size_t j = 0; j < kept_idx.size(); ++j)
    c_global(static_cast<Eigen::Index>(j)) = sweep.global_values(kept_idx[j]);

  AttributionResult out;
  out.n_fallback_fits = sweep.n_fallback_fits;
  out.n_failed_subsets = sweep.n_failed_subsets;
  out.value_ms = sweep.elapsed_ms;

  out.global.phi = solver.S * c_global;
  out.global.total = out.global.phi.sum();
  out.global.gamma = gamma;
  out.global.n_subsets = static_cast<int>(kept.size());
  const double scale = out.global.phi.cwiseAbs().maxCoeff();
  if (!(out.global.total > 0.0) || !std::isfinite(out.global.total) ||
      out.global.total < 1e-12 * std::max(1.0, scale)) {
    out.global.degenerate = true;
    out.global.share_pct = Eigen::VectorXd::Zero(p);
  } else {
    out.global.share_pct = 100.0 * out.global.phi / out.global.total;
  }

  out.shap.base_value = pipe.base_value;
  out.shap.gamma = gamma;
  out.shap.n_subsets = static_cast<int>(kept.size());
  if (explain.rows() > 0) {
    Eigen::MatrixXd V(explain.rows(), static_cast<Eigen::Index>(kept_idx.size()));
    for (std::size_t j = 0; j < kept_idx.size(); ++j)
      V.col(static_cast<Eigen::Index>(j)) = sweep.explain_values.col(kept_idx[j]);
    out.shap.phi = V * solver.S.transpose();
    out.shap.reconstruction =
        Eigen::VectorXd::Constant(explain.rows(), pipe.base_value) + out.shap.phi.rowwise().sum();
  } else {
    out.shap.phi = Eigen::MatrixXd::Zero(0, p);
    out.shap.reconstruction = Eigen::VectorXd::Zero(0);
  }
  return out;
}

GlobalAttribution compute_global_shapley(const FittedPipeline& pipe) {
  return compute_attributions(pipe, Eigen::MatrixXd::Zero(0, pipe.p())).global;
}

ShapResult compute_shap(const FittedPipeline& pipe, const Eigen::MatrixXd& explain) {
  return compute_attributions(pipe, explain).shap;
}

Eigen::VectorXd conditional_expectation(const FittedPipeline& pipe, const FeatureSubset& u,
                                        const Eigen::MatrixXd& query) {
  const SlimTree& tree = pipe.tree();
  if (query.cols() != tree.p)
    throw std::invalid_argument("query rows must match the feature count");
  if (u.p != tree.p) throw std::invalid_argument("subset universe size mismatch");
  if (u.empty()) return Eigen::VectorXd::Constant(query.rows(), pipe.base_value);
  if (u.full()) return predict_slim(tree, query);

  const std::vector<int> members = u.members();
  Eigen::MatrixXd W_train = terminal_prob_matrix(tree, pipe.bank, pipe.train_cache, u);
  SubsetModels models = fit_subset_models(pipe, members, W_train, pipe.config.slim.ridge);
  BranchProbCache cache = build_branch_cache(tree, pipe.bank, query, pipe.config.threads);
  CompactDesign design = expand_design(query, tree.basis);
  Eigen::MatrixXd W_query = terminal_prob_matrix(tree, pipe.bank, cache, u);
  return evaluate_subset(models, members, design, W_query);
}

}  // namespace slimshap
