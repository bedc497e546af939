#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "slimshap/dataset.hpp"
#include "slimshap/path_prob.hpp"
#include "slimshap/shapley.hpp"
#include "slimshap/slim.hpp"

namespace slimshap {

// End-to-end attribution pipeline: surrogate tree -> node probability models ->
// conditional-expectation values per coalition -> weighted-least-squares
// attributions, both global (variance explained) and per instance.
struct PipelineConfig {
  SlimConfig slim{};
  PathProbConfig path{};
  int gamma = 0;  // coalition size threshold; 0 means full enumeration
  std::uint64_t seed = 1;
  int threads = 1;
  bool tune_depth = true;
  // computing values may fail for individual coalitions (vanishing weights);
  // below this success fraction the sweep aborts instead of silently degrading
  double min_success_fraction = 0.99;
};

class FittedPipeline {
 public:
  Dataset train;
  PipelineConfig config;
  TunedSlim tuned;
  NodeModelBank bank;
  BranchProbCache train_cache;
  CompactDesign train_design;
  Eigen::VectorXd train_slim_pred;                  // surrogate prediction per train row
  double base_value = 0.0;                          // mean black-box prediction on train

  const SlimTree& tree() const { return tuned.tree; }
  int p() const { return tuned.tree.p; }
  int effective_gamma() const;
};

FittedPipeline fit_pipeline(const Dataset& data, const PipelineConfig& config);

// Recompute the derived members (caches, designs, terminal responses) from
// train + tuned + bank.  Used after fitting and after deserialization.
void rebuild_derived(FittedPipeline& pipe);

// Coalition values for an explicit family.  Global values are variances of the
// estimated conditional expectation over the training rows; explain values are
// per-row conditional expectations centered at the base value.
struct ValueSweep {
  std::vector<FeatureSubset> subsets;
  std::vector<char> ok;            // per coalition; failures are excluded downstream
  Eigen::VectorXd global_values;   // |D|
  Eigen::MatrixXd explain_values;  // n_explain x |D|
  int n_fallback_fits = 0;         // terminal fits replaced by a plain weighted mean
  int n_failed_subsets = 0;
  double base_value = 0.0;
  double elapsed_ms = 0.0;
};

ValueSweep compute_values(const FittedPipeline& pipe, const std::vector<FeatureSubset>& subsets,
                          const Eigen::MatrixXd& explain);

struct GlobalAttribution {
  Eigen::VectorXd phi;        // attribution on the variance scale
  Eigen::VectorXd share_pct;  // 100 * phi / sum(phi); zeros when degenerate
  double total = 0.0;         // sum(phi) == value of the full coalition
  bool degenerate = false;    // constant surrogate, shares undefined
  int gamma = 0;
  int n_subsets = 0;
};

struct ShapResult {
  Eigen::MatrixXd phi;  // n_explain x p
  double base_value = 0.0;
  Eigen::VectorXd reconstruction;  // base + row sum; equals the surrogate prediction
  int gamma = 0;
  int n_subsets = 0;
};

struct AttributionResult {
  GlobalAttribution global;
  ShapResult shap;
  int n_fallback_fits = 0;
  int n_failed_subsets = 0;
  double value_ms = 0.0;
};

// One coalition sweep shared by the global and per-instance solves.
// `explain` may have zero rows to skip per-instance attributions.
AttributionResult compute_attributions(const FittedPipeline& pipe, const Eigen::MatrixXd& explain);

GlobalAttribution compute_global_shapley(const FittedPipeline& pipe);
ShapResult compute_shap(const FittedPipeline& pipe, const Eigen::MatrixXd& explain);

// Estimated E(surrogate(X) | X_u = x_u) for each query row, uncentered.
Eigen::VectorXd conditional_expectation(const FittedPipeline& pipe, const FeatureSubset& u,
                                        const Eigen::MatrixXd& query);

}  // namespace slimshap
