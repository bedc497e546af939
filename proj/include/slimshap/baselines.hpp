#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "slimshap/subsets.hpp"

namespace slimshap {

using ModelFn = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

// sum of squared deviations over sum of squared reference entries
double relative_error(const Eigen::VectorXd& estimate, const Eigen::VectorXd& reference);

// Global importance from per-instance attributions: mean |phi_j|, scaled to percent.
Eigen::VectorXd mean_abs_shares(const Eigen::MatrixXd& phi);

// ---------------------------------------------------------------------------
// Interventional (marginal) baseline: unknown coordinates are replaced by
// background draws instead of being conditioned on, so dependence between
// features is deliberately broken.  One background sample is shared across all
// coalitions and instances (common random numbers).
struct MarginalConfig {
  int n_background = 300;
  std::uint64_t seed = 0;
};

class MarginalValues {
 public:
  MarginalValues(ModelFn model, const Eigen::MatrixXd& train, const MarginalConfig& config);

  // mean_b f(x_u, b_rest) per explain row, uncentered
  Eigen::VectorXd value(const FeatureSubset& u, const Eigen::MatrixXd& explain) const;

  double base() const { return base_; }
  const Eigen::MatrixXd& background() const { return background_; }

 private:
  ModelFn model_;
  Eigen::MatrixXd background_;
  double base_ = 0.0;
};

// Variance-of-value attribution over a coalition family (percent handled by callers).
Eigen::VectorXd marginal_global_phi(const MarginalValues& mv,
                                    const std::vector<FeatureSubset>& family,
                                    const Eigen::MatrixXd& instances, int p, int threads = 1);

// ---------------------------------------------------------------------------
// Empirical kernel baseline: E(f | X_u = x_u) as a kernel-weighted average of
// training predictions, with a scaled Mahalanobis distance on the known
// coordinates and weights restricted to the nearest top_k rows.
struct KernelCEConfig {
  double bandwidth = 0.1;
  int top_k = 500;
};

class KernelCE {
 public:
  KernelCE(const Eigen::MatrixXd& train_X, const Eigen::VectorXd& train_pred,
           const KernelCEConfig& config);

  Eigen::VectorXd value(const FeatureSubset& u, const Eigen::MatrixXd& explain) const;

  double base() const { return base_; }

 private:
  Eigen::MatrixXd X_;
  Eigen::VectorXd pred_;
  Eigen::MatrixXd cov_;
  KernelCEConfig config_;
  double base_ = 0.0;
};

Eigen::VectorXd kernel_global_phi(const KernelCE& kce, const std::vector<FeatureSubset>& family,
                                  const Eigen::MatrixXd& instances, int p, int threads = 1);

}  // namespace slimshap
