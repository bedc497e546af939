#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "slimshap/subsets.hpp"

namespace slimshap {

// Analytic references for models of centered Gaussian features X ~ N(0, sigma).
// Linear models have closed-form coalition values; models with quadratic terms
// get exact conditional means per instance and a shared-draw Monte Carlo outer
// variance for the global values.

// Var(E(X beta | X_u)) = b' Sigma_uu^{-1} b with b = Sigma_{u,:} beta.
double linear_value(const Eigen::VectorXd& beta, const Eigen::MatrixXd& sigma,
                    const FeatureSubset& u);

Eigen::VectorXd linear_values(const Eigen::VectorXd& beta, const Eigen::MatrixXd& sigma,
                              const std::vector<FeatureSubset>& family);

// Exact global attribution shares (percent) via full enumeration, p <= 15.
Eigen::VectorXd linear_oracle_shares(const Eigen::VectorXd& beta, const Eigen::MatrixXd& sigma);

// f(x) = linear' x + sum_k c_k x_i x_j (i == j encodes a square).
struct QuadTerm {
  int i = 0;
  int j = 0;
  double c = 0.0;
};

struct QuadraticModel {
  Eigen::VectorXd linear;
  std::vector<QuadTerm> quad;
};

Eigen::VectorXd evaluate_quadratic(const QuadraticModel& model, const Eigen::MatrixXd& X);

// Moments of X | X_u = x_u with known coordinates pinned (zero variance).
struct ConditionalMoments {
  Eigen::VectorXd mean;  // length p
  Eigen::MatrixXd cov;   // p x p, zero rows/cols at members of u
};

ConditionalMoments gaussian_conditional_moments(const Eigen::MatrixXd& sigma,
                                                const FeatureSubset& u,
                                                const Eigen::RowVectorXd& x);

double quadratic_mean(const QuadraticModel& model, const Eigen::MatrixXd& sigma);

// E(f(X) | X_u = x_u), exact.
double quadratic_conditional_mean(const QuadraticModel& model, const Eigen::MatrixXd& sigma,
                                  const FeatureSubset& u, const Eigen::RowVectorXd& x);

// Global shares (percent): coalition variances by shared-draw Monte Carlo over
// the exact conditional means, then exact attribution on the full family.
Eigen::VectorXd quadratic_oracle_shares(const QuadraticModel& model, const Eigen::MatrixXd& sigma,
                                        int n_draws, std::uint64_t seed);

// Exact per-instance attributions of f(x) - E f, one row per input row, p <= 15.
Eigen::MatrixXd theoretical_shap(const QuadraticModel& model, const Eigen::MatrixXd& sigma,
                                 const Eigen::MatrixXd& rows);

}  // namespace slimshap
