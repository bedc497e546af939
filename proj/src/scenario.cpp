#include "slimshap/scenario.hpp"

#include <cmath>
#include <stdexcept>

#include "slimshap/correlation.hpp"
#include "slimshap/rng.hpp"

namespace slimshap {

namespace {

constexpr std::uint64_t kOracleSeed = 777;  // fixed so references ignore the data seed
constexpr int kOracleDraws = 200000;

// 13-feature structure: four equicorrelated blocks, feature 10 isolated.
Eigen::MatrixXd sigma_linear(double rho) {
  CorrelationSpec spec;
  spec.p = 13;
  spec.rho = rho;
  spec.blocks = {{0, 1}, {2, 3, 4, 5}, {6, 7, 8, 9}, {11, 12}};
  return build_correlation(spec).sigma;
}

// 6-feature structure: one equicorrelated block of four plus a cross link
// between the product partners; its strength rho(1-rho) keeps the matrix
// positive definite for every rho in [0, 1) (margin ~ (1-rho)).
Eigen::MatrixXd sigma_interaction(double rho) {
  CorrelationSpec spec;
  spec.p = 6;
  spec.rho = rho;
  spec.blocks = {{0, 1, 2, 3}};
  spec.cross_links = {{2, 4, rho * (1.0 - rho)}};
  return build_correlation(spec).sigma;
}

Eigen::VectorXd linear_beta() {
  Eigen::VectorXd beta(13);
  beta << 1.5, 1.5, 1.5, 1.0, 1.4, 0.5, 1.8, 1.8, 0.0, 0.0, 0.0, 1.6, 1.6;
  return beta;
}

QuadraticModel interaction_model() {
  QuadraticModel model;
  model.linear = Eigen::VectorXd::Zero(6);
  model.linear(0) = 1.0;                         // x1
  model.quad = {{1, 1, 1.0}, {0, 1, 1.0}, {2, 4, 1.0}};  // x2^2 + x1 x2 + x3 x5
  return model;
}

Eigen::MatrixXd draw_gaussian(const Eigen::MatrixXd& sigma, int n, std::uint64_t seed) {
  const Eigen::MatrixXd L = psd_factor(sigma);
  Rng rng(seed);
  Eigen::MatrixXd Z(n, sigma.rows());
  Eigen::VectorXd g(L.cols());
  for (int i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < g.size(); ++j) g(j) = rng.gauss();
    Z.row(i) = (L * g).transpose();
  }
  return Z;
}

double fifth_root(double v) { return std::copysign(std::pow(std::abs(v), 0.2), v); }

// Per-coordinate monotone warps applied to the latent draw (identity elsewhere).
double warp(int j, double z) {
  switch (j) {
    case 1: return std::atan(z);
    case 2: return std::pow(z, 5.0);
    case 3: return std::exp(z);
    case 5: return z * z * z;
    case 6: return std::cbrt(z);
    case 12: return fifth_root(z);
    default: return z;
  }
}

double unwarp(int j, double x) {
  switch (j) {
    case 1: return std::tan(x);
    case 2: return fifth_root(x);
    case 3: return std::log(x);
    case 5: return std::cbrt(x);
    case 6: return x * x * x;
    case 12: return std::pow(x, 5.0);
    default: return x;
  }
}

}  // namespace

ScenarioKind parse_scenario_kind(const std::string& name) {
  if (name == "linear") return ScenarioKind::linear;
  if (name == "nonlinear") return ScenarioKind::nonlinear;
  if (name == "interaction") return ScenarioKind::interaction;
  if (name == "binary") return ScenarioKind::binary;
  throw std::invalid_argument("unknown scenario '" + name +
                              "' (expected linear, nonlinear, interaction, or binary)");
}

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::linear: return "linear";
    case ScenarioKind::nonlinear: return "nonlinear";
    case ScenarioKind::interaction: return "interaction";
    case ScenarioKind::binary: return "binary";
  }
  return "linear";
}

Eigen::VectorXd Scenario::predict(const Eigen::MatrixXd& X) const {
  if (X.cols() != p) throw std::invalid_argument("feature count does not match the scenario");
  switch (kind) {
    case ScenarioKind::linear:
    case ScenarioKind::binary:
      return X * beta;
    case ScenarioKind::interaction:
      return evaluate_quadratic(quad, X);
    case ScenarioKind::nonlinear: {
      Eigen::MatrixXd Z = X;
      for (Eigen::Index i = 0; i < Z.rows(); ++i)
        for (int j = 0; j < p; ++j) Z(i, j) = unwarp(j, X(i, j));
      return Z * beta;
    }
  }
  return Eigen::VectorXd::Zero(X.rows());
}

Scenario generate_scenario(const ScenarioSpec& spec) {
  if (spec.n < 10) throw std::invalid_argument("scenario size must be at least 10");
  if (spec.rho < 0.0 || spec.rho >= 1.0)
    throw std::invalid_argument("correlation must lie in [0, 1)");

  Scenario sc;
  sc.kind = spec.kind;
  sc.rho = spec.rho;

  switch (spec.kind) {
    case ScenarioKind::linear:
    case ScenarioKind::binary: {
      sc.p = 13;
      sc.sigma = sigma_linear(spec.rho);
      sc.beta = linear_beta();
      Eigen::MatrixXd Z = draw_gaussian(sc.sigma, spec.n, spec.seed);
      sc.data = Dataset::from_matrix(Z, Z * sc.beta);
      sc.oracle_share_pct = linear_oracle_shares(sc.beta, sc.sigma);
      break;
    }
    case ScenarioKind::nonlinear: {
      sc.p = 13;
      sc.sigma = sigma_linear(spec.rho);
      sc.beta = linear_beta();
      Eigen::MatrixXd Z = draw_gaussian(sc.sigma, spec.n, spec.seed);
      Eigen::VectorXd y = Z * sc.beta;
      Eigen::MatrixXd X = Z;
      for (int i = 0; i < spec.n; ++i)
        for (int j = 0; j < 13; ++j) X(i, j) = warp(j, Z(i, j));
      sc.data = Dataset::from_matrix(X, y);
      // monotone per-coordinate warps leave conditional expectations of the
      // latent model unchanged, so the linear reference carries over
      sc.oracle_share_pct = linear_oracle_shares(sc.beta, sc.sigma);
      break;
    }
    case ScenarioKind::interaction: {
      sc.p = 6;
      sc.sigma = sigma_interaction(spec.rho);
      sc.quad = interaction_model();
      Eigen::MatrixXd Z = draw_gaussian(sc.sigma, spec.n, spec.seed);
      sc.data = Dataset::from_matrix(Z, evaluate_quadratic(sc.quad, Z));
      sc.oracle_share_pct = quadratic_oracle_shares(sc.quad, sc.sigma, kOracleDraws, kOracleSeed);
      break;
    }
  }
  return sc;
}

}  // namespace slimshap
