#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "slimshap/dataset.hpp"
#include "slimshap/oracle.hpp"

namespace slimshap {

// Synthetic benchmark scenarios over correlated Gaussian features, each paired
// with its analytic attribution reference.
//
//  linear       13 features, four equicorrelated blocks, one isolated feature
//  nonlinear    same latent structure, several features monotonically warped
//  interaction  6 features: main effects, a square, and two product terms
//  binary       the linear latent explained on the log-odds scale
enum class ScenarioKind { linear, nonlinear, interaction, binary };

ScenarioKind parse_scenario_kind(const std::string& name);
std::string to_string(ScenarioKind kind);

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::linear;
  double rho = 0.0;
  int n = 2000;
  std::uint64_t seed = 1;
};

struct Scenario {
  ScenarioKind kind = ScenarioKind::linear;
  double rho = 0.0;
  int p = 0;
  Dataset data;                      // observed features + model output to explain
  Eigen::MatrixXd sigma;             // covariance of the Gaussian (latent) features
  Eigen::VectorXd beta;              // latent linear coefficients; empty for interaction
  QuadraticModel quad;               // populated for the interaction scenario
  Eigen::VectorXd oracle_share_pct;  // analytic global attribution shares

  // Black-box view of the generating model, defined on the observed scale.
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;
};

Scenario generate_scenario(const ScenarioSpec& spec);

}  // namespace slimshap
