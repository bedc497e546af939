#pragma once

#include <Eigen/Dense>
#include <vector>

namespace slimshap {

// Block-equicorrelation structure: features inside a block share pairwise
// correlation rho, features in different blocks are uncorrelated unless an
// explicit cross link ties a specific pair with its own coefficient.
struct CorrelationSpec {
  int p = 0;
  double rho = 0.0;
  std::vector<std::vector<int>> blocks;  // disjoint index groups; singletons may be omitted

  struct CrossLink {
    int i = 0;
    int j = 0;
    double r = 0.0;
  };
  std::vector<CrossLink> cross_links;
};

// Dense correlation matrix plus a factor L with L * L^T = Sigma, usable for
// sampling. Verifies symmetry, unit diagonal and positive semidefiniteness;
// throws std::invalid_argument otherwise (naming the smallest eigenvalue).
struct CorrelationModel {
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd factor;
};

CorrelationModel build_correlation(const CorrelationSpec& spec);

// Factorizes an arbitrary covariance matrix the same way (used by oracles).
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& sigma);

}  // namespace slimshap
