#include "slimshap/correlation.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace slimshap {

Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols())
    throw std::invalid_argument("psd_factor: matrix is not square");
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("psd_factor: matrix is not symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  // semidefinite or numerically touchy: symmetric eigensolver with a clamp
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
  const double min_eig = es.eigenvalues().minCoeff();
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (min_eig < -1e-10 * scale)
    throw std::invalid_argument("correlation matrix is not positive semidefinite (min eigenvalue " +
                                std::to_string(min_eig) + ")");
  Eigen::VectorXd clamped = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * clamped.cwiseSqrt().asDiagonal();
}

CorrelationModel build_correlation(const CorrelationSpec& spec) {
  if (spec.p <= 0) throw std::invalid_argument("CorrelationSpec: p must be positive");
  if (!(spec.rho > -1.0 && spec.rho < 1.0))
    throw std::invalid_argument("CorrelationSpec: rho must lie in (-1, 1)");

  std::vector<int> owner(static_cast<std::size_t>(spec.p), -1);
  for (std::size_t b = 0; b < spec.blocks.size(); ++b) {
    for (int i : spec.blocks[b]) {
      if (i < 0 || i >= spec.p)
        throw std::invalid_argument("CorrelationSpec: block index " + std::to_string(i) +
                                    " outside [0, " + std::to_string(spec.p) + ")");
      if (owner[static_cast<std::size_t>(i)] != -1)
        throw std::invalid_argument("CorrelationSpec: feature " + std::to_string(i) +
                                    " appears in more than one block");
      owner[static_cast<std::size_t>(i)] = static_cast<int>(b);
    }
  }

  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(spec.p, spec.p);
  for (const auto& block : spec.blocks)
    for (int i : block)
      for (int j : block)
        if (i != j) sigma(i, j) = spec.rho;

  for (const auto& link : spec.cross_links) {
    if (link.i < 0 || link.i >= spec.p || link.j < 0 || link.j >= spec.p || link.i == link.j)
      throw std::invalid_argument("CorrelationSpec: invalid cross link");
    if (!(std::abs(link.r) < 1.0))
      throw std::invalid_argument("CorrelationSpec: cross link coefficient must lie in (-1, 1)");
    sigma(link.i, link.j) = link.r;
    sigma(link.j, link.i) = link.r;
  }

  CorrelationModel model;
  model.sigma = sigma;
  model.factor = psd_factor(sigma);  // throws when the combination is not PSD
  return model;
}

}  // namespace slimshap
