#include "slimshap/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "slimshap/parallel.hpp"
#include "slimshap/rng.hpp"
#include "slimshap/shapley.hpp"

namespace slimshap {

namespace {

double population_variance(const Eigen::VectorXd& v) {
  if (v.size() == 0) return 0.0;
  const double mean = v.mean();
  return (v.array() - mean).square().sum() / static_cast<double>(v.size());
}

// Shared skeleton: coalition variances over instances, then the weighted solve.
Eigen::VectorXd variance_attribution(
    const std::function<Eigen::VectorXd(const FeatureSubset&)>& values_for,
    const std::vector<FeatureSubset>& family, int p, int threads) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(family.size()));
  parallel_for(static_cast<int>(family.size()), threads, [&](int k) {
    const FeatureSubset& u = family[static_cast<std::size_t>(k)];
    if (u.empty()) return;
    c(k) = population_variance(values_for(u));
  });
  return solve_wls(family, c, p);
}

}  // namespace

double relative_error(const Eigen::VectorXd& estimate, const Eigen::VectorXd& reference) {
  if (estimate.size() != reference.size())
    throw std::invalid_argument("vectors must have equal length");
  const double den = reference.squaredNorm();
  if (!(den > 0.0)) throw std::invalid_argument("reference must be nonzero");
  return (estimate - reference).squaredNorm() / den;
}

Eigen::VectorXd mean_abs_shares(const Eigen::MatrixXd& phi) {
  if (phi.rows() == 0) throw std::invalid_argument("need at least one attribution row");
  Eigen::VectorXd mean_abs = phi.cwiseAbs().colwise().mean();
  const double total = mean_abs.sum();
  if (!(total > 0.0)) return Eigen::VectorXd::Zero(phi.cols());
  return 100.0 * mean_abs / total;
}

MarginalValues::MarginalValues(ModelFn model, const Eigen::MatrixXd& train,
                               const MarginalConfig& config)
    : model_(std::move(model)) {
  if (train.rows() < 1) throw std::invalid_argument("empty background source");
  if (config.n_background < 1) throw std::invalid_argument("need at least one background row");
  Rng rng(config.seed);
  background_.resize(config.n_background, train.cols());
  for (int b = 0; b < config.n_background; ++b)
    background_.row(b) = train.row(static_cast<Eigen::Index>(
        rng.below(static_cast<std::uint64_t>(train.rows()))));
  base_ = model_(background_).mean();
}

Eigen::VectorXd MarginalValues::value(const FeatureSubset& u,
                                      const Eigen::MatrixXd& explain) const {
  if (explain.cols() != background_.cols())
    throw std::invalid_argument("explain width does not match the background");
  if (u.empty()) return Eigen::VectorXd::Constant(explain.rows(), base_);
  if (u.full()) return model_(explain);

  const std::vector<int> members = u.members();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(explain.rows());
  Eigen::MatrixXd hybrid(explain.rows(), explain.cols());
  for (int m : members) hybrid.col(m) = explain.col(m);
  for (int b = 0; b < background_.rows(); ++b) {
    for (Eigen::Index j = 0; j < explain.cols(); ++j)
      if (!u.contains(static_cast<int>(j)))
        hybrid.col(j).setConstant(background_(b, j));
    acc += model_(hybrid);
  }
  return acc / static_cast<double>(background_.rows());
}

Eigen::VectorXd marginal_global_phi(const MarginalValues& mv,
                                    const std::vector<FeatureSubset>& family,
                                    const Eigen::MatrixXd& instances, int p, int threads) {
  return variance_attribution([&](const FeatureSubset& u) { return mv.value(u, instances); },
                              family, p, threads);
}

KernelCE::KernelCE(const Eigen::MatrixXd& train_X, const Eigen::VectorXd& train_pred,
                   const KernelCEConfig& config)
    : X_(train_X), pred_(train_pred), config_(config) {
  if (train_X.rows() != train_pred.size())
    throw std::invalid_argument("one prediction per training row required");
  if (train_X.rows() < 2) throw std::invalid_argument("need at least two training rows");
  if (!(config.bandwidth > 0.0)) throw std::invalid_argument("bandwidth must be positive");
  if (config.top_k < 1) throw std::invalid_argument("top_k must be positive");
  Eigen::RowVectorXd mean = X_.colwise().mean();
  Eigen::MatrixXd centered = X_.rowwise() - mean;
  cov_ = centered.transpose() * centered / static_cast<double>(X_.rows() - 1);
  base_ = pred_.mean();
}

Eigen::VectorXd KernelCE::value(const FeatureSubset& u, const Eigen::MatrixXd& explain) const {
  if (explain.cols() != X_.cols())
    throw std::invalid_argument("explain width does not match the training data");
  if (u.empty()) return Eigen::VectorXd::Constant(explain.rows(), base_);

  const std::vector<int> members = u.members();
  const Eigen::Index k = static_cast<Eigen::Index>(members.size());
  const Eigen::Index n = X_.rows();

  Eigen::MatrixXd S_uu(k, k);
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = 0; b < k; ++b)
      S_uu(a, b) = cov_(members[static_cast<std::size_t>(a)], members[static_cast<std::size_t>(b)]);
  S_uu.diagonal().array() += 1e-10 * std::max(1.0, S_uu.trace() / static_cast<double>(k));
  Eigen::LDLT<Eigen::MatrixXd> ldlt(S_uu);

  Eigen::MatrixXd Xu(n, k);
  for (Eigen::Index a = 0; a < k; ++a) Xu.col(a) = X_.col(members[static_cast<std::size_t>(a)]);
  Eigen::MatrixXd G = ldlt.solve(Xu.transpose()).transpose();  // n x k, rows = M x_i
  Eigen::VectorXd g = (Xu.array() * G.array()).rowwise().sum();

  const double inv_two_h2 = 1.0 / (2.0 * config_.bandwidth * config_.bandwidth);
  const int keep = std::min<int>(config_.top_k, static_cast<int>(n));

  Eigen::VectorXd out(explain.rows());
  std::vector<int> order(static_cast<std::size_t>(n));
  for (Eigen::Index e = 0; e < explain.rows(); ++e) {
    Eigen::VectorXd xe(k);
    for (Eigen::Index a = 0; a < k; ++a) xe(a) = explain(e, members[static_cast<std::size_t>(a)]);
    const double q = xe.dot(ldlt.solve(xe));
    Eigen::VectorXd d2 = ((g.array() - 2.0 * (G * xe).array() + q) / static_cast<double>(k))
                             .max(0.0)
                             .matrix();
    std::iota(order.begin(), order.end(), 0);
    std::nth_element(order.begin(), order.begin() + keep - 1, order.end(),
                     [&](int a, int b) { return d2(a) < d2(b); });
    double wsum = 0.0, vsum = 0.0, best_d = d2(order[0]);
    int best_row = order[0];
    for (int t = 0; t < keep; ++t) {
      const int row = order[static_cast<std::size_t>(t)];
      const double w = std::exp(-d2(row) * inv_two_h2);
      wsum += w;
      vsum += w * pred_(row);
      if (d2(row) < best_d) {
        best_d = d2(row);
        best_row = row;
      }
    }
    out(e) = wsum > 1e-300 ? vsum / wsum : pred_(best_row);
  }
  return out;
}

Eigen::VectorXd kernel_global_phi(const KernelCE& kce, const std::vector<FeatureSubset>& family,
                                  const Eigen::MatrixXd& instances, int p, int threads) {
  return variance_attribution([&](const FeatureSubset& u) { return kce.value(u, instances); },
                              family, p, threads);
}

}  // namespace slimshap
