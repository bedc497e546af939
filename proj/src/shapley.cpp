#include "slimshap/shapley.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace slimshap {

namespace {

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double out = 1.0;
  for (int i = 1; i <= k; ++i) out = out * static_cast<double>(n - k + i) / static_cast<double>(i);
  return out;
}

}  // namespace

double shapley_weight(int p, int s) {
  if (p < 2) throw std::invalid_argument("need at least 2 players");
  if (s <= 0 || s >= p)
    throw std::invalid_argument("kernel weight is defined for 0 < s < p only");
  return static_cast<double>(p - 1) /
         (binomial(p, s) * static_cast<double>(s) * static_cast<double>(p - s));
}

int max_gamma(int p) { return (p + 1) / 2; }

std::vector<FeatureSubset> threshold_subsets(int p, int gamma) {
  if (p < 1 || p > kMaxSubsetUniverse) throw std::invalid_argument("unsupported player count");
  if (gamma < 1 || gamma > max_gamma(p))
    throw std::invalid_argument("threshold must satisfy 1 <= gamma <= ceil(p/2), got " +
                                std::to_string(gamma));
  std::vector<FeatureSubset> out;
  for (const FeatureSubset& u : enumerate_subsets(p)) {
    const int s = u.size();
    if (s <= gamma || p - s <= gamma) out.push_back(u);
  }
  return out;
}

ShapleySolver build_solver(const std::vector<FeatureSubset>& subsets, int p,
                           const ShapleyOptions& options) {
  if (p < 2 || p > kMaxSubsetUniverse) throw std::invalid_argument("unsupported player count");
  const int n_sub = static_cast<int>(subsets.size());
  int full_idx = -1;
  for (int k = 0; k < n_sub; ++k) {
    if (subsets[static_cast<std::size_t>(k)].p != p)
      throw std::invalid_argument("subset universe size mismatch");
    if (subsets[static_cast<std::size_t>(k)].full()) full_idx = k;
  }
  if (full_idx < 0) throw std::invalid_argument("the subset family must contain the full set");

  ShapleySolver solver;
  solver.subsets = subsets;
  solver.p = p;

  // Interior rows: everything except the empty and full coalition.
  std::vector<int> mid;
  for (int k = 0; k < n_sub; ++k) {
    const FeatureSubset& u = subsets[static_cast<std::size_t>(k)];
    if (!u.empty() && !u.full()) mid.push_back(k);
  }
  const int n_mid = static_cast<int>(mid.size());
  if (n_mid < p - 1) throw std::invalid_argument("too few coalitions to identify attributions");

  if (options.constrain_extremes) {
    // Substitute phi_p = v(full) - sum(psi) and solve for psi in R^{p-1}.
    Eigen::MatrixXd A(n_mid, p - 1);
    Eigen::VectorXd w(n_mid);
    for (int r = 0; r < n_mid; ++r) {
      const FeatureSubset& u = solver.subsets[static_cast<std::size_t>(mid[r])];
      const double last = u.contains(p - 1) ? 1.0 : 0.0;
      for (int j = 0; j < p - 1; ++j) A(r, j) = (u.contains(j) ? 1.0 : 0.0) - last;
      w(r) = shapley_weight(p, u.size());
    }
    // psi = M^-1 A^T W (P_mid - b e_full^T) values,  b_r = [p in u_r]
    Eigen::MatrixXd M = A.transpose() * w.asDiagonal() * A;
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(p - 1, n_sub);
    for (int r = 0; r < n_mid; ++r) {
      const FeatureSubset& u = solver.subsets[static_cast<std::size_t>(mid[r])];
      const Eigen::VectorXd col = w(r) * A.row(r).transpose();
      rhs.col(mid[r]) += col;
      if (u.contains(p - 1)) rhs.col(full_idx) -= col;
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
    const Eigen::VectorXd d = ldlt.vectorD();
    if (!(d.minCoeff() > 1e-12 * std::max(1.0, d.maxCoeff())))
      throw std::runtime_error("coalition family leaves attribution directions unidentified");
    Eigen::MatrixXd G = ldlt.solve(rhs);  // (p-1) x n_sub
    solver.S = Eigen::MatrixXd::Zero(p, n_sub);
    solver.S.topRows(p - 1) = G;
    solver.S.row(p - 1) = -G.colwise().sum();
    solver.S(p - 1, full_idx) += 1.0;
  } else {
    // Soft version: the grand coalition enters as an ordinary row with a large weight.
    const int n_rows = n_mid + 1;
    Eigen::MatrixXd Z(n_rows, p);
    Eigen::VectorXd w(n_rows);
    std::vector<int> row_subset(static_cast<std::size_t>(n_rows));
    for (int r = 0; r < n_mid; ++r) {
      const FeatureSubset& u = solver.subsets[static_cast<std::size_t>(mid[r])];
      for (int j = 0; j < p; ++j) Z(r, j) = u.contains(j) ? 1.0 : 0.0;
      w(r) = shapley_weight(p, u.size());
      row_subset[static_cast<std::size_t>(r)] = mid[r];
    }
    Z.row(n_mid).setOnes();
    w(n_mid) = options.extreme_weight;
    row_subset[static_cast<std::size_t>(n_mid)] = full_idx;
    Eigen::MatrixXd M = Z.transpose() * w.asDiagonal() * Z;
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(p, n_sub);
    for (int r = 0; r < n_rows; ++r)
      rhs.col(row_subset[static_cast<std::size_t>(r)]) += w(r) * Z.row(r).transpose();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
    const Eigen::VectorXd d = ldlt.vectorD();
    if (!(d.minCoeff() > 1e-12 * std::max(1.0, d.maxCoeff())))
      throw std::runtime_error("coalition family leaves attribution directions unidentified");
    solver.S = ldlt.solve(rhs);
  }
  return solver;
}

Eigen::VectorXd solve_wls(const std::vector<FeatureSubset>& subsets, const Eigen::VectorXd& values,
                          int p, const ShapleyOptions& options) {
  if (values.size() != static_cast<Eigen::Index>(subsets.size()))
    throw std::invalid_argument("one value per coalition required");
  return build_solver(subsets, p, options).S * values;
}

Eigen::VectorXd exact_shapley_brute(const Eigen::VectorXd& values, int p) {
  if (p < 1 || p > 15) throw std::invalid_argument("direct enumeration supports 1 <= p <= 15");
  const std::uint32_t n_all = 1u << p;
  if (values.size() != static_cast<Eigen::Index>(n_all))
    throw std::invalid_argument("need a value for every coalition");

  const std::vector<FeatureSubset> all = enumerate_subsets(p);
  std::vector<double> by_mask(n_all, 0.0);
  for (std::size_t k = 0; k < all.size(); ++k)
    by_mask[all[k].mask] = values(static_cast<Eigen::Index>(k));

  std::vector<double> fact(static_cast<std::size_t>(p) + 1, 1.0);
  for (int i = 1; i <= p; ++i) fact[static_cast<std::size_t>(i)] = fact[static_cast<std::size_t>(i - 1)] * i;

  Eigen::VectorXd phi = Eigen::VectorXd::Zero(p);
  for (std::uint32_t mask = 0; mask < n_all; ++mask) {
    const int s = __builtin_popcount(mask);
    for (int i = 0; i < p; ++i) {
      if (mask & (1u << i)) continue;
      const double coef = fact[static_cast<std::size_t>(s)] *
                          fact[static_cast<std::size_t>(p - 1 - s)] / fact[static_cast<std::size_t>(p)];
      phi(i) += coef * (by_mask[mask | (1u << i)] - by_mask[mask]);
    }
  }
  return phi;
}

}  // namespace slimshap
