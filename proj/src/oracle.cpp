#include "slimshap/oracle.hpp"

#include <cmath>
#include <stdexcept>

#include "slimshap/correlation.hpp"
#include "slimshap/rng.hpp"
#include "slimshap/shapley.hpp"

namespace slimshap {

namespace {

void check_square(const Eigen::MatrixXd& sigma, Eigen::Index p, const char* what) {
  if (sigma.rows() != p || sigma.cols() != p) throw std::invalid_argument(what);
}

// Sigma_{others,u} Sigma_uu^{-1} and the conditional covariance of the others,
// built once per coalition and reused across instances or draws.
struct Mapping {
  std::vector<int> members, others;
  Eigen::MatrixXd A;
  Eigen::MatrixXd cond_cov;
};

Mapping make_mapping(const Eigen::MatrixXd& sigma, const FeatureSubset& u) {
  Mapping map;
  map.members = u.members();
  const int p = u.p;
  for (int j = 0; j < p; ++j)
    if (!u.contains(j)) map.others.push_back(j);
  const Eigen::Index k = static_cast<Eigen::Index>(map.members.size());
  const Eigen::Index o = static_cast<Eigen::Index>(map.others.size());
  if (k == 0) {
    map.cond_cov = sigma;
    return map;
  }
  Eigen::MatrixXd S_uu(k, k), S_ou(o, k), S_oo(o, o);
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = 0; b < k; ++b)
      S_uu(a, b) = sigma(map.members[static_cast<std::size_t>(a)],
                         map.members[static_cast<std::size_t>(b)]);
  for (Eigen::Index a = 0; a < o; ++a) {
    for (Eigen::Index b = 0; b < k; ++b)
      S_ou(a, b) = sigma(map.others[static_cast<std::size_t>(a)],
                         map.members[static_cast<std::size_t>(b)]);
    for (Eigen::Index b = 0; b < o; ++b)
      S_oo(a, b) = sigma(map.others[static_cast<std::size_t>(a)],
                         map.others[static_cast<std::size_t>(b)]);
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(S_uu);
  map.A = ldlt.solve(S_ou.transpose()).transpose();  // o x k
  map.cond_cov = S_oo - map.A * S_ou.transpose();
  return map;
}

ConditionalMoments moments_from_mapping(const Mapping& map, const Eigen::RowVectorXd& x, int p) {
  ConditionalMoments cm;
  cm.mean = Eigen::VectorXd::Zero(p);
  cm.cov = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd xu(static_cast<Eigen::Index>(map.members.size()));
  for (std::size_t a = 0; a < map.members.size(); ++a) {
    cm.mean(map.members[a]) = x(map.members[a]);
    xu(static_cast<Eigen::Index>(a)) = x(map.members[a]);
  }
  Eigen::VectorXd mo = map.members.empty()
                           ? Eigen::VectorXd::Zero(static_cast<Eigen::Index>(map.others.size()))
                           : Eigen::VectorXd(map.A * xu);
  for (std::size_t a = 0; a < map.others.size(); ++a) {
    cm.mean(map.others[a]) = mo(static_cast<Eigen::Index>(a));
    for (std::size_t b = 0; b < map.others.size(); ++b)
      cm.cov(map.others[a], map.others[b]) =
          map.cond_cov(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  }
  return cm;
}

double quadratic_mean_from_moments(const QuadraticModel& model, const ConditionalMoments& cm) {
  double out = model.linear.size() > 0 ? model.linear.dot(cm.mean) : 0.0;
  for (const QuadTerm& t : model.quad)
    out += t.c * (cm.mean(t.i) * cm.mean(t.j) + cm.cov(t.i, t.j));
  return out;
}

}  // namespace

double linear_value(const Eigen::VectorXd& beta, const Eigen::MatrixXd& sigma,
                    const FeatureSubset& u) {
  const Eigen::Index p = beta.size();
  check_square(sigma, p, "covariance shape does not match the coefficient vector");
  if (u.p != static_cast<int>(p)) throw std::invalid_argument("subset universe size mismatch");
  if (u.empty()) return 0.0;
  const std::vector<int> mem = u.members();
  const Eigen::Index k = static_cast<Eigen::Index>(mem.size());
  Eigen::MatrixXd S_uu(k, k);
  Eigen::VectorXd b(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    b(a) = sigma.row(mem[static_cast<std::size_t>(a)]).dot(beta.transpose());
    for (Eigen::Index c = 0; c < k; ++c)
      S_uu(a, c) = sigma(mem[static_cast<std::size_t>(a)], mem[static_cast<std::size_t>(c)]);
  }
  return b.dot(Eigen::LDLT<Eigen::MatrixXd>(S_uu).solve(b));
}

Eigen::VectorXd linear_values(const Eigen::VectorXd& beta, const Eigen::MatrixXd& sigma,
                              const std::vector<FeatureSubset>& family) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(family.size()));
  for (std::size_t k = 0; k < family.size(); ++k)
    out(static_cast<Eigen::Index>(k)) = linear_value(beta, sigma, family[k]);
  return out;
}

Eigen::VectorXd linear_oracle_shares(const Eigen::VectorXd& beta, const Eigen::MatrixXd& sigma) {
  const int p = static_cast<int>(beta.size());
  if (p > 15) throw std::invalid_argument("exact enumeration supports p <= 15");
  const std::vector<FeatureSubset> all = enumerate_subsets(p);
  Eigen::VectorXd phi = exact_shapley_brute(linear_values(beta, sigma, all), p);
  const double total = phi.sum();
  if (!(total > 0.0)) throw std::invalid_argument("model variance must be positive");
  return 100.0 * phi / total;
}

Eigen::VectorXd evaluate_quadratic(const QuadraticModel& model, const Eigen::MatrixXd& X) {
  Eigen::VectorXd out = model.linear.size() > 0
                            ? Eigen::VectorXd(X * model.linear)
                            : Eigen::VectorXd::Zero(X.rows());
  for (const QuadTerm& t : model.quad)
    out.array() += t.c * X.col(t.i).array() * X.col(t.j).array();
  return out;
}

ConditionalMoments gaussian_conditional_moments(const Eigen::MatrixXd& sigma,
                                                const FeatureSubset& u,
                                                const Eigen::RowVectorXd& x) {
  check_square(sigma, x.size(), "covariance shape does not match the instance");
  if (u.p != static_cast<int>(x.size()))
    throw std::invalid_argument("subset universe size mismatch");
  return moments_from_mapping(make_mapping(sigma, u), x, static_cast<int>(x.size()));
}

double quadratic_mean(const QuadraticModel& model, const Eigen::MatrixXd& sigma) {
  double out = 0.0;  // features are centered, so the linear part has mean zero
  for (const QuadTerm& t : model.quad) out += t.c * sigma(t.i, t.j);
  return out;
}

double quadratic_conditional_mean(const QuadraticModel& model, const Eigen::MatrixXd& sigma,
                                  const FeatureSubset& u, const Eigen::RowVectorXd& x) {
  return quadratic_mean_from_moments(model, gaussian_conditional_moments(sigma, u, x));
}

Eigen::VectorXd quadratic_oracle_shares(const QuadraticModel& model, const Eigen::MatrixXd& sigma,
                                        int n_draws, std::uint64_t seed) {
  const int p = static_cast<int>(sigma.rows());
  if (p > 15) throw std::invalid_argument("exact enumeration supports p <= 15");
  if (n_draws < 1000) throw std::invalid_argument("need at least 1000 draws");

  const Eigen::MatrixXd L = psd_factor(sigma);
  Rng rng(seed);
  Eigen::MatrixXd Z(n_draws, p);
  Eigen::VectorXd g(L.cols());
  for (int i = 0; i < n_draws; ++i) {
    for (Eigen::Index j = 0; j < g.size(); ++j) g(j) = rng.gauss();
    Z.row(i) = (L * g).transpose();
  }

  const std::vector<FeatureSubset> all = enumerate_subsets(p);
  Eigen::VectorXd values(static_cast<Eigen::Index>(all.size()));
  Eigen::VectorXd cond(n_draws);
  for (std::size_t k = 0; k < all.size(); ++k) {
    const FeatureSubset& u = all[k];
    if (u.empty()) {
      values(static_cast<Eigen::Index>(k)) = 0.0;
      continue;
    }
    if (u.full()) {
      cond = evaluate_quadratic(model, Z);
    } else {
      const Mapping map = make_mapping(sigma, u);
      // E(f | X_u): pin the known coordinates, map the rest through the
      // conditional mean, add the constant conditional-covariance correction.
      Eigen::MatrixXd Zu(n_draws, static_cast<Eigen::Index>(map.members.size()));
      for (std::size_t a = 0; a < map.members.size(); ++a)
        Zu.col(static_cast<Eigen::Index>(a)) = Z.col(map.members[a]);
      Eigen::MatrixXd Mo = Zu * map.A.transpose();
      Eigen::MatrixXd Mfull(n_draws, p);
      for (std::size_t a = 0; a < map.members.size(); ++a)
        Mfull.col(map.members[a]) = Zu.col(static_cast<Eigen::Index>(a));
      for (std::size_t a = 0; a < map.others.size(); ++a)
        Mfull.col(map.others[a]) = Mo.col(static_cast<Eigen::Index>(a));

      cond = model.linear.size() > 0 ? Eigen::VectorXd(Mfull * model.linear)
                                     : Eigen::VectorXd::Zero(n_draws);
      Eigen::MatrixXd Cfull = Eigen::MatrixXd::Zero(p, p);
      for (std::size_t a = 0; a < map.others.size(); ++a)
        for (std::size_t b = 0; b < map.others.size(); ++b)
          Cfull(map.others[a], map.others[b]) =
              map.cond_cov(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      for (const QuadTerm& t : model.quad)
        cond.array() += t.c * (Mfull.col(t.i).array() * Mfull.col(t.j).array() + Cfull(t.i, t.j));
    }
    const double mean = cond.mean();
    values(static_cast<Eigen::Index>(k)) =
        (cond.array() - mean).square().sum() / static_cast<double>(n_draws);
  }

  Eigen::VectorXd phi = exact_shapley_brute(values, p);
  const double total = phi.sum();
  if (!(total > 0.0)) throw std::invalid_argument("model variance must be positive");
  return 100.0 * phi / total;
}

Eigen::MatrixXd theoretical_shap(const QuadraticModel& model, const Eigen::MatrixXd& sigma,
                                 const Eigen::MatrixXd& rows) {
  const int p = static_cast<int>(sigma.rows());
  if (p > 15) throw std::invalid_argument("exact enumeration supports p <= 15");
  if (rows.cols() != p) throw std::invalid_argument("instance width does not match the model");
  const double f_mean = quadratic_mean(model, sigma);
  const std::vector<FeatureSubset> all = enumerate_subsets(p);

  Eigen::MatrixXd values(rows.rows(), static_cast<Eigen::Index>(all.size()));
  for (std::size_t k = 0; k < all.size(); ++k) {
    const FeatureSubset& u = all[k];
    if (u.empty()) {
      values.col(static_cast<Eigen::Index>(k)).setZero();
      continue;
    }
    const Mapping map = make_mapping(sigma, u);
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      const ConditionalMoments cm = moments_from_mapping(map, rows.row(i), p);
      values(i, static_cast<Eigen::Index>(k)) = quadratic_mean_from_moments(model, cm) - f_mean;
    }
  }

  Eigen::MatrixXd phi(rows.rows(), p);
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    phi.row(i) = exact_shapley_brute(values.row(i).transpose(), p).transpose();
  return phi;
}

}  // namespace slimshap
