#include "slimshap/spline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace slimshap {

void SplineBasis1D::hats(double x, std::vector<double>& out) const {
  const int k = n_hats();
  out.assign(static_cast<std::size_t>(k), 0.0);
  if (k == 1) {
    out[0] = 1.0;
    return;
  }
  x = std::clamp(x, knots.front(), knots.back());
  int i = static_cast<int>(std::upper_bound(knots.begin(), knots.end(), x) - knots.begin()) - 1;
  i = std::clamp(i, 0, k - 2);
  const double s = (x - knots[static_cast<std::size_t>(i)]) /
                   (knots[static_cast<std::size_t>(i + 1)] - knots[static_cast<std::size_t>(i)]);
  out[static_cast<std::size_t>(i)] = 1.0 - s;
  out[static_cast<std::size_t>(i + 1)] = s;
}

int SplineBasis1D::design_entries(double x, int cols[2], double vals[2]) const {
  const int k = n_hats();
  if (k <= 1) return 0;
  x = std::clamp(x, knots.front(), knots.back());
  int i = static_cast<int>(std::upper_bound(knots.begin(), knots.end(), x) - knots.begin()) - 1;
  i = std::clamp(i, 0, k - 2);
  const double s = (x - knots[static_cast<std::size_t>(i)]) /
                   (knots[static_cast<std::size_t>(i + 1)] - knots[static_cast<std::size_t>(i)]);
  int n = 0;
  if (i >= 1) {  // hat i survives (hat 0 is dropped)
    cols[n] = i - 1;
    vals[n] = 1.0 - s;
    ++n;
  }
  cols[n] = i;
  vals[n] = s;
  ++n;
  return n;
}

SplineBasis1D build_basis(const Eigen::VectorXd& column, int n_knots) {
  if (n_knots < 2) throw std::invalid_argument("build_basis: need at least 2 knots");
  if (column.size() < 1) throw std::invalid_argument("build_basis: empty column");
  std::vector<double> sorted(column.data(), column.data() + column.size());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  SplineBasis1D basis;
  basis.knots.reserve(static_cast<std::size_t>(n_knots));
  const double span = sorted.back() - sorted.front();
  const double min_gap = std::max(1e-12, 1e-12 * std::abs(span));
  for (int j = 0; j < n_knots; ++j) {
    // linear-interpolation empirical quantile at probability j/(n_knots-1)
    const double h = static_cast<double>(n - 1) * j / (n_knots - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double q = sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
    if (basis.knots.empty() || q > basis.knots.back() + min_gap) basis.knots.push_back(q);
  }
  return basis;
}

std::vector<SplineBasis1D> build_basis_all(const Dataset& data, int n_knots) {
  std::vector<SplineBasis1D> out;
  out.reserve(static_cast<std::size_t>(data.p()));
  for (int j = 0; j < data.p(); ++j) out.push_back(build_basis(data.X.col(j), n_knots));
  return out;
}

CompactDesign expand_design(const Eigen::MatrixXd& X, const std::vector<SplineBasis1D>& basis) {
  if (static_cast<int>(basis.size()) != X.cols())
    throw std::invalid_argument("expand_design: basis count does not match feature count");
  CompactDesign d;
  d.n = static_cast<int>(X.rows());
  d.p = static_cast<int>(X.cols());
  d.col_offset.resize(static_cast<std::size_t>(d.p));
  int cols = 0;
  for (int f = 0; f < d.p; ++f) {
    d.col_offset[static_cast<std::size_t>(f)] = cols;
    cols += basis[static_cast<std::size_t>(f)].n_cols();
  }
  d.total_cols = cols;
  d.idx.assign(static_cast<std::size_t>(d.n) * 2 * static_cast<std::size_t>(d.p), -1);
  d.val.assign(d.idx.size(), 0.0);
  int ec[2];
  double ev[2];
  for (int i = 0; i < d.n; ++i) {
    for (int f = 0; f < d.p; ++f) {
      const int m = basis[static_cast<std::size_t>(f)].design_entries(X(i, f), ec, ev);
      const std::size_t slot = (static_cast<std::size_t>(i) * static_cast<std::size_t>(d.p) +
                                static_cast<std::size_t>(f)) * 2;
      for (int e = 0; e < m; ++e) {
        d.idx[slot + static_cast<std::size_t>(e)] =
            d.col_offset[static_cast<std::size_t>(f)] + ec[e];
        d.val[slot + static_cast<std::size_t>(e)] = ev[e];
      }
    }
  }
  return d;
}

namespace {

// local column layout for a feature subset: intercept at 0, then each
// feature's block in the order given
struct LocalLayout {
  std::vector<int> global_to_local;  // -1 when a column is outside the subset
  int n_cols = 1;
};

LocalLayout make_layout(const CompactDesign& design, const std::vector<int>& features,
                        const std::vector<int>& block_width) {
  LocalLayout l;
  l.global_to_local.assign(static_cast<std::size_t>(design.total_cols), -1);
  for (int f : features) {
    const int off = design.col_offset[static_cast<std::size_t>(f)];
    for (int c = 0; c < block_width[static_cast<std::size_t>(f)]; ++c)
      l.global_to_local[static_cast<std::size_t>(off + c)] = l.n_cols++;
  }
  return l;
}

std::vector<int> block_widths(const CompactDesign& design) {
  std::vector<int> w(static_cast<std::size_t>(design.p), 0);
  for (int f = 0; f + 1 < design.p; ++f)
    w[static_cast<std::size_t>(f)] =
        design.col_offset[static_cast<std::size_t>(f + 1)] - design.col_offset[static_cast<std::size_t>(f)];
  if (design.p > 0)
    w[static_cast<std::size_t>(design.p - 1)] =
        design.total_cols - design.col_offset[static_cast<std::size_t>(design.p - 1)];
  return w;
}

}  // namespace

SubsetGamFit fit_subset_gam(const CompactDesign& design, const std::vector<int>& features,
                            const Eigen::VectorXd& y, const Eigen::VectorXd& w, double ridge,
                            const std::vector<int>* rows) {
  if (y.size() != design.n || w.size() != design.n)
    throw std::invalid_argument("fit_subset_gam: response/weight length mismatch");
  const auto widths = block_widths(design);
  const LocalLayout layout = make_layout(design, features, widths);
  const int c = layout.n_cols;

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(c, c);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(c);
  double yy = 0.0, wtot = 0.0;
  int positive = 0;

  std::vector<int> lcol(static_cast<std::size_t>(2 * design.p + 1));
  std::vector<double> lval(lcol.size());
  const int iter_count = rows ? static_cast<int>(rows->size()) : design.n;
  for (int it = 0; it < iter_count; ++it) {
    const int i = rows ? (*rows)[static_cast<std::size_t>(it)] : it;
    const double wi = w(i);
    if (!(wi >= kWeightFloor)) continue;
    ++positive;
    wtot += wi;
    int m = 0;
    lcol[0] = 0;
    lval[0] = 1.0;
    ++m;
    for (int f : features) {
      const std::size_t slot = (static_cast<std::size_t>(i) * static_cast<std::size_t>(design.p) +
                                static_cast<std::size_t>(f)) * 2;
      for (int e = 0; e < 2; ++e) {
        const int g = design.idx[slot + static_cast<std::size_t>(e)];
        if (g < 0) continue;
        lcol[static_cast<std::size_t>(m)] = layout.global_to_local[static_cast<std::size_t>(g)];
        lval[static_cast<std::size_t>(m)] = design.val[slot + static_cast<std::size_t>(e)];
        ++m;
      }
    }
    const double yi = y(i);
    yy += wi * yi * yi;
    for (int a = 0; a < m; ++a) {
      const double va = wi * lval[static_cast<std::size_t>(a)];
      const int ca = lcol[static_cast<std::size_t>(a)];
      b(ca) += va * yi;
      for (int bb = 0; bb <= a; ++bb) {
        const int cb = lcol[static_cast<std::size_t>(bb)];
        // accumulate into the lower triangle regardless of entry order
        if (ca >= cb)
          A(ca, cb) += va * lval[static_cast<std::size_t>(bb)];
        else
          A(cb, ca) += va * lval[static_cast<std::size_t>(bb)];
      }
    }
  }

  SubsetGamFit fit;
  fit.col_map.assign(layout.global_to_local.begin(), layout.global_to_local.end());
  fit.weight_total = wtot;
  fit.positive_rows = positive;
  if (!(wtot > 0.0)) throw std::runtime_error("fit_subset_gam: all rows carry zero weight");

  A = A.selfadjointView<Eigen::Lower>();

  auto finish = [&](const Eigen::VectorXd& beta) {
    fit.beta = beta;
    const double rss = yy - 2.0 * beta.dot(b) + beta.dot(A.selfadjointView<Eigen::Lower>() * beta);
    fit.weighted_rss = std::max(rss, 0.0);
  };

  if (positive < c || c == 1) {
    fit.intercept_only = (c > 1);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(c);
    beta(0) = b(0) / A(0, 0);
    finish(beta);
    return fit;
  }

  const double trace_scale =
      (c > 1) ? A.diagonal().tail(c - 1).sum() / static_cast<double>(c - 1) : 1.0;
  auto solve_with = [&](double lam) {
    Eigen::MatrixXd Areg = A;
    if (lam > 0) Areg.diagonal().tail(c - 1).array() += lam * std::max(trace_scale, 1e-300);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(Areg);
    return std::pair<Eigen::VectorXd, bool>(
        ldlt.solve(b),
        ldlt.info() == Eigen::Success &&
            ldlt.vectorD().minCoeff() > 1e-12 * std::max(ldlt.vectorD().maxCoeff(), 0.0));
  };

  auto [beta, ok] = solve_with(ridge);
  if ((!ok || !beta.allFinite()) && ridge == 0.0) {
    std::tie(beta, ok) = solve_with(kDefaultRidge);
    fit.ridge_fallback = true;
  }
  if (!beta.allFinite()) {
    // hopeless design: retreat to the weighted mean
    fit.intercept_only = true;
    beta = Eigen::VectorXd::Zero(c);
    beta(0) = b(0) / A(0, 0);
  }
  finish(beta);
  return fit;
}

void predict_subset_gam(const CompactDesign& design, const std::vector<int>& features,
                        const SubsetGamFit& fit, Eigen::VectorXd& out) {
  out.resize(design.n);
  for (int i = 0; i < design.n; ++i) out(i) = predict_subset_gam_row(design, features, fit, i);
}

double predict_subset_gam_row(const CompactDesign& design, const std::vector<int>& features,
                              const SubsetGamFit& fit, int row) {
  double acc = fit.beta(0);
  if (fit.intercept_only || fit.beta.size() == 1) return acc;
  for (int f : features) {
    const std::size_t slot = (static_cast<std::size_t>(row) * static_cast<std::size_t>(design.p) +
                              static_cast<std::size_t>(f)) * 2;
    for (int e = 0; e < 2; ++e) {
      const int g = design.idx[slot + static_cast<std::size_t>(e)];
      if (g < 0) continue;
      acc += design.val[slot + static_cast<std::size_t>(e)] *
             fit.beta(fit.col_map[static_cast<std::size_t>(g)]);
    }
  }
  return acc;
}

GamModel fit_wls_gam(const Eigen::MatrixXd& X, const std::vector<SplineBasis1D>& basis,
                     const Eigen::VectorXd& y, const Eigen::VectorXd& w, double ridge) {
  if (X.rows() != y.size() || X.rows() != w.size())
    throw std::invalid_argument("fit_wls_gam: row/response/weight sizes disagree");
  const CompactDesign design = expand_design(X, basis);
  std::vector<int> all(static_cast<std::size_t>(design.p));
  for (int f = 0; f < design.p; ++f) all[static_cast<std::size_t>(f)] = f;
  SubsetGamFit fit = fit_subset_gam(design, all, y, w, ridge);

  GamModel model;
  model.basis = basis;
  model.intercept = fit.beta(0);
  model.ridge_fallback = fit.ridge_fallback;
  model.intercept_only = fit.intercept_only;
  model.weighted_rss = fit.weighted_rss;
  model.weight_total = fit.weight_total;
  model.positive_rows = fit.positive_rows;
  model.coef.resize(basis.size());
  int at = 1;
  for (std::size_t f = 0; f < basis.size(); ++f) {
    const int width = basis[f].n_cols();
    model.coef[f] = Eigen::VectorXd::Zero(width);
    if (!fit.intercept_only)
      for (int c = 0; c < width; ++c) model.coef[f](c) = fit.beta(at + c);
    at += width;
  }
  return model;
}

double predict_gam(const GamModel& model, const Eigen::RowVectorXd& row) {
  if (row.size() != static_cast<Eigen::Index>(model.basis.size()))
    throw std::invalid_argument("predict_gam: row width does not match the model");
  double acc = model.intercept;
  int ec[2];
  double ev[2];
  for (std::size_t f = 0; f < model.basis.size(); ++f) {
    const int m = model.basis[f].design_entries(row(static_cast<Eigen::Index>(f)), ec, ev);
    for (int e = 0; e < m; ++e) acc += ev[e] * model.coef[f](ec[e]);
  }
  return acc;
}

Eigen::VectorXd predict_gam(const GamModel& model, const Eigen::MatrixXd& rows) {
  Eigen::VectorXd out(rows.rows());
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    out(i) = predict_gam(model, Eigen::RowVectorXd(rows.row(i)));
  return out;
}

}  // namespace slimshap
