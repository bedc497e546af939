#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "slimshap/dataset.hpp"

namespace slimshap {

inline constexpr double kDefaultRidge = 1e-8;
inline constexpr double kWeightFloor = 1e-12;  // rows below this weight are dropped from fits

// Piecewise-linear hat bases on deduplicated empirical-quantile knots. A
// feature with a single knot (constant column) spans nothing beyond the
// intercept. Hat values at any clamped point sum to one.
struct SplineBasis1D {
  std::vector<double> knots;  // strictly increasing, at least one

  int n_hats() const { return static_cast<int>(knots.size()); }
  // columns this feature contributes to a design with a global intercept;
  // the first hat is dropped to keep the expansion full rank
  int n_cols() const { return std::max(n_hats() - 1, 0); }

  // all hat values at x (x clamped into [knots.front(), knots.back()])
  void hats(double x, std::vector<double>& out) const;

  // the at-most-two surviving design entries at x: (column within this
  // feature's block, value); returns the number written (0, 1 or 2)
  int design_entries(double x, int cols[2], double vals[2]) const;
};

// Equally spaced empirical quantiles (linear interpolation), deduplicated,
// boundaries at the min and max of the column. n_knots >= 2.
SplineBasis1D build_basis(const Eigen::VectorXd& column, int n_knots);

std::vector<SplineBasis1D> build_basis_all(const Dataset& data, int n_knots);

// Additive spline model: intercept plus one hat expansion per feature.
struct GamModel {
  std::vector<SplineBasis1D> basis;       // one entry per model feature
  double intercept = 0.0;
  std::vector<Eigen::VectorXd> coef;      // per feature, size basis[f].n_cols()
  bool ridge_fallback = false;            // rank-deficient design refit with default ridge
  bool intercept_only = false;            // too few positively weighted rows
  double weighted_rss = 0.0;
  double weight_total = 0.0;
  int positive_rows = 0;
};

// Weighted penalized least squares on the spline expansion of X. The ridge
// penalty applies to non-intercept coordinates and is scaled by the mean
// design energy, so passing kDefaultRidge behaves sensibly on any scale.
// ridge == 0 requests a pure LS fit; if the design is rank deficient the fit
// silently falls back to the default ridge and marks the model.
GamModel fit_wls_gam(const Eigen::MatrixXd& X, const std::vector<SplineBasis1D>& basis,
                     const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                     double ridge = kDefaultRidge);

double predict_gam(const GamModel& model, const Eigen::RowVectorXd& row);
Eigen::VectorXd predict_gam(const GamModel& model, const Eigen::MatrixXd& rows);

// ---------------------------------------------------------------------------
// Shared expansion machinery. The pipeline expands the training matrix once
// and fits thousands of column-subset models against it; rows are stored as
// (column, value) pairs, at most two per feature, which keeps the normal
// equation accumulation proportional to the active entries rather than the
// full design width.

struct CompactDesign {
  int n = 0;
  int p = 0;
  int total_cols = 0;                // spline columns, excluding the intercept
  std::vector<int> col_offset;       // per feature, start of its column block
  std::vector<std::int32_t> idx;     // n * 2p entries, -1 when unused
  std::vector<double> val;
};

CompactDesign expand_design(const Eigen::MatrixXd& X, const std::vector<SplineBasis1D>& basis);

// Coefficients of a fit restricted to the features listed in `features`
// (ascending); layout: intercept followed by each feature's column block.
struct SubsetGamFit {
  Eigen::VectorXd beta;
  std::vector<std::int32_t> col_map;  // global design column -> beta index, -1 outside subset
  bool ridge_fallback = false;
  bool intercept_only = false;
  double weighted_rss = 0.0;
  double weight_total = 0.0;
  int positive_rows = 0;
};

// Scatter/solve core used by fit_wls_gam and the pipeline. When `rows` is
// given, only those row indices enter the fit (weights still indexed by the
// global row id).
SubsetGamFit fit_subset_gam(const CompactDesign& design, const std::vector<int>& features,
                            const Eigen::VectorXd& y, const Eigen::VectorXd& w, double ridge,
                            const std::vector<int>* rows = nullptr);

// Predictions of a subset fit over design rows, written into out[row_indices].
void predict_subset_gam(const CompactDesign& design, const std::vector<int>& features,
                        const SubsetGamFit& fit, Eigen::VectorXd& out);
double predict_subset_gam_row(const CompactDesign& design, const std::vector<int>& features,
                              const SubsetGamFit& fit, int row);

}  // namespace slimshap
