#pragma once

#include <vector>

#include <Eigen/Dense>

#include "slimshap/subsets.hpp"

namespace slimshap {

// Weighted-least-squares recovery of Shapley values from coalition values.
//
// Games are presented as (subset, value) samples with v(empty) = 0 by
// construction; the grand-coalition value pins the sum of the attributions.
// With every subset present the minimizer is exactly the Shapley vector; the
// thresholded families keep only the cheapest-to-estimate coalitions.

// Kernel weight for coalitions of size s among p players, 0 < s < p.
double shapley_weight(int p, int s);

// Largest admissible threshold: ceil(p/2) enumerates everything.
int max_gamma(int p);

// All subsets u with |u| <= gamma or |complement(u)| <= gamma, ordered by
// (size, lexicographic members).  Includes the empty and the full set.
std::vector<FeatureSubset> threshold_subsets(int p, int gamma);

struct ShapleyOptions {
  // true: eliminate the grand-coalition constraint exactly, so attributions
  // always sum to v(full).  false: keep it as a heavily weighted row instead.
  bool constrain_extremes = true;
  double extreme_weight = 1e5;
};

// Linear map from coalition values to attributions for a fixed subset family:
// phi = S * values.  Building it once amortizes the solve across many games on
// the same family (one matrix-vector product per game afterwards).
struct ShapleySolver {
  Eigen::MatrixXd S;  // p x |subsets|
  std::vector<FeatureSubset> subsets;
  int p = 0;
};

ShapleySolver build_solver(const std::vector<FeatureSubset>& subsets, int p,
                           const ShapleyOptions& options = {});

// One-off solve on a family; `values` aligns with `subsets`, which must contain
// the full set (and may contain the empty set; its value is ignored as 0).
Eigen::VectorXd solve_wls(const std::vector<FeatureSubset>& subsets,
                          const Eigen::VectorXd& values, int p,
                          const ShapleyOptions& options = {});

// Exact Shapley values by direct summation over all 2^p coalitions (p <= 15).
// `values` aligns with enumerate_subsets(p).
Eigen::VectorXd exact_shapley_brute(const Eigen::VectorXd& values, int p);

}  // namespace slimshap
