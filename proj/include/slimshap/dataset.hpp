#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace slimshap {

// Feature matrix plus optional model predictions for the same rows. Every
// stored value is finite; loaders reject anything else up front so numeric
// code never has to re-check.
struct Dataset {
  std::vector<std::string> feature_names;
  Eigen::MatrixXd X;            // n x p
  Eigen::VectorXd predictions;  // size n when present, else size 0

  int n() const { return static_cast<int>(X.rows()); }
  int p() const { return static_cast<int>(X.cols()); }
  bool has_predictions() const { return predictions.size() == X.rows() && X.rows() > 0; }

  static Dataset from_matrix(Eigen::MatrixXd X, std::vector<std::string> names = {});
  static Dataset from_matrix(Eigen::MatrixXd X, Eigen::VectorXd predictions,
                             std::vector<std::string> names = {});

  // rows [0, count) as their own dataset (predictions carried along)
  Dataset head(int count) const;
};

// Reads a comma-separated file with a mandatory header row. Lines starting
// with '#' are skipped. When prediction_column is given, that column is
// detached into Dataset::predictions and the rest become features. Parse
// failures name the file line and the offending column.
Dataset load_dataset(const std::string& path,
                     const std::optional<std::string>& prediction_column = std::nullopt);

// Atomic write (temp file + rename) of features plus an optional prediction column.
void save_dataset(const Dataset& data, const std::string& path,
                  const std::optional<std::string>& prediction_column = std::nullopt);

// Formats a double so that parsing it back recovers the identical bits.
std::string format_double(double v);

// Writes text to path atomically via a sibling temp file and rename.
void atomic_write_text(const std::string& path, const std::string& text);

}  // namespace slimshap
