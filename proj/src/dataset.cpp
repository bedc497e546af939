#include "slimshap/dataset.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace slimshap {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

double parse_cell(const std::string& cell, int file_line, const std::string& column) {
  const std::string t = cell;
  if (t.empty())
    throw std::runtime_error("csv parse error at line " + std::to_string(file_line) +
                             ", column '" + column + "': empty cell");
  double v = 0.0;
  const char* begin = t.data();
  const char* end = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{} || ptr != end)
    throw std::runtime_error("csv parse error at line " + std::to_string(file_line) +
                             ", column '" + column + "': cannot parse '" + t + "' as a number");
  if (!std::isfinite(v))
    throw std::runtime_error("csv parse error at line " + std::to_string(file_line) +
                             ", column '" + column + "': non-finite value '" + t + "'");
  return v;
}

void check_finite(const Dataset& d) {
  for (int i = 0; i < d.n(); ++i)
    for (int j = 0; j < d.p(); ++j)
      if (!std::isfinite(d.X(i, j)))
        throw std::invalid_argument("Dataset: non-finite value at row " + std::to_string(i) +
                                    ", column " + std::to_string(j));
  for (Eigen::Index i = 0; i < d.predictions.size(); ++i)
    if (!std::isfinite(d.predictions(i)))
      throw std::invalid_argument("Dataset: non-finite prediction at row " + std::to_string(i));
}

}  // namespace

Dataset Dataset::from_matrix(Eigen::MatrixXd X, std::vector<std::string> names) {
  Dataset d;
  d.X = std::move(X);
  if (names.empty()) {
    names.reserve(static_cast<std::size_t>(d.p()));
    for (int j = 0; j < d.p(); ++j) names.push_back("x" + std::to_string(j + 1));
  }
  if (static_cast<int>(names.size()) != d.p())
    throw std::invalid_argument("Dataset: name count does not match column count");
  d.feature_names = std::move(names);
  check_finite(d);
  return d;
}

Dataset Dataset::from_matrix(Eigen::MatrixXd X, Eigen::VectorXd predictions,
                             std::vector<std::string> names) {
  if (predictions.size() != X.rows())
    throw std::invalid_argument("Dataset: prediction count does not match row count");
  Dataset d = from_matrix(std::move(X), std::move(names));
  d.predictions = std::move(predictions);
  check_finite(d);
  return d;
}

Dataset Dataset::head(int count) const {
  if (count < 0 || count > n())
    throw std::invalid_argument("Dataset::head: count out of range");
  Dataset d;
  d.feature_names = feature_names;
  d.X = X.topRows(count);
  if (has_predictions()) d.predictions = predictions.head(count);
  return d;
}

Dataset load_dataset(const std::string& path,
                     const std::optional<std::string>& prediction_column) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");

  std::string line;
  int file_line = 0;
  // header
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++file_line;
    if (!line.empty() && line[0] == '#') continue;
    if (trim(line).empty()) continue;
    header = split_csv_line(line);
    break;
  }
  if (header.empty()) throw std::runtime_error("'" + path + "': no header row found");

  int pred_idx = -1;
  if (prediction_column) {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == *prediction_column) pred_idx = static_cast<int>(j);
    if (pred_idx < 0) {
      std::string cols;
      for (std::size_t j = 0; j < header.size(); ++j)
        cols += (j ? ", " : "") + header[j];
      throw std::runtime_error("'" + path + "': prediction column '" + *prediction_column +
                               "' not found; available columns: " + cols);
    }
  }

  std::vector<std::vector<double>> feature_rows;
  std::vector<double> preds;
  const std::size_t width = header.size();
  while (std::getline(in, line)) {
    ++file_line;
    if (!line.empty() && line[0] == '#') continue;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != width)
      throw std::runtime_error("csv parse error at line " + std::to_string(file_line) + ": expected " +
                               std::to_string(width) + " cells, found " +
                               std::to_string(cells.size()));
    std::vector<double> row;
    row.reserve(width - (pred_idx >= 0 ? 1 : 0));
    for (std::size_t j = 0; j < width; ++j) {
      double v = parse_cell(cells[j], file_line, header[j]);
      if (static_cast<int>(j) == pred_idx)
        preds.push_back(v);
      else
        row.push_back(v);
    }
    feature_rows.push_back(std::move(row));
  }
  if (feature_rows.empty()) throw std::runtime_error("'" + path + "': no data rows");

  Dataset d;
  d.feature_names.clear();
  for (std::size_t j = 0; j < width; ++j)
    if (static_cast<int>(j) != pred_idx) d.feature_names.push_back(header[j]);
  const int n = static_cast<int>(feature_rows.size());
  const int p = static_cast<int>(d.feature_names.size());
  d.X.resize(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) d.X(i, j) = feature_rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  if (pred_idx >= 0) {
    d.predictions.resize(n);
    for (int i = 0; i < n; ++i) d.predictions(i) = preds[static_cast<std::size_t>(i)];
  }
  return d;
}

std::string format_double(double v) {
  char buf[64];
  // shortest representation that round-trips exactly
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    double back = 0.0;
    std::from_chars(buf, buf + std::strlen(buf), back);
    if (back == v || (std::isnan(back) && std::isnan(v))) return buf;
  }
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void atomic_write_text(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp + "' for writing");
    out << text;
    if (!out) throw std::runtime_error("write to '" + tmp + "' failed");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("rename '" + tmp + "' -> '" + path + "' failed");
}

void save_dataset(const Dataset& data, const std::string& path,
                  const std::optional<std::string>& prediction_column) {
  std::ostringstream out;
  for (int j = 0; j < data.p(); ++j) out << (j ? "," : "") << data.feature_names[static_cast<std::size_t>(j)];
  if (prediction_column) {
    if (!data.has_predictions())
      throw std::invalid_argument("save_dataset: no predictions to write");
    out << (data.p() ? "," : "") << *prediction_column;
  }
  out << "\n";
  for (int i = 0; i < data.n(); ++i) {
    for (int j = 0; j < data.p(); ++j) out << (j ? "," : "") << format_double(data.X(i, j));
    if (prediction_column) out << (data.p() ? "," : "") << format_double(data.predictions(i));
    out << "\n";
  }
  atomic_write_text(path, out.str());
}

}  // namespace slimshap
