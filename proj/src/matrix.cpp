#include "cbd/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cbd/error.hpp"

namespace cbd {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid_input";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::InsufficientSample: return "insufficient_sample";
    case ErrorKind::DegenerateScale: return "degenerate_scale";
    case ErrorKind::InvalidScenario: return "invalid_scenario";
    case ErrorKind::InvalidParameter: return "invalid_parameter";
    case ErrorKind::InvalidModel: return "invalid_model";
    case ErrorKind::Schema: return "schema";
    case ErrorKind::Usage: return "usage";
  }
  return "unknown";
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw Error(ErrorKind::InvalidInput, "ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::column(std::span<const double> values) {
  Matrix m(values.size(), 1);
  std::copy(values.begin(), values.end(), m.data_.begin());
  return m;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix Matrix::hcat(const Matrix& other) const {
  if (rows_ != other.rows_) throw Error(ErrorKind::InvalidInput, "hcat: row count mismatch");
  Matrix out(rows_, cols_ + other.cols_);
  for (std::size_t i = 0; i < rows_; ++i) {
    auto dst = out.row(i);
    std::copy(row(i).begin(), row(i).end(), dst.begin());
    std::copy(other.row(i).begin(), other.row(i).end(), dst.begin() + static_cast<std::ptrdiff_t>(cols_));
  }
  return out;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto src = row(indices[k]);
    std::copy(src.begin(), src.end(), out.row(k).begin());
  }
  return out;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    acc += d * d;
  }
  return acc;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

}  // namespace cbd
