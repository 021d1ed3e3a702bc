#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cbd/matrix.hpp"

namespace cbd {

/// An n-sample of (X, Y, Z) triples. All three blocks share the row index.
struct Dataset {
  Matrix x;
  Matrix y;
  Matrix z;

  Dataset() = default;
  /// Validates shapes and finiteness; throws Error(InvalidInput) otherwise.
  Dataset(Matrix x, Matrix y, Matrix z);

  std::size_t n() const noexcept { return x.rows(); }
  std::size_t dx() const noexcept { return x.cols(); }
  std::size_t dy() const noexcept { return y.cols(); }
  std::size_t dz() const noexcept { return z.cols(); }

  /// Same (Y, Z), X replaced. The new X must have n rows and d_X columns.
  Dataset with_x(Matrix new_x) const;
  Dataset select_rows(std::span<const std::size_t> indices) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Symmetric n x n Euclidean distances.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n) : n_(n), values_(n * n, 0.0) {}

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values_[i * n_ + j]; }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * n_, n_}; }

 private:
  std::size_t n_ = 0;
  std::vector<double> values_;
};

/// Per-anchor ordering of all indices by distance from the anchor.
///
/// `order(u, k)` is the k-th closest index to u (ties broken by ascending
/// index). `rank(u, r)` is the position of r in row u. `closed_rank(u, r)` is
/// the last position whose distance from u equals dist(u, r), so that
/// dist(u, t) <= dist(u, r)  <=>  rank(u, t) <= closed_rank(u, r).
class DistanceOrder {
 public:
  DistanceOrder() = default;
  explicit DistanceOrder(std::size_t n)
      : n_(n), order_(n * n), rank_(n * n), closed_rank_(n * n) {}

  std::size_t size() const noexcept { return n_; }
  std::uint32_t order(std::size_t u, std::size_t k) const { return order_[u * n_ + k]; }
  std::uint32_t rank(std::size_t u, std::size_t r) const { return rank_[u * n_ + r]; }
  std::uint32_t closed_rank(std::size_t u, std::size_t r) const { return closed_rank_[u * n_ + r]; }

  std::span<const std::uint32_t> order_row(std::size_t u) const { return {order_.data() + u * n_, n_}; }
  std::span<const std::uint32_t> closed_rank_row(std::size_t u) const {
    return {closed_rank_.data() + u * n_, n_};
  }

 private:
  friend DistanceOrder rank_order(const DistanceMatrix& dist);
  std::size_t n_ = 0;
  std::vector<std::uint32_t> order_;
  std::vector<std::uint32_t> rank_;
  std::vector<std::uint32_t> closed_rank_;
};

DistanceMatrix pairwise_distances(const Matrix& points);
DistanceOrder rank_order(const DistanceMatrix& dist);

/// Column assignment for CSV ingestion. Each entry is a header name or a
/// 1-based column index.
struct RoleMap {
  std::vector<std::string> x;
  std::vector<std::string> y;
  std::vector<std::string> z;
};

/// Parses "x=1,y=2,z=3+4" (names or 1-based indices, '+' joins columns).
RoleMap parse_role_map(const std::string& text);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Index of a column by header name (exact match) or 1-based index.
  std::size_t column_index(const std::string& key) const;
};

CsvTable read_csv(const std::filesystem::path& path);
Dataset dataset_from_table(const CsvTable& table, const RoleMap& roles);
Dataset read_dataset_csv(const std::filesystem::path& path, const RoleMap& roles);

}  // namespace cbd
