#include "cbd/core_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "cbd/error.hpp"

namespace cbd {

Dataset::Dataset(Matrix x_in, Matrix y_in, Matrix z_in)
    : x(std::move(x_in)), y(std::move(y_in)), z(std::move(z_in)) {
  require(x.rows() == y.rows() && y.rows() == z.rows(), ErrorKind::InvalidInput,
          "dataset: x, y, z must have the same number of rows");
  require(x.rows() >= 2, ErrorKind::InvalidInput, "dataset: need at least 2 samples");
  require(x.cols() >= 1 && y.cols() >= 1 && z.cols() >= 1, ErrorKind::InvalidInput,
          "dataset: every block needs at least one column");
  require(x.all_finite() && y.all_finite() && z.all_finite(), ErrorKind::InvalidInput,
          "dataset: non-finite entry");
}

Dataset Dataset::with_x(Matrix new_x) const {
  require(new_x.rows() == n() && new_x.cols() == dx(), ErrorKind::InvalidInput,
          "with_x: shape mismatch");
  Dataset out;
  out.x = std::move(new_x);
  out.y = y;
  out.z = z;
  return out;
}

Dataset Dataset::select_rows(std::span<const std::size_t> indices) const {
  return Dataset(x.select_rows(indices), y.select_rows(indices), z.select_rows(indices));
}

DistanceMatrix pairwise_distances(const Matrix& points) {
  require(points.all_finite(), ErrorKind::InvalidInput, "pairwise_distances: non-finite input");
  const std::size_t n = points.rows();
  DistanceMatrix dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = euclidean_distance(points.row(i), points.row(j));
      dist(i, j) = d;
      dist(j, i) = d;
    }
  }
  return dist;
}

DistanceOrder rank_order(const DistanceMatrix& dist) {
  const std::size_t n = dist.size();
  DistanceOrder out(n);
  std::vector<std::pair<double, std::uint32_t>> keyed(n);
  for (std::size_t u = 0; u < n; ++u) {
    const auto d = dist.row(u);
    for (std::uint32_t r = 0; r < n; ++r) keyed[r] = {d[r], r};
    std::sort(keyed.begin(), keyed.end());
    auto* order = out.order_.data() + u * n;
    auto* rank = out.rank_.data() + u * n;
    auto* closed = out.closed_rank_.data() + u * n;
    for (std::size_t k = 0; k < n; ++k) {
      order[k] = keyed[k].second;
      rank[keyed[k].second] = static_cast<std::uint32_t>(k);
    }
    // Walk tie groups from the far end so each member learns the group's last position.
    std::size_t k = n;
    while (k > 0) {
      const std::size_t last = k - 1;
      std::size_t first = last;
      while (first > 0 && keyed[first - 1].first == keyed[last].first) --first;
      for (std::size_t t = first; t <= last; ++t) closed[keyed[t].second] = static_cast<std::uint32_t>(last);
      k = first;
    }
  }
  return out;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n\"");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n\"");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

}  // namespace

RoleMap parse_role_map(const std::string& text) {
  RoleMap roles;
  for (const auto& token : split(text, ',')) {
    const auto eq = token.find('=');
    require(eq != std::string::npos, ErrorKind::Usage, "--roles: expected role=column, got '" + token + "'");
    const std::string role = trim(token.substr(0, eq));
    std::vector<std::string>* target = nullptr;
    if (role == "x") target = &roles.x;
    else if (role == "y") target = &roles.y;
    else if (role == "z") target = &roles.z;
    require(target != nullptr, ErrorKind::Usage, "--roles: unknown role '" + role + "' (use x, y or z)");
    for (const auto& col : split(token.substr(eq + 1), '+')) {
      const auto name = trim(col);
      require(!name.empty(), ErrorKind::Usage, "--roles: empty column for role " + role);
      target->push_back(name);
    }
  }
  require(!roles.x.empty() && !roles.y.empty() && !roles.z.empty(), ErrorKind::Usage,
          "--roles: each of x, y, z needs at least one column");
  return roles;
}

std::size_t CsvTable::column_index(const std::string& key) const {
  const auto it = std::find(header.begin(), header.end(), key);
  if (it != header.end()) return static_cast<std::size_t>(it - header.begin());
  std::size_t idx = 0;
  const auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), idx);
  if (ec == std::errc() && ptr == key.data() + key.size() && idx >= 1 && idx <= header.size()) {
    return idx - 1;
  }
  throw Error(ErrorKind::Schema, "csv: no column named '" + key + "'");
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::InvalidInput, "cannot open '" + path.string() + "'");
  CsvTable table;
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::Schema,
          "csv '" + path.string() + "': missing header row");
  for (const auto& h : split(line, ',')) table.header.push_back(trim(h));
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    require(cells.size() == table.header.size(), ErrorKind::Schema,
            "csv line " + std::to_string(line_no) + ": expected " + std::to_string(table.header.size()) +
                " fields, got " + std::to_string(cells.size()));
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      const auto t = trim(c);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      require(ec == std::errc() && ptr == t.data() + t.size() && std::isfinite(v), ErrorKind::Schema,
              "csv line " + std::to_string(line_no) + ": not a finite number: '" + t + "'");
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

Dataset dataset_from_table(const CsvTable& table, const RoleMap& roles) {
  const auto block = [&](const std::vector<std::string>& cols) {
    std::vector<std::size_t> idx;
    for (const auto& c : cols) idx.push_back(table.column_index(c));
    Matrix m(table.rows.size(), idx.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      for (std::size_t j = 0; j < idx.size(); ++j) m(i, j) = table.rows[i][idx[j]];
    }
    return m;
  };
  return Dataset(block(roles.x), block(roles.y), block(roles.z));
}

Dataset read_dataset_csv(const std::filesystem::path& path, const RoleMap& roles) {
  return dataset_from_table(read_csv(path), roles);
}

}  // namespace cbd
