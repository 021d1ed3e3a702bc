#include "cbd/datagen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

#include "cbd/error.hpp"

namespace cbd {

namespace {

const std::vector<std::string>& ex5_shapes() {
  static const std::vector<std::string> shapes{"four_clouds", "w", "diamond", "parabola", "two_parabolas", "circle"};
  return shapes;
}

const std::vector<std::string>& ex8_shapes() {
  static const std::vector<std::string> shapes{"circle", "parabola", "two_parabolas"};
  return shapes;
}

bool is_regression(const std::string& id) { return id == "ex1" || id == "ex2" || id == "ex3" || id == "ex4a"; }

std::string shape_of(const std::string& id) { return id.substr(id.find(':') + 1); }

double noise(bool cauchy, Rng& rng) { return cauchy ? standard_cauchy(rng) : standard_normal(rng); }

// Y = Z + e1, X = Z + rY + e2 in dimension d.
Dataset regression(std::size_t n, std::size_t d, double r, bool cauchy, Rng& rng) {
  Matrix x(n, d), y(n, d), z(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      z(i, k) = noise(cauchy, rng);
      const double e1 = noise(cauchy, rng);
      const double e2 = noise(cauchy, rng);
      y(i, k) = z(i, k) + e1;
      x(i, k) = z(i, k) + r * y(i, k) + e2;
    }
  }
  return Dataset(std::move(x), std::move(y), std::move(z));
}

std::array<double, 2> draw_mixture(bool case_b, Rng& rng) {
  const bool first = uniform01(rng) < 0.5;
  // (a) I and 10 I; (b) diag(1, 10) and diag(10, 1).
  const double v1 = first ? 1.0 : 10.0;
  const double v2 = case_b ? 11.0 - v1 : v1;
  const double a = std::sqrt(v1) * standard_normal(rng);
  const double b = std::sqrt(v2) * standard_normal(rng);
  return {a, b};
}

}  // namespace

std::vector<std::string> registered_scenarios() {
  std::vector<std::string> ids{"ex1", "ex2", "ex3", "ex4a", "ex4b"};
  for (const auto& s : ex5_shapes()) ids.push_back("ex5:" + s);
  for (const auto* s : {"ex6a", "ex6b", "ex7a", "ex7b"}) ids.emplace_back(s);
  for (const auto& s : ex8_shapes()) ids.push_back("ex8:" + s);
  return ids;
}

std::string canonical_scenario(std::string_view raw) {
  std::string id(raw);
  std::transform(id.begin(), id.end(), id.begin(), [](unsigned char c) { return std::tolower(c); });
  if (id == "ex6:a") id = "ex6a";
  if (id == "ex6:b") id = "ex6b";
  if (id == "ex7:a") id = "ex7a";
  if (id == "ex7:b") id = "ex7b";
  if (id == "ex4:a") id = "ex4a";
  if (id == "ex4:b") id = "ex4b";
  if (id.size() == 4 && id.starts_with("ex5") && id[3] >= 'a' && id[3] <= 'f') id = "ex5:" + ex5_shapes()[id[3] - 'a'];
  if (id.size() == 4 && id.starts_with("ex8") && id[3] >= 'a' && id[3] <= 'c') id = "ex8:" + ex8_shapes()[id[3] - 'a'];
  const auto ids = registered_scenarios();
  require(std::find(ids.begin(), ids.end(), id) != ids.end(), ErrorKind::InvalidScenario,
          "unknown scenario '" + std::string(raw) + "'");
  return id;
}

std::array<double, 2> draw_shape(std::string_view shape, Rng& rng) {
  if (shape == "four_clouds") {
    const double cx = uniform01(rng) < 0.5 ? -1.0 : 1.0;
    const double cy = uniform01(rng) < 0.5 ? -1.0 : 1.0;
    const double sd = std::sqrt(0.05);
    const double a = cx + sd * standard_normal(rng);
    return {a, cy + sd * standard_normal(rng)};
  }
  if (shape == "w") {
    const double e1 = uniform(rng, -1.0, 1.0);
    // ||e1| - 1/2| has mean 1/4 when e1 ~ U(-1, 1).
    return {e1, std::abs(std::abs(e1) - 0.5) - 0.25 + uniform(rng, -0.1, 0.1)};
  }
  if (shape == "diamond") {
    const double u = uniform(rng, -1.0, 1.0);
    const double v = uniform(rng, -1.0, 1.0);
    return {(u - v) / std::numbers::sqrt2, (u + v) / std::numbers::sqrt2};
  }
  if (shape == "parabola") {
    const double e1 = uniform(rng, -1.0, 1.0);
    return {e1, e1 * e1 - 1.0 / 3.0 + uniform(rng, -0.1, 0.1)};
  }
  if (shape == "two_parabolas") {
    const double e1 = uniform(rng, -1.0, 1.0);
    const double e2 = e1 * e1 + uniform(rng, -0.1, 0.1);
    return {e1, uniform01(rng) < 0.5 ? -e2 : e2};
  }
  if (shape == "circle") {
    const double theta = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double a = std::cos(theta) + 0.05 * standard_normal(rng);
    return {a, std::sin(theta) + 0.05 * standard_normal(rng)};
  }
  throw Error(ErrorKind::InvalidScenario, "unknown shape '" + std::string(shape) + "'");
}

Dataset gen_scenario(const ScenarioSpec& spec, Rng& rng) {
  const std::string id = canonical_scenario(spec.id);
  require(spec.n >= 2, ErrorKind::InvalidParameter, "scenario: n must be >= 2");
  require(std::isfinite(spec.r), ErrorKind::InvalidParameter, "scenario: r must be finite");
  const std::size_t n = spec.n;
  if (is_regression(id)) return regression(n, 1, spec.r, false, rng);
  if (id == "ex4b") return regression(n, 1, spec.r, true, rng);
  if (id == "ex7a") return regression(n, 2, spec.r, false, rng);
  if (id == "ex7b") return regression(n, 2, spec.r, true, rng);

  const bool cube = id.starts_with("ex8");
  Matrix x(n, 1), y(n, 1), z(n, cube ? 3 : 1);
  for (std::size_t i = 0; i < n; ++i) {
    double base = 0.0;
    for (std::size_t k = 0; k < z.cols(); ++k) {
      z(i, k) = uniform01(rng);
      base = std::max(base, z(i, k));
    }
    std::array<double, 2> e{};
    if (id == "ex6a" || id == "ex6b") {
      e = draw_mixture(id == "ex6b", rng);
    } else {
      e = draw_shape(shape_of(id), rng);
    }
    x(i, 0) = base + e[0];
    y(i, 0) = base + e[1];
  }
  return Dataset(std::move(x), std::move(y), std::move(z));
}

ConditionalSampler true_sampler(const ScenarioSpec& spec) {
  const std::string id = canonical_scenario(spec.id);
  const double r = spec.r;
  // X = (1 + r) Z + r e1 + e2.
  if (is_regression(id) || id == "ex7a") {
    const std::size_t d = id == "ex7a" ? 2 : 1;
    Matrix beta(d, d);
    for (std::size_t k = 0; k < d; ++k) beta(k, k) = 1.0 + r;
    return ConditionalSampler::gaussian_affine(std::move(beta), std::vector<double>(d, 0.0), std::sqrt(1.0 + r * r));
  }
  if (id == "ex4b" || id == "ex7b") {
    // r e1 + e2 is Cauchy with scale |r| + 1.
    const std::size_t d = id == "ex7b" ? 2 : 1;
    const double scale = std::abs(r) + 1.0;
    auto draw = [r, scale](std::span<const double> z, Rng& rng, std::span<double> x) {
      for (std::size_t k = 0; k < x.size(); ++k) x[k] = (1.0 + r) * z[k] + scale * standard_cauchy(rng);
    };
    auto log_density = [r, scale](std::span<const double> x, std::span<const double> z) {
      double total = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) {
        const double t = (x[k] - (1.0 + r) * z[k]) / scale;
        total -= std::log(std::numbers::pi * scale * (1.0 + t * t));
      }
      return total;
    };
    return ConditionalSampler::custom(id + "_cauchy", d, draw, log_density);
  }
  throw Error(ErrorKind::InvalidScenario, "scenario '" + id + "' has no closed-form law of X given Z");
}

ConditionalSampler misspecified_sampler(Misspecification kind, double r) {
  if (kind == Misspecification::UniformAbs) return ConditionalSampler::uniform_abs();
  require(r > -1.0 && std::isfinite(r), ErrorKind::InvalidParameter, "affine_shift: r must exceed -1");
  return ConditionalSampler::gaussian_affine(Matrix{{5.0}}, {10.0}, 5.0 / std::sqrt(r + 1.0));
}

MarksTable load_marks(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  static const std::array<std::vector<std::string>, 5> names{{
      {"m", "mech", "mechanics"},
      {"v", "vect", "vectors"},
      {"an", "anl", "analysis"},
      {"al", "alg", "algebra"},
      {"s", "stat", "statistics"},
  }};
  std::array<std::size_t, 5> cols{};
  for (std::size_t c = 0; c < 5; ++c) {
    bool found = false;
    for (std::size_t h = 0; h < table.header.size() && !found; ++h) {
      std::string key = table.header[h];
      std::transform(key.begin(), key.end(), key.begin(), [](unsigned char ch) { return std::tolower(ch); });
      if (std::find(names[c].begin(), names[c].end(), key) != names[c].end()) {
        cols[c] = h;
        found = true;
      }
    }
    require(found, ErrorKind::Schema, "marks: missing column '" + names[c][2] + "'");
  }
  MarksTable out;
  out.rows.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    std::array<double, 5> r{};
    for (std::size_t c = 0; c < 5; ++c) {
      r[c] = row[cols[c]];
      require(std::isfinite(r[c]), ErrorKind::Schema, "marks: non-finite score");
    }
    out.rows.push_back(r);
  }
  return out;
}

Dataset marks_dataset(const MarksTable& table, char which) {
  constexpr std::size_t M = 0, V = 1, An = 2, Al = 3, S = 4;
  std::size_t xc = 0, yc = 0;
  std::array<std::size_t, 3> zc{};
  if (which == 'a') {
    xc = S, yc = An, zc = {M, V, Al};
  } else if (which == 'b') {
    xc = M, yc = V, zc = {S, An, Al};
  } else {
    throw Error(ErrorKind::Usage, "marks test must be 'a' or 'b'");
  }
  const std::size_t n = table.rows.size();
  Matrix x(n, 1), y(n, 1), z(n, 3);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = table.rows[i][xc];
    y(i, 0) = table.rows[i][yc];
    for (std::size_t k = 0; k < 3; ++k) z(i, k) = table.rows[i][zc[k]];
  }
  return Dataset(std::move(x), std::move(y), std::move(z));
}

Dataset subsample(const Dataset& ds, std::size_t m, Rng& rng) {
  require(m >= 2 && m <= ds.n(), ErrorKind::InvalidParameter,
          "subsample: m must lie in [2, " + std::to_string(ds.n()) + "]");
  std::vector<std::size_t> idx(ds.n());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t k = 0; k < m; ++k) std::swap(idx[k], idx[k + uniform_index(rng, ds.n() - k)]);
  idx.resize(m);
  return ds.select_rows(idx);
}

}  // namespace cbd
