#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <unistd.h>

#include "cbd/ball_divergence.hpp"
#include "cbd/core_data.hpp"
#include "cbd/rng.hpp"

namespace cbd::testing {

/// Random matrix; with `ties`, entries are drawn from a 3-point grid so rows repeat.
inline Matrix random_matrix(Rng& rng, std::size_t n, std::size_t d, bool ties = false) {
  Matrix m(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k) m(i, k) = ties ? std::floor(3.0 * uniform01(rng)) : standard_normal(rng);
  return m;
}

inline Dataset random_dataset(Rng& rng, std::size_t n, std::size_t dx = 1, std::size_t dy = 1, std::size_t dz = 1,
                              bool ties = false) {
  return Dataset(random_matrix(rng, n, dx, ties), random_matrix(rng, n, dy), random_matrix(rng, n, dz));
}

inline double naive_distance(const Matrix& m, std::size_t i, std::size_t j) {
  double s = 0.0;
  for (std::size_t k = 0; k < m.cols(); ++k) s += (m(i, k) - m(j, k)) * (m(i, k) - m(j, k));
  return std::sqrt(s);
}

/// Closed-ball indicator from raw coordinates.
inline bool raw_delta(const Matrix& x, std::size_t u, std::size_t v, std::size_t r) {
  return naive_distance(x, u, r) <= naive_distance(x, u, v);
}

inline double raw_eta(const Matrix& x, std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
  return (raw_delta(x, a, b, c) && raw_delta(x, a, b, d)) ? 1.0 : 0.0;
}

/// The eight-term core written out literally.
inline double literal_phi(const Matrix& x, const std::array<std::size_t, 4>& u, const std::array<std::size_t, 4>& v) {
  const double a = raw_eta(x, u[0], u[1], u[2], u[3]) + raw_eta(x, u[0], u[1], v[2], v[3]) -
                   raw_eta(x, u[0], u[1], u[2], v[2]) - raw_eta(x, u[0], u[1], u[3], v[3]);
  const double c = raw_eta(x, v[0], v[1], v[2], v[3]) + raw_eta(x, v[0], v[1], u[2], u[3]) -
                   raw_eta(x, v[0], v[1], v[2], u[2]) - raw_eta(x, v[0], v[1], v[3], u[3]);
  return a + c;
}

/// Average of literal_phi over all 24 x 24 reorderings of the two blocks.
inline double literal_phi_sym(const Matrix& x, const std::array<std::size_t, 4>& u,
                              const std::array<std::size_t, 4>& v) {
  std::array<std::size_t, 4> pu{0, 1, 2, 3};
  double total = 0.0;
  int count = 0;
  do {
    std::array<std::size_t, 4> pv{0, 1, 2, 3};
    do {
      const std::array<std::size_t, 4> uu{u[pu[0]], u[pu[1]], u[pu[2]], u[pu[3]]};
      const std::array<std::size_t, 4> vv{v[pv[0]], v[pv[1]], v[pv[2]], v[pv[3]]};
      total += literal_phi(x, uu, vv);
      ++count;
    } while (std::next_permutation(pv.begin(), pv.end()));
  } while (std::next_permutation(pu.begin(), pu.end()));
  return total / count;
}

/// sum_{u,v} [sum_r (p_r - q_r) 1{d(u,r) <= d(u,v)}]^2 (p_u p_v + q_u q_v), from raw coordinates.
inline double literal_theta2(const Matrix& x, const std::vector<double>& p, const std::vector<double>& q) {
  const std::size_t n = x.rows();
  double total = 0.0;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      double bracket = 0.0;
      for (std::size_t r = 0; r < n; ++r)
        if (raw_delta(x, u, v, r)) bracket += p[r] - q[r];
      total += bracket * bracket * (p[u] * p[v] + q[u] * q[v]);
    }
  }
  return total;
}

inline std::vector<double> random_simplex(Rng& rng, std::size_t n, double zero_prob = 0.0) {
  std::vector<double> w(n);
  double s = 0.0;
  for (auto& v : w) {
    v = uniform01(rng) < zero_prob ? 0.0 : uniform01(rng) + 0.01;
    s += v;
  }
  if (s == 0.0) {
    w[0] = 1.0;
    return w;
  }
  for (auto& v : w) v /= s;
  return w;
}

inline double relative_gap(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

/// Temp file that removes itself.
class TempFile {
 public:
  explicit TempFile(const std::string& contents, const std::string& suffix = ".csv") {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("cbd_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + suffix);
    std::ofstream(path_) << contents;
  }
  ~TempFile() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
  TempFile(const TempFile&) = delete;
  TempFile& operator=(const TempFile&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (const double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / (n - 1.0) / n)};
}

}  // namespace cbd::testing
