#include <doctest.h>

#include <cmath>

#include "cbd/ball_divergence.hpp"
#include "cbd/error.hpp"
#include "test_support.hpp"

using namespace cbd;
using namespace cbd::testing;

namespace {

constexpr KernelSpec kRaw{false};

Quad random_quad(Rng& rng, std::size_t n) {
  return {uniform_index(rng, n), uniform_index(rng, n), uniform_index(rng, n), uniform_index(rng, n)};
}

Matrix isometry(const Matrix& x, double angle, double scale, double shift) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    out(i, 0) = scale * (std::cos(angle) * x(i, 0) - std::sin(angle) * x(i, 1)) + shift;
    out(i, 1) = scale * (std::sin(angle) * x(i, 0) + std::cos(angle) * x(i, 1)) - shift;
  }
  return out;
}

/// P~ weights of anchor s written out from the kernel definitions.
std::pair<std::vector<double>, std::vector<double>> anchor_measures(const Dataset& ds, std::size_t s, double h1,
                                                                    double h2) {
  const std::size_t n = ds.n();
  std::vector<double> p(n), q(n);
  double tp = 0.0, tq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double syz = 0.0, sz = 0.0;
    for (std::size_t k = 0; k < ds.dy(); ++k) syz += std::pow(ds.y(i, k) - ds.y(s, k), 2);
    for (std::size_t k = 0; k < ds.dz(); ++k) sz += std::pow(ds.z(i, k) - ds.z(s, k), 2);
    syz += sz;
    const double t1 = std::sqrt(syz) / h1, t2 = std::sqrt(sz) / h2;
    p[i] = t1 < 1.0 ? 1.0 - t1 * t1 : 0.0;
    q[i] = t2 < 1.0 ? 1.0 - t2 * t2 : 0.0;
    tp += p[i];
    tq += q[i];
  }
  for (auto& v : p) v /= tp;
  for (auto& v : q) v /= tq;
  return {p, q};
}

}  // namespace

TEST_CASE("delta and eta") {
  Rng rng = make_rng(1);
  const Matrix x = random_matrix(rng, 6, 2);
  const auto d = pairwise_distances(x);
  for (std::size_t u = 0; u < 6; ++u) {
    CHECK(delta(d, u, 3, u));
    for (std::size_t r = 0; r < 6; ++r) {
      CHECK(delta(d, u, u, r) == (d(u, r) == 0.0));
      for (std::size_t v = 0; v < 6; ++v) CHECK(delta(d, u, v, r) == raw_delta(x, u, v, r));
    }
  }
  const Matrix x5 = random_matrix(rng, 5, 3);
  const auto d5 = pairwise_distances(x5);
  for (std::size_t a = 0; a < 5; ++a)
    for (std::size_t b = 0; b < 5; ++b) {
      CHECK(eta(d5, a, b, a, a));
      for (std::size_t c = 0; c < 5; ++c)
        for (std::size_t e = 0; e < 5; ++e) CHECK(static_cast<double>(eta(d5, a, b, c, e)) == raw_eta(x5, a, b, c, e));
    }
}

TEST_CASE("phi core values") {
  Rng rng = make_rng(2);
  const Matrix x = random_matrix(rng, 8, 2);
  const auto d = pairwise_distances(x);
  CHECK(phi_core(d, {3, 3, 3, 3}, {3, 3, 3, 3}) == 0.0);
  CHECK(phi_sym(d, {3, 3, 3, 3}, {3, 3, 3, 3}) == 0.0);
  for (int rep = 0; rep < 2000; ++rep) {
    const Quad u = random_quad(rng, 8), v = random_quad(rng, 8);
    const double a = phi_core(d, u, v);
    CHECK(a == literal_phi(x, u, v));
    CHECK(std::abs(a) <= 2.0);
    CHECK(std::abs(phi_sym(d, u, v)) <= 2.0);
  }
}

TEST_CASE("phi_sym equals the 576-term average") {
  Rng rng = make_rng(3);
  for (int rep = 0; rep < 200; ++rep) {
    const Matrix x = random_matrix(rng, 8, 2, rep % 3 == 0);
    const auto d = pairwise_distances(x);
    const Quad u{0, 1, 2, 3}, v{4, 5, 6, 7};
    CHECK(std::abs(phi_sym(d, u, v) - literal_phi_sym(x, u, v)) <= 1e-12);
    const Quad ru = random_quad(rng, 8), rv = random_quad(rng, 8);
    CHECK(std::abs(phi_sym(d, ru, rv) - literal_phi_sym(x, ru, rv)) <= 1e-12);
  }
}

TEST_CASE("theta2 on weighted measures") {
  SUBCASE("hand instance") {
    const Matrix x{{0.0}, {1.0}, {2.5}, {4.5}};
    const std::vector<double> p{0.4, 0.3, 0.2, 0.1}, q{0.25, 0.25, 0.25, 0.25};
    const auto d = pairwise_distances(x);
    const double v = theta2_weighted(d, {p}, {q});
    CHECK(std::abs(v - literal_theta2(x, p, q)) <= 1e-12);
    CHECK(v > 0.0);
  }
  SUBCASE("equal measures, bounds and symmetry") {
    Rng rng = make_rng(4);
    for (int rep = 0; rep < 200; ++rep) {
      const std::size_t n = 2 + rep % 11;
      const Matrix x = random_matrix(rng, n, 2, rep % 2 == 0);
      const auto d = pairwise_distances(x);
      const WeightedEmpirical p{random_simplex(rng, n, 0.3)}, q{random_simplex(rng, n, 0.3)};
      const double pq = theta2_weighted(d, p, q);
      CHECK(theta2_weighted(d, p, p) == 0.0);
      CHECK(pq >= 0.0);
      CHECK(pq <= 2.0);
      CHECK(pq == theta2_weighted(d, q, p));
      CHECK(std::abs(pq - literal_theta2(x, p.p, q.p)) <= 1e-12);
    }
  }
  SUBCASE("validation") {
    CHECK_THROWS_AS((WeightedEmpirical{{0.5, 0.6}}.validate()), Error);
    CHECK_THROWS_AS((WeightedEmpirical{{1.5, -0.5}}.validate()), Error);
    CHECK_NOTHROW((WeightedEmpirical{{0.5, 0.5}}.validate()));
  }
}

TEST_CASE("support-restricted theta2 agrees with the full evaluation") {
  Rng rng = make_rng(5);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 3 + rep % 10;
    const Matrix x = random_matrix(rng, n, 1 + rep % 2, rep % 2 == 1);
    const auto d = pairwise_distances(x);
    const auto o = rank_order(d);
    const auto p = random_simplex(rng, n, 0.4), q = random_simplex(rng, n, 0.4);
    std::vector<std::uint32_t> support;
    std::vector<double> ps, qs;
    for (std::size_t i = 0; i < n; ++i)
      if (p[i] > 0.0 || q[i] > 0.0) {
        support.push_back(static_cast<std::uint32_t>(i));
        ps.push_back(p[i]);
        qs.push_back(q[i]);
      }
    const double full = literal_theta2(x, p, q);
    std::vector<double> scratch(n, 0.0);
    CHECK(std::abs(theta2_on_support(o, support, ps, qs, scratch) - full) <= 1e-12);
    CHECK(std::all_of(scratch.begin(), scratch.end(), [](double v) { return v == 0.0; }));
    CHECK(std::abs(theta2_on_support(d, support, ps, qs) - full) <= 1e-12);
  }
}

TEST_CASE("pointwise statistic: fast path against brute force") {
  Rng rng = make_rng(6);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 3 + rep % 10;
    const Dataset ds = random_dataset(rng, n, 1 + rep % 2, 1, 1 + rep % 3 / 2, rep % 3 == 0);
    const auto d = pairwise_distances(ds.x);
    const auto o = rank_order(d);
    const double h1 = 0.8 + uniform01(rng), h2 = 0.5 + uniform01(rng);
    for (std::size_t s = 0; s < n; ++s) {
      const double fast = pointwise_cbd(ds, d, o, s, h1, h2, kRaw);
      const double brute = pointwise_cbd_bruteforce(ds, d, s, h1, h2, kRaw);
      CHECK(relative_gap(fast, brute) <= 1e-10);
      const auto [p, q] = anchor_measures(ds, s, h1, h2);
      CHECK(relative_gap(brute, literal_theta2(ds.x, p, q)) <= 1e-10);
    }
  }
}

TEST_CASE("pointwise statistic: degenerate cases") {
  Rng rng = make_rng(7);
  SUBCASE("every kernel value equal") {
    const Dataset ds = random_dataset(rng, 6);
    const auto d = pairwise_distances(ds.x);
    const auto o = rank_order(d);
    // Constant y and h1 = h2 make the two measures identical.
    Matrix y(6, 1, 2.0);
    const Dataset flat(ds.x, y, ds.z);
    for (std::size_t s = 0; s < 6; ++s) CHECK(pointwise_cbd(flat, d, o, s, 1.0, 1.0, kRaw) == doctest::Approx(0.0));
  }
  SUBCASE("all X identical") {
    const Dataset base = random_dataset(rng, 7);
    const Dataset ds(Matrix(7, 2, 1.5), base.y, base.z);
    const auto d = pairwise_distances(ds.x);
    const auto o = rank_order(d);
    for (std::size_t s = 0; s < 7; ++s) CHECK(std::abs(pointwise_cbd(ds, d, o, s, 1.0, 0.7, kRaw)) <= 1e-15);
  }
}

TEST_CASE("isometry invariance in X") {
  Rng rng = make_rng(8);
  for (int rep = 0; rep < 20; ++rep) {
    const Dataset ds = random_dataset(rng, 10, 2, 1, 1);
    const Dataset moved = ds.with_x(isometry(ds.x, 0.3 + rep, 2.5, 7.0));
    const auto d0 = pairwise_distances(ds.x), d1 = pairwise_distances(moved.x);
    const auto o0 = rank_order(d0), o1 = rank_order(d1);
    for (std::size_t s = 0; s < 10; ++s)
      CHECK(relative_gap(pointwise_cbd(ds, d0, o0, s, 1.2, 0.9, kRaw),
                         pointwise_cbd(moved, d1, o1, s, 1.2, 0.9, kRaw)) <= 1e-9);
    const Quad u = random_quad(rng, 10), v = random_quad(rng, 10);
    CHECK(phi_core(d0, u, v) == phi_core(d1, u, v));
    CHECK(phi_sym(d0, u, v) == phi_sym(d1, u, v));
    const WeightedEmpirical p{random_simplex(rng, 10)}, q{random_simplex(rng, 10)};
    CHECK(relative_gap(theta2_weighted(d0, p, q), theta2_weighted(d1, p, q)) <= 1e-9);
  }
}

TEST_CASE("first-order degeneracy of the symmetrized core") {
  Rng rng = make_rng(9);
  const double frozen = 0.4;
  std::vector<double> values;
  values.reserve(100000);
  Matrix x(8, 1);
  x(0, 0) = frozen;
  for (int rep = 0; rep < 100000; ++rep) {
    for (std::size_t i = 1; i < 8; ++i) x(i, 0) = standard_normal(rng);
    values.push_back(phi_sym(pairwise_distances(x), {0, 1, 2, 3}, {4, 5, 6, 7}));
  }
  const auto s = mean_se(values);
  CHECK(std::abs(s.mean) <= 4.0 * s.se);
}
