#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "cbd/datagen.hpp"
#include "cbd/error.hpp"
#include "cbd/inference.hpp"
#include "test_support.hpp"

using namespace cbd;
using namespace cbd::testing;

namespace {

/// Kolmogorov upper tail through the theta-function form
/// 1 - sqrt(2 pi)/lambda * sum_k exp(-(2k-1)^2 pi^2 / (8 lambda^2)).
double kolmogorov_tail_dual(double lambda) {
  double s = 0.0;
  for (int k = 1; k < 200; ++k) {
    const double a = (2.0 * k - 1.0) * std::numbers::pi / lambda;
    s += std::exp(-a * a / 8.0);
  }
  return 1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * s;
}

/// sup_t |F1(t) - F2(t)| evaluated at every pooled point.
double ecdf_gap(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  double best = 0.0;
  for (const double t : pooled) {
    const double fa = std::count_if(a.begin(), a.end(), [&](double v) { return v <= t; }) / static_cast<double>(a.size());
    const double fb = std::count_if(b.begin(), b.end(), [&](double v) { return v <= t; }) / static_cast<double>(b.size());
    best = std::max(best, std::abs(fa - fb));
  }
  return best;
}

}  // namespace

TEST_CASE("resampling p-value") {
  std::vector<double> nineteen(19);
  std::iota(nineteen.begin(), nineteen.end(), 0.0);
  CHECK(resampling_pvalue(100.0, nineteen) == doctest::Approx(0.05));
  const std::vector<double> ties(7, 2.0);
  CHECK(resampling_pvalue(2.0, ties) == 1.0);
  const std::vector<double> nine{1, 2, 3, 4, 5, 6, 7, 8, 9};
  CHECK(resampling_pvalue(5.5, nine) == doctest::Approx(0.5));
  CHECK_THROWS_AS(resampling_pvalue(1.0, std::vector<double>{}), Error);

  double previous = 2.0;
  for (double s = -1.0; s <= 11.0; s += 0.25) {
    const double p = resampling_pvalue(s, nine);
    CHECK(p <= previous);
    CHECK(p >= 0.1);
    CHECK(p <= 1.0);
    previous = p;
  }
}

TEST_CASE("p-value is super-uniform under exchangeability") {
  Rng rng = make_rng(1);
  std::vector<double> pooled(20);
  for (auto& v : pooled) v = std::floor(4.0 * uniform01(rng));  // heavy ties
  const int reps = 20000;
  std::vector<double> pvals;
  for (int r = 0; r < reps; ++r) {
    std::vector<double> perm = pooled;
    for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[uniform_index(rng, i + 1)]);
    pvals.push_back(resampling_pvalue(perm[0], std::span<const double>(perm).subspan(1)));
  }
  for (const double alpha : {0.05, 0.1, 0.25, 0.5, 0.75}) {
    const double rate = std::count_if(pvals.begin(), pvals.end(), [&](double p) { return p <= alpha; }) /
                        static_cast<double>(reps);
    CHECK(rate <= alpha + 3.0 * std::sqrt(alpha * (1 - alpha) / reps));
  }
}

TEST_CASE("Kolmogorov distribution") {
  for (const double lambda : {0.5, 0.8, 1.0, 1.36, 1.63, 2.5}) {
    CHECK(kolmogorov_survival(lambda) == doctest::Approx(kolmogorov_tail_dual(lambda)).epsilon(1e-9));
  }
  CHECK(kolmogorov_survival(1.358) == doctest::Approx(0.05).epsilon(0.01));
  CHECK(kolmogorov_survival(0.0) == 1.0);
  CHECK(kolmogorov_survival(10.0) >= 0.0);
}

TEST_CASE("two-sample KS") {
  SUBCASE("identical samples") {
    const std::vector<double> a{3, 1, 2, 5};
    const auto r = ks_two_sample(a, a);
    CHECK(r.d_statistic == 0.0);
    CHECK(r.p_value == 1.0);
  }
  SUBCASE("disjoint supports") {
    const std::vector<double> a{1, 2, 3}, b{4, 5, 6, 7};
    CHECK(ks_two_sample(a, b).d_statistic == 1.0);
    CHECK(ks_two_sample(b, a).d_statistic == 1.0);
  }
  SUBCASE("interleaved") {
    const std::vector<double> a{1, 3}, b{2, 4};
    CHECK(ks_two_sample(a, b).d_statistic == doctest::Approx(0.5));
  }
  SUBCASE("ECDF enumeration with ties and a monotone transform") {
    Rng rng = make_rng(2);
    for (int rep = 0; rep < 100; ++rep) {
      std::vector<double> a(5 + rep % 17), b(3 + rep % 11);
      for (auto& v : a) v = std::floor(6.0 * uniform01(rng));
      for (auto& v : b) v = std::floor(6.0 * uniform01(rng)) + 0.5 * (rep % 2);
      const auto r = ks_two_sample(a, b);
      CHECK(r.d_statistic == doctest::Approx(ecdf_gap(a, b)).epsilon(1e-14));
      const double lambda = std::sqrt(a.size() * b.size() / static_cast<double>(a.size() + b.size())) * r.d_statistic;
      CHECK(r.p_value == doctest::Approx(kolmogorov_survival(lambda)));
      std::vector<double> ta = a, tb = b;
      for (auto& v : ta) v = std::exp(v) - 3.0;
      for (auto& v : tb) v = std::exp(v) - 3.0;
      CHECK(ks_two_sample(ta, tb).d_statistic == r.d_statistic);
    }
  }
  SUBCASE("empty input") { CHECK_THROWS_AS(ks_two_sample(std::vector<double>{}, std::vector<double>{1.0}), Error); }
}

TEST_CASE("run_test assembles the decision") {
  Rng rng = make_rng(3);
  const Dataset ds = gen_scenario({"ex4a", 30, 2.0}, rng);
  ResamplePlan plan;
  plan.method = ResampleMethod::Lwb;
  plan.M = 19;
  plan.seed = 42;
  const EstimatorConfig cfg;
  const auto result = run_test(ds, plan, cfg, 0.05);
  CHECK(result.resampled.size() == 19);
  CHECK(result.p_value == doctest::Approx(resampling_pvalue(result.statistic, result.resampled)));
  CHECK(result.reject == (result.p_value < 0.05));
  CHECK(result.M == 19);
  CHECK(result.seed == 42);
  CHECK(result.statistic == cbd_vstat(ds, default_bandwidths(ds), KernelSpec{}).value);

  const auto again = run_test(ds, plan, cfg, 0.05, 1);
  const auto threaded = run_test(ds, plan, cfg, 0.05, 4);
  CHECK(again.resampled == result.resampled);
  CHECK(threaded.resampled == result.resampled);

  // alpha below 1/(M+1) can never reject.
  const auto strict = run_test(ds, plan, cfg, 0.04);
  CHECK(strict.p_value >= 0.05);
  CHECK_FALSE(strict.reject);
}

TEST_CASE("run_test with every method on dependent data") {
  Rng rng = make_rng(4);
  const ScenarioSpec spec{"ex4a", 50, 2.0};
  const Dataset ds = gen_scenario(spec, rng);
  for (const auto method : {ResampleMethod::Crt, ResampleMethod::Cpt, ResampleMethod::Lwb, ResampleMethod::Dlb}) {
    ResamplePlan plan;
    plan.method = method;
    plan.M = 39;
    plan.seed = 9;
    plan.sampler = true_sampler(spec);
    const auto r = run_test(ds, plan, EstimatorConfig{}, 0.05);
    CHECK(r.p_value == doctest::Approx(1.0 / 40.0));
    CHECK(r.reject);
  }
}
