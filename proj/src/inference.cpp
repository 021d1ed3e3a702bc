#include "cbd/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "cbd/error.hpp"
#include "cbd/parallel.hpp"

namespace cbd {

unsigned threads_from_env() {
  const char* env = std::getenv("CBD_THREADS");
  if (env == nullptr) return 1;
  try {
    const long v = std::stol(env);
    return v >= 1 ? static_cast<unsigned>(v) : 1u;
  } catch (const std::exception&) {
    return 1;
  }
}

double resampling_pvalue(double stat0, std::span<const double> stats) {
  require(!stats.empty(), ErrorKind::InvalidInput, "p-value: no resampled statistics");
  const auto at_least = std::count_if(stats.begin(), stats.end(), [&](double s) { return s >= stat0; });
  return (1.0 + static_cast<double>(at_least)) / (1.0 + static_cast<double>(stats.size()));
}

TestResult run_test(const Dataset& ds, const ResamplePlan& plan, const EstimatorConfig& config, double alpha,
                    const Bandwidths& bw, unsigned threads) {
  require(alpha > 0.0 && alpha < 1.0, ErrorKind::InvalidParameter, "alpha must lie in (0, 1)");
  bw.validate();
  const Resampler resampler(ds, plan, bw, config.kernel);
  const StatisticEvaluator evaluate(ds, bw, config);

  TestResult result;
  result.method = plan.method;
  result.M = plan.M;
  result.seed = plan.seed;
  result.alpha = alpha;
  result.bandwidths = bw;
  result.estimator = config;
  // Statistic streams only matter for the incomplete U-statistic.
  const std::uint64_t stat_seed = derive_seed(plan.seed, {fnv1a("statistic")});
  result.statistic = evaluate(ds.x, derive_seed(stat_seed, {0}));
  require(std::isfinite(result.statistic), ErrorKind::InvalidInput, "statistic is not finite");
  result.resampled.assign(plan.M, 0.0);
  parallel_for(plan.M, threads, [&](std::size_t j) {
    result.resampled[j] = evaluate(resampler.draw_x(j), derive_seed(stat_seed, {j + 1}));
  });
  result.p_value = resampling_pvalue(result.statistic, result.resampled);
  result.reject = result.p_value < alpha;
  return result;
}

TestResult run_test(const Dataset& ds, const ResamplePlan& plan, const EstimatorConfig& config, double alpha,
                    unsigned threads) {
  return run_test(ds, plan, config, alpha, default_bandwidths(ds), threads);
}

double kolmogorov_survival(double lambda) {
  // Below this the series sum is 1 to double precision.
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k < 10000; ++k) {
    const double term = 2.0 * std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1) ? term : -term;
    if (term < 1e-12) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  require(!a.empty() && !b.empty(), ErrorKind::InvalidInput, "ks: both samples must be non-empty");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double n1 = static_cast<double>(sa.size());
  const double n2 = static_cast<double>(sb.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double t = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == t) ++i;
    while (j < sb.size() && sb[j] == t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n1 - static_cast<double>(j) / n2));
  }
  KsResult result;
  result.d_statistic = d;
  result.p_value = kolmogorov_survival(std::sqrt(n1 * n2 / (n1 + n2)) * d);
  return result;
}

}  // namespace cbd
