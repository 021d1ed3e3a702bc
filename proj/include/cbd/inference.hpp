#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cbd/cbd_estimator.hpp"
#include "cbd/resampling.hpp"

namespace cbd {

struct TestResult {
  double statistic = 0.0;
  /// Resampled statistics in resample-index order.
  std::vector<double> resampled;
  double p_value = 1.0;
  ResampleMethod method = ResampleMethod::Lwb;
  std::size_t M = 0;
  std::uint64_t seed = 0;
  double alpha = 0.05;
  bool reject = false;
  Bandwidths bandwidths;
  EstimatorConfig estimator;
};

struct KsResult {
  double d_statistic = 0.0;
  double p_value = 1.0;
};

/// (1 + #{j : stats[j] >= stat0}) / (1 + M).
double resampling_pvalue(double stat0, std::span<const double> stats);

/// Statistic on `ds` and on M resamples, all with the bandwidths `bw`.
TestResult run_test(const Dataset& ds, const ResamplePlan& plan, const EstimatorConfig& config, double alpha,
                    const Bandwidths& bw, unsigned threads = 1);
/// Same, with default_bandwidths(ds).
TestResult run_test(const Dataset& ds, const ResamplePlan& plan, const EstimatorConfig& config, double alpha,
                    unsigned threads = 1);

/// Upper tail of the Kolmogorov distribution, 2 sum_k (-1)^(k-1) exp(-2 k^2 lambda^2).
double kolmogorov_survival(double lambda);

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

}  // namespace cbd
