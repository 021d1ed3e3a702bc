#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cbd/ball_divergence.hpp"
#include "cbd/core_data.hpp"
#include "cbd/kernels.hpp"

namespace cbd {

/// a(y, z) applied to each anchor's divergence.
enum class WeightFunction {
  One,                  // a = 1
  JointDensitySquared,  // a = p_{Y,Z}(y, z)^2
  Product44,            // a = p_{Y,Z}(y, z)^4 p_Z(z)^4
};

enum class EstimatorKind { VStat, UStatExact, UStatIncomplete, Linear, Normalized };

std::string_view to_string(WeightFunction w);
std::string_view to_string(EstimatorKind k);
WeightFunction parse_weight_function(std::string_view text);  // one | p2 | p4p4

struct CbdStatistic {
  double value = 0.0;
  WeightFunction weight = WeightFunction::One;
  Bandwidths bandwidths;
  EstimatorKind kind = EstimatorKind::VStat;
  /// Monte Carlo standard error; only set by the incomplete U-statistic.
  double std_error = 0.0;
  /// Number of 9-tuples averaged (U-statistic and linear estimators).
  std::uint64_t tuples = 0;
};

/// a(Y_s, Z_s) for every anchor, with densities from the normalized kernel.
std::vector<double> weight_values(const Dataset& ds, const Bandwidths& bw, WeightFunction a);

/// (1/n) sum_s Theta^2(P~_{X|Y_s,Z_s}, P~_{X|Z_s}) a(Y_s, Z_s).
CbdStatistic cbd_vstat(const Dataset& ds, const Bandwidths& bw, const KernelSpec& spec,
                       WeightFunction a = WeightFunction::One);

struct UStatMode {
  bool exact = true;
  /// Tuples sampled in incomplete mode.
  std::uint64_t tuples = 0;
  std::uint64_t seed = 0;

  static UStatMode Exact() { return {true, 0, 0}; }
  static UStatMode Incomplete(std::uint64_t tuples, std::uint64_t seed) { return {false, tuples, seed}; }
};

/// Kernel-weighted core phi_n for one 9-tuple: anchor, then the four
/// (Y,Z)-weighted indices, then the four Z-weighted indices.
double phi_n(const DistanceMatrix& dist, const Matrix& w_yz, const Matrix& w_z, double scale, std::size_t anchor,
             const Quad& u, const Quad& v);

/// Order-9 U-statistic for the density-weighted cBD. Exact mode enumerates
/// every ordered distinct 9-tuple (n <= 10); incomplete mode samples tuples
/// uniformly and reports the Monte Carlo standard error.
CbdStatistic cbd_ustat(const Dataset& ds, const Bandwidths& bw, const KernelSpec& spec, const UStatMode& mode);

/// Mean of phi_n over the floor(n/9) consecutive disjoint blocks.
CbdStatistic cbd_linear(const Dataset& ds, const Bandwidths& bw, const KernelSpec& spec);

/// Plug-in normalized cBD in [0, 1]; 0 when the denominator vanishes.
double normalized_cbd(const Dataset& ds, const Bandwidths& bw, const KernelSpec& spec);

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::VStat;
  WeightFunction weight = WeightFunction::One;
  KernelSpec kernel;
  /// Tuples per evaluation for the incomplete U-statistic.
  std::uint64_t ustat_tuples = 100000;
};

/// Repeated evaluation of one statistic on datasets that share (Y, Z) and
/// differ only in X. Kernel weights are computed once at construction.
class StatisticEvaluator {
 public:
  StatisticEvaluator(const Dataset& reference, const Bandwidths& bw, const EstimatorConfig& config);

  /// Statistic with X replaced by `x`. `seed` drives the incomplete U-statistic only.
  double operator()(const Matrix& x, std::uint64_t seed = 0) const;

  const Bandwidths& bandwidths() const noexcept { return bw_; }
  const EstimatorConfig& config() const noexcept { return config_; }

 private:
  Dataset reference_;
  Bandwidths bw_;
  EstimatorConfig config_;
  std::vector<AnchorWeights> anchors_;
  std::vector<double> a_values_;
};

}  // namespace cbd
