#pragma once

#include <optional>
#include <span>
#include <vector>

#include "cbd/core_data.hpp"

namespace cbd {

/// Radial Epanechnikov profile K(t) = 1 - t^2 on [0, 1].
struct KernelSpec {
  /// When set, the profile is scaled so that K(||u||) integrates to one over R^d.
  bool normalized = false;
};

/// Unit-ball volume in R^d.
double unit_ball_volume(std::size_t d);

/// (d + 2) / (2 V_d): the constant that makes the radial profile a density in R^d.
double epanechnikov_constant(std::size_t d);

double kernel_profile(const KernelSpec& spec, double t, std::size_t d);

/// Kernel weights of every sample relative to one query point.
struct KernelWeights {
  std::vector<double> values;
  double total = 0.0;
};

/// K(||(y, z) - (Y_i, Z_i)|| / h1) for each i. `query` is the concatenation (y, z).
KernelWeights weights_yz(const Dataset& ds, std::span<const double> query, double h1,
                         const KernelSpec& spec);
/// K(||z - Z_i|| / h2) for each i.
KernelWeights weights_z(const Dataset& ds, std::span<const double> query, double h2,
                        const KernelSpec& spec);

double kde_yz(const Dataset& ds, std::span<const double> query, double h1, const KernelSpec& spec);
double kde_z(const Dataset& ds, std::span<const double> query, double h2, const KernelSpec& spec);

/// Smoothing scales used by the statistic (h1, h2) and by the local wild
/// bootstrap (h0, h2_prime). h2_prime == 0 means each Z_s resamples only itself.
struct Bandwidths {
  double h1 = 0.0;
  double h2 = 0.0;
  double h0 = 0.0;
  double h2_prime = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;

  void validate() const;
};

/// Sample quantile with linear interpolation at position (n - 1) p.
double quantile_type7(std::vector<double> values, double p);

/// Mean of the nonzero coordinate-wise interquartile ranges of `block`.
/// Throws DegenerateScale if every coordinate has zero IQR.
double mean_iqr(const Matrix& block);

/// IQR-scaled rates: h1 = c1 n^{-1/(dY+dZ+2)}, h2 = c2 n^{-1/(dZ+2)},
/// h0 = 20 c2 n^{-1/1.95}, h2_prime = 0.
Bandwidths default_bandwidths(const Dataset& ds);

/// Per-field overrides applied on top of defaults.
struct BandwidthOverrides {
  std::optional<double> h1, h2, h0, h2_prime;
};

Bandwidths resolve_bandwidths(const Dataset& ds, const BandwidthOverrides& overrides);

}  // namespace cbd
