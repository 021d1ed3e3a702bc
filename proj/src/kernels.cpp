#include "cbd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cbd/error.hpp"

namespace cbd {

double unit_ball_volume(std::size_t d) {
  const double half = static_cast<double>(d) / 2.0;
  return std::pow(std::numbers::pi, half) / std::tgamma(half + 1.0);
}

double epanechnikov_constant(std::size_t d) {
  return (static_cast<double>(d) + 2.0) / (2.0 * unit_ball_volume(d));
}

double kernel_profile(const KernelSpec& spec, double t, std::size_t d) {
  require(t >= 0.0, ErrorKind::InvalidInput, "kernel_profile: negative argument");
  const double base = t <= 1.0 ? 1.0 - t * t : 0.0;
  return spec.normalized ? base * epanechnikov_constant(d) : base;
}

namespace {

KernelWeights weights_against(const Matrix& block, std::span<const double> query, double h,
                              const KernelSpec& spec) {
  require(h > 0.0, ErrorKind::InvalidParameter, "kernel weights: bandwidth must be positive");
  require(query.size() == block.cols(), ErrorKind::InvalidInput, "kernel weights: query dimension mismatch");
  KernelWeights out;
  out.values.resize(block.rows());
  const std::size_t d = block.cols();
  for (std::size_t i = 0; i < block.rows(); ++i) {
    const double t = euclidean_distance(query, block.row(i)) / h;
    out.values[i] = kernel_profile(spec, t, d);
    out.total += out.values[i];
  }
  return out;
}

Matrix joint_yz(const Dataset& ds) { return ds.y.hcat(ds.z); }

}  // namespace

KernelWeights weights_yz(const Dataset& ds, std::span<const double> query, double h1,
                         const KernelSpec& spec) {
  return weights_against(joint_yz(ds), query, h1, spec);
}

KernelWeights weights_z(const Dataset& ds, std::span<const double> query, double h2,
                        const KernelSpec& spec) {
  return weights_against(ds.z, query, h2, spec);
}

double kde_yz(const Dataset& ds, std::span<const double> query, double h1, const KernelSpec& spec) {
  require(spec.normalized, ErrorKind::Precondition, "kde_yz: requires a normalized kernel");
  const auto w = weights_yz(ds, query, h1, spec);
  const double d = static_cast<double>(ds.dy() + ds.dz());
  return w.total / (static_cast<double>(ds.n()) * std::pow(h1, d));
}

double kde_z(const Dataset& ds, std::span<const double> query, double h2, const KernelSpec& spec) {
  require(spec.normalized, ErrorKind::Precondition, "kde_z: requires a normalized kernel");
  const auto w = weights_z(ds, query, h2, spec);
  const double d = static_cast<double>(ds.dz());
  return w.total / (static_cast<double>(ds.n()) * std::pow(h2, d));
}

void Bandwidths::validate() const {
  require(h1 > 0.0 && std::isfinite(h1), ErrorKind::InvalidParameter, "bandwidth h1 must be positive");
  require(h2 > 0.0 && std::isfinite(h2), ErrorKind::InvalidParameter, "bandwidth h2 must be positive");
  require(h0 > 0.0 && std::isfinite(h0), ErrorKind::InvalidParameter, "bandwidth h0 must be positive");
  require(h2_prime >= 0.0 && std::isfinite(h2_prime), ErrorKind::InvalidParameter,
          "bandwidth h2_prime must be non-negative");
}

double quantile_type7(std::vector<double> values, double p) {
  require(!values.empty(), ErrorKind::InvalidInput, "quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double pos = static_cast<double>(values.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double mean_iqr(const Matrix& block) {
  double sum = 0.0;
  std::size_t used = 0;
  std::vector<double> col(block.rows());
  for (std::size_t j = 0; j < block.cols(); ++j) {
    for (std::size_t i = 0; i < block.rows(); ++i) col[i] = block(i, j);
    const double iqr = quantile_type7(col, 0.75) - quantile_type7(col, 0.25);
    if (iqr > 0.0) {
      sum += iqr;
      ++used;
    }
  }
  require(used > 0, ErrorKind::DegenerateScale, "every coordinate has zero interquartile range");
  return sum / static_cast<double>(used);
}

Bandwidths default_bandwidths(const Dataset& ds) {
  require(ds.n() >= 4, ErrorKind::InsufficientSample, "default bandwidths need n >= 4");
  const double n = static_cast<double>(ds.n());
  const double dyz = static_cast<double>(ds.dy() + ds.dz());
  const double dz = static_cast<double>(ds.dz());
  Bandwidths bw;
  bw.c1 = mean_iqr(ds.y.hcat(ds.z));
  bw.c2 = mean_iqr(ds.z);
  bw.h1 = bw.c1 * std::pow(n, -1.0 / (dyz + 2.0));
  bw.h2 = bw.c2 * std::pow(n, -1.0 / (dz + 2.0));
  bw.h0 = 20.0 * bw.c2 * std::pow(n, -1.0 / 1.95);
  bw.h2_prime = 0.0;
  return bw;
}

Bandwidths resolve_bandwidths(const Dataset& ds, const BandwidthOverrides& o) {
  Bandwidths bw;
  const bool all_given = o.h1 && o.h2 && o.h0;
  if (!all_given) bw = default_bandwidths(ds);
  if (o.h1) bw.h1 = *o.h1;
  if (o.h2) bw.h2 = *o.h2;
  if (o.h0) bw.h0 = *o.h0;
  if (o.h2_prime) bw.h2_prime = *o.h2_prime;
  bw.validate();
  return bw;
}

}  // namespace cbd
