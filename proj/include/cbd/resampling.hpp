#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cbd/core_data.hpp"
#include "cbd/kernels.hpp"
#include "cbd/rng.hpp"

namespace cbd {

/// A known law of X given Z, used by CRT and CPT.
class ConditionalSampler {
 public:
  enum class Kind { GaussianAffine, UniformAbs, Custom };

  using DrawFn = std::function<void(std::span<const double> z, Rng& rng, std::span<double> x)>;
  using LogDensityFn = std::function<double(std::span<const double> x, std::span<const double> z)>;

  /// X | Z = z ~ N(beta z + mu, sigma^2 I). `beta` is d_X x d_Z.
  static ConditionalSampler gaussian_affine(Matrix beta, std::vector<double> mu, double sigma);
  /// X | Z = z ~ Unif(-|z_1|, |z_1|) in one dimension.
  static ConditionalSampler uniform_abs();
  /// User-supplied law. `log_density` may be empty, in which case CPT is unavailable.
  static ConditionalSampler custom(std::string label, std::size_t dx, DrawFn draw, LogDensityFn log_density = {});

  Kind kind() const noexcept { return kind_; }
  const std::string& label() const noexcept { return label_; }
  /// Output dimension; 0 when it follows the input (uniform_abs is always 1).
  std::size_t dx() const noexcept { return dx_; }

  void draw(std::span<const double> z, Rng& rng, std::span<double> x) const;
  std::vector<double> draw(std::span<const double> z, Rng& rng) const;

  bool has_log_density() const noexcept;
  /// log p(x | z); -infinity outside the support.
  double log_density(std::span<const double> x, std::span<const double> z) const;

 private:
  Kind kind_ = Kind::Custom;
  std::string label_;
  std::size_t dx_ = 0;
  Matrix beta_;
  std::vector<double> mu_;
  double sigma_ = 0.0;
  DrawFn draw_;
  LogDensityFn log_density_;
};

enum class ResampleMethod { Crt, Cpt, Lwb, Dlb };

std::string_view to_string(ResampleMethod m);
ResampleMethod parse_resample_method(std::string_view text);

struct ResamplePlan {
  ResampleMethod method = ResampleMethod::Lwb;
  std::size_t M = 200;
  std::uint64_t seed = 0;
  /// Required for crt and cpt.
  std::optional<ConditionalSampler> sampler;
  /// Metropolis steps per CPT draw; 0 selects 50 n.
  std::size_t mh_steps = 0;
  /// LWB noise scale and center-localization scale; default to the Bandwidths values.
  std::optional<double> h0;
  std::optional<double> h2_prime;
  /// DLB localization scale; defaults to h2.
  std::optional<double> dlb_h;

  /// Throws InvalidParameter / Usage on inconsistent settings.
  void validate() const;
};

Dataset crt_resample(const Dataset& ds, const ConditionalSampler& sampler, Rng& rng);

/// Result of one Metropolis chain over permutations. perm[i] is the source row
/// placed at slot i.
struct PermutationChain {
  std::vector<std::size_t> perm;
  std::size_t accepted = 0;
  std::size_t steps = 0;
};

/// Chain targeting P(pi) proportional to prod_i exp(log_p(pi(i), i)), where
/// log_p(a, b) = log p(X_a | Z_b). Starts at the identity.
PermutationChain cpt_chain(const Matrix& log_p, Rng& rng, std::size_t steps);

Dataset cpt_resample(const Dataset& ds, const ConditionalSampler& sampler, Rng& rng, std::size_t mh_steps);

Dataset lwb_resample(const Dataset& ds, double h0, double h2_prime, const KernelSpec& spec, Rng& rng);

Dataset dlb_resample(const Dataset& ds, double h, const KernelSpec& spec, Rng& rng);

/// Pre-tabulates everything a plan needs for one dataset, then draws resample
/// `index` from its own stream derive_seed(plan.seed, {index}). Holds a
/// reference to `ds`, which must outlive it.
class Resampler {
 public:
  Resampler(const Dataset& ds, const ResamplePlan& plan, const Bandwidths& bw, const KernelSpec& spec);

  Matrix draw_x(std::size_t index) const;
  Dataset draw(std::size_t index) const;

 private:
  const Dataset* ds_;
  ResamplePlan plan_;
  double h0_ = 0.0;
  std::size_t steps_ = 0;
  Matrix log_p_;
  /// Row j: cumulative kernel weights used to pick a source row for slot j.
  std::vector<std::vector<double>> cumulative_;
};

}  // namespace cbd
