#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "cbd/core_data.hpp"
#include "cbd/kernels.hpp"

namespace cbd {

using Quad = std::array<std::size_t, 4>;

/// 1 iff X_r lies in the closed ball centred at X_u with radius ||X_u - X_v||.
inline bool delta(const DistanceMatrix& dist, std::size_t u, std::size_t v, std::size_t r) {
  return dist(u, r) <= dist(u, v);
}

inline bool eta(const DistanceMatrix& dist, std::size_t x, std::size_t y, std::size_t z1, std::size_t z2) {
  return delta(dist, x, y, z1) && delta(dist, x, y, z2);
}

/// Degree-(4,4) ball-divergence core phi_A(u; v3, v4) + phi_C(v; u3, u4).
double phi_core(const DistanceMatrix& dist, const Quad& u, const Quad& v);

/// phi_core averaged over all 4! x 4! reorderings of the two blocks.
///
/// Evaluated through the block-symmetric decomposition: each of the eight eta
/// terms averages over ordered distinct index tuples of the relevant block, so
/// only 528 eta evaluations are needed instead of 576 x 8.
double phi_sym(const DistanceMatrix& dist, const Quad& u, const Quad& v);

/// Probability vector over the shared X sample.
struct WeightedEmpirical {
  std::vector<double> p;

  /// Throws InvalidInput unless p >= 0 and sum(p) = 1 within 1e-10.
  void validate() const;
};

/// Theta^2(P, Q) for two atomic measures on the same atoms:
/// sum_{u,v} [sum_r (p_r - q_r) delta(u, v, r)]^2 (p_u p_v + q_u q_v).
double theta2_weighted(const DistanceMatrix& dist, const WeightedEmpirical& p, const WeightedEmpirical& q);

/// Same quantity restricted to `support` (indices where p or q is nonzero),
/// using prefix sums along each DistanceOrder row. `p` and `q` are aligned
/// with `support`. `scratch` must have length n and be all zeros on entry;
/// it is restored to zeros on exit.
double theta2_on_support(const DistanceOrder& order, std::span<const std::uint32_t> support,
                         std::span<const double> p, std::span<const double> q, std::span<double> scratch);

/// Same quantity, sorting only the support by distance from each atom.
/// O(k^2 log k) for a support of size k, independent of n.
double theta2_on_support(const DistanceMatrix& dist, std::span<const std::uint32_t> support,
                         std::span<const double> p, std::span<const double> q);

/// Sparse normalized kernel weights of one anchor: P~_{X|Y_s,Z_s} (p) and
/// P~_{X|Z_s} (q) on the union of their supports.
struct AnchorWeights {
  std::vector<std::uint32_t> support;
  std::vector<double> p;
  std::vector<double> q;
  double total_yz = 0.0;
  double total_z = 0.0;
};

/// Kernel weights for every anchor s. Depends only on (Y, Z) and the bandwidths,
/// so it is shared across every resample that only replaces X.
std::vector<AnchorWeights> anchor_weights(const Dataset& ds, double h1, double h2, const KernelSpec& spec);

/// Theta^2(P~_{X|Y_s,Z_s}, P~_{X|Z_s}) = A_{n,s} + C_{n,s}, O(n^2) per anchor.
double pointwise_cbd(const Dataset& ds, const DistanceMatrix& dist, const DistanceOrder& order, std::size_t s,
                     double h1, double h2, const KernelSpec& spec);

/// Literal triple loop over (u, v, r); reference for pointwise_cbd.
double pointwise_cbd_bruteforce(const Dataset& ds, const DistanceMatrix& dist, std::size_t s, double h1,
                                double h2, const KernelSpec& spec);

}  // namespace cbd
