#include "cbd/ball_divergence.hpp"

#include <algorithm>
#include <cmath>

#include "cbd/error.hpp"

namespace cbd {

namespace {

double phi_half(const DistanceMatrix& dist, const Quad& a, std::size_t b3, std::size_t b4) {
  const auto e = [&](std::size_t x, std::size_t y, std::size_t z1, std::size_t z2) {
    return eta(dist, x, y, z1, z2) ? 1.0 : 0.0;
  };
  return e(a[0], a[1], a[2], a[3]) + e(a[0], a[1], b3, b4) - e(a[0], a[1], a[2], b3) - e(a[0], a[1], a[3], b4);
}

// Symmetrized half-core: phi_A averaged over orderings of block `a` and of
// block `b`, whose positions 3 and 4 enter phi_A.
double phi_half_sym(const DistanceMatrix& dist, const Quad& a, const Quad& b) {
  double same_block = 0.0;   // eta(a_i, a_j, a_k, a_l), all positions distinct
  double cross_pair = 0.0;   // eta(a_i, a_j, b_k, b_l), i != j, k != l
  double mixed = 0.0;        // eta(a_i, a_j, a_k, b_l), i, j, k distinct
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      if (j == i) continue;
      for (std::size_t k = 0; k < 4; ++k) {
        if (k != i && k != j) {
          const std::size_t l = 6 - i - j - k;
          if (eta(dist, a[i], a[j], a[k], a[l])) same_block += 1.0;
          for (std::size_t m = 0; m < 4; ++m) {
            if (eta(dist, a[i], a[j], a[k], b[m])) mixed += 1.0;
          }
        }
        for (std::size_t l = 0; l < 4; ++l) {
          if (l != k && eta(dist, a[i], a[j], b[k], b[l])) cross_pair += 1.0;
        }
      }
    }
  }
  return same_block / 24.0 + cross_pair / 144.0 - 2.0 * mixed / 96.0;
}

}  // namespace

double phi_core(const DistanceMatrix& dist, const Quad& u, const Quad& v) {
  return phi_half(dist, u, v[2], v[3]) + phi_half(dist, v, u[2], u[3]);
}

double phi_sym(const DistanceMatrix& dist, const Quad& u, const Quad& v) {
  return phi_half_sym(dist, u, v) + phi_half_sym(dist, v, u);
}

void WeightedEmpirical::validate() const {
  double sum = 0.0;
  for (const double w : p) {
    require(w >= 0.0 && std::isfinite(w), ErrorKind::InvalidInput, "weighted empirical: negative or non-finite mass");
    sum += w;
  }
  require(std::abs(sum - 1.0) <= 1e-10, ErrorKind::InvalidInput, "weighted empirical: masses must sum to one");
}

double theta2_on_support(const DistanceOrder& order, std::span<const std::uint32_t> support,
                         std::span<const double> p, std::span<const double> q, std::span<double> scratch) {
  for (std::size_t k = 0; k < support.size(); ++k) scratch[support[k]] = p[k] - q[k];

  const std::size_t n = order.size();
  std::vector<double> cum(n);
  double total = 0.0;
  for (std::size_t a = 0; a < support.size(); ++a) {
    const std::size_t u = support[a];
    if (p[a] == 0.0 && q[a] == 0.0) continue;
    const auto closed = order.closed_rank_row(u);
    std::uint32_t reach = 0;
    for (const auto v : support) reach = std::max(reach, closed[v]);
    const auto row = order.order_row(u);
    double run = 0.0;
    for (std::uint32_t k = 0; k <= reach; ++k) {
      run += scratch[row[k]];
      cum[k] = run;
    }
    double by_p = 0.0;
    double by_q = 0.0;
    for (std::size_t b = 0; b < support.size(); ++b) {
      const double bracket = cum[closed[support[b]]];
      const double sq = bracket * bracket;
      by_p += p[b] * sq;
      by_q += q[b] * sq;
    }
    total += p[a] * by_p + q[a] * by_q;
  }

  for (const auto r : support) scratch[r] = 0.0;
  return total;
}

double theta2_on_support(const DistanceMatrix& dist, std::span<const std::uint32_t> support,
                         std::span<const double> p, std::span<const double> q) {
  const std::size_t k = support.size();
  thread_local std::vector<std::pair<double, std::uint32_t>> row;
  row.resize(k);
  double total = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    if (p[a] == 0.0 && q[a] == 0.0) continue;
    const std::size_t u = support[a];
    for (std::uint32_t b = 0; b < k; ++b) row[b] = {dist(u, support[b]), b};
    std::sort(row.begin(), row.end());
    double run = 0.0;
    double by_p = 0.0;
    double by_q = 0.0;
    for (std::size_t first = 0; first < k;) {
      std::size_t last = first;
      while (last < k && row[last].first == row[first].first) {
        run += p[row[last].second] - q[row[last].second];
        ++last;
      }
      const double sq = run * run;
      for (std::size_t t = first; t < last; ++t) {
        by_p += p[row[t].second] * sq;
        by_q += q[row[t].second] * sq;
      }
      first = last;
    }
    total += p[a] * by_p + q[a] * by_q;
  }
  return total;
}

double theta2_weighted(const DistanceMatrix& dist, const WeightedEmpirical& p, const WeightedEmpirical& q) {
  const std::size_t n = dist.size();
  require(p.p.size() == n && q.p.size() == n, ErrorKind::InvalidInput, "theta2_weighted: support size mismatch");
  p.validate();
  q.validate();
  std::vector<std::uint32_t> support;
  std::vector<double> ps, qs;
  for (std::size_t r = 0; r < n; ++r) {
    if (p.p[r] > 0.0 || q.p[r] > 0.0) {
      support.push_back(static_cast<std::uint32_t>(r));
      ps.push_back(p.p[r]);
      qs.push_back(q.p[r]);
    }
  }
  std::vector<double> scratch(n, 0.0);
  return theta2_on_support(rank_order(dist), support, ps, qs, scratch);
}

namespace {

AnchorWeights weights_for_anchor(const Matrix& yz, const Matrix& z, std::size_t s, double h1, double h2,
                                 const KernelSpec& spec, std::vector<double>& wyz, std::vector<double>& wz) {
  const std::size_t n = yz.rows();
  AnchorWeights a;
  for (std::size_t r = 0; r < n; ++r) {
    wyz[r] = kernel_profile(spec, euclidean_distance(yz.row(s), yz.row(r)) / h1, yz.cols());
    wz[r] = kernel_profile(spec, euclidean_distance(z.row(s), z.row(r)) / h2, z.cols());
    a.total_yz += wyz[r];
    a.total_z += wz[r];
  }
  require(a.total_yz > 0.0 && a.total_z > 0.0, ErrorKind::Precondition,
          "anchor " + std::to_string(s) + " has zero total kernel weight");
  for (std::size_t r = 0; r < n; ++r) {
    if (wyz[r] > 0.0 || wz[r] > 0.0) {
      a.support.push_back(static_cast<std::uint32_t>(r));
      a.p.push_back(wyz[r] / a.total_yz);
      a.q.push_back(wz[r] / a.total_z);
    }
  }
  return a;
}

}  // namespace

std::vector<AnchorWeights> anchor_weights(const Dataset& ds, double h1, double h2, const KernelSpec& spec) {
  require(h1 > 0.0 && h2 > 0.0, ErrorKind::InvalidParameter, "anchor weights: bandwidths must be positive");
  const Matrix yz = ds.y.hcat(ds.z);
  std::vector<double> wyz(ds.n()), wz(ds.n());
  std::vector<AnchorWeights> out;
  out.reserve(ds.n());
  for (std::size_t s = 0; s < ds.n(); ++s) out.push_back(weights_for_anchor(yz, ds.z, s, h1, h2, spec, wyz, wz));
  return out;
}

double pointwise_cbd(const Dataset& ds, const DistanceMatrix& dist, const DistanceOrder& order, std::size_t s,
                     double h1, double h2, const KernelSpec& spec) {
  require(s < ds.n(), ErrorKind::InvalidInput, "pointwise_cbd: anchor out of range");
  require(dist.size() == ds.n() && order.size() == ds.n(), ErrorKind::InvalidInput,
          "pointwise_cbd: distance tables do not match the dataset");
  require(h1 > 0.0 && h2 > 0.0, ErrorKind::InvalidParameter, "pointwise_cbd: bandwidths must be positive");
  const Matrix yz = ds.y.hcat(ds.z);
  std::vector<double> wyz(ds.n()), wz(ds.n());
  const auto a = weights_for_anchor(yz, ds.z, s, h1, h2, spec, wyz, wz);
  std::vector<double> scratch(ds.n(), 0.0);
  return theta2_on_support(order, a.support, a.p, a.q, scratch);
}

double pointwise_cbd_bruteforce(const Dataset& ds, const DistanceMatrix& dist, std::size_t s, double h1, double h2,
                                const KernelSpec& spec) {
  const std::size_t n = ds.n();
  require(s < n, ErrorKind::InvalidInput, "pointwise_cbd_bruteforce: anchor out of range");
  std::vector<double> w1(n), w2(n);
  double t1 = 0.0, t2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d1 = 0.0;
    for (std::size_t k = 0; k < ds.dy(); ++k) d1 += std::pow(ds.y(s, k) - ds.y(i, k), 2);
    double d2 = 0.0;
    for (std::size_t k = 0; k < ds.dz(); ++k) d2 += std::pow(ds.z(s, k) - ds.z(i, k), 2);
    d1 += d2;
    w1[i] = kernel_profile(spec, std::sqrt(d1) / h1, ds.dy() + ds.dz());
    w2[i] = kernel_profile(spec, std::sqrt(d2) / h2, ds.dz());
    t1 += w1[i];
    t2 += w2[i];
  }
  require(t1 > 0.0 && t2 > 0.0, ErrorKind::Precondition, "pointwise_cbd_bruteforce: zero total kernel weight");
  double a_term = 0.0;
  double c_term = 0.0;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      double bracket = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        if (delta(dist, u, v, r)) bracket += w1[r] / t1 - w2[r] / t2;
      }
      const double sq = bracket * bracket;
      a_term += sq * w1[u] * w1[v] / (t1 * t1);
      c_term += sq * w2[u] * w2[v] / (t2 * t2);
    }
  }
  return a_term + c_term;
}

}  // namespace cbd
