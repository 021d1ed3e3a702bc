#include "cbd/cbd_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cbd/error.hpp"
#include "cbd/rng.hpp"

namespace cbd {

std::string_view to_string(WeightFunction w) {
  switch (w) {
    case WeightFunction::One: return "one";
    case WeightFunction::JointDensitySquared: return "p2";
    case WeightFunction::Product44: return "p4p4";
  }
  return "one";
}

std::string_view to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::VStat: return "vstat";
    case EstimatorKind::UStatExact: return "ustat_exact";
    case EstimatorKind::UStatIncomplete: return "ustat_incomplete";
    case EstimatorKind::Linear: return "linear";
    case EstimatorKind::Normalized: return "normalized";
  }
  return "vstat";
}

WeightFunction parse_weight_function(std::string_view text) {
  if (text == "one") return WeightFunction::One;
  if (text == "p2") return WeightFunction::JointDensitySquared;
  if (text == "p4p4") return WeightFunction::Product44;
  throw Error(ErrorKind::Usage, "unknown weight function '" + std::string(text) + "' (one|p2|p4p4)");
}

std::vector<double> weight_values(const Dataset& ds, const Bandwidths& bw, WeightFunction a) {
  const std::size_t n = ds.n();
  std::vector<double> out(n, 1.0);
  if (a == WeightFunction::One) return out;
  const KernelSpec normalized{.normalized = true};
  const Matrix yz = ds.y.hcat(ds.z);
  for (std::size_t s = 0; s < n; ++s) {
    const double p_yz = kde_yz(ds, yz.row(s), bw.h1, normalized);
    if (a == WeightFunction::JointDensitySquared) {
      out[s] = p_yz * p_yz;
    } else {
      const double p_z = kde_z(ds, ds.z.row(s), bw.h2, normalized);
      out[s] = std::pow(p_yz, 4) * std::pow(p_z, 4);
    }
  }
  return out;
}

namespace {

double vstat_from_weights(const Matrix& x, const std::vector<AnchorWeights>& anchors, const std::vector<double>& a) {
  const auto order = rank_order(pairwise_distances(x));
  std::vector<double> scratch(x.rows(), 0.0);
  double total = 0.0;
  for (std::size_t s = 0; s < anchors.size(); ++s) {
    if (a[s] == 0.0) continue;
    total += theta2_on_support(order, anchors[s].support, anchors[s].p, anchors[s].q, scratch) * a[s];
  }
  return total / static_cast<double>(anchors.size());
}

// Dense kernel weight tables: w_yz(s, l) = K(||(Y_s,Z_s) - (Y_l,Z_l)|| / h1).
struct WeightTables {
  Matrix w_yz;
  Matrix w_z;
  double scale = 1.0;
};

WeightTables weight_tables(const Dataset& ds, const Bandwidths& bw, const KernelSpec& spec) {
  const std::size_t n = ds.n();
  const Matrix yz = ds.y.hcat(ds.z);
  WeightTables t{Matrix(n, n), Matrix(n, n), 1.0};
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t l = 0; l < n; ++l) {
      t.w_yz(s, l) = kernel_profile(spec, euclidean_distance(yz.row(s), yz.row(l)) / bw.h1, yz.cols());
      t.w_z(s, l) = kernel_profile(spec, euclidean_distance(ds.z.row(s), ds.z.row(l)) / bw.h2, ds.dz());
    }
  }
  const double d1 = static_cast<double>(ds.dy() + ds.dz());
  const double d2 = static_cast<double>(ds.dz());
  t.scale = 1.0 / (std::pow(bw.h1, 4.0 * d1) * std::pow(bw.h2, 4.0 * d2));
  return t;
}

double falling_factorial(std::size_t n, std::size_t k) {
  double out = 1.0;
  for (std::size_t i = 0; i < k; ++i) out *= static_cast<double>(n - i);
  return out;
}

// Calls f(quad) for every increasing 4-subset of `pool`.
template <typename F>
void for_each_quad(const std::vector<std::size_t>& pool, F&& f) {
  const std::size_t m = pool.size();
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a + 1; b < m; ++b)
      for (std::size_t c = b + 1; c < m; ++c)
        for (std::size_t d = c + 1; d < m; ++d) f(Quad{pool[a], pool[b], pool[c], pool[d]});
}

double ustat_exact(const DistanceMatrix& dist, const WeightTables& t, std::size_t n) {
  // phi_n is symmetric within each 4-block, so each pair of unordered
  // blocks stands for 4! * 4! ordered tuples.
  double sum = 0.0;
  std::vector<std::size_t> rest;
  std::vector<std::size_t> remaining;
  for (std::size_t anchor = 0; anchor < n; ++anchor) {
    rest.clear();
    for (std::size_t i = 0; i < n; ++i)
      if (i != anchor) rest.push_back(i);
    for_each_quad(rest, [&](const Quad& u) {
      double wu = 1.0;
      for (const auto i : u) wu *= t.w_yz(anchor, i);
      if (wu == 0.0) return;
      remaining.clear();
      for (const auto i : rest)
        if (std::find(u.begin(), u.end(), i) == u.end()) remaining.push_back(i);
      for_each_quad(remaining, [&](const Quad& v) {
        double wv = 1.0;
        for (const auto i : v) wv *= t.w_z(anchor, i);
        if (wv == 0.0) return;
        sum += wu * wv * phi_sym(dist, u, v);
      });
    });
  }
  return sum * 576.0 * t.scale / falling_factorial(n, 9);
}

}  // namespace

CbdStatistic cbd_vstat(const Dataset& ds, const Bandwidths& bw, const KernelSpec& spec, WeightFunction a) {
  require(bw.h1 > 0.0 && bw.h2 > 0.0, ErrorKind::InvalidParameter, "cbd_vstat: h1 and h2 must be positive");
  const auto anchors = anchor_weights(ds, bw.h1, bw.h2, spec);
  CbdStatistic stat;
  stat.value = vstat_from_weights(ds.x, anchors, weight_values(ds, bw, a));
  stat.weight = a;
  stat.bandwidths = bw;
  stat.kind = EstimatorKind::VStat;
  return stat;
}

double phi_n(const DistanceMatrix& dist, const Matrix& w_yz, const Matrix& w_z, double scale, std::size_t anchor,
             const Quad& u, const Quad& v) {
  double w = scale;
  for (const auto i : u) w *= w_yz(anchor, i);
  for (const auto i : v) w *= w_z(anchor, i);
  if (w == 0.0) return 0.0;
  return w * phi_sym(dist, u, v);
}

CbdStatistic cbd_ustat(const Dataset& ds, const Bandwidths& bw, const KernelSpec& spec, const UStatMode& mode) {
  const std::size_t n = ds.n();
  require(n >= 9, ErrorKind::InsufficientSample, "cbd_ustat: needs n >= 9");
  require(bw.h1 > 0.0 && bw.h2 > 0.0, ErrorKind::InvalidParameter, "cbd_ustat: h1 and h2 must be positive");
  const auto dist = pairwise_distances(ds.x);
  const auto tables = weight_tables(ds, bw, spec);
  CbdStatistic stat;
  stat.weight = WeightFunction::Product44;
  stat.bandwidths = bw;
  if (mode.exact) {
    require(n <= 10, ErrorKind::InvalidParameter,
            "cbd_ustat: exact enumeration is limited to n <= 10; use incomplete mode with a tuple budget");
    stat.kind = EstimatorKind::UStatExact;
    stat.value = ustat_exact(dist, tables, n);
    stat.tuples = static_cast<std::uint64_t>(falling_factorial(n, 9));
    return stat;
  }
  require(mode.tuples >= 1, ErrorKind::InvalidParameter, "cbd_ustat: incomplete mode needs at least one tuple");
  stat.kind = EstimatorKind::UStatIncomplete;
  Rng rng = make_rng(mode.seed);
  std::vector<std::size_t> idx(n);
  double mean = 0.0;
  double m2 = 0.0;
  for (std::uint64_t b = 0; b < mode.tuples; ++b) {
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t k = 0; k < 9; ++k) std::swap(idx[k], idx[k + uniform_index(rng, n - k)]);
    const double value = phi_n(dist, tables.w_yz, tables.w_z, tables.scale, idx[0], Quad{idx[1], idx[2], idx[3], idx[4]},
                               Quad{idx[5], idx[6], idx[7], idx[8]});
    const double delta_mean = value - mean;
    mean += delta_mean / static_cast<double>(b + 1);
    m2 += delta_mean * (value - mean);
  }
  stat.value = mean;
  stat.tuples = mode.tuples;
  stat.std_error = mode.tuples > 1 ? std::sqrt(m2 / static_cast<double>(mode.tuples - 1) / static_cast<double>(mode.tuples)) : 0.0;
  return stat;
}

CbdStatistic cbd_linear(const Dataset& ds, const Bandwidths& bw, const KernelSpec& spec) {
  const std::size_t n = ds.n();
  require(n >= 9, ErrorKind::InsufficientSample, "cbd_linear: needs n >= 9");
  require(bw.h1 > 0.0 && bw.h2 > 0.0, ErrorKind::InvalidParameter, "cbd_linear: h1 and h2 must be positive");
  const auto dist = pairwise_distances(ds.x);
  const auto tables = weight_tables(ds, bw, spec);
  const std::size_t blocks = n / 9;
  double sum = 0.0;
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t o = 9 * b;
    sum += phi_n(dist, tables.w_yz, tables.w_z, tables.scale, o, Quad{o + 1, o + 2, o + 3, o + 4},
                 Quad{o + 5, o + 6, o + 7, o + 8});
  }
  CbdStatistic stat;
  stat.value = sum / static_cast<double>(blocks);
  stat.weight = WeightFunction::Product44;
  stat.bandwidths = bw;
  stat.kind = EstimatorKind::Linear;
  stat.tuples = blocks;
  return stat;
}

namespace {

// Sum over anchors of the numerator Theta^2(P~, Q~) and of the point-mass
// bound sum_u p_u Theta^2(delta_{X_u}, Q~).
//
// With q fixed, Theta^2(delta_u, q) = (1 - q{X_r = X_u})^2
//   + sum_{a,b} q_a q_b (delta(a,b,u) - Q_ab)^2,  Q_ab = sum_r q_r delta(a,b,r),
// and the second term splits into a u-free part plus
// sum_a q_a sum_{b : d(a,b) >= d(a,u)} q_b (1 - 2 Q_ab), a suffix sum along the
// support sorted by distance from a.
std::pair<double, double> normalized_parts(const Matrix& x, const std::vector<AnchorWeights>& anchors) {
  const auto dist = pairwise_distances(x);
  std::vector<std::pair<double, std::uint32_t>> row;
  std::vector<double> cum_q;
  std::vector<double> suffix;  // q_a-weighted suffix sums, indexed by support position
  double numerator = 0.0;
  double denominator = 0.0;

  for (const auto& aw : anchors) {
    numerator += theta2_on_support(dist, aw.support, aw.p, aw.q);

    const std::size_t k = aw.support.size();
    row.resize(k);
    cum_q.resize(k);
    suffix.assign(k, 0.0);
    double u_free = 0.0;
    for (std::size_t ia = 0; ia < k; ++ia) {
      const double qa = aw.q[ia];
      if (qa == 0.0) continue;
      const std::size_t a = aw.support[ia];
      for (std::uint32_t b = 0; b < k; ++b) row[b] = {dist(a, aw.support[b]), b};
      std::sort(row.begin(), row.end());
      // cum_q[t]: q-mass of the closed ball through row[t].
      for (std::size_t first = 0; first < k;) {
        std::size_t last = first;
        double run = first > 0 ? cum_q[first - 1] : 0.0;
        while (last < k && row[last].first == row[first].first) run += aw.q[row[last++].second];
        for (std::size_t t = first; t < last; ++t) cum_q[t] = run;
        first = last;
      }
      double tail = 0.0;
      for (std::size_t last = k; last > 0;) {
        std::size_t first = last - 1;
        while (first > 0 && row[first - 1].first == row[last - 1].first) --first;
        for (std::size_t t = first; t < last; ++t) {
          const double qb = aw.q[row[t].second];
          const double q_ab = cum_q[t];
          u_free += qa * qb * q_ab * q_ab;
          tail += qb * (1.0 - 2.0 * q_ab);
        }
        for (std::size_t t = first; t < last; ++t) suffix[row[t].second] += qa * tail;
        last = first;
      }
    }

    for (std::size_t iu = 0; iu < k; ++iu) {
      if (aw.p[iu] == 0.0) continue;
      const std::size_t u = aw.support[iu];
      double tied_q = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        if (dist(u, aw.support[j]) == 0.0) tied_q += aw.q[j];
      }
      denominator += aw.p[iu] * ((1.0 - tied_q) * (1.0 - tied_q) + u_free + suffix[iu]);
    }
  }
  return {numerator, denominator};
}

}  // namespace

double normalized_cbd(const Dataset& ds, const Bandwidths& bw, const KernelSpec& spec) {
  require(bw.h1 > 0.0 && bw.h2 > 0.0, ErrorKind::InvalidParameter, "normalized_cbd: h1 and h2 must be positive");
  const auto anchors = anchor_weights(ds, bw.h1, bw.h2, spec);
  const auto [num, den] = normalized_parts(ds.x, anchors);
  return den > 0.0 ? std::clamp(num / den, 0.0, 1.0) : 0.0;
}

StatisticEvaluator::StatisticEvaluator(const Dataset& reference, const Bandwidths& bw, const EstimatorConfig& config)
    : reference_(reference), bw_(bw), config_(config) {
  require(bw.h1 > 0.0 && bw.h2 > 0.0, ErrorKind::InvalidParameter, "statistic: h1 and h2 must be positive");
  if (config_.kind == EstimatorKind::VStat || config_.kind == EstimatorKind::Normalized) {
    anchors_ = anchor_weights(reference_, bw_.h1, bw_.h2, config_.kernel);
    a_values_ = weight_values(reference_, bw_, config_.weight);
  }
}

double StatisticEvaluator::operator()(const Matrix& x, std::uint64_t seed) const {
  require(x.rows() == reference_.n() && x.cols() == reference_.dx(), ErrorKind::InvalidInput,
          "statistic: X shape does not match the reference dataset");
  switch (config_.kind) {
    case EstimatorKind::VStat:
      return vstat_from_weights(x, anchors_, a_values_);
    case EstimatorKind::Normalized: {
      const auto [num, den] = normalized_parts(x, anchors_);
      return den > 0.0 ? std::clamp(num / den, 0.0, 1.0) : 0.0;
    }
    case EstimatorKind::UStatExact:
      return cbd_ustat(reference_.with_x(x), bw_, config_.kernel, UStatMode::Exact()).value;
    case EstimatorKind::UStatIncomplete:
      return cbd_ustat(reference_.with_x(x), bw_, config_.kernel, UStatMode::Incomplete(config_.ustat_tuples, seed))
          .value;
    case EstimatorKind::Linear:
      return cbd_linear(reference_.with_x(x), bw_, config_.kernel).value;
  }
  return 0.0;
}

}  // namespace cbd
