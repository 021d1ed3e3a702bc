#include "cbd/resampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "cbd/error.hpp"

namespace cbd {

ConditionalSampler ConditionalSampler::gaussian_affine(Matrix beta, std::vector<double> mu, double sigma) {
  require(beta.rows() == mu.size(), ErrorKind::InvalidParameter, "gaussian_affine: beta rows must match mu length");
  require(beta.rows() >= 1 && beta.cols() >= 1, ErrorKind::InvalidParameter, "gaussian_affine: empty beta");
  require(sigma >= 0.0 && std::isfinite(sigma), ErrorKind::InvalidParameter, "gaussian_affine: sigma must be >= 0");
  ConditionalSampler s;
  s.kind_ = Kind::GaussianAffine;
  s.label_ = "gaussian_affine";
  s.dx_ = beta.rows();
  s.beta_ = std::move(beta);
  s.mu_ = std::move(mu);
  s.sigma_ = sigma;
  return s;
}

ConditionalSampler ConditionalSampler::uniform_abs() {
  ConditionalSampler s;
  s.kind_ = Kind::UniformAbs;
  s.label_ = "uniform_abs";
  s.dx_ = 1;
  return s;
}

ConditionalSampler ConditionalSampler::custom(std::string label, std::size_t dx, DrawFn draw, LogDensityFn log_density) {
  require(static_cast<bool>(draw), ErrorKind::InvalidParameter, "custom sampler needs a draw function");
  require(dx >= 1, ErrorKind::InvalidParameter, "custom sampler needs d_X >= 1");
  ConditionalSampler s;
  s.kind_ = Kind::Custom;
  s.label_ = std::move(label);
  s.dx_ = dx;
  s.draw_ = std::move(draw);
  s.log_density_ = std::move(log_density);
  return s;
}

void ConditionalSampler::draw(std::span<const double> z, Rng& rng, std::span<double> x) const {
  require(x.size() == dx_, ErrorKind::InvalidInput, "sampler: output dimension mismatch");
  switch (kind_) {
    case Kind::GaussianAffine: {
      require(z.size() == beta_.cols(), ErrorKind::InvalidInput, "gaussian_affine: Z dimension mismatch");
      for (std::size_t i = 0; i < dx_; ++i) {
        double m = mu_[i];
        for (std::size_t k = 0; k < z.size(); ++k) m += beta_(i, k) * z[k];
        x[i] = m + sigma_ * standard_normal(rng);
      }
      return;
    }
    case Kind::UniformAbs: {
      const double a = std::abs(z[0]);
      x[0] = uniform(rng, -a, a);
      return;
    }
    case Kind::Custom:
      draw_(z, rng, x);
      return;
  }
}

std::vector<double> ConditionalSampler::draw(std::span<const double> z, Rng& rng) const {
  std::vector<double> x(dx_);
  draw(z, rng, x);
  return x;
}

bool ConditionalSampler::has_log_density() const noexcept {
  return kind_ != Kind::Custom || static_cast<bool>(log_density_);
}

double ConditionalSampler::log_density(std::span<const double> x, std::span<const double> z) const {
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  switch (kind_) {
    case Kind::GaussianAffine: {
      require(z.size() == beta_.cols() && x.size() == dx_, ErrorKind::InvalidInput,
              "gaussian_affine: dimension mismatch");
      double sq = 0.0;
      bool exact = true;
      for (std::size_t i = 0; i < dx_; ++i) {
        double m = mu_[i];
        for (std::size_t k = 0; k < z.size(); ++k) m += beta_(i, k) * z[k];
        sq += (x[i] - m) * (x[i] - m);
        exact = exact && x[i] == m;
      }
      if (sigma_ == 0.0) return exact ? 0.0 : neg_inf;
      const double d = static_cast<double>(dx_);
      return -0.5 * sq / (sigma_ * sigma_) - d * std::log(sigma_) - 0.5 * d * std::log(2.0 * std::numbers::pi);
    }
    case Kind::UniformAbs: {
      const double a = std::abs(z[0]);
      if (a == 0.0 || std::abs(x[0]) > a) return neg_inf;
      return -std::log(2.0 * a);
    }
    case Kind::Custom:
      require(static_cast<bool>(log_density_), ErrorKind::InvalidModel,
              "sampler '" + label_ + "' has no log-density");
      return log_density_(x, z);
  }
  return neg_inf;
}

std::string_view to_string(ResampleMethod m) {
  switch (m) {
    case ResampleMethod::Crt: return "crt";
    case ResampleMethod::Cpt: return "cpt";
    case ResampleMethod::Lwb: return "lwb";
    case ResampleMethod::Dlb: return "dlb";
  }
  return "lwb";
}

ResampleMethod parse_resample_method(std::string_view text) {
  if (text == "crt") return ResampleMethod::Crt;
  if (text == "cpt") return ResampleMethod::Cpt;
  if (text == "lwb") return ResampleMethod::Lwb;
  if (text == "dlb") return ResampleMethod::Dlb;
  throw Error(ErrorKind::Usage, "unknown method '" + std::string(text) + "' (crt|cpt|lwb|dlb)");
}

void ResamplePlan::validate() const {
  require(M >= 1, ErrorKind::InvalidParameter, "resample plan: M must be >= 1");
  if (method == ResampleMethod::Crt || method == ResampleMethod::Cpt) {
    require(sampler.has_value(), ErrorKind::Usage, std::string(to_string(method)) + " requires a sampler");
  }
  if (method == ResampleMethod::Cpt) {
    require(sampler->has_log_density(), ErrorKind::InvalidModel, "cpt requires a sampler with a log-density");
  }
  if (h0) require(*h0 > 0.0, ErrorKind::InvalidParameter, "lwb: h0 must be positive");
  if (h2_prime) require(*h2_prime >= 0.0, ErrorKind::InvalidParameter, "lwb: h2_prime must be >= 0");
  if (dlb_h) require(*dlb_h > 0.0, ErrorKind::InvalidParameter, "dlb: h must be positive");
}

namespace {

Matrix crt_x(const Dataset& ds, const ConditionalSampler& sampler, Rng& rng) {
  const std::size_t dx = sampler.dx();
  Matrix x(ds.n(), dx);
  for (std::size_t i = 0; i < ds.n(); ++i) sampler.draw(ds.z.row(i), rng, x.row(i));
  return x;
}

Matrix log_density_table(const Dataset& ds, const ConditionalSampler& sampler) {
  const std::size_t n = ds.n();
  Matrix table(n, n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) table(a, b) = sampler.log_density(ds.x.row(a), ds.z.row(b));
  for (std::size_t i = 0; i < n; ++i) {
    require(std::isfinite(table(i, i)), ErrorKind::InvalidModel,
            "cpt: log-density of observed row " + std::to_string(i) + " is not finite");
  }
  return table;
}

Matrix permuted_x(const Matrix& x, std::span<const std::size_t> perm) { return x.select_rows(perm); }

// Row j: cumulative K(||Z_j - Z_i|| / h) over i.
std::vector<std::vector<double>> kernel_cumulative(const Matrix& z, double h, const KernelSpec& spec) {
  const std::size_t n = z.rows();
  std::vector<std::vector<double>> out(n, std::vector<double>(n));
  for (std::size_t j = 0; j < n; ++j) {
    double run = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      run += kernel_profile(spec, euclidean_distance(z.row(j), z.row(i)) / h, z.cols());
      out[j][i] = run;
    }
  }
  return out;
}

std::size_t pick(const std::vector<double>& cumulative, Rng& rng) {
  const double u = uniform01(rng) * cumulative.back();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

Matrix lwb_x(const Matrix& x, double h0, const std::vector<std::vector<double>>* centers, Rng& rng) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const std::size_t c = centers ? pick((*centers)[i], rng) : i;
    for (std::size_t k = 0; k < x.cols(); ++k) out(i, k) = x(c, k) + h0 * standard_normal(rng);
  }
  return out;
}

Matrix dlb_x(const Matrix& x, const std::vector<std::vector<double>>& cumulative, Rng& rng) {
  std::vector<std::size_t> source(x.rows());
  for (std::size_t j = 0; j < x.rows(); ++j) source[j] = pick(cumulative[j], rng);
  return x.select_rows(source);
}

}  // namespace

Dataset crt_resample(const Dataset& ds, const ConditionalSampler& sampler, Rng& rng) {
  return ds.with_x(crt_x(ds, sampler, rng));
}

PermutationChain cpt_chain(const Matrix& log_p, Rng& rng, std::size_t steps) {
  const std::size_t n = log_p.rows();
  require(log_p.cols() == n, ErrorKind::InvalidInput, "cpt: log-density table must be square");
  PermutationChain chain;
  chain.perm.resize(n);
  std::iota(chain.perm.begin(), chain.perm.end(), 0);
  chain.steps = steps;
  if (n < 2) return chain;
  auto& perm = chain.perm;
  for (std::size_t t = 0; t < steps; ++t) {
    const std::size_t i = uniform_index(rng, n);
    std::size_t j = uniform_index(rng, n - 1);
    if (j >= i) ++j;
    const double log_ratio = log_p(perm[i], j) + log_p(perm[j], i) - log_p(perm[i], i) - log_p(perm[j], j);
    if (log_ratio >= 0.0 || uniform01(rng) < std::exp(log_ratio)) {
      std::swap(perm[i], perm[j]);
      ++chain.accepted;
    }
  }
  return chain;
}

Dataset cpt_resample(const Dataset& ds, const ConditionalSampler& sampler, Rng& rng, std::size_t mh_steps) {
  require(mh_steps >= 1, ErrorKind::InvalidParameter, "cpt: mh_steps must be >= 1");
  const auto chain = cpt_chain(log_density_table(ds, sampler), rng, mh_steps);
  return ds.with_x(permuted_x(ds.x, chain.perm));
}

Dataset lwb_resample(const Dataset& ds, double h0, double h2_prime, const KernelSpec& spec, Rng& rng) {
  require(h0 > 0.0, ErrorKind::Precondition, "lwb: h0 must be positive");
  require(h2_prime >= 0.0, ErrorKind::InvalidParameter, "lwb: h2_prime must be >= 0");
  if (h2_prime == 0.0) return ds.with_x(lwb_x(ds.x, h0, nullptr, rng));
  const auto centers = kernel_cumulative(ds.z, h2_prime, spec);
  return ds.with_x(lwb_x(ds.x, h0, &centers, rng));
}

Dataset dlb_resample(const Dataset& ds, double h, const KernelSpec& spec, Rng& rng) {
  require(h > 0.0, ErrorKind::Precondition, "dlb: h must be positive");
  return ds.with_x(dlb_x(ds.x, kernel_cumulative(ds.z, h, spec), rng));
}

Resampler::Resampler(const Dataset& ds, const ResamplePlan& plan, const Bandwidths& bw, const KernelSpec& spec)
    : ds_(&ds), plan_(plan) {
  plan_.validate();
  switch (plan_.method) {
    case ResampleMethod::Crt:
      require(plan_.sampler->dx() == ds.dx(), ErrorKind::InvalidModel, "crt: sampler d_X does not match the data");
      break;
    case ResampleMethod::Cpt:
      steps_ = plan_.mh_steps > 0 ? plan_.mh_steps : 50 * ds.n();
      log_p_ = log_density_table(ds, *plan_.sampler);
      break;
    case ResampleMethod::Lwb: {
      h0_ = plan_.h0.value_or(bw.h0);
      require(h0_ > 0.0, ErrorKind::Precondition, "lwb: h0 must be positive");
      const double h2p = plan_.h2_prime.value_or(bw.h2_prime);
      if (h2p > 0.0) cumulative_ = kernel_cumulative(ds.z, h2p, spec);
      break;
    }
    case ResampleMethod::Dlb: {
      const double h = plan_.dlb_h.value_or(bw.h2);
      require(h > 0.0, ErrorKind::Precondition, "dlb: h must be positive");
      cumulative_ = kernel_cumulative(ds.z, h, spec);
      break;
    }
  }
}

Matrix Resampler::draw_x(std::size_t index) const {
  Rng rng = make_rng(derive_seed(plan_.seed, {index}));
  switch (plan_.method) {
    case ResampleMethod::Crt:
      return crt_x(*ds_, *plan_.sampler, rng);
    case ResampleMethod::Cpt:
      return permuted_x(ds_->x, cpt_chain(log_p_, rng, steps_).perm);
    case ResampleMethod::Lwb:
      return lwb_x(ds_->x, h0_, cumulative_.empty() ? nullptr : &cumulative_, rng);
    case ResampleMethod::Dlb:
      return dlb_x(ds_->x, cumulative_, rng);
  }
  return ds_->x;
}

Dataset Resampler::draw(std::size_t index) const { return ds_->with_x(draw_x(index)); }

}  // namespace cbd
