#include "cbd/harness.hpp"

#include <bit>
#include <cmath>
#include <ostream>

#include "cbd/error.hpp"
#include "cbd/parallel.hpp"

namespace cbd {

std::string_view version_string() { return "cbd-0.1.0"; }

std::string_view to_string(GridAxis a) { return a == GridAxis::N ? "n" : "r"; }

std::string_view to_string(SamplerChoice s) {
  switch (s) {
    case SamplerChoice::True: return "true";
    case SamplerChoice::AffineShift: return "affine_shift";
    case SamplerChoice::UniformAbs: return "uniform_abs";
  }
  return "true";
}

SamplerChoice parse_sampler_choice(std::string_view text) {
  if (text == "true") return SamplerChoice::True;
  if (text == "affine_shift") return SamplerChoice::AffineShift;
  if (text == "uniform_abs") return SamplerChoice::UniformAbs;
  throw Error(ErrorKind::Usage, "unknown sampler '" + std::string(text) + "' (true|affine_shift|uniform_abs)");
}

ConditionalSampler make_sampler(SamplerChoice choice, const ScenarioSpec& scenario) {
  switch (choice) {
    case SamplerChoice::True: return true_sampler(scenario);
    case SamplerChoice::AffineShift: return misspecified_sampler(Misspecification::AffineShift, scenario.r);
    case SamplerChoice::UniformAbs: return misspecified_sampler(Misspecification::UniformAbs);
  }
  return true_sampler(scenario);
}

namespace {

bool is_marks(const std::string& scenario) { return scenario == "marks:a" || scenario == "marks:b"; }

ScenarioSpec scenario_at(const ExperimentSpec& spec, double grid_value) {
  ScenarioSpec s{spec.scenario, spec.n, spec.r};
  if (spec.axis == GridAxis::N) {
    s.n = static_cast<std::size_t>(std::llround(grid_value));
  } else {
    s.r = grid_value;
  }
  return s;
}

double binomial_se(double p, std::size_t t) { return std::sqrt(p * (1.0 - p) / static_cast<double>(t)); }

}  // namespace

void ExperimentSpec::validate() const {
  require(trials >= 1, ErrorKind::InvalidParameter, "experiment: trials must be >= 1");
  require(M >= 1, ErrorKind::InvalidParameter, "experiment: M must be >= 1");
  require(alpha > 0.0 && alpha < 1.0, ErrorKind::InvalidParameter, "experiment: alpha must lie in (0, 1)");
  require(!grid.empty(), ErrorKind::InvalidParameter, "experiment: empty grid");
  if (is_marks(scenario)) {
    require(axis == GridAxis::N, ErrorKind::InvalidParameter, "marks experiments sweep the subsample size n");
    require(!marks_path.empty(), ErrorKind::Usage, "marks experiments need a marks CSV path");
    require(method != ResampleMethod::Crt && method != ResampleMethod::Cpt, ErrorKind::InvalidParameter,
            "marks data have no known law of X given Z; use lwb or dlb");
  } else {
    canonical_scenario(scenario);
  }
  for (const double g : grid) {
    require(std::isfinite(g), ErrorKind::InvalidParameter, "experiment: non-finite grid value");
    if (axis == GridAxis::N) require(g >= 4.0, ErrorKind::InvalidParameter, "experiment: n grid values must be >= 4");
  }
  if (axis == GridAxis::R) require(n >= 4, ErrorKind::InvalidParameter, "experiment: n must be >= 4");
  if (method == ResampleMethod::Crt || method == ResampleMethod::Cpt) {
    make_sampler(sampler, scenario_at(*this, grid.front()));
  }
}

std::uint64_t trial_seed(std::uint64_t master, std::string_view scenario, double grid_value, std::size_t trial) {
  return derive_seed(master, {fnv1a(scenario), std::bit_cast<std::uint64_t>(grid_value), trial});
}

namespace {

TestResult trial_with_source(const ExperimentSpec& spec, const Dataset* source, double grid_value, std::size_t trial) {
  const std::uint64_t seed = trial_seed(spec.seed, spec.scenario, grid_value, trial);
  Rng rng = make_rng(seed);
  const ScenarioSpec scenario = scenario_at(spec, grid_value);
  const Dataset ds = source ? subsample(*source, scenario.n, rng) : gen_scenario(scenario, rng);
  ResamplePlan plan;
  plan.method = spec.method;
  plan.M = spec.M;
  plan.seed = derive_seed(seed, {fnv1a("resample")});
  plan.mh_steps = spec.mh_steps;
  if (spec.method == ResampleMethod::Crt || spec.method == ResampleMethod::Cpt) {
    plan.sampler = make_sampler(spec.sampler, scenario);
  }
  try {
    return run_test(ds, plan, spec.estimator, spec.alpha, 1);
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(e.what()) + " (trial " + std::to_string(trial) + ", grid " +
                              std::to_string(grid_value) + ", trial seed " + std::to_string(seed) + ")");
  }
}

std::optional<Dataset> marks_source(const ExperimentSpec& spec) {
  if (!is_marks(spec.scenario)) return std::nullopt;
  return marks_dataset(load_marks(spec.marks_path), spec.scenario.back());
}

}  // namespace

TestResult run_trial(const ExperimentSpec& spec, double grid_value, std::size_t trial) {
  spec.validate();
  const auto source = marks_source(spec);
  return trial_with_source(spec, source ? &*source : nullptr, grid_value, trial);
}

std::vector<PowerPoint> run_power(const ExperimentSpec& spec, unsigned threads) {
  spec.validate();
  const auto source = marks_source(spec);
  std::vector<PowerPoint> out;
  for (const double g : spec.grid) {
    std::vector<char> rejected(spec.trials, 0);
    parallel_for(spec.trials, threads, [&](std::size_t t) {
      rejected[t] = trial_with_source(spec, source ? &*source : nullptr, g, t).reject ? 1 : 0;
    });
    PowerPoint p;
    p.grid = g;
    p.trials = spec.trials;
    for (const char c : rejected) p.rejections += static_cast<std::size_t>(c);
    p.power = static_cast<double>(p.rejections) / static_cast<double>(p.trials);
    p.se = binomial_se(p.power, p.trials);
    out.push_back(p);
  }
  return out;
}

void write_power_csv(std::ostream& out, const ExperimentSpec& spec, const std::vector<PowerPoint>& points) {
  out << "scenario," << to_string(spec.axis) << ",power,se,rejections,T,M,alpha\n";
  for (const auto& p : points) {
    out << spec.scenario << ',' << p.grid << ',' << p.power << ',' << p.se << ',' << p.rejections << ',' << p.trials
        << ',' << spec.M << ',' << spec.alpha << '\n';
  }
}

nlohmann::json to_json(const ExperimentSpec& spec) {
  return {
      {"scenario", spec.scenario},
      {"axis", to_string(spec.axis)},
      {"grid", spec.grid},
      {"n", spec.n},
      {"r", spec.r},
      {"method", to_string(spec.method)},
      {"sampler", to_string(spec.sampler)},
      {"mh_steps", spec.mh_steps},
      {"estimator", to_string(spec.estimator.kind)},
      {"weight", to_string(spec.estimator.weight)},
      {"normalized_kernel", spec.estimator.kernel.normalized},
      {"ustat_tuples", spec.estimator.ustat_tuples},
      {"trials", spec.trials},
      {"alpha", spec.alpha},
      {"M", spec.M},
      {"seed", spec.seed},
      {"marks_path", spec.marks_path},
  };
}

namespace {

EstimatorKind parse_estimator_kind(const std::string& text) {
  for (const auto k : {EstimatorKind::VStat, EstimatorKind::UStatExact, EstimatorKind::UStatIncomplete,
                       EstimatorKind::Linear, EstimatorKind::Normalized}) {
    if (to_string(k) == text) return k;
  }
  throw Error(ErrorKind::Schema, "unknown estimator '" + text + "'");
}

}  // namespace

ExperimentSpec experiment_from_json(const nlohmann::json& j) {
  try {
    ExperimentSpec s;
    s.scenario = j.at("scenario").get<std::string>();
    s.axis = j.at("axis").get<std::string>() == "n" ? GridAxis::N : GridAxis::R;
    s.grid = j.at("grid").get<std::vector<double>>();
    s.n = j.at("n").get<std::size_t>();
    s.r = j.at("r").get<double>();
    s.method = parse_resample_method(j.at("method").get<std::string>());
    s.sampler = parse_sampler_choice(j.at("sampler").get<std::string>());
    s.mh_steps = j.at("mh_steps").get<std::size_t>();
    s.estimator.kind = parse_estimator_kind(j.at("estimator").get<std::string>());
    s.estimator.weight = parse_weight_function(j.at("weight").get<std::string>());
    s.estimator.kernel.normalized = j.at("normalized_kernel").get<bool>();
    s.estimator.ustat_tuples = j.at("ustat_tuples").get<std::uint64_t>();
    s.trials = j.at("trials").get<std::size_t>();
    s.alpha = j.at("alpha").get<double>();
    s.M = j.at("M").get<std::size_t>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.marks_path = j.value("marks_path", std::string());
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("manifest: ") + e.what());
  }
}

nlohmann::json power_manifest(const ExperimentSpec& spec, const std::vector<PowerPoint>& points) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& p : points) {
    rows.push_back({{"grid", p.grid}, {"power", p.power}, {"se", p.se}, {"rejections", p.rejections}, {"T", p.trials}});
  }
  return {
      {"version", version_string()},
      {"spec", to_json(spec)},
      {"trial_seed", "derive_seed(seed, {fnv1a(scenario), bits(grid value), trial})"},
      {"results", rows},
  };
}

std::string_view to_string(KsArm a) {
  switch (a) {
    case KsArm::CrtTrue: return "crt_true";
    case KsArm::CrtAffineShift: return "crt_affine_shift";
    case KsArm::CrtUniformAbs: return "crt_uniform_abs";
    case KsArm::Lwb: return "lwb";
    case KsArm::Dlb: return "dlb";
  }
  return "crt_true";
}

KsArm parse_ks_arm(std::string_view text) {
  for (const auto a : {KsArm::CrtTrue, KsArm::CrtAffineShift, KsArm::CrtUniformAbs, KsArm::Lwb, KsArm::Dlb}) {
    if (to_string(a) == text) return a;
  }
  throw Error(ErrorKind::Usage,
              "unknown KS arm '" + std::string(text) + "' (crt_true|crt_affine_shift|crt_uniform_abs|lwb|dlb)");
}

void KsStudySpec::validate() const {
  canonical_scenario(scenario);
  require(!n_grid.empty(), ErrorKind::InvalidParameter, "ks study: empty n grid");
  for (const auto n : n_grid) require(n >= 4, ErrorKind::InvalidParameter, "ks study: n must be >= 4");
  require(per_arm >= 1 && reps >= 1, ErrorKind::InvalidParameter, "ks study: per_arm and reps must be >= 1");
  require(alpha > 0.0 && alpha < 1.0, ErrorKind::InvalidParameter, "ks study: alpha must lie in (0, 1)");
  for (const auto arm : {arm_a, arm_b}) {
    if (arm == KsArm::CrtTrue) true_sampler({scenario, n_grid.front(), r});
    if (arm == KsArm::CrtAffineShift) misspecified_sampler(Misspecification::AffineShift, r);
  }
}

namespace {

ResamplePlan arm_plan(KsArm arm, const ScenarioSpec& scenario, std::size_t count, std::uint64_t seed) {
  ResamplePlan plan;
  plan.M = count;
  plan.seed = seed;
  switch (arm) {
    case KsArm::CrtTrue:
      plan.method = ResampleMethod::Crt;
      plan.sampler = true_sampler(scenario);
      break;
    case KsArm::CrtAffineShift:
      plan.method = ResampleMethod::Crt;
      plan.sampler = misspecified_sampler(Misspecification::AffineShift, scenario.r);
      break;
    case KsArm::CrtUniformAbs:
      plan.method = ResampleMethod::Crt;
      plan.sampler = misspecified_sampler(Misspecification::UniformAbs);
      break;
    case KsArm::Lwb: plan.method = ResampleMethod::Lwb; break;
    case KsArm::Dlb: plan.method = ResampleMethod::Dlb; break;
  }
  return plan;
}

double arm_d(const KsStudySpec& spec, std::size_t n, std::size_t rep, bool& rejected) {
  const std::uint64_t seed = derive_seed(spec.seed, {fnv1a(spec.scenario), std::bit_cast<std::uint64_t>(spec.r), n, rep});
  Rng rng = make_rng(seed);
  const ScenarioSpec scenario{spec.scenario, n, spec.r};
  const Dataset ds = gen_scenario(scenario, rng);
  const Bandwidths bw = default_bandwidths(ds);
  const StatisticEvaluator evaluate(ds, bw, spec.estimator);
  std::vector<double> stats[2];
  const KsArm arms[2] = {spec.arm_a, spec.arm_b};
  for (int a = 0; a < 2; ++a) {
    const std::uint64_t arm_seed = derive_seed(seed, {static_cast<std::uint64_t>(a) + 1});
    const ResamplePlan plan = arm_plan(arms[a], scenario, spec.per_arm, arm_seed);
    const Resampler resampler(ds, plan, bw, spec.estimator.kernel);
    stats[a].resize(spec.per_arm);
    for (std::size_t j = 0; j < spec.per_arm; ++j) stats[a][j] = evaluate(resampler.draw_x(j), derive_seed(arm_seed, {j}));
  }
  const KsResult ks = ks_two_sample(stats[0], stats[1]);
  rejected = ks.p_value < spec.alpha;
  return ks.d_statistic;
}

}  // namespace

std::vector<KsPoint> run_ks_study(const KsStudySpec& spec, unsigned threads) {
  spec.validate();
  std::vector<KsPoint> out;
  for (const auto n : spec.n_grid) {
    std::vector<char> rejected(spec.reps, 0);
    std::vector<double> d(spec.reps, 0.0);
    parallel_for(spec.reps, threads, [&](std::size_t rep) {
      bool rej = false;
      d[rep] = arm_d(spec, n, rep, rej);
      rejected[rep] = rej ? 1 : 0;
    });
    KsPoint p;
    p.n = n;
    p.reps = spec.reps;
    for (std::size_t i = 0; i < spec.reps; ++i) {
      p.rejections += static_cast<std::size_t>(rejected[i]);
      p.mean_d += d[i];
    }
    p.mean_d /= static_cast<double>(spec.reps);
    p.power = static_cast<double>(p.rejections) / static_cast<double>(p.reps);
    p.se = binomial_se(p.power, p.reps);
    out.push_back(p);
  }
  return out;
}

void write_ks_csv(std::ostream& out, const KsStudySpec& spec, const std::vector<KsPoint>& points) {
  out << "scenario,r,arm_a,arm_b,n,power,se,rejections,reps,per_arm,mean_d\n";
  for (const auto& p : points) {
    out << spec.scenario << ',' << spec.r << ',' << to_string(spec.arm_a) << ',' << to_string(spec.arm_b) << ','
        << p.n << ',' << p.power << ',' << p.se << ',' << p.rejections << ',' << p.reps << ',' << spec.per_arm << ','
        << p.mean_d << '\n';
  }
}

}  // namespace cbd
