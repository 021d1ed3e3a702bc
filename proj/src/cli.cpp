#include "cbd/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "cbd/core_data.hpp"
#include "cbd/inference.hpp"
#include "cbd/parallel.hpp"

namespace cbd {

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage:
    case ErrorKind::InvalidParameter:
    case ErrorKind::InvalidScenario:
      return 2;
    case ErrorKind::InvalidInput:
    case ErrorKind::Schema:
    case ErrorKind::InsufficientSample:
      return 3;
    case ErrorKind::Precondition:
    case ErrorKind::DegenerateScale:
    case ErrorKind::InvalidModel:
      return 4;
  }
  return 4;
}

namespace {

double parse_number(const std::string& text, const std::string& flag) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::Usage, flag + ": '" + text + "' is not a number");
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, sep)) parts.push_back(part);
  return parts;
}

std::vector<std::size_t> parse_sizes(const std::string& text, const std::string& flag) {
  std::vector<std::size_t> out;
  for (const auto& p : split(text, ',')) {
    const double v = parse_number(p, flag);
    if (v < 4 || v != std::floor(v)) throw Error(ErrorKind::Usage, flag + ": sizes must be integers >= 4");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw Error(ErrorKind::Usage, flag + ": empty list");
  return out;
}

// Sampler for `test`: true | affine_shift[:r=R] | uniform_abs | gaussian:beta=B,mu=M,sigma=S
ConditionalSampler parse_sampler(const std::string& text, const CliConfig& cfg, std::size_t dx, std::size_t dz) {
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  std::map<std::string, double> params;
  if (colon != std::string::npos) {
    for (const auto& kv : split(text.substr(colon + 1), ',')) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw Error(ErrorKind::Usage, "--sampler: expected key=value, got '" + kv + "'");
      params[kv.substr(0, eq)] = parse_number(kv.substr(eq + 1), "--sampler");
    }
  }
  const auto param = [&](const std::string& key, double fallback) {
    const auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };
  if (name == "true") {
    if (cfg.scenario.empty()) throw Error(ErrorKind::Usage, "--sampler true needs --scenario");
    return true_sampler({cfg.scenario, cfg.n, cfg.r});
  }
  if (name == "affine_shift") return misspecified_sampler(Misspecification::AffineShift, param("r", cfg.r));
  if (name == "uniform_abs") return misspecified_sampler(Misspecification::UniformAbs);
  if (name == "gaussian") {
    if (dx != dz) throw Error(ErrorKind::Usage, "--sampler gaussian needs d_X = d_Z");
    Matrix beta(dx, dz);
    for (std::size_t k = 0; k < dx; ++k) beta(k, k) = param("beta", 1.0);
    return ConditionalSampler::gaussian_affine(std::move(beta), std::vector<double>(dx, param("mu", 0.0)),
                                               param("sigma", 1.0));
  }
  throw Error(ErrorKind::Usage, "--sampler: unknown sampler '" + name + "' (true|affine_shift|uniform_abs|gaussian)");
}

EstimatorConfig estimator_config(const CliConfig& cfg, std::size_t n) {
  EstimatorConfig c;
  c.kernel.normalized = cfg.normalized_kernel;
  c.weight = parse_weight_function(cfg.weight);
  if (cfg.estimator == "vstat") {
    c.kind = EstimatorKind::VStat;
  } else if (cfg.estimator == "normalized") {
    c.kind = EstimatorKind::Normalized;
  } else if (cfg.estimator == "linear") {
    c.kind = EstimatorKind::Linear;
  } else {
    c.kind = (!cfg.tuples && n <= 10) ? EstimatorKind::UStatExact : EstimatorKind::UStatIncomplete;
    if (cfg.tuples) c.ustat_tuples = *cfg.tuples;
  }
  return c;
}

nlohmann::json bandwidths_json(const Bandwidths& bw) {
  return {{"h1", bw.h1}, {"h2", bw.h2}, {"h0", bw.h0}, {"h2_prime", bw.h2_prime}, {"c1", bw.c1}, {"c2", bw.c2}};
}

template <typename Fn>
void with_output(const CliConfig& cfg, std::ostream& out, Fn&& write) {
  if (cfg.output.empty()) {
    write(out);
    return;
  }
  std::ofstream file(cfg.output, std::ios::binary);
  if (!file) throw Error(ErrorKind::Usage, "--output: cannot write '" + cfg.output + "'");
  write(file);
}

Dataset load_input(const CliConfig& cfg, std::uint64_t seed) {
  if (!cfg.input.empty()) return read_dataset_csv(cfg.input, parse_role_map(cfg.roles));
  Rng rng = make_rng(derive_seed(seed, {fnv1a("data")}));
  return gen_scenario({cfg.scenario, cfg.n, cfg.r}, rng);
}

OutputFormat format_or(const CliConfig& cfg, OutputFormat fallback) { return cfg.format.value_or(fallback); }

void add_estimator_flags(CLI::App* cmd, CliConfig& cfg) {
  cmd->add_option("--estimator", cfg.estimator, "vstat | ustat | linear | normalized")
      ->check(CLI::IsMember({"vstat", "ustat", "linear", "normalized"}));
  cmd->add_option("--weight", cfg.weight, "one | p2 | p4p4")->check(CLI::IsMember({"one", "p2", "p4p4"}));
  cmd->add_flag("--normalized-kernel", cfg.normalized_kernel, "use the density-normalized kernel for the weights");
  cmd->add_option_function<std::uint64_t>("--tuples", [&](const std::uint64_t& v) { cfg.tuples = v; },
                                          "tuples for the incomplete U-statistic");
  cmd->add_option_function<double>("--h1", [&](const double& v) { cfg.bandwidths.h1 = v; }, "(Y, Z) bandwidth");
  cmd->add_option_function<double>("--h2", [&](const double& v) { cfg.bandwidths.h2 = v; }, "Z bandwidth");
}

void add_common_flags(CLI::App* cmd, CliConfig& cfg, std::string& format) {
  cmd->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& v) { cfg.seed = v; }, "master seed");
  cmd->add_option("--output", cfg.output, "write results here instead of stdout");
  cmd->add_option("--format", format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--threads", cfg.threads, "worker threads (default: CBD_THREADS or 1)")
      ->check(CLI::Range(1u, 1024u));
}

void add_data_flags(CLI::App* cmd, CliConfig& cfg) {
  cmd->add_option("--input", cfg.input, "CSV with a header row")->check(CLI::ExistingFile);
  cmd->add_option("--roles", cfg.roles, "column roles, e.g. x=1,y=2,z=3+4");
  cmd->add_option("--scenario", cfg.scenario, "simulate instead of reading --input");
  cmd->add_option("--n", cfg.n, "sample size for --scenario");
  cmd->add_option("--r", cfg.r, "dependence strength for --scenario");
}

void add_test_flags(CLI::App* cmd, CliConfig& cfg) {
  cmd->add_option("--method", cfg.method, "crt | cpt | lwb | dlb")->check(CLI::IsMember({"crt", "cpt", "lwb", "dlb"}));
  cmd->add_option("--M", cfg.M, "resamples per test")->check(CLI::PositiveNumber);
  cmd->add_option("--mh-steps", cfg.mh_steps, "Metropolis steps per CPT draw (default 50 n)");
  cmd->add_option("--sampler", cfg.sampler, "law of X given Z for crt/cpt");
  cmd->add_option("--alpha", cfg.alpha, "nominal level");
  cmd->add_option_function<double>("--h0", [&](const double& v) { cfg.bandwidths.h0 = v; }, "LWB residual bandwidth");
  cmd->add_option_function<double>("--h2-prime", [&](const double& v) { cfg.bandwidths.h2_prime = v; },
                                    "LWB smoothing bandwidth (0 = off)");
  cmd->add_option_function<double>("--dlb-h", [&](const double& v) { cfg.dlb_h = v; }, "DLB bandwidth (default h2)");
}

void require_flag(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorKind::Usage, message);
}

void validate_common(const CliConfig& cfg) {
  require_flag(cfg.alpha > 0.0 && cfg.alpha < 1.0, "--alpha must lie in (0, 1)");
  for (const auto& [flag, v] : {std::pair{"--h1", cfg.bandwidths.h1}, std::pair{"--h2", cfg.bandwidths.h2},
                                std::pair{"--h0", cfg.bandwidths.h0}, std::pair{"--dlb-h", cfg.dlb_h}}) {
    require_flag(!v || (*v > 0.0 && std::isfinite(*v)), std::string(flag) + " must be positive");
  }
  require_flag(!cfg.bandwidths.h2_prime || *cfg.bandwidths.h2_prime >= 0.0, "--h2-prime must be >= 0");
  require_flag(cfg.weight == "one" || cfg.estimator == "vstat", "--weight applies to --estimator vstat only");
  require_flag(!cfg.tuples || cfg.estimator == "ustat", "--tuples applies to --estimator ustat only");
  require_flag(!cfg.tuples || *cfg.tuples >= 1, "--tuples must be >= 1");
}

void validate_data_source(const CliConfig& cfg) {
  const bool file = !cfg.input.empty();
  const bool sim = !cfg.scenario.empty();
  require_flag(file != sim, "give exactly one of --input or --scenario");
  if (file) {
    require_flag(!cfg.roles.empty(), "--input needs --roles");
    parse_role_map(cfg.roles);
  } else {
    canonical_scenario(cfg.scenario);
    require_flag(cfg.n >= 4, "--n must be >= 4");
  }
}

ExperimentSpec experiment_spec(const CliConfig& cfg) {
  ExperimentSpec spec;
  spec.scenario = cfg.scenario;
  const auto [axis, grid] = parse_grid(cfg.grid);
  spec.axis = axis;
  spec.grid = grid;
  spec.n = cfg.n;
  spec.r = cfg.r;
  spec.method = parse_resample_method(cfg.method);
  if (!cfg.sampler.empty()) spec.sampler = parse_sampler_choice(cfg.sampler);
  spec.mh_steps = cfg.mh_steps;
  spec.estimator = estimator_config(cfg, axis == GridAxis::N ? static_cast<std::size_t>(grid.front()) : cfg.n);
  spec.trials = cfg.T;
  spec.alpha = cfg.alpha;
  spec.M = cfg.M;
  spec.seed = cfg.seed.value_or(0);
  return spec;
}

}  // namespace

std::pair<GridAxis, std::vector<double>> parse_grid(const std::string& text) {
  const auto eq = text.find('=');
  require_flag(eq != std::string::npos, "--grid: expected r=... or n=..., got '" + text + "'");
  const std::string axis_name = text.substr(0, eq);
  require_flag(axis_name == "r" || axis_name == "n", "--grid: axis must be r or n");
  const GridAxis axis = axis_name == "n" ? GridAxis::N : GridAxis::R;
  const std::string body = text.substr(eq + 1);
  std::vector<double> values;
  if (body.find(':') != std::string::npos) {
    const auto parts = split(body, ':');
    require_flag(parts.size() == 3, "--grid: range form is start:stop:step");
    const double start = parse_number(parts[0], "--grid");
    const double stop = parse_number(parts[1], "--grid");
    const double step = parse_number(parts[2], "--grid");
    require_flag(step > 0.0 && stop >= start, "--grid: need step > 0 and stop >= start");
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    require_flag(count <= 100000, "--grid: too many points");
    for (std::size_t k = 0; k < count; ++k) {
      // Snap to the step lattice so 0.1-style steps print cleanly.
      values.push_back(std::round((start + static_cast<double>(k) * step) * 1e9) / 1e9);
    }
  } else {
    for (const auto& p : split(body, ',')) values.push_back(parse_number(p, "--grid"));
  }
  require_flag(!values.empty(), "--grid: no values");
  return {axis, values};
}

CliConfig parse_and_validate(const std::vector<std::string>& argv) {
  CliConfig cfg;
  cfg.threads = threads_from_env();
  std::string format;

  CLI::App app{"Conditional ball divergence estimation and conditional independence tests", "cbd"};
  app.require_subcommand(1, 1);

  auto* estimate = app.add_subcommand("estimate", "estimate cBD on a dataset");
  add_data_flags(estimate, cfg);
  add_estimator_flags(estimate, cfg);
  add_common_flags(estimate, cfg, format);

  auto* test = app.add_subcommand("test", "resampling test of X independent of Y given Z");
  add_data_flags(test, cfg);
  add_estimator_flags(test, cfg);
  add_test_flags(test, cfg);
  add_common_flags(test, cfg, format);

  auto* power = app.add_subcommand("power", "empirical power over a grid of n or r");
  power->add_option("--scenario", cfg.scenario, "scenario id");
  power->add_option("--grid", cfg.grid, "r=-2:2:0.5 or n=10,50,100");
  power->add_option("--n", cfg.n, "sample size when sweeping r");
  power->add_option("--r", cfg.r, "dependence strength when sweeping n");
  power->add_option("--T", cfg.T, "trials per grid value")->check(CLI::PositiveNumber);
  power->add_option("--manifest", cfg.manifest, "write a replay manifest here");
  power->add_option("--from-manifest", cfg.from_manifest, "replay a manifest")->check(CLI::ExistingFile);
  add_estimator_flags(power, cfg);
  add_test_flags(power, cfg);
  add_common_flags(power, cfg, format);

  auto* ks = app.add_subcommand("ks-check", "KS comparison of two resampled-statistic distributions");
  ks->add_option("--scenario", cfg.scenario, "scenario id");
  ks->add_option("--r", cfg.r, "dependence strength");
  ks->add_option("--n-grid", cfg.n_grid, "sample sizes, e.g. 10,50,100");
  ks->add_option("--arms", cfg.arms, "two arms, e.g. crt_true,lwb");
  ks->add_option("--per-arm", cfg.per_arm, "statistics per arm")->check(CLI::PositiveNumber);
  ks->add_option("--reps", cfg.reps, "KS replications")->check(CLI::PositiveNumber);
  ks->add_option("--alpha", cfg.alpha, "KS level");
  add_estimator_flags(ks, cfg);
  add_common_flags(ks, cfg, format);

  auto* marks = app.add_subcommand("marks", "tests on the marks data");
  marks->add_option("--input", cfg.input, "marks CSV")->check(CLI::ExistingFile);
  marks->add_option("--which", cfg.which, "a: S vs An | (M,V,Al); b: M vs V | (S,An,Al)")
      ->check(CLI::IsMember({"a", "b"}));
  marks->add_option("--sizes", cfg.sizes, "subsample sizes for a power curve, e.g. 20,40,80");
  marks->add_option("--T", cfg.T, "subsamples per size")->check(CLI::PositiveNumber);
  add_estimator_flags(marks, cfg);
  add_test_flags(marks, cfg);
  add_common_flags(marks, cfg, format);

  std::vector<const char*> raw;
  raw.reserve(argv.size());
  for (const auto& a : argv) raw.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(raw.size()), raw.data());
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested{app.help()};
  } catch (const CLI::ParseError& e) {
    throw Error(ErrorKind::Usage, e.what());
  }

  for (auto* sub : app.get_subcommands()) cfg.subcommand = sub->get_name();
  if (format == "json") cfg.format = OutputFormat::Json;
  if (format == "csv") cfg.format = OutputFormat::Csv;

  validate_common(cfg);
  const ResampleMethod method = parse_resample_method(cfg.method);
  const bool needs_sampler = method == ResampleMethod::Crt || method == ResampleMethod::Cpt;
  if (cfg.subcommand == "estimate") {
    validate_data_source(cfg);
  } else if (cfg.subcommand == "test") {
    validate_data_source(cfg);
    require_flag(!needs_sampler || !cfg.sampler.empty(), "--method " + cfg.method + " requires --sampler");
    if (!cfg.sampler.empty()) {
      const bool scenario_sampler = cfg.sampler == "true";
      require_flag(!scenario_sampler || !cfg.scenario.empty(), "--sampler true needs --scenario");
    }
  } else if (cfg.subcommand == "power") {
    if (cfg.from_manifest.empty()) {
      require_flag(!cfg.scenario.empty(), "power needs --scenario");
      require_flag(!cfg.grid.empty(), "power needs --grid");
      require_flag(!needs_sampler || !cfg.sampler.empty(), "--method " + cfg.method + " requires --sampler");
      experiment_spec(cfg).validate();
    }
  } else if (cfg.subcommand == "ks-check") {
    require_flag(!cfg.scenario.empty(), "ks-check needs --scenario");
    const auto arms = split(cfg.arms, ',');
    require_flag(arms.size() == 2, "--arms takes exactly two arms");
    KsStudySpec spec;
    spec.scenario = cfg.scenario;
    spec.r = cfg.r;
    spec.n_grid = parse_sizes(cfg.n_grid, "--n-grid");
    spec.arm_a = parse_ks_arm(arms[0]);
    spec.arm_b = parse_ks_arm(arms[1]);
    spec.validate();
  } else if (cfg.subcommand == "marks") {
    require_flag(!cfg.input.empty(), "marks needs --input");
    require_flag(!needs_sampler, "marks data have no known law of X given Z; use --method lwb or dlb");
    if (!cfg.sizes.empty()) parse_sizes(cfg.sizes, "--sizes");
  }
  return cfg;
}

namespace {

std::uint64_t resolve_seed(CliConfig& cfg, std::ostream& err) {
  if (!cfg.seed) {
    std::random_device rd;
    cfg.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    err << "cbd: no --seed given; using --seed " << *cfg.seed << '\n';
  }
  return *cfg.seed;
}

nlohmann::json test_json(const TestResult& t) {
  return {
      {"method", to_string(t.method)},
      {"estimator", to_string(t.estimator.kind)},
      {"weight", to_string(t.estimator.weight)},
      {"M", t.M},
      {"alpha", t.alpha},
      {"seed", t.seed},
      {"statistic", t.statistic},
      {"p_value", t.p_value},
      {"reject", t.reject},
      {"resampled", t.resampled},
      {"bandwidths", bandwidths_json(t.bandwidths)},
  };
}

void write_test(std::ostream& os, const TestResult& t, OutputFormat format) {
  if (format == OutputFormat::Json) {
    os << test_json(t).dump(2) << '\n';
    return;
  }
  os << "method,estimator,weight,M,alpha,seed,statistic,p_value,reject\n";
  std::ostringstream row;
  row.precision(17);
  row << to_string(t.method) << ',' << to_string(t.estimator.kind) << ',' << to_string(t.estimator.weight) << ','
      << t.M << ',' << t.alpha << ',' << t.seed << ',' << t.statistic << ',' << t.p_value << ','
      << (t.reject ? "true" : "false");
  os << row.str() << '\n';
}

int cmd_estimate(CliConfig& cfg, std::ostream& out, std::ostream& err) {
  const std::uint64_t seed = resolve_seed(cfg, err);
  const Dataset ds = load_input(cfg, seed);
  const Bandwidths bw = resolve_bandwidths(ds, cfg.bandwidths);
  const EstimatorConfig ec = estimator_config(cfg, ds.n());
  const auto start = std::chrono::steady_clock::now();
  CbdStatistic stat;
  switch (ec.kind) {
    case EstimatorKind::VStat:
      stat = cbd_vstat(ds, bw, ec.kernel, ec.weight);
      break;
    case EstimatorKind::Normalized:
      stat.value = normalized_cbd(ds, bw, ec.kernel);
      stat.kind = EstimatorKind::Normalized;
      break;
    case EstimatorKind::Linear:
      stat = cbd_linear(ds, bw, ec.kernel);
      break;
    case EstimatorKind::UStatExact:
      stat = cbd_ustat(ds, bw, ec.kernel, UStatMode::Exact());
      break;
    case EstimatorKind::UStatIncomplete:
      stat = cbd_ustat(ds, bw, ec.kernel, UStatMode::Incomplete(ec.ustat_tuples, derive_seed(seed, {fnv1a("ustat")})));
      break;
  }
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  nlohmann::json j{
      {"value", stat.value},
      {"estimator", to_string(ec.kind)},
      {"weight", to_string(ec.kind == EstimatorKind::VStat ? ec.weight
                           : ec.kind == EstimatorKind::Normalized ? WeightFunction::One
                                                                  : WeightFunction::Product44)},
      {"bandwidths", bandwidths_json(bw)},
      {"n", ds.n()},
      {"seed", seed},
      {"runtime_ms", ms},
  };
  if (ec.kind == EstimatorKind::UStatIncomplete) j["std_error"] = stat.std_error;
  if (stat.tuples > 0) j["tuples"] = stat.tuples;
  with_output(cfg, out, [&](std::ostream& os) {
    if (format_or(cfg, OutputFormat::Json) == OutputFormat::Json) {
      os << j.dump(2) << '\n';
    } else {
      os << "value,estimator,weight,n,seed,h1,h2\n";
      os << j["value"].dump() << ',' << j["estimator"].get<std::string>() << ',' << j["weight"].get<std::string>()
         << ',' << ds.n() << ',' << seed << ',' << bw.h1 << ',' << bw.h2 << '\n';
    }
  });
  return 0;
}

ResamplePlan plan_from(const CliConfig& cfg, const Dataset& ds, std::uint64_t seed) {
  ResamplePlan plan;
  plan.method = parse_resample_method(cfg.method);
  plan.M = cfg.M;
  plan.seed = derive_seed(seed, {fnv1a("resample")});
  plan.mh_steps = cfg.mh_steps;
  plan.h0 = cfg.bandwidths.h0;
  plan.h2_prime = cfg.bandwidths.h2_prime;
  plan.dlb_h = cfg.dlb_h;
  if (!cfg.sampler.empty()) plan.sampler = parse_sampler(cfg.sampler, cfg, ds.dx(), ds.dz());
  return plan;
}

int cmd_test(CliConfig& cfg, std::ostream& out, std::ostream& err) {
  const std::uint64_t seed = resolve_seed(cfg, err);
  const Dataset ds = load_input(cfg, seed);
  const Bandwidths bw = resolve_bandwidths(ds, cfg.bandwidths);
  const ResamplePlan plan = plan_from(cfg, ds, seed);
  TestResult t = run_test(ds, plan, estimator_config(cfg, ds.n()), cfg.alpha, bw, cfg.threads);
  t.seed = seed;
  with_output(cfg, out, [&](std::ostream& os) { write_test(os, t, format_or(cfg, OutputFormat::Json)); });
  return 0;
}

int run_experiment(const ExperimentSpec& spec, const CliConfig& cfg, std::ostream& out) {
  const auto points = run_power(spec, cfg.threads);
  if (!cfg.manifest.empty()) {
    std::ofstream m(cfg.manifest, std::ios::binary);
    if (!m) throw Error(ErrorKind::Usage, "--manifest: cannot write '" + cfg.manifest + "'");
    m << power_manifest(spec, points).dump(2) << '\n';
  }
  with_output(cfg, out, [&](std::ostream& os) {
    if (format_or(cfg, OutputFormat::Csv) == OutputFormat::Csv) {
      write_power_csv(os, spec, points);
    } else {
      os << power_manifest(spec, points).dump(2) << '\n';
    }
  });
  return 0;
}

int cmd_power(CliConfig& cfg, std::ostream& out, std::ostream& err) {
  ExperimentSpec spec;
  if (!cfg.from_manifest.empty()) {
    std::ifstream in(cfg.from_manifest);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Schema, std::string("--from-manifest: ") + e.what());
    }
    spec = experiment_from_json(j.contains("spec") ? j.at("spec") : j);
  } else {
    spec = experiment_spec(cfg);
    spec.seed = resolve_seed(cfg, err);
  }
  spec.validate();
  return run_experiment(spec, cfg, out);
}

int cmd_ks(CliConfig& cfg, std::ostream& out, std::ostream& err) {
  KsStudySpec spec;
  spec.scenario = cfg.scenario;
  spec.r = cfg.r;
  spec.n_grid = parse_sizes(cfg.n_grid, "--n-grid");
  const auto arms = split(cfg.arms, ',');
  spec.arm_a = parse_ks_arm(arms[0]);
  spec.arm_b = parse_ks_arm(arms[1]);
  spec.per_arm = cfg.per_arm;
  spec.reps = cfg.reps;
  spec.alpha = cfg.alpha;
  spec.estimator = estimator_config(cfg, spec.n_grid.front());
  spec.seed = resolve_seed(cfg, err);
  const auto points = run_ks_study(spec, cfg.threads);
  with_output(cfg, out, [&](std::ostream& os) {
    if (format_or(cfg, OutputFormat::Csv) == OutputFormat::Csv) {
      write_ks_csv(os, spec, points);
      return;
    }
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& p : points) {
      rows.push_back({{"n", p.n}, {"power", p.power}, {"se", p.se}, {"rejections", p.rejections},
                      {"reps", p.reps}, {"mean_d", p.mean_d}});
    }
    os << nlohmann::json{{"scenario", spec.scenario}, {"r", spec.r}, {"arm_a", to_string(spec.arm_a)},
                         {"arm_b", to_string(spec.arm_b)}, {"per_arm", spec.per_arm}, {"seed", spec.seed},
                         {"results", rows}}
              .dump(2)
       << '\n';
  });
  return 0;
}

int cmd_marks(CliConfig& cfg, std::ostream& out, std::ostream& err) {
  const std::uint64_t seed = resolve_seed(cfg, err);
  const MarksTable table = load_marks(cfg.input);
  if (cfg.sizes.empty()) {
    const Dataset ds = marks_dataset(table, cfg.which[0]);
    const Bandwidths bw = resolve_bandwidths(ds, cfg.bandwidths);
    TestResult t = run_test(ds, plan_from(cfg, ds, seed), estimator_config(cfg, ds.n()), cfg.alpha, bw, cfg.threads);
    t.seed = seed;
    with_output(cfg, out, [&](std::ostream& os) { write_test(os, t, format_or(cfg, OutputFormat::Json)); });
    return 0;
  }
  ExperimentSpec spec;
  spec.scenario = "marks:" + cfg.which;
  spec.marks_path = cfg.input;
  spec.axis = GridAxis::N;
  spec.grid.clear();
  for (const auto m : parse_sizes(cfg.sizes, "--sizes")) spec.grid.push_back(static_cast<double>(m));
  spec.method = parse_resample_method(cfg.method);
  spec.mh_steps = cfg.mh_steps;
  spec.estimator = estimator_config(cfg, static_cast<std::size_t>(spec.grid.front()));
  spec.trials = cfg.T;
  spec.alpha = cfg.alpha;
  spec.M = cfg.M;
  spec.seed = seed;
  spec.validate();
  return run_experiment(spec, cfg, out);
}

void write_error(std::ostream& err, ErrorKind kind, const std::string& message) {
  err << nlohmann::json{{"error", {{"kind", to_string(kind)}, {"message", message}}},
                        {"exit_code", exit_code_for(kind)}}
             .dump()
      << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  try {
    CliConfig cfg = parse_and_validate(argv);
    if (cfg.subcommand == "estimate") return cmd_estimate(cfg, out, err);
    if (cfg.subcommand == "test") return cmd_test(cfg, out, err);
    if (cfg.subcommand == "power") return cmd_power(cfg, out, err);
    if (cfg.subcommand == "ks-check") return cmd_ks(cfg, out, err);
    return cmd_marks(cfg, out, err);
  } catch (const HelpRequested& h) {
    out << h.text;
    return 0;
  } catch (const Error& e) {
    write_error(err, e.kind(), e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    write_error(err, ErrorKind::InvalidInput, e.what());
    return 3;
  }
}

}  // namespace cbd
