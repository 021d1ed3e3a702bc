#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cbd/cbd_estimator.hpp"
#include "cbd/datagen.hpp"
#include "cbd/inference.hpp"

namespace cbd {

enum class GridAxis { N, R };

/// Which law of X given Z feeds CRT/CPT inside a power run or KS arm.
enum class SamplerChoice { True, AffineShift, UniformAbs };

std::string_view to_string(GridAxis a);
std::string_view to_string(SamplerChoice s);
SamplerChoice parse_sampler_choice(std::string_view text);  // true | affine_shift | uniform_abs

ConditionalSampler make_sampler(SamplerChoice choice, const ScenarioSpec& scenario);

struct ExperimentSpec {
  /// A registered scenario, or "marks:a" / "marks:b" (needs marks_path; n is the subsample size).
  std::string scenario = "ex4a";
  GridAxis axis = GridAxis::R;
  std::vector<double> grid{0.0};
  /// Fixed values for the axis that is not swept.
  std::size_t n = 50;
  double r = 0.0;
  ResampleMethod method = ResampleMethod::Lwb;
  SamplerChoice sampler = SamplerChoice::True;
  std::size_t mh_steps = 0;
  EstimatorConfig estimator;
  std::size_t trials = 500;
  double alpha = 0.05;
  std::size_t M = 200;
  std::uint64_t seed = 0;
  std::string marks_path;

  void validate() const;
};

struct PowerPoint {
  double grid = 0.0;
  std::size_t rejections = 0;
  std::size_t trials = 0;
  double power = 0.0;
  double se = 0.0;
};

/// Seed of one trial; any trial can be replayed from it in isolation.
std::uint64_t trial_seed(std::uint64_t master, std::string_view scenario, double grid_value, std::size_t trial);

/// Generate, test and decide once.
TestResult run_trial(const ExperimentSpec& spec, double grid_value, std::size_t trial);

std::vector<PowerPoint> run_power(const ExperimentSpec& spec, unsigned threads = 1);

void write_power_csv(std::ostream& out, const ExperimentSpec& spec, const std::vector<PowerPoint>& points);

nlohmann::json to_json(const ExperimentSpec& spec);
ExperimentSpec experiment_from_json(const nlohmann::json& j);

/// Manifest: the full spec, the version string and the per-trial seed rule.
nlohmann::json power_manifest(const ExperimentSpec& spec, const std::vector<PowerPoint>& points);

/// One arm of a KS study: how each resampled statistic's X is produced.
enum class KsArm { CrtTrue, CrtAffineShift, CrtUniformAbs, Lwb, Dlb };

std::string_view to_string(KsArm a);
KsArm parse_ks_arm(std::string_view text);

struct KsStudySpec {
  std::string scenario = "ex1";
  double r = 0.0;
  std::vector<std::size_t> n_grid{10, 50, 100};
  KsArm arm_a = KsArm::CrtTrue;
  KsArm arm_b = KsArm::CrtAffineShift;
  /// Statistics per arm in one replication.
  std::size_t per_arm = 200;
  std::size_t reps = 500;
  double alpha = 0.05;
  EstimatorConfig estimator;
  std::uint64_t seed = 0;

  void validate() const;
};

struct KsPoint {
  std::size_t n = 0;
  std::size_t rejections = 0;
  std::size_t reps = 0;
  double power = 0.0;
  double se = 0.0;
  double mean_d = 0.0;
};

/// Each replication draws one dataset, computes per_arm statistics under each
/// arm with (Y, Z) held fixed, and applies the two-sample KS test at alpha.
std::vector<KsPoint> run_ks_study(const KsStudySpec& spec, unsigned threads = 1);

void write_ks_csv(std::ostream& out, const KsStudySpec& spec, const std::vector<KsPoint>& points);

/// Library version string embedded in manifests.
std::string_view version_string();

}  // namespace cbd
