#include <doctest.h>

#include <set>
#include <sstream>

#include "cbd/error.hpp"
#include "cbd/harness.hpp"
#include "test_support.hpp"

using namespace cbd;
using namespace cbd::testing;

namespace {

ExperimentSpec small_spec() {
  ExperimentSpec spec;
  spec.scenario = "ex4a";
  spec.axis = GridAxis::R;
  spec.grid = {0.0, 2.0};
  spec.n = 50;
  spec.trials = 6;
  spec.M = 39;
  spec.seed = 123;
  return spec;
}

}  // namespace

TEST_CASE("names") {
  CHECK(parse_sampler_choice("affine_shift") == SamplerChoice::AffineShift);
  CHECK(to_string(SamplerChoice::UniformAbs) == "uniform_abs");
  CHECK_THROWS_AS(parse_sampler_choice("maybe"), Error);
  CHECK(parse_ks_arm("crt_true") == KsArm::CrtTrue);
  CHECK(to_string(KsArm::Dlb) == "dlb");
  CHECK(to_string(GridAxis::N) == "n");
  CHECK_FALSE(version_string().empty());
}

TEST_CASE("trial seeds are distinct") {
  std::set<std::uint64_t> seen;
  for (const double g : {-1.0, 0.0, 0.5, 1.0})
    for (std::size_t t = 0; t < 100; ++t) seen.insert(trial_seed(7, "ex4a", g, t));
  CHECK(seen.size() == 400);
  CHECK(trial_seed(7, "ex4a", 0.0, 3) != trial_seed(8, "ex4a", 0.0, 3));
  CHECK(trial_seed(7, "ex4a", 0.0, 3) != trial_seed(7, "ex4b", 0.0, 3));
}

TEST_CASE("experiment validation") {
  ExperimentSpec spec = small_spec();
  CHECK_NOTHROW(spec.validate());
  spec.trials = 0;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = small_spec();
  spec.scenario = "ex42";
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = small_spec();
  spec.scenario = "ex5:circle";
  spec.method = ResampleMethod::Crt;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = small_spec();
  spec.grid.clear();
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = small_spec();
  spec.scenario = "marks:a";
  CHECK_THROWS_AS(spec.validate(), Error);
}

TEST_CASE("power runs") {
  const ExperimentSpec spec = small_spec();
  const auto points = run_power(spec);
  REQUIRE(points.size() == 2);
  for (const auto& p : points) {
    CHECK(p.trials == 6);
    CHECK(p.power == doctest::Approx(p.rejections / 6.0));
    CHECK(p.se == doctest::Approx(std::sqrt(p.power * (1 - p.power) / 6.0)));
  }
  CHECK(points[1].grid == 2.0);
  CHECK(points[1].rejections == 6);

  SUBCASE("each trial replays in isolation") {
    for (std::size_t g = 0; g < 2; ++g) {
      std::size_t count = 0;
      for (std::size_t t = 0; t < 6; ++t)
        if (run_trial(spec, spec.grid[g], t).reject) ++count;
      CHECK(count == points[g].rejections);
    }
  }
  SUBCASE("thread count does not change results") {
    const auto threaded = run_power(spec, 3);
    for (std::size_t g = 0; g < 2; ++g) CHECK(threaded[g].rejections == points[g].rejections);
  }
  SUBCASE("single trial") {
    ExperimentSpec one = spec;
    one.trials = 1;
    for (const auto& p : run_power(one)) {
      CHECK((p.power == 0.0 || p.power == 1.0));
      CHECK(p.se == 0.0);
    }
  }
  SUBCASE("sample-size axis") {
    ExperimentSpec by_n = spec;
    by_n.axis = GridAxis::N;
    by_n.grid = {15, 25};
    by_n.r = 0.0;
    const auto pts = run_power(by_n);
    CHECK(pts.size() == 2);
    CHECK(pts[0].grid == 15.0);
  }
}

TEST_CASE("csv and manifests") {
  const ExperimentSpec spec = small_spec();
  const auto points = run_power(spec);
  std::ostringstream csv;
  write_power_csv(csv, spec, points);
  const std::string text = csv.str();
  CHECK(text.rfind("scenario,r,power,se,rejections,T,M,alpha\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);

  const auto j = to_json(spec);
  const ExperimentSpec back = experiment_from_json(j);
  CHECK(to_json(back) == j);
  CHECK(back.seed == spec.seed);
  CHECK(back.grid == spec.grid);

  const auto manifest = power_manifest(spec, points);
  CHECK(manifest.contains("version"));
  CHECK(manifest.contains("spec"));
  CHECK(experiment_from_json(manifest["spec"]).trials == spec.trials);

  nlohmann::json broken = j;
  broken["trials"] = "many";
  CHECK_THROWS_AS(experiment_from_json(broken), Error);
}

TEST_CASE("KS study") {
  KsStudySpec spec;
  spec.scenario = "ex1";
  spec.n_grid = {10, 20};
  spec.arm_a = KsArm::CrtTrue;
  spec.arm_b = KsArm::CrtTrue;
  spec.per_arm = 30;
  spec.reps = 8;
  spec.seed = 5;
  const auto a = run_ks_study(spec);
  const auto b = run_ks_study(spec, 2);
  REQUIRE(a.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(a[i].n == spec.n_grid[i]);
    CHECK(a[i].reps == 8);
    CHECK(a[i].rejections == b[i].rejections);
    CHECK(a[i].mean_d == b[i].mean_d);
    CHECK(a[i].mean_d > 0.0);
    CHECK(a[i].mean_d < 1.0);
  }
  std::ostringstream csv;
  write_ks_csv(csv, spec, a);
  CHECK(csv.str().find("\nex1,0,crt_true,crt_true,10,") != std::string::npos);

  spec.reps = 0;
  CHECK_THROWS_AS(spec.validate(), Error);
}
