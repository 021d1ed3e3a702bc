#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cbd/core_data.hpp"
#include "cbd/resampling.hpp"
#include "cbd/rng.hpp"

namespace cbd {

/// Simulation design. Ids:
///   ex1 ex2 ex3 ex4a   Y = Z + e1, X = Z + rY + e2, all standard normal
///   ex4b               same with standard Cauchy Z, e1, e2
///   ex5:<shape>        Z ~ U(0,1), X = Z + e1, Y = Z + e2, (e1, e2) from a shape
///   ex6a ex6b          as ex5 with (e1, e2) a two-component normal mixture
///   ex7a ex7b          bivariate ex4a / ex4b
///   ex8:<shape>        Z ~ U[0,1]^3, X = max Z + e1, Y = max Z + e2
/// ex5 shapes: four_clouds w diamond parabola two_parabolas circle (aliases ex5a..ex5f).
/// ex8 shapes: circle parabola two_parabolas (aliases ex8a..ex8c).
struct ScenarioSpec {
  std::string id;
  std::size_t n = 50;
  double r = 0.0;
};

/// Canonical id for a name or alias; throws InvalidScenario when unknown.
std::string canonical_scenario(std::string_view id);
std::vector<std::string> registered_scenarios();

Dataset gen_scenario(const ScenarioSpec& spec, Rng& rng);

/// One draw of (e1, e2) from an ex5 shape, centred to mean zero.
std::array<double, 2> draw_shape(std::string_view shape, Rng& rng);

/// The law of X given Z implied by the scenario. Defined for ex1 through ex4b and ex7a/ex7b.
ConditionalSampler true_sampler(const ScenarioSpec& spec);

enum class Misspecification { AffineShift, UniformAbs };

/// affine_shift(r): 5 z + N(10, 25 / (r + 1)). uniform_abs: Unif(-|z|, |z|).
ConditionalSampler misspecified_sampler(Misspecification kind, double r = 0.0);

/// Columns in order Mechanics, Vectors, Analysis, Algebra, Statistics.
struct MarksTable {
  std::vector<std::array<double, 5>> rows;
};

MarksTable load_marks(const std::filesystem::path& path);

/// 'a': X = S, Y = An, Z = (M, V, Al). 'b': X = M, Y = V, Z = (S, An, Al).
Dataset marks_dataset(const MarksTable& table, char which);

/// m rows drawn uniformly without replacement, in draw order.
Dataset subsample(const Dataset& ds, std::size_t m, Rng& rng);

}  // namespace cbd
