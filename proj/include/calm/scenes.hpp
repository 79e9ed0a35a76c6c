#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "calm/inference.hpp"
#include "calm/neural.hpp"
#include "calm/scene.hpp"
#include "json.hpp"

namespace calm {

// Where a category tends to appear and how large it is.
struct CategoryPrior {
  std::string name;
  std::array<double, 3> band{};  // wall, counter, floor
  int w_lo = 1, w_hi = 1;
  int h_lo = 1, h_hi = 1;
};

// The fourteen indoor categories with their default priors.
const std::vector<CategoryPrior>& default_priors();

struct GeneratorConfig {
  int width = 128;
  int height = 128;
  int k = 2;
  int min_objects = 3;
  int max_objects = 5;
  int max_attempts = 1000;  // rejection-sampling attempts per object
  std::vector<CategoryPrior> priors = default_priors();

  void validate() const;
};

// Fixed wall / counter / floor strips covering 3/8, 1/4 and 3/8 of the height.
std::vector<Band> default_bands(int height);

// Band containing row y.
BandKind band_of(const Scene& scene, int y);

// Distinct categories, non-overlapping boxes. Throws InvalidArgument when an
// object cannot be placed within max_attempts.
Scene generate_scene(const GeneratorConfig& cfg, Rng& rng, const std::string& id = "scene");

// A scene with some objects hidden. Variable oi stands for labels[i]; its
// true location is blanks[truth[i]].
struct FitbTask {
  Scene scene;  // visible objects plus variables o0..o{n-1}
  std::vector<Box> blanks;
  std::vector<std::string> labels;
  std::vector<int> truth;
  std::string statement;
  double fraction = 0.0;
  int candidate_relations = 0;
  int included_relations = 0;
};

inline constexpr int kMaxBlanks = 6;

// Hides between 2 and min(6, |objects|) objects. Category atoms are always
// present; each geometrically true relation (strict hard conditions) between
// two hidden objects is included with probability `fraction`.
FitbTask build_fitb_task(const Scene& scene, double fraction, Rng& rng);

nlohmann::json task_to_json(const FitbTask& task);
FitbTask task_from_json(const nlohmann::json& j);

// assignment[i] = blank chosen for object i.
using Mapping = std::vector<int>;

// Argmax of statement truth over injective mappings; ties go to the
// lexicographically first mapping.
Mapping calm_solve(const FitbTask& task, const ProviderSet& providers);

// Bivalent check of every atom; uniform among satisfying mappings, or among
// all mappings when none satisfies.
Mapping fol_baseline_solve(const FitbTask& task, Rng& rng);

// Mappings that satisfy the bivalent reading of the statement.
std::vector<Mapping> satisfying_mappings(const FitbTask& task);

struct AssignmentScore {
  double object_accuracy = 0.0;
  int scene_accuracy = 0;
};

AssignmentScore score(const Mapping& assignment, const FitbTask& task);

// Ground-truth decision records from f = 1 tasks on `scenes` generated
// scenes; the training set for every predicate network.
std::vector<DecisionRecord> generate_training_records(const GeneratorConfig& cfg, int scenes,
                                                      std::uint64_t seed);

}  // namespace calm
