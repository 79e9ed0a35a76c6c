#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "calm/scenes.hpp"
#include "json.hpp"

namespace calm {

struct BenchConfig {
  int scenes = 500;
  std::vector<double> fractions{0.0, 0.5, 1.0};
  std::uint64_t seed = 1;
  GeneratorConfig generator;
};

struct MethodAccuracy {
  double object = 0.0;
  double scene = 0.0;
};

struct FractionResult {
  double fraction = 0.0;
  int tasks = 0;
  MethodAccuracy calm;
  MethodAccuracy fol;
  // Expected accuracy of a uniformly random mapping: mean 1/n and 1/n!.
  MethodAccuracy uniform;
  // Tasks whose bivalent statement admits exactly one mapping.
  int unique_tasks = 0;
  MethodAccuracy calm_unique;
  MethodAccuracy fol_unique;
  int candidate_relations = 0;
  int included_relations = 0;
};

struct BenchReport {
  BenchConfig config;
  std::vector<FractionResult> results;
  double seconds = 0.0;

  nlohmann::json to_json() const;
  std::string table() const;
};

// Scene i uses its own seeded stream; the task at every fraction hides the
// same objects and draws the same inclusion variates.
BenchReport run_bench(const BenchConfig& cfg, const ProviderSet& providers);

}  // namespace calm
