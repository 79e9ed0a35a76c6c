#include "calm/bench.hpp"

#include <chrono>
#include <cstdio>

#include "calm/error.hpp"

namespace calm {

namespace {

std::uint64_t scene_seed(std::uint64_t base, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(index)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

double factorial(std::size_t n) {
  double f = 1.0;
  for (std::size_t i = 2; i <= n; ++i) f *= static_cast<double>(i);
  return f;
}

nlohmann::json accuracy_json(const MethodAccuracy& a) {
  return {{"object_accuracy", a.object}, {"scene_accuracy", a.scene}};
}

void finish(MethodAccuracy& a, int n) {
  if (n > 0) {
    a.object /= n;
    a.scene /= n;
  }
}

}  // namespace

BenchReport run_bench(const BenchConfig& cfg, const ProviderSet& providers) {
  if (cfg.scenes < 1) throw InvalidArgument("bench needs at least one scene");
  if (cfg.fractions.empty()) throw InvalidArgument("bench needs at least one fraction");
  for (double f : cfg.fractions) {
    if (!(f >= 0.0 && f <= 1.0)) throw InvalidArgument("fractions must lie in [0, 1]");
  }
  const auto start = std::chrono::steady_clock::now();
  BenchReport report;
  report.config = cfg;
  for (double f : cfg.fractions) report.results.push_back(FractionResult{f, 0, {}, {}, {}, 0, {}, {}, 0, 0});

  for (int s = 0; s < cfg.scenes; ++s) {
    const std::uint64_t seed = scene_seed(cfg.seed, s);
    Rng scene_rng(seed);
    const Scene scene = generate_scene(cfg.generator, scene_rng, "bench-" + std::to_string(s));
    if (scene.objects.size() < 2) continue;
    for (FractionResult& r : report.results) {
      Rng task_rng(seed ^ 0x5bd1e995ULL);
      const FitbTask task = build_fitb_task(scene, r.fraction, task_rng);
      Rng fol_rng(seed ^ 0xc2b2ae3d27d4eb4fULL);
      const AssignmentScore c = score(calm_solve(task, providers), task);
      const AssignmentScore b = score(fol_baseline_solve(task, fol_rng), task);
      const std::size_t n = task.blanks.size();
      ++r.tasks;
      r.calm.object += c.object_accuracy;
      r.calm.scene += c.scene_accuracy;
      r.fol.object += b.object_accuracy;
      r.fol.scene += b.scene_accuracy;
      r.uniform.object += 1.0 / static_cast<double>(n);
      r.uniform.scene += 1.0 / factorial(n);
      r.candidate_relations += task.candidate_relations;
      r.included_relations += task.included_relations;
      if (satisfying_mappings(task).size() == 1) {
        ++r.unique_tasks;
        r.calm_unique.object += c.object_accuracy;
        r.calm_unique.scene += c.scene_accuracy;
        r.fol_unique.object += b.object_accuracy;
        r.fol_unique.scene += b.scene_accuracy;
      }
    }
  }
  for (FractionResult& r : report.results) {
    finish(r.calm, r.tasks);
    finish(r.fol, r.tasks);
    finish(r.uniform, r.tasks);
    finish(r.calm_unique, r.unique_tasks);
    finish(r.fol_unique, r.unique_tasks);
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

nlohmann::json BenchReport::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const FractionResult& r : results) {
    rows.push_back({{"fraction", r.fraction},
                    {"tasks", r.tasks},
                    {"calm", accuracy_json(r.calm)},
                    {"fol", accuracy_json(r.fol)},
                    {"uniform", accuracy_json(r.uniform)},
                    {"unique_tasks", r.unique_tasks},
                    {"calm_unique", accuracy_json(r.calm_unique)},
                    {"fol_unique", accuracy_json(r.fol_unique)},
                    {"candidate_relations", r.candidate_relations},
                    {"included_relations", r.included_relations}});
  }
  return {{"scenes", config.scenes}, {"seed", config.seed}, {"fractions", config.fractions},
          {"results", rows}, {"seconds", seconds}};
}

std::string BenchReport::table() const {
  std::string out =
      "    f  tasks  calm_obj  calm_scene  fol_obj  fol_scene  unif_obj  unique  calm_uniq  fol_uniq\n";
  char line[256];
  for (const FractionResult& r : results) {
    std::snprintf(line, sizeof line,
                  "%5.2f  %5d  %8.4f  %10.4f  %7.4f  %9.4f  %8.4f  %6d  %9.4f  %8.4f\n", r.fraction,
                  r.tasks, r.calm.object, r.calm.scene, r.fol.object, r.fol.scene, r.uniform.object,
                  r.unique_tasks, r.calm_unique.scene, r.fol_unique.scene);
    out += line;
  }
  return out;
}

}  // namespace calm
