#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "calm/bench.hpp"
#include "calm/error.hpp"
#include "calm/heatmap.hpp"
#include "calm/inference.hpp"
#include "calm/io.hpp"
#include "calm/neural.hpp"
#include "calm/scenes.hpp"
#include "calm/statement.hpp"

namespace {

using namespace calm;
namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// Checkpoint paths that do not exist are looked up under CALM_CACHE_DIR.
std::string resolve_checkpoint(const std::string& path) {
  if (path.empty()) throw ConfigError("--checkpoint is required");
  if (fs::exists(path)) return path;
  if (const char* dir = std::getenv("CALM_CACHE_DIR")) {
    const fs::path cached = fs::path(dir) / path;
    if (fs::exists(cached)) return cached.string();
  }
  throw ConfigError("checkpoint '" + path + "' not found (also searched CALM_CACHE_DIR)");
}

// Tabular factor files and trained MLP checkpoints, told apart by "format".
ProviderSet load_providers(const std::string& path, bool uniform) {
  if (uniform) return ProviderSet::uniform();
  const std::string resolved = resolve_checkpoint(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(resolved));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad checkpoint " + resolved + ": " + e.what());
  }
  const std::string format = j.is_object() ? j.value("format", std::string()) : std::string("calm-tabular");
  if (format == "calm-tabular") {
    ProviderSet set;
    set.set_default(std::make_shared<TabularProvider>(TabularProvider::from_json(j)));
    return set;
  }
  if (format == "calm-mlp") return providers_from_checkpoint(Checkpoint::from_json(j));
  throw ConfigError("unknown checkpoint format '" + format + "'");
}

Scene load_scene(const std::string& path, nlohmann::json* raw = nullptr) {
  if (path.empty()) throw ConfigError("--scene is required");
  nlohmann::json j = nlohmann::json::parse(read_file(path));
  Scene s = scene_from_json(j);
  if (raw) *raw = std::move(j);
  return s;
}

// Grounding from the scene file's "grounding": {"entity": {"x": 2, ...}}.
Grounding grounding_from(const GroundedStatement& st, const nlohmann::json& raw) {
  Grounding g;
  if (!raw.contains("grounding")) {
    if (!st.order.empty()) throw InvalidArgument("scene file has no \"grounding\" for the free attributes");
    return g;
  }
  const auto& gj = raw.at("grounding");
  for (std::size_t f = 0; f < st.order.size(); ++f) {
    const FreeAttr& fa = st.order[f];
    const std::string& id = st.entities[static_cast<std::size_t>(fa.entity)].id;
    const std::string attr(attr_name(fa.attr));
    if (!gj.contains(id) || !gj.at(id).contains(attr)) {
      throw InvalidArgument("partial grounding: missing " + st.free_attr_name(static_cast<int>(f)));
    }
    g.values.push_back(gj.at(id).at(attr).get<int>());
  }
  return g;
}

std::vector<double> parse_fractions(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (!item.empty()) {
      try {
        out.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw ConfigError("bad fraction '" + item + "'");
      }
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw ConfigError("--f needs at least one fraction");
  return out;
}

struct Options {
  std::string scene;
  std::string statement;
  std::string checkpoint;
  std::string data;
  std::string out;
  std::uint64_t seed = 0;
  int k = 2;
  int resolution = 32;
  int probe_w = 16;
  int probe_h = 16;
  std::string fractions = "0,0.5,1";
  int scenes = 500;
  bool exact = false;
  bool approx = false;
  int proposals = 64;
  int samples = 1;
  int epochs = 200;
  double lr = 2e-4;
  int batch = 128;
  bool uniform = false;
};

int cmd_gen_data(const Options& o) {
  if (o.out.empty()) throw ConfigError("--out is required");
  GeneratorConfig gen;
  gen.k = o.k;
  const std::vector<DecisionRecord> records = generate_training_records(gen, o.scenes, o.seed);
  const fs::path out(o.out);
  write_dataset((out / "dataset.jsonl").string(), records);
  Rng rng(o.seed);
  nlohmann::json preview = nlohmann::json::array();
  const int shown = std::min(o.scenes, 3);
  for (int i = 0; i < shown; ++i) {
    const Scene s = generate_scene(gen, rng, "preview-" + std::to_string(i));
    if (s.objects.size() >= 2) preview.push_back(task_to_json(build_fitb_task(s, 1.0, rng)));
  }
  write_file_atomic((out / "preview_tasks.json").string(), preview.dump(2) + "\n");
  std::cout << "wrote " << records.size() << " decision records from " << o.scenes << " scenes to "
            << (out / "dataset.jsonl").string() << "\n";
  return 0;
}

int cmd_train(const Options& o) {
  if (o.data.empty()) throw ConfigError("--data is required");
  if (o.out.empty()) throw ConfigError("--out is required");
  TrainConfig cfg;
  cfg.learning_rate = o.lr;
  cfg.epochs = o.epochs;
  cfg.batch_size = o.batch;
  cfg.seed = o.seed;
  cfg.validate();
  const std::vector<DecisionRecord> records = read_dataset(o.data);
  std::map<PredicateType, TrainStats> stats;
  const Checkpoint ckpt = train_checkpoint(records, o.k, cfg, &stats);
  std::string path = o.out;
  if (fs::is_directory(path)) path = (fs::path(path) / "checkpoint.json").string();
  write_file_atomic(path, ckpt.to_json().dump() + "\n");
  for (const auto& [type, s] : stats) {
    std::cout << predicate_name(type) << ": " << s.records << " records, loss " << fmt(s.initial_loss)
              << " -> " << fmt(s.final_loss) << "\n";
  }
  std::cout << "checkpoint " << path << "\n";
  return 0;
}

int cmd_eval(const Options& o) {
  nlohmann::json raw;
  const Scene scene = load_scene(o.scene, &raw);
  const ProviderSet providers = load_providers(o.checkpoint, o.uniform);
  const GroundedStatement st = validate(parse_statement(o.statement), scene);
  const Grounding g = grounding_from(st, raw);
  const std::vector<double> atoms = atom_truths(st, g, providers);
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    std::cout << st.atoms[i].label << " = " << fmt(atoms[i]) << "\n";
  }
  std::cout << "grounding " << format_grounding(st, g) << "\n";
  std::cout << "truth " << fmt(st.combine(atoms, true)) << "\n";
  return 0;
}

int cmd_maximize(const Options& o) {
  const Scene scene = load_scene(o.scene);
  const ProviderSet providers = load_providers(o.checkpoint, o.uniform);
  const GroundedStatement st = validate(parse_statement(o.statement), scene);
  const MaximizeResult r = maximize(st, providers);
  std::cout << format_grounding(st, r.grounding) << "\n";
  std::cout << "truth " << fmt(r.truth) << "\n";
  std::cout << "greedy " << format_grounding(st, r.greedy) << " truth " << fmt(r.greedy_truth) << "\n";
  for (const PruneEvent& p : r.pruned) {
    std::cout << "pruned " << st.free_attr_name(p.free_index) << " in [" << p.interval.lo << ","
              << p.interval.hi << "] score " << fmt(p.score) << " vs incumbent " << fmt(p.incumbent)
              << "\n";
  }
  std::cout << "expanded " << r.expanded << " leaves " << r.leaves << "\n";
  return 0;
}

int cmd_sample(const Options& o) {
  if (o.exact == o.approx) throw ConfigError("choose exactly one of --exact or --approx");
  if (o.samples < 1) throw ConfigError("--samples must be positive");
  const Scene scene = load_scene(o.scene);
  const ProviderSet providers = load_providers(o.checkpoint, o.uniform);
  const GroundedStatement st = validate(parse_statement(o.statement), scene);
  Rng rng(o.seed);
  std::map<Grounding, int> counts;
  std::vector<Grounding> drawn;
  std::unique_ptr<ExactSampler> exact;
  if (o.exact) exact = std::make_unique<ExactSampler>(st, providers);
  for (int i = 0; i < o.samples; ++i) {
    Grounding g = exact ? exact->sample(rng) : sample_statement_approx(st, providers, o.proposals, rng);
    ++counts[g];
    if (!o.out.empty()) drawn.push_back(std::move(g));
  }
  std::map<Grounding, double> reference;
  if (exact) {
    const std::vector<double> p = exact->probabilities();
    for (std::size_t i = 0; i < p.size(); ++i) reference[exact->table()[i].grounding] = p[i];
  }
  double worst = 0.0;
  for (const auto& [g, c] : counts) {
    const double freq = static_cast<double>(c) / o.samples;
    std::cout << format_grounding(st, g) << " count " << c << " freq " << fmt(freq);
    if (exact) {
      std::cout << " exact " << fmt(reference[g]);
      worst = std::max(worst, std::abs(freq - reference[g]));
    }
    std::cout << "\n";
  }
  if (exact) {
    for (const auto& [g, p] : reference) {
      if (!counts.count(g)) worst = std::max(worst, p);
    }
    std::cout << "max abs deviation " << fmt(worst) << "\n";
  }
  if (!o.out.empty()) {
    nlohmann::json arr = nlohmann::json::array();
    for (const Grounding& g : drawn) arr.push_back(g.values);
    const nlohmann::json doc = {{"attributes", [&] {
                                   std::vector<std::string> names;
                                   for (std::size_t f = 0; f < st.order.size(); ++f) {
                                     names.push_back(st.free_attr_name(static_cast<int>(f)));
                                   }
                                   return names;
                                 }()},
                                {"samples", arr}};
    write_file_atomic((fs::path(o.out) / "samples.json").string(), doc.dump() + "\n");
  }
  return 0;
}

int cmd_heatmap(const Options& o) {
  if (o.out.empty()) throw ConfigError("--out is required");
  const Scene scene = load_scene(o.scene);
  const ProviderSet providers = load_providers(o.checkpoint, o.uniform);
  HeatmapConfig cfg;
  cfg.resolution = o.resolution;
  cfg.probe_w = o.probe_w;
  cfg.probe_h = o.probe_h;
  const Heatmap h = compute_heatmap(scene, o.statement, providers, cfg);
  const fs::path stem = fs::path(o.out) / "heatmap";
  write_heatmap(h, stem.string());
  const nlohmann::json meta = {{"statement", h.statement}, {"scene", h.scene_id},
                               {"resolution", h.resolution}, {"probe_w", h.probe_w},
                               {"probe_h", h.probe_h}};
  write_file_atomic(stem.string() + ".json", meta.dump(2) + "\n");
  std::cout << "wrote " << stem.string() << ".csv and .pgm\n";
  return 0;
}

int cmd_bench(const Options& o) {
  const ProviderSet providers = load_providers(o.checkpoint, o.uniform);
  BenchConfig cfg;
  cfg.scenes = o.scenes;
  cfg.seed = o.seed;
  cfg.fractions = parse_fractions(o.fractions);
  cfg.generator.k = o.k;
  const BenchReport report = run_bench(cfg, providers);
  std::cout << report.table();
  if (!o.out.empty()) {
    write_file_atomic((fs::path(o.out) / "bench.json").string(), report.to_json().dump(2) + "\n");
    write_file_atomic((fs::path(o.out) / "bench.txt").string(), report.table());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CALM: analog logic over domain trees"};
  app.require_subcommand(1);
  Options o;

  auto add_scene = [&](CLI::App* c) {
    c->add_option("--scene", o.scene, "Scene JSON file")->required();
    c->add_option("--statement", o.statement, "Statement in the logic DSL")->required();
  };
  auto add_checkpoint = [&](CLI::App* c) {
    c->add_option("--checkpoint", o.checkpoint, "Tabular factors or trained checkpoint");
    c->add_flag("--uniform", o.uniform, "Use uniform truth factors instead of a checkpoint");
  };

  auto* gen = app.add_subcommand("gen-data", "Generate scenes and decision records");
  gen->add_option("--scenes", o.scenes, "Number of scenes");
  gen->add_option("--seed", o.seed, "Random seed");
  gen->add_option("--k", o.k, "Domain tree branching factor");
  gen->add_option("--out", o.out, "Output directory")->required();

  auto* train_cmd = app.add_subcommand("train", "Train the predicate networks");
  train_cmd->add_option("--data", o.data, "Decision records (JSON lines)")->required();
  train_cmd->add_option("--out", o.out, "Checkpoint file or directory")->required();
  train_cmd->add_option("--seed", o.seed, "Random seed");
  train_cmd->add_option("--k", o.k, "Domain tree branching factor");
  train_cmd->add_option("--epochs", o.epochs, "Training epochs");
  train_cmd->add_option("--lr", o.lr, "Learning rate");
  train_cmd->add_option("--batch", o.batch, "Batch size");

  auto* eval = app.add_subcommand("eval", "Truth of a grounded statement");
  add_scene(eval);
  add_checkpoint(eval);
  eval->add_option("--seed", o.seed, "Random seed (unused; accepted for uniformity)");

  auto* maxi = app.add_subcommand("maximize", "Highest-truth grounding");
  add_scene(maxi);
  add_checkpoint(maxi);

  auto* samp = app.add_subcommand("sample", "Draw groundings in proportion to truth");
  add_scene(samp);
  add_checkpoint(samp);
  samp->add_flag("--exact", o.exact, "Exact sampler (enumerates every grounding)");
  samp->add_flag("--approx", o.approx, "Proposal and resampling sampler");
  samp->add_option("--proposals", o.proposals, "Proposals per draw (approximate sampler)");
  samp->add_option("--samples", o.samples, "Number of draws");
  samp->add_option("--seed", o.seed, "Random seed");
  samp->add_option("--out", o.out, "Directory for samples.json");

  auto* heat = app.add_subcommand("heatmap", "Truth heatmap for one variable entity");
  add_scene(heat);
  add_checkpoint(heat);
  heat->add_option("--resolution", o.resolution, "Grid size R");
  heat->add_option("--probe-w", o.probe_w, "Probe box width");
  heat->add_option("--probe-h", o.probe_h, "Probe box height");
  heat->add_option("--out", o.out, "Output directory")->required();

  auto* bench = app.add_subcommand("bench", "Fill-in-the-blank benchmark");
  add_checkpoint(bench);
  bench->add_option("--scenes", o.scenes, "Number of scenes");
  bench->add_option("--f", o.fractions, "Comma-separated relation fractions");
  bench->add_option("--seed", o.seed, "Random seed");
  bench->add_option("--k", o.k, "Domain tree branching factor");
  bench->add_option("--out", o.out, "Directory for bench.json and bench.txt");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_gen_data(o);
    if (*train_cmd) return cmd_train(o);
    if (*eval) return cmd_eval(o);
    if (*maxi) return cmd_maximize(o);
    if (*samp) return cmd_sample(o);
    if (*heat) return cmd_heatmap(o);
    if (*bench) return cmd_bench(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
