#include "calm/scenes.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "calm/error.hpp"
#include "calm/predicates.hpp"

namespace calm {

const std::vector<CategoryPrior>& default_priors() {
  static const std::vector<CategoryPrior> priors = {
      {"chair", {0.05, 0.05, 0.90}, 14, 22, 18, 28},
      {"couch", {0.03, 0.02, 0.95}, 30, 44, 16, 24},
      {"potted plant", {0.15, 0.60, 0.25}, 8, 14, 12, 20},
      {"bed", {0.02, 0.03, 0.95}, 36, 50, 18, 26},
      {"mirror", {0.90, 0.05, 0.05}, 12, 20, 16, 26},
      {"dining table", {0.02, 0.08, 0.90}, 28, 40, 12, 18},
      {"desk", {0.02, 0.10, 0.88}, 24, 36, 14, 20},
      {"microwave", {0.05, 0.90, 0.05}, 14, 20, 8, 12},
      {"oven", {0.05, 0.80, 0.15}, 18, 26, 14, 20},
      {"toaster", {0.05, 0.90, 0.05}, 8, 12, 6, 10},
      {"sink", {0.05, 0.90, 0.05}, 16, 24, 6, 10},
      {"refrigerator", {0.10, 0.20, 0.70}, 18, 26, 36, 48},
      {"clock", {0.95, 0.03, 0.02}, 6, 10, 6, 10},
      {"blender", {0.05, 0.90, 0.05}, 6, 10, 12, 16},
  };
  return priors;
}

void GeneratorConfig::validate() const {
  if (width < 8 || height < 8) throw ConfigError("scene must be at least 8x8");
  if (k < 2) throw ConfigError("k must be >= 2");
  if (min_objects < 0 || max_objects < min_objects) throw ConfigError("bad object count range");
  if (max_objects > static_cast<int>(priors.size())) {
    throw ConfigError("more objects requested than distinct categories");
  }
  if (max_attempts < 1) throw ConfigError("max_attempts must be positive");
  for (const CategoryPrior& p : priors) {
    double total = 0.0;
    for (double b : p.band) {
      if (b < 0.0) throw ConfigError("negative band prior for " + p.name);
      total += b;
    }
    if (total <= 0.0) throw ConfigError("band prior for " + p.name + " has no mass");
    if (p.w_lo < 1 || p.w_hi < p.w_lo || p.h_lo < 1 || p.h_hi < p.h_lo || p.w_hi > width ||
        p.h_hi > height) {
      throw ConfigError("bad size prior for " + p.name);
    }
  }
}

std::vector<Band> default_bands(int height) {
  const int wall_end = height * 3 / 8 - 1;
  const int counter_end = height * 5 / 8 - 1;
  return {{BandKind::wall, 0, wall_end},
          {BandKind::counter, wall_end + 1, counter_end},
          {BandKind::floor, counter_end + 1, height - 1}};
}

BandKind band_of(const Scene& scene, int y) {
  for (const Band& b : scene.bands) {
    if (y >= b.y0 && y <= b.y1) return b.kind;
  }
  throw InvalidArgument("row " + std::to_string(y) + " lies in no band");
}

Scene generate_scene(const GeneratorConfig& cfg, Rng& rng, const std::string& id) {
  cfg.validate();
  Scene scene;
  scene.id = id;
  scene.width = cfg.width;
  scene.height = cfg.height;
  scene.k = cfg.k;
  scene.bands = default_bands(cfg.height);

  std::uniform_int_distribution<int> count_dist(cfg.min_objects, cfg.max_objects);
  const int count = count_dist(rng);
  std::vector<std::size_t> cats(cfg.priors.size());
  std::iota(cats.begin(), cats.end(), std::size_t{0});
  std::shuffle(cats.begin(), cats.end(), rng);
  cats.resize(static_cast<std::size_t>(count));

  for (std::size_t i = 0; i < cats.size(); ++i) {
    const CategoryPrior& prior = cfg.priors[cats[i]];
    std::discrete_distribution<int> band_dist(prior.band.begin(), prior.band.end());
    std::uniform_int_distribution<int> w_dist(prior.w_lo, prior.w_hi);
    std::uniform_int_distribution<int> h_dist(prior.h_lo, prior.h_hi);
    bool placed = false;
    for (int attempt = 0; attempt < cfg.max_attempts && !placed; ++attempt) {
      const Band& band = scene.bands[static_cast<std::size_t>(band_dist(rng))];
      Box b;
      b.w = w_dist(rng);
      b.h = h_dist(rng);
      // Center row inside the band, box inside the image.
      const int y_lo = std::max(band.y0, b.h / 2);
      const int y_hi = std::min(band.y1, cfg.height - b.h + b.h / 2);
      const int x_lo = b.w / 2;
      const int x_hi = cfg.width - b.w + b.w / 2;
      if (y_lo > y_hi || x_lo > x_hi) continue;
      b.y = std::uniform_int_distribution<int>(y_lo, y_hi)(rng);
      b.x = std::uniform_int_distribution<int>(x_lo, x_hi)(rng);
      const bool clash = std::any_of(scene.objects.begin(), scene.objects.end(),
                                     [&](const SceneObject& o) { return boxes_overlap(o.box, b); });
      if (clash) continue;
      scene.objects.push_back({"c" + std::to_string(i), prior.name, b});
      placed = true;
    }
    if (!placed) {
      throw InvalidArgument("could not place '" + prior.name + "' after " +
                            std::to_string(cfg.max_attempts) + " attempts");
    }
  }
  return scene;
}

// ---------------------------------------------------------------------------
// Fill-in-the-blank tasks

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string var_name(std::size_t i) { return "o" + std::to_string(i); }

}  // namespace

FitbTask build_fitb_task(const Scene& scene, double fraction, Rng& rng) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw InvalidArgument("fraction must lie in [0, 1]");
  const int n_objects = static_cast<int>(scene.objects.size());
  if (n_objects < 2) throw InvalidArgument("a task needs at least two objects");
  if (scene.image_contexts.empty()) throw InvalidArgument("scene has no image context");

  std::uniform_int_distribution<int> blanks_dist(2, std::min(kMaxBlanks, n_objects));
  const int n = blanks_dist(rng);
  std::vector<std::size_t> pick(scene.objects.size());
  std::iota(pick.begin(), pick.end(), std::size_t{0});
  std::shuffle(pick.begin(), pick.end(), rng);
  pick.resize(static_cast<std::size_t>(n));  // hidden objects, in label order

  std::vector<int> blank_order(static_cast<std::size_t>(n));
  std::iota(blank_order.begin(), blank_order.end(), 0);
  std::shuffle(blank_order.begin(), blank_order.end(), rng);  // object i -> blank blank_order[i]

  FitbTask task;
  task.fraction = fraction;
  task.scene = scene;
  task.scene.objects.clear();
  task.scene.variables.clear();
  std::vector<bool> hidden(scene.objects.size(), false);
  for (std::size_t s : pick) hidden[s] = true;
  for (std::size_t s = 0; s < scene.objects.size(); ++s) {
    if (!hidden[s]) task.scene.objects.push_back(scene.objects[s]);
  }
  task.blanks.resize(static_cast<std::size_t>(n));
  std::vector<Box> truth_box(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < pick.size(); ++i) {
    const SceneObject& o = scene.objects[pick[i]];
    task.labels.push_back(o.category);
    task.truth.push_back(blank_order[i]);
    task.blanks[static_cast<std::size_t>(blank_order[i])] = o.box;
    truth_box[i] = o.box;
    task.scene.variables.push_back(scene.full_variable(var_name(i)));
  }

  const std::string& img = scene.image_contexts.front();
  std::vector<std::string> parts;
  for (std::size_t i = 0; i < task.labels.size(); ++i) {
    parts.push_back("category(" + var_name(i) + "; " + quote(task.labels[i]) + ", " + img + ")");
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto relation = [&](PredicateType a, PredicateType b, std::size_t i, std::size_t j) {
    PredicateType type;
    if (hard_holds(a, truth_box[i], truth_box[j])) {
      type = a;
    } else if (hard_holds(b, truth_box[i], truth_box[j])) {
      type = b;
    } else {
      return;
    }
    ++task.candidate_relations;
    if (unit(rng) < fraction) {
      ++task.included_relations;
      parts.push_back(std::string(predicate_name(type)) + "(" + var_name(i) + ", " + var_name(j) +
                      "; " + img + ")");
    }
  };
  for (std::size_t i = 0; i < truth_box.size(); ++i) {
    for (std::size_t j = i + 1; j < truth_box.size(); ++j) {
      relation(PredicateType::leftof, PredicateType::rightof, i, j);
      relation(PredicateType::above, PredicateType::below, i, j);
    }
  }
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) task.statement += " & ";
    task.statement += parts[i];
  }
  return task;
}

nlohmann::json task_to_json(const FitbTask& task) {
  nlohmann::json j = scene_to_json(task.scene);
  nlohmann::json blanks = nlohmann::json::array();
  for (const Box& b : task.blanks) blanks.push_back(box_to_json(b));
  j["blanks"] = blanks;
  j["labels"] = task.labels;
  j["statement"] = task.statement;
  j["truth_assignment"] = task.truth;
  j["fraction"] = task.fraction;
  j["candidate_relations"] = task.candidate_relations;
  j["included_relations"] = task.included_relations;
  return j;
}

FitbTask task_from_json(const nlohmann::json& j) {
  FitbTask task;
  task.scene = scene_from_json(j);
  for (const auto& b : j.at("blanks")) task.blanks.push_back(box_from_json(b));
  task.labels = j.at("labels").get<std::vector<std::string>>();
  task.statement = j.at("statement").get<std::string>();
  task.truth = j.at("truth_assignment").get<std::vector<int>>();
  task.fraction = j.value("fraction", 0.0);
  task.candidate_relations = j.value("candidate_relations", 0);
  task.included_relations = j.value("included_relations", 0);
  if (task.labels.size() != task.blanks.size() || task.truth.size() != task.labels.size()) {
    throw ValidationError("task labels, blanks and truth_assignment differ in length");
  }
  return task;
}

// ---------------------------------------------------------------------------
// Solvers

namespace {

// The grounded statement plus, per atom, which object (or -1 for a
// constant) fills each argument.
struct TaskModel {
  GroundedStatement st;
  std::vector<std::array<int, 2>> arg_object;
  std::vector<int> object_entity;
};

TaskModel task_model(const FitbTask& task) {
  if (task.labels.size() != task.blanks.size()) {
    throw InvalidArgument("task has " + std::to_string(task.labels.size()) + " objects for " +
                          std::to_string(task.blanks.size()) + " blanks");
  }
  if (task.blanks.size() > static_cast<std::size_t>(kMaxBlanks)) {
    throw InvalidArgument("task has more than " + std::to_string(kMaxBlanks) + " blanks");
  }
  TaskModel m{validate(parse_statement(task.statement), task.scene), {}, {}};
  for (std::size_t i = 0; i < task.labels.size(); ++i) {
    const int e = m.st.entity_index(var_name(i));
    if (e < 0) throw ValidationError("task scene lacks variable " + var_name(i));
    m.object_entity.push_back(e);
  }
  for (const PredicateInstance& p : m.st.atoms) {
    std::array<int, 2> objs{-1, -1};
    for (int a = 0; a < p.arity; ++a) {
      const auto it = std::find(m.object_entity.begin(), m.object_entity.end(),
                                p.args[static_cast<std::size_t>(a)]);
      if (it != m.object_entity.end()) {
        objs[static_cast<std::size_t>(a)] = static_cast<int>(it - m.object_entity.begin());
      } else if (m.st.entities[static_cast<std::size_t>(p.args[static_cast<std::size_t>(a)])].kind ==
                 EntityKind::variable) {
        throw ValidationError("statement refers to a variable that is not a task object");
      }
    }
    m.arg_object.push_back(objs);
  }
  return m;
}

Grounding mapping_grounding(const TaskModel& m, const FitbTask& task, const Mapping& mapping) {
  Grounding g;
  g.values.resize(m.st.order.size());
  for (std::size_t f = 0; f < m.st.order.size(); ++f) {
    const FreeAttr& fa = m.st.order[f];
    const auto it = std::find(m.object_entity.begin(), m.object_entity.end(), fa.entity);
    const std::size_t obj = static_cast<std::size_t>(it - m.object_entity.begin());
    g.values[f] = task.blanks[static_cast<std::size_t>(mapping[obj])].get(fa.attr);
  }
  return g;
}

Box entity_box(const TaskModel& m, const FitbTask& task, const Mapping& mapping, int atom, int arg) {
  const int obj = m.arg_object[static_cast<std::size_t>(atom)][static_cast<std::size_t>(arg)];
  if (obj >= 0) return task.blanks[static_cast<std::size_t>(mapping[static_cast<std::size_t>(obj)])];
  const PredicateInstance& p = m.st.atoms[static_cast<std::size_t>(atom)];
  const EntityState& e = m.st.entities[static_cast<std::size_t>(p.args[static_cast<std::size_t>(arg)])];
  Box b;
  for (Attr a : kAllAttrs) b.set(a, e.domains[attr_index(a)].value);
  return b;
}

template <typename Visit>
void for_each_mapping(std::size_t n, Visit&& visit) {
  Mapping m(n);
  std::iota(m.begin(), m.end(), 0);
  do {
    visit(m);
  } while (std::next_permutation(m.begin(), m.end()));
}

std::vector<double> bivalent_truths(const TaskModel& m, const FitbTask& task, const Mapping& mapping) {
  std::vector<double> t(m.st.atoms.size());
  for (std::size_t p = 0; p < m.st.atoms.size(); ++p) {
    const PredicateInstance& inst = m.st.atoms[p];
    if (inst.arity == 1) {
      t[p] = 1.0;
      continue;
    }
    t[p] = hard_holds(inst.type, entity_box(m, task, mapping, static_cast<int>(p), 0),
                      entity_box(m, task, mapping, static_cast<int>(p), 1))
               ? 1.0
               : 0.0;
  }
  return t;
}

}  // namespace

Mapping calm_solve(const FitbTask& task, const ProviderSet& providers) {
  const TaskModel m = task_model(task);
  const std::size_t n = task.blanks.size();
  // Atom truth depends only on the blanks of its own arguments.
  std::map<std::tuple<std::size_t, int, int>, double> cache;
  Mapping best;
  double best_truth = -1.0;
  std::vector<double> truths(m.st.atoms.size());
  for_each_mapping(n, [&](const Mapping& mapping) {
    Grounding g;
    bool grounded = false;
    for (std::size_t p = 0; p < m.st.atoms.size(); ++p) {
      const auto& objs = m.arg_object[p];
      const int b0 = objs[0] >= 0 ? mapping[static_cast<std::size_t>(objs[0])] : -1;
      const int b1 = objs[1] >= 0 ? mapping[static_cast<std::size_t>(objs[1])] : -1;
      const auto key = std::make_tuple(p, b0, b1);
      auto it = cache.find(key);
      if (it == cache.end()) {
        if (!grounded) {
          g = mapping_grounding(m, task, mapping);
          grounded = true;
        }
        it = cache.emplace(key, atom_truth(m.st, static_cast<int>(p), g, providers)).first;
      }
      truths[p] = it->second;
    }
    const double t = m.st.combine(truths, true);
    if (t > best_truth) {
      best_truth = t;
      best = mapping;
    }
  });
  return best;
}

std::vector<Mapping> satisfying_mappings(const FitbTask& task) {
  const TaskModel m = task_model(task);
  std::vector<Mapping> out;
  for_each_mapping(task.blanks.size(), [&](const Mapping& mapping) {
    if (m.st.combine(bivalent_truths(m, task, mapping), true) >= 1.0) out.push_back(mapping);
  });
  return out;
}

Mapping fol_baseline_solve(const FitbTask& task, Rng& rng) {
  std::vector<Mapping> pool = satisfying_mappings(task);
  if (pool.empty()) for_each_mapping(task.blanks.size(), [&](const Mapping& mp) { pool.push_back(mp); });
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  return pool[pick(rng)];
}

AssignmentScore score(const Mapping& assignment, const FitbTask& task) {
  if (assignment.size() != task.truth.size()) throw InvalidArgument("assignment is not total");
  int correct = 0;
  for (std::size_t i = 0; i < assignment.size(); ++i) correct += assignment[i] == task.truth[i];
  AssignmentScore s;
  s.object_accuracy = task.truth.empty() ? 1.0 : static_cast<double>(correct) / static_cast<double>(task.truth.size());
  s.scene_accuracy = correct == static_cast<int>(task.truth.size()) ? 1 : 0;
  return s;
}

std::vector<DecisionRecord> generate_training_records(const GeneratorConfig& cfg, int scenes,
                                                      std::uint64_t seed) {
  if (scenes < 1) throw InvalidArgument("need at least one training scene");
  std::vector<DecisionRecord> out;
  Rng rng(seed);
  for (int s = 0; s < scenes; ++s) {
    const Scene scene = generate_scene(cfg, rng, "train-" + std::to_string(s));
    if (scene.objects.size() < 2) continue;
    const FitbTask task = build_fitb_task(scene, 1.0, rng);
    const TaskModel m = task_model(task);
    const Grounding g = mapping_grounding(m, task, task.truth);
    std::vector<DecisionRecord> recs = decision_records(m.st, g);
    out.insert(out.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
  }
  return out;
}

}  // namespace calm
