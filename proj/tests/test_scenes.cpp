#include <doctest.h>

#include <algorithm>

#include "calm/error.hpp"
#include "calm/scenes.hpp"

using namespace calm;

namespace {

// Two hidden objects, one visible, all in a row; only category atoms.
FitbTask two_object_task(double fraction, Rng& rng) {
  Scene s;
  s.width = s.height = 64;
  s.bands = default_bands(64);
  s.objects = {{"c0", "sink", Box{10, 30, 8, 8}},
               {"c1", "toaster", Box{30, 30, 8, 8}},
               {"c2", "clock", Box{50, 5, 6, 6}}};
  // Hide c0 and c1 by building until the task hides exactly those two.
  for (;;) {
    FitbTask t = build_fitb_task(s, fraction, rng);
    if (t.labels.size() == 2 && t.scene.objects.size() == 1 && t.scene.objects[0].id == "c2") return t;
  }
}

}  // namespace

TEST_CASE("generator is deterministic and respects its constraints") {
  const GeneratorConfig cfg;
  Rng a(42), b(42);
  for (int i = 0; i < 50; ++i) {
    const Scene s = generate_scene(cfg, a);
    CHECK(scene_to_json(s) == scene_to_json(generate_scene(cfg, b)));
    CHECK(s.objects.size() >= 3);
    CHECK(s.objects.size() <= 5);
    for (std::size_t p = 0; p < s.objects.size(); ++p) {
      const Box& box = s.objects[p].box;
      CHECK(box.left() >= 0);
      CHECK(box.top() >= 0);
      CHECK(box.right() < s.width);
      CHECK(box.bottom() < s.height);
      for (std::size_t q = p + 1; q < s.objects.size(); ++q) {
        CHECK_FALSE(boxes_overlap(box, s.objects[q].box));
        CHECK(s.objects[p].category != s.objects[q].category);
      }
    }
  }
}

TEST_CASE("generator follows the band priors") {
  const GeneratorConfig cfg;
  Rng rng(8);
  int microwaves = 0, on_counter = 0;
  for (int i = 0; i < 1000; ++i) {
    const Scene s = generate_scene(cfg, rng);
    for (const SceneObject& o : s.objects) {
      if (o.category != "microwave") continue;
      ++microwaves;
      on_counter += band_of(s, o.box.y) == BandKind::counter;
    }
  }
  CHECK(microwaves > 100);
  CHECK(static_cast<double>(on_counter) / microwaves >= 0.85);
}

TEST_CASE("generator configuration errors") {
  GeneratorConfig cfg;
  cfg.max_objects = 20;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.k = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.width = cfg.height = 32;
  cfg.min_objects = cfg.max_objects = 5;
  cfg.max_attempts = 50;
  for (CategoryPrior& p : cfg.priors) p.w_lo = p.w_hi = p.h_lo = p.h_hi = 16;
  Rng rng(1);
  CHECK_THROWS_AS(generate_scene(cfg, rng), InvalidArgument);
}

TEST_CASE("tasks include true relations at the requested rate") {
  const GeneratorConfig cfg;
  Rng rng(3);
  long candidates = 0, included = 0;
  for (int i = 0; i < 1000; ++i) {
    const Scene s = generate_scene(cfg, rng);
    const FitbTask t = build_fitb_task(s, 0.5, rng);
    candidates += t.candidate_relations;
    included += t.included_relations;
    CHECK(t.labels.size() >= 2);
    CHECK(t.labels.size() <= std::min<std::size_t>(kMaxBlanks, s.objects.size()));
    CHECK(t.scene.objects.size() + t.labels.size() == s.objects.size());
  }
  CHECK(static_cast<double>(included) / static_cast<double>(candidates) == doctest::Approx(0.5).epsilon(0.1));

  for (int i = 0; i < 100; ++i) {
    const FitbTask t = build_fitb_task(generate_scene(cfg, rng), 0.0, rng);
    CHECK(t.included_relations == 0);
    const Statement st = parse_statement(t.statement);
    std::vector<const Statement*> atoms;
    if (st.kind == Statement::Kind::conj) {
      for (const auto& c : st.children) atoms.push_back(&c);
    } else {
      atoms.push_back(&st);
    }
    CHECK(atoms.size() == t.labels.size());
    for (const Statement* a : atoms) CHECK(a->atom.type == PredicateType::category);
  }
}

TEST_CASE("the true mapping satisfies every f = 1 task and json round-trips") {
  const GeneratorConfig cfg;
  Rng rng(12);
  int unique = 0;
  for (int i = 0; i < 200; ++i) {
    const FitbTask t = build_fitb_task(generate_scene(cfg, rng), 1.0, rng);
    CHECK(t.included_relations == t.candidate_relations);
    const auto sat = satisfying_mappings(t);
    CHECK(std::find(sat.begin(), sat.end(), t.truth) != sat.end());
    if (sat.size() == 1) {
      ++unique;
      CHECK(calm_solve(t, ProviderSet::uniform()) == t.truth);
      CHECK(fol_baseline_solve(t, rng) == t.truth);
    }
    const FitbTask back = task_from_json(nlohmann::json::parse(task_to_json(t).dump()));
    CHECK(back.statement == t.statement);
    CHECK(back.truth == t.truth);
    CHECK(back.blanks == t.blanks);
    CHECK(back.labels == t.labels);
  }
  CHECK(unique > 50);
}

TEST_CASE("scoring") {
  FitbTask t;
  t.truth = {2, 0, 3, 1};
  CHECK(score({2, 0, 3, 1}, t).object_accuracy == 1.0);
  CHECK(score({2, 0, 3, 1}, t).scene_accuracy == 1);
  const AssignmentScore one_wrong = score({2, 0, 3, 3}, t);
  CHECK(one_wrong.object_accuracy == 0.75);
  CHECK(one_wrong.scene_accuracy == 0);
  CHECK(score({0, 1, 2, 3}, t).object_accuracy == 0.0);
  CHECK_THROWS_AS(score({0, 1}, t), InvalidArgument);
}

TEST_CASE("FOL baseline guesses uniformly among satisfying mappings") {
  Rng rng(21);
  const FitbTask t = two_object_task(0.0, rng);
  CHECK(satisfying_mappings(t).size() == 2);
  int correct = 0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) correct += score(fol_baseline_solve(t, rng), t).scene_accuracy;
  CHECK(static_cast<double>(correct) / n == doctest::Approx(0.5).epsilon(0.06));

  const FitbTask full = two_object_task(1.0, rng);
  CHECK(full.candidate_relations == 1);
  CHECK(satisfying_mappings(full) == std::vector<Mapping>{full.truth});
}

TEST_CASE("training records come from ground-truth paths") {
  GeneratorConfig cfg;
  const auto recs = generate_training_records(cfg, 5, 1);
  CHECK(recs.size() > 50);
  for (const DecisionRecord& r : recs) {
    CHECK(r.chosen >= 0);
    CHECK(r.chosen < r.child_count);
    CHECK(r.child_count <= cfg.k);
  }
  CHECK_THROWS_AS(generate_training_records(cfg, 0, 1), InvalidArgument);
}
