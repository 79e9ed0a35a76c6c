#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "calm/error.hpp"
#include "calm/inference.hpp"
#include "calm/io.hpp"
#include "support.hpp"

using namespace calm;

namespace {

struct Fixture {
  Scene scene;
  ProviderSet providers;
};

Fixture load_fixture(const std::string& name) {
  const std::string dir = CALM_FIXTURE_DIR;
  Fixture f;
  f.scene = scene_from_json(nlohmann::json::parse(read_file(dir + "/" + name + "_scene.json")));
  f.providers.set_default(std::make_shared<TabularProvider>(TabularProvider::from_json(
      nlohmann::json::parse(read_file(dir + "/" + name + "_factors.json")))));
  return f;
}

const char* kMicrowave = "category(mw; \"microwave\", img) & leftof(mw, oven; img)";
const char* kToaster = "rightof(a, b; img) & category(a; \"toaster\", img)";
const char* kChair = "leftof(a, b; img) & category(a; \"chair\", img)";

std::vector<int> key_of(std::vector<Assignment> a) {
  std::sort(a.begin(), a.end(),
            [](const Assignment& l, const Assignment& r) { return l.free_index < r.free_index; });
  std::vector<int> out;
  for (const Assignment& x : a) out.push_back(x.value);
  return out;
}

}  // namespace

TEST_CASE("fixture truths") {
  const Fixture f = load_fixture("microwave");
  const GroundedStatement st = validate(parse_statement(kMicrowave), f.scene);
  REQUIRE(st.order.size() == 2);
  const Grounding g{{2, 0}};
  const auto t = atom_truths(st, g, f.providers);
  CHECK(t[0] == doctest::Approx(0.2025).epsilon(1e-12));
  CHECK(t[1] == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(evaluate(st, g, f.providers) == doctest::Approx(0.2025).epsilon(1e-12));
  // mw.x = 3 is not left of the oven: the hard component zeroes it.
  CHECK(atom_truth(st, 1, Grounding{{3, 0}}, f.providers) == 0.0);
  CHECK(evaluate(st, Grounding{{3, 0}}, f.providers) == 0.0);

  const GroundedStatement neg =
      validate(parse_statement(std::string("!(") + kMicrowave + ")"), f.scene);
  CHECK(evaluate(neg, g, f.providers) == doctest::Approx(0.7975).epsilon(1e-12));

  CHECK(format_grounding(st, g) == "mw.x=2 mw.y=0");
  CHECK_THROWS_AS(check_grounding(st, Grounding{{2}}), InvalidArgument);
  CHECK_THROWS_AS(check_grounding(st, Grounding{{2, 4}}), InvalidArgument);
  CHECK_THROWS_AS(evaluate(st, Grounding{{-1, 0}}, f.providers), InvalidArgument);
}

TEST_CASE("truth is a product over the refinement path, not a per-node min") {
  const Fixture f = load_fixture("chair");
  const GroundedStatement st = validate(parse_statement(kChair), f.scene);
  // leftof path factors 0.75 * 0.8, category 0.9 * 0.4.
  const Grounding g{{1}};
  CHECK(evaluate(st, g, f.providers) == doctest::Approx(0.36));
  const double naive = std::min(0.75, 0.9) * std::min(0.8, 0.4);
  CHECK(naive == doctest::Approx(0.3));
  CHECK(std::abs(naive - evaluate(st, g, f.providers)) > 0.05);
  // Sampling each node by the per-node min of the factors puts 0.2941 on the
  // leftmost leaf; truth-proportional sampling puts 0.15 / 0.61 there.
  const double naive_left = (0.75 / (0.75 + 0.1)) * (0.2 / (0.2 + 0.4));
  CHECK(naive_left == doctest::Approx(0.2941).epsilon(1e-3));
  const auto p = ExactSampler(st, f.providers).probabilities();
  CHECK(p[0] == doctest::Approx(0.15 / 0.61));
  CHECK(std::abs(p[0] - naive_left) > 0.04);
  const auto table = brute_force_all(st, f.providers);
  REQUIRE(table.size() == 4);
  const double expect[] = {0.15, 0.36, 0.05, 0.05};
  for (int i = 0; i < 4; ++i) CHECK(table[static_cast<std::size_t>(i)].truth == doctest::Approx(expect[i]));
}

TEST_CASE("toaster maximisation") {
  const Fixture f = load_fixture("toaster");
  const GroundedStatement st = validate(parse_statement(kToaster), f.scene);
  const MaximizeResult r = maximize(st, f.providers);
  CHECK(format_grounding(st, r.grounding) == "a.x=2 a.y=1");
  CHECK(r.truth == doctest::Approx(0.12));
  CHECK(r.greedy == r.grounding);
  CHECK(r.leaves == 1);
  REQUIRE(r.pruned.size() == 4);
  CHECK(r.pruned[1].score == doctest::Approx(0.12));  // tie, larger grounding
  for (const PruneEvent& p : r.pruned) CHECK(p.score <= r.truth + 1e-12);
}

TEST_CASE("fixture maximisation matches brute force") {
  for (const auto& [name, text] : {std::pair{"microwave", kMicrowave}, std::pair{"toaster", kToaster},
                                   std::pair{"chair", kChair}}) {
    const Fixture f = load_fixture(name);
    const GroundedStatement st = validate(parse_statement(text), f.scene);
    const MaximizeResult r = maximize(st, f.providers);
    double best = -1.0;
    Grounding arg;
    for (const auto& w : brute_force_all(st, f.providers)) {
      if (w.truth > best) {
        best = w.truth;
        arg = w.grounding;
      }
    }
    CHECK_MESSAGE(r.truth == best, name);
    CHECK_MESSAGE(r.grounding == arg, name);
  }
}

TEST_CASE("maximize errors") {
  const Fixture f = load_fixture("microwave");
  CHECK_THROWS_AS(maximize(validate(parse_statement(std::string("!(") + kMicrowave + ")"), f.scene),
                           f.providers),
                  Unsupported);
  Scene fixed = f.scene;
  fixed.variables[0].domains = {AttrDomain::at(1), AttrDomain::at(0), AttrDomain::at(2),
                                AttrDomain::at(1)};
  CHECK_THROWS_AS(maximize(validate(parse_statement(kMicrowave), fixed), f.providers),
                  InvalidArgument);
  Scene blocked = f.scene;
  blocked.variables[0].domains[0] = AttrDomain::range(3, 6);
  const GroundedStatement bst =
      validate(parse_statement("leftof(mw, oven; img)"), blocked);
  CHECK_THROWS_AS(maximize(bst, ProviderSet::uniform()), Unsatisfiable);
  Rng rng(1);
  CHECK_THROWS_AS(sample_predicate(bst, 0, ProviderSet::uniform(), rng), Unsatisfiable);
}

TEST_CASE("evaluate and maximize agree with the oracle on random instances") {
  std::mt19937_64 rng(2024);
  testing::InstanceOptions opt;
  opt.max_groundings = 512;
  opt.allow_negation = true;
  for (int i = 0; i < 150; ++i) {
    const testing::Instance inst = testing::random_instance(rng, opt);
    const GroundedStatement st = validate(parse_statement(inst.text), inst.scene);
    const auto free = testing::oracle_free(inst);
    REQUIRE(st.order.size() == free.size());
    const auto all = testing::oracle_groundings(inst);
    REQUIRE(grounding_count(st) == all.size());
    double best = 0.0;
    std::vector<int> best_g;
    for (const auto& values : all) {
      const double expect = testing::oracle_truth(inst, values);
      CHECK_MESSAGE(evaluate(st, Grounding{values}, inst.providers) ==
                        doctest::Approx(expect).epsilon(1e-12),
                    inst.text);
      if (expect > best) {
        best = expect;
        best_g = values;
      }
    }
    if (st.has_negation) continue;
    if (st.order.empty()) {
      CHECK_THROWS_AS(maximize(st, inst.providers), InvalidArgument);
      continue;
    }
    if (best == 0.0) {
      CHECK_THROWS_AS(maximize(st, inst.providers), Unsatisfiable);
      continue;
    }
    const MaximizeResult r = maximize(st, inst.providers);
    CHECK_MESSAGE(r.truth == doctest::Approx(best).epsilon(1e-12), inst.text);
    CHECK_MESSAGE(r.grounding.values == best_g, inst.text);
  }
}

TEST_CASE("truth traces are monotone and end at the atom truth") {
  std::mt19937_64 rng(5);
  testing::InstanceOptions opt;
  opt.spatial_only_first = true;
  for (int i = 0; i < 100; ++i) {
    const testing::Instance inst = testing::random_instance(rng, opt);
    const GroundedStatement st = validate(parse_statement(inst.text), inst.scene);
    const auto all = testing::oracle_groundings(inst);
    const auto& values = all[std::uniform_int_distribution<std::size_t>(0, all.size() - 1)(rng)];
    for (std::size_t a = 0; a < st.atoms.size(); ++a) {
      const auto trace = truth_trace(st, static_cast<int>(a), Grounding{values}, inst.providers);
      double prev = 1.0;
      for (double t : trace) {
        CHECK(t <= prev);
        prev = t;
      }
      const double truth = atom_truth(st, static_cast<int>(a), Grounding{values}, inst.providers);
      CHECK(prev == truth);
      int decisions = 0;
      for_each_decision(st, static_cast<int>(a), Grounding{values},
                        [&](const Decision&) { ++decisions; });
      CHECK(static_cast<std::size_t>(decisions) <= trace.size());
    }
  }
}

TEST_CASE("predicate sampler follows the backtracking distribution") {
  std::mt19937_64 rng(77);
  testing::InstanceOptions opt;
  opt.max_groundings = 64;
  opt.max_atoms = 1;
  opt.spatial_only_first = true;
  opt.zero_factor_rate = 0.15;
  int checked = 0;
  for (int i = 0; i < 24; ++i) {
    const testing::Instance inst = testing::random_instance(rng, opt);
    const GroundedStatement st = validate(parse_statement(inst.text), inst.scene);
    if (st.scope[0].empty()) continue;
    const auto oracle = testing::oracle_ancestral(inst, 0);
    Rng srng(static_cast<std::uint64_t>(i));
    if (oracle.empty()) {
      CHECK_THROWS_AS(sample_predicate(st, 0, inst.providers, srng), Unsatisfiable);
      continue;
    }
    const int n = 40000;
    std::map<std::vector<int>, double> freq;
    for (int s = 0; s < n; ++s) freq[key_of(sample_predicate(st, 0, inst.providers, srng))] += 1.0 / n;
    CHECK_MESSAGE(testing::total_variation(freq, oracle) < 0.03, inst.text);
    ++checked;
  }
  CHECK(checked >= 8);
}

TEST_CASE("exact and approximate statement samplers") {
  const Fixture f = load_fixture("chair");
  const GroundedStatement st = validate(parse_statement(kChair), f.scene);
  const ExactSampler exact(st, f.providers);
  const auto p = exact.probabilities();
  REQUIRE(p.size() == 4);
  CHECK(p[0] == doctest::Approx(15.0 / 61));
  CHECK(p[1] == doctest::Approx(36.0 / 61));
  CHECK(p[2] == doctest::Approx(5.0 / 61));
  Rng rng(9);
  const int n = 50000;
  std::array<double, 4> fe{}, fa{};
  for (int i = 0; i < n; ++i) {
    fe[static_cast<std::size_t>(exact.sample(rng).values[0])] += 1.0 / n;
    fa[static_cast<std::size_t>(sample_statement_approx(st, f.providers, 64, rng).values[0])] += 1.0 / n;
  }
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(fe[i] == doctest::Approx(p[i]).epsilon(0.02).scale(1.0));
    CHECK(std::abs(fa[i] - p[i]) < 0.02);
  }
  CHECK_THROWS_AS(brute_force_all(st, f.providers, 3), CapExceeded);
}

TEST_CASE("brute force enumerates in lexicographic order") {
  const Fixture f = load_fixture("microwave");
  const GroundedStatement st = validate(parse_statement(kMicrowave), f.scene);
  const auto table = brute_force_all(st, f.providers);
  REQUIRE(table.size() == 16);
  for (std::size_t i = 1; i < table.size(); ++i) CHECK(table[i - 1].grounding < table[i].grounding);
  CHECK(table[8].grounding.values == std::vector<int>{2, 0});
  CHECK(table[8].truth == doctest::Approx(0.2025));
}

TEST_CASE("resampling draws in proportion to weight") {
  Rng rng(4);
  const double w[] = {0.6, 0.8, 0.0};
  const int n = 70000;
  int first = 0;
  for (int i = 0; i < n; ++i) {
    const int k = draw_index(w, rng);
    REQUIRE(k != 2);
    first += k == 0;
  }
  CHECK(static_cast<double>(first) / n == doctest::Approx(3.0 / 7).epsilon(0.02));
  const double zero[] = {0.0, 0.0};
  CHECK(draw_index(zero, rng) == -1);
}

TEST_CASE("approximate sampler fails when nothing has positive truth") {
  Scene s;
  s.width = s.height = 8;
  s.objects.push_back({"b", "couch", Box{4, 4, 2, 2}});
  VariableDecl a{"a", {AttrDomain::range(0, 7), AttrDomain::at(4), AttrDomain::at(1), AttrDomain::at(1)}};
  s.variables.push_back(a);
  auto tab = std::make_shared<TabularProvider>();
  // Category mass only on x in [0, 3]; leftof only on [4, 7].
  tab->set(PredicateType::category, 0, Attr::x, {}, {1.0, 0.0});
  tab->set(PredicateType::category, 0, Attr::x, {0}, {0.5, 0.5});
  tab->set(PredicateType::category, 0, Attr::x, {1}, {0.5, 0.5});
  tab->set(PredicateType::category, 0, Attr::x, {0, 0}, {0.5, 0.5});
  tab->set(PredicateType::category, 0, Attr::x, {0, 1}, {0.5, 0.5});
  tab->set(PredicateType::category, 0, Attr::x, {1, 0}, {0.5, 0.5});
  tab->set(PredicateType::category, 0, Attr::x, {1, 1}, {0.5, 0.5});
  ProviderSet providers;
  providers.set_default(std::make_shared<UniformProvider>());
  providers.set(PredicateType::category, tab);
  const GroundedStatement st =
      validate(parse_statement("rightof(a, b) & category(a; \"lamp\")"), s);
  Rng rng(1);
  CHECK_THROWS_AS(sample_statement_approx(st, providers, 8, rng, 4), SamplingFailed);
  CHECK_THROWS_AS(ExactSampler(st, providers), SamplingFailed);
}
