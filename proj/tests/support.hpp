#pragma once

// Random instances and brute-force oracles shared by the unit tests and the
// acceptance binary. The oracles re-derive partitions, hard conditions and
// truths from first principles; they only use the library to build inputs.

#include <algorithm>
#include <cmath>
#include <array>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "calm/inference.hpp"
#include "calm/predicates.hpp"
#include "calm/scene.hpp"
#include "calm/statement.hpp"

namespace calm::testing {

using Range = std::pair<int, int>;  // inclusive

// Left-biased split of [lo, hi] into min(k, size) parts.
inline std::vector<Range> oracle_split(Range r, int k) {
  const int size = r.second - r.first + 1;
  const int m = std::min(k, size);
  std::vector<Range> out;
  int lo = r.first;
  for (int i = 0; i < m; ++i) {
    const int len = size / m + (i < size % m ? 1 : 0);
    out.push_back({lo, lo + len - 1});
    lo += len;
  }
  return out;
}

// Decisions (child indices) from the root to leaf v.
inline std::vector<int> oracle_path(Range r, int k, int v) {
  std::vector<int> path;
  while (r.first != r.second) {
    const auto kids = oracle_split(r, k);
    for (std::size_t c = 0; c < kids.size(); ++c) {
      if (v >= kids[c].first && v <= kids[c].second) {
        path.push_back(static_cast<int>(c));
        r = kids[c];
        break;
      }
    }
  }
  return path;
}

inline int half_up(int v) { return v / 2 + v % 2; }

// Pointwise hard condition written from the predicate definitions.
inline bool oracle_holds(PredicateType t, const std::array<int, 4>& a, const std::array<int, 4>& b) {
  // a/b indexed x, y, w, h
  switch (t) {
    case PredicateType::leftof: return a[0] < b[0] - half_up(b[2]);
    case PredicateType::rightof: return a[0] > b[0] + half_up(b[2]);
    case PredicateType::above: return a[1] < b[1] - half_up(b[3]);
    case PredicateType::below: return a[1] > b[1] + half_up(b[3]);
    case PredicateType::category: return true;
  }
  return true;
}

// Attribute slots the hard condition of `t` reads: (arg, attr) for the
// subject coordinate, the reference coordinate and the reference extent.
inline std::array<std::pair<int, int>, 3> hard_slots(PredicateType t) {
  if (t == PredicateType::above || t == PredicateType::below) return {{{0, 1}, {1, 1}, {1, 3}}};
  return {{{0, 0}, {1, 0}, {1, 2}}};
}

// Whether any integer point of the box satisfies the hard condition, by
// enumerating every combination of the three attributes it reads.
inline bool oracle_exists(PredicateType t, const std::array<std::array<Range, 4>, 2>& box) {
  if (t == PredicateType::category) return true;
  const auto slots = hard_slots(t);
  auto range = [&](int i) {
    return box[static_cast<std::size_t>(slots[static_cast<std::size_t>(i)].first)]
              [static_cast<std::size_t>(slots[static_cast<std::size_t>(i)].second)];
  };
  std::array<int, 4> a{}, b{};
  for (int u = range(0).first; u <= range(0).second; ++u) {
    for (int v = range(1).first; v <= range(1).second; ++v) {
      for (int e = range(2).first; e <= range(2).second; ++e) {
        a[static_cast<std::size_t>(slots[0].second)] = u;
        b[static_cast<std::size_t>(slots[1].second)] = v;
        b[static_cast<std::size_t>(slots[2].second)] = e;
        if (oracle_holds(t, a, b)) return true;
      }
    }
  }
  return false;
}

// Same answer, enumerating only the extent: for a fixed extent the best
// case takes the extreme subject and reference coordinates.
inline bool oracle_exists_fast(PredicateType t, const std::array<std::array<Range, 4>, 2>& box) {
  if (t == PredicateType::category) return true;
  const auto slots = hard_slots(t);
  const Range s = box[0][static_cast<std::size_t>(slots[0].second)];
  const Range r = box[1][static_cast<std::size_t>(slots[1].second)];
  const Range e = box[1][static_cast<std::size_t>(slots[2].second)];
  const bool before = t == PredicateType::leftof || t == PredicateType::above;
  for (int ext = e.first; ext <= e.second; ++ext) {
    if (before ? s.first < r.second - half_up(ext) : s.second > r.first + half_up(ext)) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Random instances

struct EntitySpec {
  std::string id;
  bool variable = false;
  std::array<Range, 4> domain{};  // singletons for fixed attributes
};

struct AtomSpec {
  PredicateType type = PredicateType::category;
  std::array<int, 2> args{-1, -1};  // entity indices
};

// And / Or / Not tree over atoms.
struct FormulaSpec {
  enum class Kind { atom, conj, disj, negation } kind = Kind::atom;
  int atom = -1;
  std::vector<FormulaSpec> children;
};

struct Instance {
  int k = 2;
  int width = 64;
  int height = 64;
  std::vector<EntitySpec> entities;  // constants first, then variables
  std::vector<AtomSpec> atoms;
  FormulaSpec formula;
  // Factors keyed like the tabular provider.
  std::map<std::tuple<PredicateType, int, Attr, NodePath>, std::vector<double>> table;

  Scene scene;
  std::string text;
  std::shared_ptr<TabularProvider> tabular;
  ProviderSet providers;
};

inline std::array<Range, 4> full_ranges(int width, int height) {
  return {Range{0, width - 1}, Range{0, height - 1}, Range{1, width}, Range{1, height}};
}

inline std::string formula_text(const Instance& inst, const FormulaSpec& f) {
  using K = FormulaSpec::Kind;
  switch (f.kind) {
    case K::atom: {
      const AtomSpec& a = inst.atoms[static_cast<std::size_t>(f.atom)];
      std::string s = std::string(predicate_name(a.type)) + "(" +
                      inst.entities[static_cast<std::size_t>(a.args[0])].id;
      if (a.args[1] >= 0) s += ", " + inst.entities[static_cast<std::size_t>(a.args[1])].id;
      return s + "; img)";
    }
    case K::negation: return "!(" + formula_text(inst, f.children[0]) + ")";
    case K::conj:
    case K::disj: {
      std::string s = "(";
      for (std::size_t i = 0; i < f.children.size(); ++i) {
        if (i) s += f.kind == K::conj ? " & " : " | ";
        s += formula_text(inst, f.children[i]);
      }
      return s + ")";
    }
  }
  return {};
}

struct InstanceOptions {
  int max_atoms = 3;
  int max_leaves = 32;         // per free attribute
  long max_groundings = 4096;  // product over free attributes
  bool allow_negation = false;
  double zero_factor_rate = 0.05;
  bool spatial_only_first = false;  // first atom is spatial (blocking likely)
};

// Builds scene, statement text and a full random factor table.
inline Instance random_instance(std::mt19937_64& rng, const InstanceOptions& opt) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto randint = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  Instance inst;
  inst.k = randint(2, 3);
  inst.width = inst.height = 64;
  const auto full = full_ranges(inst.width, inst.height);

  // Shared leaf counts per attribute so every tree of an attribute has the
  // same shape (the table is keyed by path only).
  std::array<int, 4> leaves{};
  for (int a = 0; a < 4; ++a) leaves[static_cast<std::size_t>(a)] = randint(1, opt.max_leaves);

  const int n_const = randint(1, 2);
  const int n_var = randint(1, 2);
  for (int i = 0; i < n_const; ++i) {
    EntitySpec e{"c" + std::to_string(i), false, {}};
    const int w = randint(1, 24), h = randint(1, 24);
    e.domain = {Range{randint(w / 2, inst.width - 1 - w / 2), 0}, Range{randint(h / 2, inst.height - 1 - h / 2), 0},
                Range{w, w}, Range{h, h}};
    e.domain[0].second = e.domain[0].first;
    e.domain[1].second = e.domain[1].first;
    inst.entities.push_back(e);
  }
  for (int i = 0; i < n_var; ++i) {
    EntitySpec e{"v" + std::to_string(i), true, {}};
    for (int a = 0; a < 4; ++a) {
      const Range r = full[static_cast<std::size_t>(a)];
      const int n = leaves[static_cast<std::size_t>(a)];
      const int lo = randint(r.first, r.second - n + 1);
      e.domain[static_cast<std::size_t>(a)] = unit(rng) < 0.3 ? Range{lo, lo} : Range{lo, lo + n - 1};
    }
    inst.entities.push_back(e);
  }

  const int n_atoms = randint(1, opt.max_atoms);
  for (int i = 0; i < n_atoms; ++i) {
    AtomSpec a;
    a.type = kAllPredicateTypes[static_cast<std::size_t>(randint(0, 4))];
    if (i == 0 && opt.spatial_only_first) a.type = kAllPredicateTypes[static_cast<std::size_t>(randint(0, 3))];
    const int v = n_const + randint(0, n_var - 1);
    if (a.type == PredicateType::category) {
      a.args = {v, -1};
    } else {
      int other = randint(0, n_const + n_var - 1);
      while (other == v) other = randint(0, n_const + n_var - 1);
      a.args = unit(rng) < 0.7 ? std::array<int, 2>{v, other} : std::array<int, 2>{other, v};
    }
    inst.atoms.push_back(a);
  }

  // Free attributes and grounding cap: drop ranges until under the cap.
  auto free_product = [&] {
    std::set<std::pair<int, int>> free;
    for (const AtomSpec& a : inst.atoms) {
      for (int arg = 0; arg < predicate_arity(a.type); ++arg) {
        const EntitySpec& e = inst.entities[static_cast<std::size_t>(a.args[static_cast<std::size_t>(arg)])];
        for (Attr at : affecting_set(a.type)) {
          const Range r = e.domain[static_cast<std::size_t>(attr_index(at))];
          if (e.variable && r.first != r.second) free.insert({a.args[static_cast<std::size_t>(arg)], attr_index(at)});
        }
      }
    }
    long p = 1;
    for (const auto& [e, a] : free) {
      const Range r = inst.entities[static_cast<std::size_t>(e)].domain[static_cast<std::size_t>(a)];
      p *= r.second - r.first + 1;
    }
    return std::make_pair(p, free);
  };
  while (true) {
    auto [p, free] = free_product();
    if (p <= opt.max_groundings) break;
    // Fix the widest free attribute at its low end.
    auto widest = *free.begin();
    int best = -1;
    for (const auto& f : free) {
      const Range r = inst.entities[static_cast<std::size_t>(f.first)].domain[static_cast<std::size_t>(f.second)];
      if (r.second - r.first > best) {
        best = r.second - r.first;
        widest = f;
      }
    }
    Range& r = inst.entities[static_cast<std::size_t>(widest.first)].domain[static_cast<std::size_t>(widest.second)];
    r.second = r.first;
  }

  // Formula: random And / Or tree over all atoms.
  std::function<FormulaSpec(std::vector<int>)> build = [&](std::vector<int> ids) -> FormulaSpec {
    FormulaSpec f;
    if (ids.size() == 1) {
      f.atom = ids[0];
      if (opt.allow_negation && unit(rng) < 0.3) {
        FormulaSpec n;
        n.kind = FormulaSpec::Kind::negation;
        n.children.push_back(f);
        return n;
      }
      return f;
    }
    f.kind = unit(rng) < 0.5 ? FormulaSpec::Kind::conj : FormulaSpec::Kind::disj;
    const std::size_t cut = static_cast<std::size_t>(randint(1, static_cast<int>(ids.size()) - 1));
    f.children.push_back(build(std::vector<int>(ids.begin(), ids.begin() + static_cast<long>(cut))));
    f.children.push_back(build(std::vector<int>(ids.begin() + static_cast<long>(cut), ids.end())));
    return f;
  };
  std::vector<int> ids(inst.atoms.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
  // Contiguous splits keep atom i as the i-th atom of the statement text.
  inst.formula = build(ids);

  // Factor table over every node of every (type, arg, attr) tree shape.
  inst.tabular = std::make_shared<TabularProvider>();
  for (const AtomSpec& a : inst.atoms) {
    for (int arg = 0; arg < predicate_arity(a.type); ++arg) {
      for (Attr at : affecting_set(a.type)) {
        const Range root{0, leaves[static_cast<std::size_t>(attr_index(at))] - 1};
        std::function<void(Range, NodePath&)> fill = [&](Range r, NodePath& path) {
          if (r.first == r.second) return;
          const auto key = std::make_tuple(a.type, arg, at, path);
          const auto kids = oracle_split(r, inst.k);
          if (!inst.table.count(key)) {
            std::vector<double> f(kids.size());
            double total = 0.0;
            for (double& v : f) {
              v = unit(rng) < opt.zero_factor_rate ? 0.0 : 0.05 + unit(rng);
              total += v;
            }
            if (total == 0.0) {
              f[0] = 1.0;
              total = 1.0;
            }
            for (double& v : f) v /= total;
            inst.table[key] = f;
            inst.tabular->set(a.type, arg, at, path, f);
          }
          for (std::size_t c = 0; c < kids.size(); ++c) {
            path.push_back(static_cast<int>(c));
            fill(kids[c], path);
            path.pop_back();
          }
        };
        NodePath p;
        fill(root, p);
      }
    }
  }
  inst.providers.set_default(inst.tabular);

  inst.scene.id = "random";
  inst.scene.width = inst.width;
  inst.scene.height = inst.height;
  inst.scene.k = inst.k;
  for (const EntitySpec& e : inst.entities) {
    if (!e.variable) {
      inst.scene.objects.push_back({e.id, "thing", Box{e.domain[0].first, e.domain[1].first,
                                                       e.domain[2].first, e.domain[3].first}});
    } else {
      VariableDecl v{e.id, {}};
      for (int a = 0; a < 4; ++a) {
        const Range r = e.domain[static_cast<std::size_t>(a)];
        v.domains[static_cast<std::size_t>(a)] = AttrDomain::range(r.first, r.second);
      }
      inst.scene.variables.push_back(v);
    }
  }
  inst.text = formula_text(inst, inst.formula);
  return inst;
}

// ---------------------------------------------------------------------------
// Truth oracle

// Free attributes in refinement order: entity order, then x, y, w, h.
inline std::vector<std::pair<int, int>> oracle_free(const Instance& inst) {
  std::set<std::pair<int, int>> free;
  for (const AtomSpec& a : inst.atoms) {
    for (int arg = 0; arg < predicate_arity(a.type); ++arg) {
      const int e = a.args[static_cast<std::size_t>(arg)];
      for (Attr at : affecting_set(a.type)) {
        const Range r = inst.entities[static_cast<std::size_t>(e)].domain[static_cast<std::size_t>(attr_index(at))];
        if (r.first != r.second) free.insert({e, attr_index(at)});
      }
    }
  }
  return {free.begin(), free.end()};
}

// Truth of one atom: product of factors along each free attribute's path in
// refinement order, 0 once no point of the current box satisfies the hard
// condition. `values` is parallel to oracle_free.
inline double oracle_atom(const Instance& inst, int atom, const std::vector<int>& values) {
  const AtomSpec& a = inst.atoms[static_cast<std::size_t>(atom)];
  const auto free = oracle_free(inst);
  const int arity = predicate_arity(a.type);
  std::array<std::array<Range, 4>, 2> box{};
  for (int arg = 0; arg < arity; ++arg) {
    box[static_cast<std::size_t>(arg)] = inst.entities[static_cast<std::size_t>(a.args[static_cast<std::size_t>(arg)])].domain;
  }
  if (arity == 1) box[1] = box[0];
  if (!oracle_exists_fast(a.type, box)) return 0.0;
  double t = 1.0;
  for (std::size_t f = 0; f < free.size(); ++f) {
    const auto [e, at] = free[f];
    for (int arg = 0; arg < arity; ++arg) {
      if (a.args[static_cast<std::size_t>(arg)] != e || !affects(a.type, static_cast<Attr>(at))) continue;
      Range r = inst.entities[static_cast<std::size_t>(e)].domain[static_cast<std::size_t>(at)];
      const int offset = r.first;
      Range shape{0, r.second - r.first};
      NodePath path;
      while (shape.first != shape.second) {
        const auto kids = oracle_split(shape, inst.k);
        const int v = values[f] - offset;
        std::size_t c = 0;
        while (!(v >= kids[c].first && v <= kids[c].second)) ++c;
        t *= inst.table.at({a.type, arg, static_cast<Attr>(at), path})[c];
        path.push_back(static_cast<int>(c));
        shape = kids[c];
        box[static_cast<std::size_t>(arg)][static_cast<std::size_t>(at)] = {shape.first + offset, shape.second + offset};
        if (!oracle_exists_fast(a.type, box)) return 0.0;
      }
    }
  }
  return t;
}

inline double oracle_formula(const FormulaSpec& f, const std::vector<double>& atoms) {
  using K = FormulaSpec::Kind;
  switch (f.kind) {
    case K::atom: return atoms[static_cast<std::size_t>(f.atom)];
    case K::negation: return 1.0 - oracle_formula(f.children[0], atoms);
    case K::conj: {
      double v = 1.0;
      for (const auto& c : f.children) v = std::min(v, oracle_formula(c, atoms));
      return v;
    }
    case K::disj: {
      double v = 0.0;
      for (const auto& c : f.children) v = std::max(v, oracle_formula(c, atoms));
      return v;
    }
  }
  return 0.0;
}

inline double oracle_truth(const Instance& inst, const std::vector<int>& values) {
  std::vector<double> atoms;
  for (std::size_t p = 0; p < inst.atoms.size(); ++p) atoms.push_back(oracle_atom(inst, static_cast<int>(p), values));
  return oracle_formula(inst.formula, atoms);
}

// Every grounding in lexicographic order (last attribute fastest).
inline std::vector<std::vector<int>> oracle_groundings(const Instance& inst) {
  const auto free = oracle_free(inst);
  std::vector<std::vector<int>> out{{}};
  for (const auto& [e, a] : free) {
    const Range r = inst.entities[static_cast<std::size_t>(e)].domain[static_cast<std::size_t>(a)];
    std::vector<std::vector<int>> next;
    for (const auto& prefix : out) {
      for (int v = r.first; v <= r.second; ++v) {
        auto g = prefix;
        g.push_back(v);
        next.push_back(std::move(g));
      }
    }
    out = std::move(next);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ancestral sampling oracle

// Distribution of the backtracking ancestral sampler for one atom over the
// free attributes in its scope: at every decision the chosen child's factor
// is renormalised over the children that still lead to a hard-consistent,
// positive-product completion. Keyed by the scope values in refinement order.
inline std::map<std::vector<int>, double> oracle_ancestral(const Instance& inst, int atom) {
  const AtomSpec& a = inst.atoms[static_cast<std::size_t>(atom)];
  const auto free = oracle_free(inst);
  struct Slot {
    std::size_t free_index;
    int arg;
    int attr;
  };
  std::vector<Slot> scope;
  for (std::size_t f = 0; f < free.size(); ++f) {
    for (int arg = 0; arg < predicate_arity(a.type); ++arg) {
      if (a.args[static_cast<std::size_t>(arg)] == free[f].first && affects(a.type, static_cast<Attr>(free[f].second))) {
        scope.push_back({f, arg, free[f].second});
      }
    }
  }
  // Enumerate scope leaves with their decision sequences.
  struct Leaf {
    std::vector<int> values;
    std::vector<std::pair<int, int>> decisions;  // (slot, child)
    std::vector<double> factors;                 // chosen child's factor
    std::vector<std::vector<double>> siblings;   // full factor vectors
    bool valid = false;
  };
  std::vector<Leaf> leaves{{}};
  for (std::size_t s = 0; s < scope.size(); ++s) {
    const Slot& sl = scope[s];
    const Range r = inst.entities[static_cast<std::size_t>(a.args[static_cast<std::size_t>(sl.arg)])].domain[static_cast<std::size_t>(sl.attr)];
    std::vector<Leaf> next;
    for (const Leaf& prefix : leaves) {
      for (int v = r.first; v <= r.second; ++v) {
        Leaf l = prefix;
        l.values.push_back(v);
        const auto path = oracle_path({0, r.second - r.first}, inst.k, v - r.first);
        NodePath p;
        for (int c : path) {
          const auto& f = inst.table.at({a.type, sl.arg, static_cast<Attr>(sl.attr), p});
          l.decisions.push_back({static_cast<int>(s), c});
          l.factors.push_back(f[static_cast<std::size_t>(c)]);
          l.siblings.push_back(f);
          p.push_back(c);
        }
        next.push_back(std::move(l));
      }
    }
    leaves = std::move(next);
  }
  std::set<std::vector<std::pair<int, int>>> live;
  for (Leaf& l : leaves) {
    std::array<std::array<int, 4>, 2> pt{};
    for (int arg = 0; arg < predicate_arity(a.type); ++arg) {
      for (int at = 0; at < 4; ++at) {
        pt[static_cast<std::size_t>(arg)][static_cast<std::size_t>(at)] =
            inst.entities[static_cast<std::size_t>(a.args[static_cast<std::size_t>(arg)])].domain[static_cast<std::size_t>(at)].first;
      }
    }
    for (std::size_t s = 0; s < scope.size(); ++s) {
      pt[static_cast<std::size_t>(scope[s].arg)][static_cast<std::size_t>(scope[s].attr)] = l.values[s];
    }
    double prod = 1.0;
    for (double f : l.factors) prod *= f;
    l.valid = prod > 0.0 && (predicate_arity(a.type) == 1 || oracle_holds(a.type, pt[0], pt[1]));
    if (!l.valid) continue;
    std::vector<std::pair<int, int>> prefix;
    for (const auto& d : l.decisions) {
      prefix.push_back(d);
      live.insert(prefix);
    }
  }
  std::map<std::vector<int>, double> out;
  for (const Leaf& l : leaves) {
    if (!l.valid) continue;
    double p = 1.0;
    std::vector<std::pair<int, int>> prefix;
    for (std::size_t i = 0; i < l.decisions.size(); ++i) {
      double denom = 0.0;
      for (std::size_t c = 0; c < l.siblings[i].size(); ++c) {
        auto probe = prefix;
        probe.push_back({l.decisions[i].first, static_cast<int>(c)});
        if (live.count(probe)) denom += l.siblings[i][c];
      }
      p *= l.factors[i] / denom;
      prefix.push_back(l.decisions[i]);
    }
    out[l.values] = p;
  }
  return out;
}

inline double total_variation(const std::map<std::vector<int>, double>& p,
                              const std::map<std::vector<int>, double>& q) {
  std::set<std::vector<int>> keys;
  for (const auto& [k, v] : p) keys.insert(k);
  for (const auto& [k, v] : q) keys.insert(k);
  double tv = 0.0;
  for (const auto& k : keys) {
    const auto a = p.find(k), b = q.find(k);
    tv += std::abs((a == p.end() ? 0.0 : a->second) - (b == q.end() ? 0.0 : b->second));
  }
  return 0.5 * tv;
}

}  // namespace calm::testing
