#include "calm/inference.hpp"

#include <algorithm>
#include <memory>
#include <numeric>

#include "calm/error.hpp"

namespace calm {

namespace {

FactorQuery make_query(const GroundedStatement& st, int atom, const ScopeEntry& entry,
                       const NodePath& path, Interval node, const SubdomainBox& box) {
  const PredicateInstance& p = st.atoms[static_cast<std::size_t>(atom)];
  FactorQuery q;
  q.pred = &p;
  q.arg = entry.arg;
  q.attr = entry.attr;
  q.path = &path;
  q.node = node;
  q.child_count = DomainTree::child_count(node, st.k);
  q.box = &box;
  q.context = p.embedding;
  return q;
}

HardVerdict check_with(const GroundedStatement& st, int atom, SubdomainBox& box,
                       const ScopeEntry& entry, Interval candidate) {
  Interval& slot = box.at(entry.arg, entry.attr);
  const Interval saved = slot;
  slot = candidate;
  const HardVerdict v = hard_check(st.atoms[static_cast<std::size_t>(atom)].type, box);
  slot = saved;
  return v;
}

// Shared walk for atom_truth / for_each_decision.
double walk_atom(const GroundedStatement& st, int atom, const Grounding& g,
                 const ProviderSet* providers, const std::function<void(const Decision&)>* visit,
                 std::vector<double>* trace = nullptr) {
  const PredicateType type = st.atoms[static_cast<std::size_t>(atom)].type;
  SubdomainBox box = initial_box(st, atom);
  auto blocked = [&] {
    if (trace) trace->push_back(0.0);
    return 0.0;
  };
  if (hard_check(type, box) == HardVerdict::Blocked) return blocked();
  double truth = 1.0;
  NodePath path;
  for (const ScopeEntry& entry : st.scope[static_cast<std::size_t>(atom)]) {
    const DomainTree& tree = st.trees[static_cast<std::size_t>(entry.free_index)];
    const int v = g.values[static_cast<std::size_t>(entry.free_index)];
    Interval node = tree.root();
    path.clear();
    while (!node.singleton()) {
      const int c = DomainTree::child_index_of(node, st.k, v);
      if (providers) {
        const TruthFactors f = provide_factors(*providers, make_query(st, atom, entry, path, node, box));
        truth *= f[static_cast<std::size_t>(c)];
      }
      if (visit) {
        Decision d;
        d.atom = atom;
        d.arg = entry.arg;
        d.attr = entry.attr;
        d.path = path;
        d.node = node;
        d.child_count = DomainTree::child_count(node, st.k);
        d.box = box;
        d.chosen = c;
        (*visit)(d);
      }
      node = DomainTree::child(node, st.k, c);
      path.push_back(c);
      box.at(entry.arg, entry.attr) = node;
      if (hard_check(type, box) == HardVerdict::Blocked) return blocked();
      if (trace) trace->push_back(truth);
    }
  }
  return truth;
}

}  // namespace

std::string format_grounding(const GroundedStatement& st, const Grounding& g) {
  std::string out;
  for (std::size_t i = 0; i < g.values.size() && i < st.order.size(); ++i) {
    if (i) out += ' ';
    out += st.free_attr_name(static_cast<int>(i)) + "=" + std::to_string(g.values[i]);
  }
  return out;
}

void check_grounding(const GroundedStatement& st, const Grounding& g) {
  if (g.values.size() != st.order.size()) {
    throw InvalidArgument("partial grounding: expected " + std::to_string(st.order.size()) +
                          " values, got " + std::to_string(g.values.size()));
  }
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    if (!st.trees[i].root().contains(g.values[i])) {
      throw InvalidArgument("grounding value for " + st.free_attr_name(static_cast<int>(i)) +
                            " is outside its domain");
    }
  }
}

SubdomainBox initial_box(const GroundedStatement& st, int atom) {
  const PredicateInstance& p = st.atoms[static_cast<std::size_t>(atom)];
  SubdomainBox box;
  box.arity = p.arity;
  box.ranges = st.attr_ranges;
  for (int i = 0; i < p.arity; ++i) {
    for (Attr a : kAllAttrs) box.at(i, a) = st.static_interval(p.args[static_cast<std::size_t>(i)], a);
  }
  return box;
}

double atom_truth(const GroundedStatement& st, int atom, const Grounding& g,
                  const ProviderSet& providers) {
  return walk_atom(st, atom, g, &providers, nullptr);
}

std::vector<double> truth_trace(const GroundedStatement& st, int atom, const Grounding& g,
                                const ProviderSet& providers) {
  check_grounding(st, g);
  std::vector<double> trace;
  walk_atom(st, atom, g, &providers, nullptr, &trace);
  return trace;
}

std::vector<double> atom_truths(const GroundedStatement& st, const Grounding& g,
                                const ProviderSet& providers) {
  check_grounding(st, g);
  std::vector<double> out(st.atoms.size());
  for (std::size_t i = 0; i < st.atoms.size(); ++i) {
    out[i] = atom_truth(st, static_cast<int>(i), g, providers);
  }
  return out;
}

double evaluate(const GroundedStatement& st, const Grounding& g, const ProviderSet& providers) {
  const std::vector<double> t = atom_truths(st, g, providers);
  return st.combine(t, true);
}

void for_each_decision(const GroundedStatement& st, int atom, const Grounding& g,
                       const std::function<void(const Decision&)>& visit) {
  check_grounding(st, g);
  walk_atom(st, atom, g, nullptr, &visit);
}

// ---------------------------------------------------------------------------
// Maximisation

namespace {

class Maximizer {
 public:
  Maximizer(const GroundedStatement& st, const ProviderSet& providers)
      : st_(st), providers_(providers) {}

  MaximizeResult run() {
    const std::size_t n = st_.order.size();
    cur_.resize(n);
    paths_.assign(n, {});
    for (std::size_t i = 0; i < n; ++i) cur_[i] = st_.trees[i].root();
    boxes_.clear();
    tsf_.assign(st_.atoms.size(), 1.0);
    for (std::size_t p = 0; p < st_.atoms.size(); ++p) {
      boxes_.push_back(initial_box(st_, static_cast<int>(p)));
      if (hard_check(st_.atoms[p].type, boxes_.back()) == HardVerdict::Blocked) tsf_[p] = 0.0;
    }
    if (st_.combine(tsf_, false) > 0.0) descend(0);
    if (!has_incumbent_) throw Unsatisfiable("no grounding has positive truth");
    return std::move(result_);
  }

 private:
  struct Child {
    int index;
    Interval interval;
    double score;
  };

  void descend(std::size_t fi) {
    while (fi < cur_.size() && cur_[fi].singleton()) ++fi;
    if (fi == cur_.size()) {
      leaf();
      return;
    }
    ++result_.expanded;
    const Interval node = cur_[fi];
    const int m = DomainTree::child_count(node, st_.k);
    const std::vector<int>& touching = st_.touching[fi];

    // child_tsf[t * m + c]: truth-so-far of touching atom t below child c.
    std::vector<double> child_tsf(touching.size() * static_cast<std::size_t>(m));
    for (std::size_t t = 0; t < touching.size(); ++t) {
      const int atom = touching[t];
      const ScopeEntry& entry = entry_for(atom, static_cast<int>(fi));
      SubdomainBox& box = boxes_[static_cast<std::size_t>(atom)];
      const TruthFactors f =
          provide_factors(providers_, make_query(st_, atom, entry, paths_[fi], node, box));
      for (int c = 0; c < m; ++c) {
        const Interval ci = DomainTree::child(node, st_.k, c);
        const bool blocked = check_with(st_, atom, box, entry, ci) == HardVerdict::Blocked;
        child_tsf[t * m + c] =
            blocked ? 0.0 : tsf_[static_cast<std::size_t>(atom)] * f[static_cast<std::size_t>(c)];
      }
    }

    std::vector<Child> children;
    children.reserve(static_cast<std::size_t>(m));
    for (int c = 0; c < m; ++c) {
      apply_tsf(touching, child_tsf, m, c);
      children.push_back({c, DomainTree::child(node, st_.k, c), st_.combine(tsf_, false)});
      restore_tsf(touching);
    }
    std::stable_sort(children.begin(), children.end(),
                     [](const Child& a, const Child& b) { return a.score > b.score; });

    for (const Child& ch : children) {
      if (ch.score <= 0.0) continue;  // blocked or zero mass below
      if (has_incumbent_) {
        const bool below = ch.score < best_truth_;
        const bool tie_useless = ch.score == best_truth_ && !may_hold_smaller(fi, ch.interval);
        if (below || tie_useless) {
          result_.pruned.push_back({static_cast<int>(fi), ch.interval, ch.score, best_truth_});
          continue;
        }
      }
      // Enter the child.
      cur_[fi] = ch.interval;
      paths_[fi].push_back(ch.index);
      std::vector<Interval> saved_box(touching.size());
      for (std::size_t t = 0; t < touching.size(); ++t) {
        const int atom = touching[t];
        const ScopeEntry& entry = entry_for(atom, static_cast<int>(fi));
        Interval& slot = boxes_[static_cast<std::size_t>(atom)].at(entry.arg, entry.attr);
        saved_box[t] = slot;
        slot = ch.interval;
      }
      apply_tsf(touching, child_tsf, m, ch.index);
      descend(fi);
      restore_tsf(touching);
      for (std::size_t t = 0; t < touching.size(); ++t) {
        const int atom = touching[t];
        const ScopeEntry& entry = entry_for(atom, static_cast<int>(fi));
        boxes_[static_cast<std::size_t>(atom)].at(entry.arg, entry.attr) = saved_box[t];
      }
      paths_[fi].pop_back();
      cur_[fi] = node;
    }
  }

  void leaf() {
    ++result_.leaves;
    const double truth = st_.combine(tsf_, true);
    Grounding g;
    g.values.reserve(cur_.size());
    for (const Interval& iv : cur_) g.values.push_back(iv.lo);
    if (!has_incumbent_) {
      result_.greedy = g;
      result_.greedy_truth = truth;
    }
    if (!has_incumbent_ || truth > best_truth_ || (truth == best_truth_ && g < result_.grounding)) {
      has_incumbent_ = true;
      best_truth_ = truth;
      result_.truth = truth;
      result_.grounding = std::move(g);
    }
  }

  // Whether the branch (cur_[0..fi) fixed, attribute fi inside `iv`, the rest
  // unrefined) contains a grounding lexicographically below the incumbent.
  bool may_hold_smaller(std::size_t fi, Interval iv) const {
    const std::vector<int>& best = result_.grounding.values;
    for (std::size_t j = 0; j < cur_.size(); ++j) {
      const int lowest = j < fi ? cur_[j].lo : (j == fi ? iv.lo : cur_[j].lo);
      if (lowest != best[j]) return lowest < best[j];
    }
    return false;
  }

  const ScopeEntry& entry_for(int atom, int fi) const {
    for (const ScopeEntry& e : st_.scope[static_cast<std::size_t>(atom)]) {
      if (e.free_index == fi) return e;
    }
    throw Error("internal: atom does not touch free attribute");
  }

  void apply_tsf(const std::vector<int>& touching, const std::vector<double>& child_tsf, int m,
                 int c) {
    for (std::size_t t = 0; t < touching.size(); ++t) {
      double& slot = tsf_[static_cast<std::size_t>(touching[t])];
      saved_tsf_stack_.push_back(slot);
      slot = child_tsf[t * static_cast<std::size_t>(m) + static_cast<std::size_t>(c)];
    }
  }

  void restore_tsf(const std::vector<int>& touching) {
    for (std::size_t t = touching.size(); t-- > 0;) {
      tsf_[static_cast<std::size_t>(touching[t])] = saved_tsf_stack_.back();
      saved_tsf_stack_.pop_back();
    }
  }

  const GroundedStatement& st_;
  const ProviderSet& providers_;
  std::vector<Interval> cur_;
  std::vector<NodePath> paths_;
  std::vector<SubdomainBox> boxes_;
  std::vector<double> tsf_;
  std::vector<double> saved_tsf_stack_;
  bool has_incumbent_ = false;
  double best_truth_ = 0.0;
  MaximizeResult result_;
};

}  // namespace

MaximizeResult maximize(const GroundedStatement& st, const ProviderSet& providers) {
  if (st.has_negation) {
    throw Unsupported("maximize does not support negation; use brute_force_all");
  }
  if (st.order.empty()) throw InvalidArgument("statement has no free attributes to maximise");
  return Maximizer(st, providers).run();
}

// ---------------------------------------------------------------------------
// Sampling

int draw_index(std::span<const double> weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (total <= 0.0) return -1;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng) * total;
  double acc = 0.0;
  int last = -1;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last = static_cast<int>(i);
    if (u < acc) return last;
  }
  return last;
}

namespace {

class AncestralSampler {
 public:
  AncestralSampler(const GroundedStatement& st, int atom, const ProviderSet& providers, Rng& rng)
      : st_(st),
        atom_(atom),
        providers_(providers),
        rng_(rng),
        scope_(st.scope[static_cast<std::size_t>(atom)]),
        box_(initial_box(st, atom)),
        values_(scope_.size(), 0) {}

  std::vector<Assignment> run() {
    const PredicateType type = st_.atoms[static_cast<std::size_t>(atom_)].type;
    if (hard_check(type, box_) == HardVerdict::Blocked || !sample_attr(0)) {
      throw Unsatisfiable("predicate " + st_.atoms[static_cast<std::size_t>(atom_)].label +
                          " is blocked everywhere");
    }
    std::vector<Assignment> out;
    out.reserve(scope_.size());
    for (std::size_t j = 0; j < scope_.size(); ++j) out.push_back({scope_[j].free_index, values_[j]});
    return out;
  }

 private:
  bool sample_attr(std::size_t j) {
    if (j == scope_.size()) return true;
    NodePath path;
    return sample_node(j, st_.trees[static_cast<std::size_t>(scope_[j].free_index)].root(), path);
  }

  bool sample_node(std::size_t j, Interval node, NodePath& path) {
    if (node.singleton()) {
      values_[j] = node.lo;
      return sample_attr(j + 1);
    }
    const ScopeEntry& entry = scope_[j];
    const int m = DomainTree::child_count(node, st_.k);
    const TruthFactors f =
        provide_factors(providers_, make_query(st_, atom_, entry, path, node, box_));
    auto blocked = std::make_unique<bool[]>(static_cast<std::size_t>(m));
    for (int c = 0; c < m; ++c) {
      blocked[static_cast<std::size_t>(c)] =
          check_with(st_, atom_, box_, entry, DomainTree::child(node, st_.k, c)) ==
          HardVerdict::Blocked;
    }
    std::optional<TruthFactors> w =
        block_and_renormalize(f, std::span<const bool>(blocked.get(), static_cast<std::size_t>(m)));
    if (!w) return false;
    TruthFactors weights = std::move(*w);
    Interval& slot = box_.at(entry.arg, entry.attr);
    while (true) {
      const int c = draw_index(weights, rng_);
      if (c < 0) return false;
      slot = DomainTree::child(node, st_.k, c);
      path.push_back(c);
      if (sample_node(j, slot, path)) return true;
      path.pop_back();
      slot = node;
      // Everything below c is blocked: zero the edge and renormalise.
      weights[static_cast<std::size_t>(c)] = 0.0;
      double total = 0.0;
      for (double x : weights) total += x;
      if (total <= 0.0) return false;
      for (double& x : weights) x /= total;
    }
  }

  const GroundedStatement& st_;
  int atom_;
  const ProviderSet& providers_;
  Rng& rng_;
  const std::vector<ScopeEntry>& scope_;
  SubdomainBox box_;
  std::vector<int> values_;
};

}  // namespace

std::vector<Assignment> sample_predicate(const GroundedStatement& st, int atom,
                                         const ProviderSet& providers, Rng& rng) {
  if (atom < 0 || atom >= static_cast<int>(st.atoms.size())) {
    throw InvalidArgument("predicate index out of range");
  }
  return AncestralSampler(st, atom, providers, rng).run();
}

std::size_t grounding_count(const GroundedStatement& st) {
  std::size_t total = 1;
  for (const DomainTree& t : st.trees) {
    const std::size_t n = t.leaf_count();
    if (total > (std::size_t{1} << 62) / n) return std::size_t{1} << 62;
    total *= n;
  }
  return total;
}

std::vector<WeightedGrounding> brute_force_all(const GroundedStatement& st,
                                               const ProviderSet& providers, std::size_t cap) {
  const std::size_t count = grounding_count(st);
  if (count > cap) {
    throw CapExceeded("statement has " + std::to_string(count) + " groundings; cap is " +
                      std::to_string(cap));
  }
  std::vector<WeightedGrounding> out;
  out.reserve(count);
  Grounding g;
  for (const DomainTree& t : st.trees) g.values.push_back(t.lo());
  while (true) {
    out.push_back({g, evaluate(st, g, providers)});
    // Odometer, last attribute fastest.
    std::size_t i = g.values.size();
    while (i > 0) {
      --i;
      if (g.values[i] < st.trees[i].hi()) {
        ++g.values[i];
        break;
      }
      g.values[i] = st.trees[i].lo();
      if (i == 0) return out;
    }
    if (g.values.empty()) return out;
  }
}

ExactSampler::ExactSampler(const GroundedStatement& st, const ProviderSet& providers,
                           std::size_t cap)
    : table_(brute_force_all(st, providers, cap)) {
  cumulative_.reserve(table_.size());
  double acc = 0.0;
  for (const WeightedGrounding& w : table_) {
    acc += w.truth;
    cumulative_.push_back(acc);
  }
  if (acc <= 0.0) throw SamplingFailed("every grounding has truth 0");
}

Grounding ExactSampler::sample(Rng& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng) * cumulative_.back();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  std::size_t idx = static_cast<std::size_t>(it - cumulative_.begin());
  if (idx >= table_.size()) idx = table_.size() - 1;
  // Skip zero-mass entries that share a cumulative value.
  while (table_[idx].truth <= 0.0 && idx + 1 < table_.size()) ++idx;
  return table_[idx].grounding;
}

std::vector<double> ExactSampler::probabilities() const {
  std::vector<double> p;
  p.reserve(table_.size());
  const double total = cumulative_.back();
  for (const WeightedGrounding& w : table_) p.push_back(w.truth / total);
  return p;
}

Grounding sample_statement_exact(const GroundedStatement& st, const ProviderSet& providers,
                                 Rng& rng, std::size_t cap) {
  return ExactSampler(st, providers, cap).sample(rng);
}

Grounding sample_statement_approx(const GroundedStatement& st, const ProviderSet& providers,
                                  int n_proposals, Rng& rng, int max_retries) {
  if (n_proposals < 1) throw InvalidArgument("n_proposals must be >= 1");
  if (st.order.empty()) throw InvalidArgument("statement has no free attributes to sample");
  // Every predicate proposes; one with an empty scope contributes a uniform draw.
  std::vector<int> proposers(st.atoms.size());
  std::iota(proposers.begin(), proposers.end(), 0);
  std::vector<bool> dead(proposers.size(), false);

  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    std::vector<Grounding> candidates;
    candidates.reserve(static_cast<std::size_t>(n_proposals));
    for (int i = 0; i < n_proposals; ++i) {
      const std::size_t slot = static_cast<std::size_t>(i) % proposers.size();
      Grounding g;
      g.values.resize(st.order.size());
      for (std::size_t f = 0; f < st.order.size(); ++f) {
        std::uniform_int_distribution<int> pick(st.trees[f].lo(), st.trees[f].hi());
        g.values[f] = pick(rng);
      }
      if (!dead[slot]) {
        try {
          for (const Assignment& a : sample_predicate(st, proposers[slot], providers, rng)) {
            g.values[static_cast<std::size_t>(a.free_index)] = a.value;
          }
        } catch (const Unsatisfiable&) {
          dead[slot] = true;  // keep the uniform draw for this slot
        }
      }
      candidates.push_back(std::move(g));
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    std::vector<double> truths;
    truths.reserve(candidates.size());
    for (const Grounding& g : candidates) truths.push_back(evaluate(st, g, providers));
    const int pick = draw_index(truths, rng);
    if (pick >= 0) return candidates[static_cast<std::size_t>(pick)];
  }
  throw SamplingFailed("all proposals had truth 0 after " + std::to_string(max_retries) +
                       " retries");
}

}  // namespace calm
