#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "calm/predicates.hpp"
#include "calm/statement.hpp"

namespace calm {

using Rng = std::mt19937_64;

// Total assignment of the free attributes, parallel to GroundedStatement::order.
struct Grounding {
  std::vector<int> values;
  auto operator<=>(const Grounding&) const = default;
};

std::string format_grounding(const GroundedStatement& st, const Grounding& g);

// Throws InvalidArgument for a partial grounding or an out-of-range value.
void check_grounding(const GroundedStatement& st, const Grounding& g);

// Box of `atom` before any refinement: fixed values as singletons, free
// attributes as their full domain.
SubdomainBox initial_box(const GroundedStatement& st, int atom);

// Truth of one predicate under `g`: the product of the factors chosen along
// the path of every attribute in its scope (refinement order), or 0 as soon
// as the hard component blocks the current box.
double atom_truth(const GroundedStatement& st, int atom, const Grounding& g,
                  const ProviderSet& providers);

// Truth-so-far of `atom` after each decision on the path of `g`; a hard
// block appends a final 0.
std::vector<double> truth_trace(const GroundedStatement& st, int atom, const Grounding& g,
                                const ProviderSet& providers);

std::vector<double> atom_truths(const GroundedStatement& st, const Grounding& g,
                                const ProviderSet& providers);

double evaluate(const GroundedStatement& st, const Grounding& g, const ProviderSet& providers);

// One domain-tree decision on the path of `g`; the supervision unit for
// training predicate networks.
struct Decision {
  int atom = 0;
  int arg = 0;
  Attr attr = Attr::x;
  NodePath path;
  Interval node{};
  int child_count = 0;
  SubdomainBox box;
  int chosen = 0;
};

// Visits every decision of `atom` along the path of `g`, in the order
// atom_truth queries them. Stops early if the hard component blocks.
void for_each_decision(const GroundedStatement& st, int atom, const Grounding& g,
                       const std::function<void(const Decision&)>& visit);

// ---------------------------------------------------------------------------
// Truth maximisation

struct PruneEvent {
  int free_index = 0;
  Interval interval{};
  double score = 0.0;
  double incumbent = 0.0;
};

struct MaximizeResult {
  Grounding grounding;
  double truth = 0.0;
  Grounding greedy;          // first leaf reached
  double greedy_truth = 0.0;
  std::vector<PruneEvent> pruned;
  std::size_t expanded = 0;  // internal nodes whose factors were queried
  std::size_t leaves = 0;
};

// Greedy descent (children ordered by connective-amalgamated truth-so-far,
// ties to the lower index) that yields the first incumbent, continued as a
// depth-first branch-and-bound that prunes any branch whose truth-so-far is
// below the incumbent. Returns the maximum-truth grounding; ties resolve to
// the lexicographically smallest grounding in refinement order.
//
// Throws Unsupported for statements containing negation, InvalidArgument
// when there is nothing to refine, and Unsatisfiable when no grounding has
// positive truth.
MaximizeResult maximize(const GroundedStatement& st, const ProviderSet& providers);

// ---------------------------------------------------------------------------
// Sampling

struct Assignment {
  int free_index = 0;
  int value = 0;
};

// Ancestral sampling of one predicate over the attributes in its scope.
// Blocked children are discarded and survivors renormalised; when every
// child of a node is blocked the sampler backtracks and zeroes the edge into
// that node. Throws Unsatisfiable when the whole tree is blocked.
std::vector<Assignment> sample_predicate(const GroundedStatement& st, int atom,
                                         const ProviderSet& providers, Rng& rng);

inline constexpr std::size_t kDefaultGroundingCap = std::size_t{1} << 20;

struct WeightedGrounding {
  Grounding grounding;
  double truth = 0.0;
};

// Every grounding with its truth, in lexicographic order.
std::size_t grounding_count(const GroundedStatement& st);
std::vector<WeightedGrounding> brute_force_all(const GroundedStatement& st,
                                               const ProviderSet& providers,
                                               std::size_t cap = kDefaultGroundingCap);

// Exact truth-proportional sampler built from brute_force_all; each draw
// after construction is O(log n).
class ExactSampler {
 public:
  ExactSampler(const GroundedStatement& st, const ProviderSet& providers,
               std::size_t cap = kDefaultGroundingCap);

  Grounding sample(Rng& rng) const;
  const std::vector<WeightedGrounding>& table() const { return table_; }
  // Normalised probability of each table entry.
  std::vector<double> probabilities() const;

 private:
  std::vector<WeightedGrounding> table_;
  std::vector<double> cumulative_;
};

Grounding sample_statement_exact(const GroundedStatement& st, const ProviderSet& providers,
                                 Rng& rng, std::size_t cap = kDefaultGroundingCap);

// Proposal + resampling. Candidates are drawn round-robin from each
// predicate's ancestral sampler (attributes outside its scope uniformly),
// duplicates merged, and one candidate is resampled in proportion to its
// statement truth. If every candidate has truth 0 the round is redrawn, up
// to `max_retries` times, before SamplingFailed is thrown.
Grounding sample_statement_approx(const GroundedStatement& st, const ProviderSet& providers,
                                  int n_proposals, Rng& rng, int max_retries = 16);

// Index drawn in proportion to non-negative weights; -1 when all are zero.
int draw_index(std::span<const double> weights, Rng& rng);

}  // namespace calm
