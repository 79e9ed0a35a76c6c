#pragma once

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "calm/core.hpp"
#include "calm/domain_tree.hpp"
#include "calm/statement.hpp"
#include "json.hpp"

namespace calm {

// Current subdomain of every attribute of a predicate's arguments, plus the
// scene ranges used to normalise them.
struct SubdomainBox {
  int arity = 1;
  std::array<std::array<Interval, 4>, 2> args{};
  std::array<Interval, 4> ranges{};

  Interval& at(int arg, Attr a) { return args[static_cast<std::size_t>(arg)][attr_index(a)]; }
  const Interval& at(int arg, Attr a) const {
    return args[static_cast<std::size_t>(arg)][attr_index(a)];
  }
};

enum class HardVerdict { Blocked, Possible };

// Interval reasoning for the hard component of spatial predicates. Blocked
// means no integer point of the box satisfies the condition:
//   leftof(a, b):  a.x < b.x - ceil(b.w / 2)
//   rightof(a, b): a.x > b.x + ceil(b.w / 2)
//   above(a, b):   a.y < b.y - ceil(b.h / 2)   (image y grows downward)
//   below(a, b):   a.y > b.y + ceil(b.h / 2)
// category has no hard component and is always Possible.
HardVerdict hard_check(PredicateType type, const SubdomainBox& box);

// Pointwise form of the same conditions for fully grounded boxes.
bool hard_holds(PredicateType type, const Box& a, const Box& b);

using TruthFactors = std::vector<double>;

// Blocked entries become 0 and survivors are rescaled to sum to 1. Returns
// nullopt (AllBlocked) when nothing with positive mass survives.
std::optional<TruthFactors> block_and_renormalize(std::span<const double> factors,
                                                  std::span<const bool> blocked);

// Everything a provider may condition on when asked for the factors of one
// internal node.
struct FactorQuery {
  const PredicateInstance* pred = nullptr;
  int arg = 0;
  Attr attr = Attr::x;
  const NodePath* path = nullptr;
  Interval node{};
  int child_count = 0;
  const SubdomainBox* box = nullptr;
  std::span<const double> context;
};

// Predicate neural component f_p. Implementations are read-only after
// construction and may be shared between concurrent inference calls.
class TruthFactorProvider {
 public:
  virtual ~TruthFactorProvider() = default;
  // Returns query.child_count factors summing to 1.
  virtual TruthFactors factors(const FactorQuery& query) const = 0;
};

class UniformProvider final : public TruthFactorProvider {
 public:
  TruthFactors factors(const FactorQuery& query) const override;
};

// Stored factors keyed by (predicate type, argument position, attribute,
// node path). Context is ignored.
class TabularProvider final : public TruthFactorProvider {
 public:
  void set(PredicateType type, int arg, Attr attr, NodePath path, TruthFactors factors);
  TruthFactors factors(const FactorQuery& query) const override;
  std::size_t size() const { return table_.size(); }

  // Records: [{"pred": "leftof", "attr": "x", "arg": 0, "path": [1],
  //            "factors": [0.2, 0.8]}, ...]; "arg" defaults to 0. A wrapping
  // object {"records": [...]} is also accepted.
  static TabularProvider from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

 private:
  using Key = std::tuple<PredicateType, int, Attr, NodePath>;
  std::map<Key, TruthFactors> table_;
};

// One provider per predicate type, with an optional fallback.
class ProviderSet {
 public:
  ProviderSet() = default;
  explicit ProviderSet(std::shared_ptr<const TruthFactorProvider> all);

  void set(PredicateType type, std::shared_ptr<const TruthFactorProvider> provider);
  void set_default(std::shared_ptr<const TruthFactorProvider> provider);
  // Throws ConfigError when neither a specific nor a default provider exists.
  const TruthFactorProvider& for_type(PredicateType type) const;

  static ProviderSet uniform();

 private:
  std::array<std::shared_ptr<const TruthFactorProvider>, 5> by_type_{};
  std::shared_ptr<const TruthFactorProvider> fallback_;
};

// provide_factors: asks the matching provider and checks the result shape.
TruthFactors provide_factors(const ProviderSet& providers, const FactorQuery& query);

}  // namespace calm
