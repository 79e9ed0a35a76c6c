#include "calm/predicates.hpp"

#include <cmath>

#include "calm/error.hpp"

namespace calm {

namespace {

int ceil_half(int v) { return (v + 1) / 2; }

}  // namespace

HardVerdict hard_check(PredicateType type, const SubdomainBox& box) {
  if (type == PredicateType::category) return HardVerdict::Possible;
  if (box.arity != 2) throw InvalidArgument("spatial hard check needs a two-argument box");
  const Interval& a_x = box.at(0, Attr::x);
  const Interval& a_y = box.at(0, Attr::y);
  const Interval& b_x = box.at(1, Attr::x);
  const Interval& b_y = box.at(1, Attr::y);
  const Interval& b_w = box.at(1, Attr::w);
  const Interval& b_h = box.at(1, Attr::h);
  bool satisfiable = true;
  switch (type) {
    case PredicateType::leftof:
      // Best case: smallest a.x against the rightmost possible left edge.
      satisfiable = a_x.lo < b_x.hi - ceil_half(b_w.lo);
      break;
    case PredicateType::rightof:
      satisfiable = a_x.hi > b_x.lo + ceil_half(b_w.lo);
      break;
    case PredicateType::above:
      satisfiable = a_y.lo < b_y.hi - ceil_half(b_h.lo);
      break;
    case PredicateType::below:
      satisfiable = a_y.hi > b_y.lo + ceil_half(b_h.lo);
      break;
    case PredicateType::category: break;
  }
  return satisfiable ? HardVerdict::Possible : HardVerdict::Blocked;
}

bool hard_holds(PredicateType type, const Box& a, const Box& b) {
  switch (type) {
    case PredicateType::leftof: return a.x < b.x - ceil_half(b.w);
    case PredicateType::rightof: return a.x > b.x + ceil_half(b.w);
    case PredicateType::above: return a.y < b.y - ceil_half(b.h);
    case PredicateType::below: return a.y > b.y + ceil_half(b.h);
    case PredicateType::category: return true;
  }
  return true;
}

std::optional<TruthFactors> block_and_renormalize(std::span<const double> factors,
                                                  std::span<const bool> blocked) {
  if (factors.size() != blocked.size()) {
    throw InvalidArgument("block mask size does not match factor count");
  }
  TruthFactors out(factors.begin(), factors.end());
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (blocked[i]) out[i] = 0.0;
    total += out[i];
  }
  if (total <= 0.0) return std::nullopt;
  for (double& v : out) v /= total;
  return out;
}

TruthFactors UniformProvider::factors(const FactorQuery& query) const {
  return TruthFactors(static_cast<std::size_t>(query.child_count),
                      1.0 / static_cast<double>(query.child_count));
}

void TabularProvider::set(PredicateType type, int arg, Attr attr, NodePath path,
                          TruthFactors factors) {
  double sum = 0.0;
  for (double f : factors) {
    if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("truth factor outside [0, 1]");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("truth factors must sum to 1");
  table_[{type, arg, attr, std::move(path)}] = std::move(factors);
}

TruthFactors TabularProvider::factors(const FactorQuery& query) const {
  auto it = table_.find({query.pred->type, query.arg, query.attr, *query.path});
  if (it == table_.end()) {
    std::string p = "[";
    for (std::size_t i = 0; i < query.path->size(); ++i) {
      if (i) p += ",";
      p += std::to_string((*query.path)[i]);
    }
    p += "]";
    throw ConfigError("tabular provider has no entry for " +
                      std::string(predicate_name(query.pred->type)) + " arg " +
                      std::to_string(query.arg) + " attr " + std::string(attr_name(query.attr)) +
                      " path " + p);
  }
  return it->second;
}

TabularProvider TabularProvider::from_json(const nlohmann::json& j) {
  if (j.is_object() && !j.contains("records")) {
    throw ConfigError("tabular provider expects a \"records\" array");
  }
  const nlohmann::json& records = j.is_object() ? j.at("records") : j;
  if (!records.is_array()) throw ConfigError("tabular provider expects an array of records");
  TabularProvider out;
  try {
    for (const auto& r : records) {
      auto type = parse_predicate(r.at("pred").get<std::string>());
      if (!type) throw ConfigError("unknown predicate in tabular record");
      auto attr = parse_attr(r.at("attr").get<std::string>());
      if (!attr) throw ConfigError("unknown attribute in tabular record");
      out.set(*type, r.value("arg", 0), *attr, r.at("path").get<NodePath>(),
              r.at("factors").get<TruthFactors>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed tabular record: ") + e.what());
  }
  return out;
}

nlohmann::json TabularProvider::to_json() const {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& [key, f] : table_) {
    const auto& [type, arg, attr, path] = key;
    records.push_back({{"pred", predicate_name(type)},
                       {"arg", arg},
                       {"attr", attr_name(attr)},
                       {"path", path},
                       {"factors", f}});
  }
  return {{"format", "calm-tabular"}, {"records", records}};
}

ProviderSet::ProviderSet(std::shared_ptr<const TruthFactorProvider> all)
    : fallback_(std::move(all)) {}

void ProviderSet::set(PredicateType type, std::shared_ptr<const TruthFactorProvider> provider) {
  by_type_[static_cast<std::size_t>(type)] = std::move(provider);
}

void ProviderSet::set_default(std::shared_ptr<const TruthFactorProvider> provider) {
  fallback_ = std::move(provider);
}

const TruthFactorProvider& ProviderSet::for_type(PredicateType type) const {
  const auto& p = by_type_[static_cast<std::size_t>(type)];
  if (p) return *p;
  if (fallback_) return *fallback_;
  throw ConfigError("missing provider for predicate '" + std::string(predicate_name(type)) + "'");
}

ProviderSet ProviderSet::uniform() { return ProviderSet(std::make_shared<UniformProvider>()); }

TruthFactors provide_factors(const ProviderSet& providers, const FactorQuery& query) {
  TruthFactors f = providers.for_type(query.pred->type).factors(query);
  if (static_cast<int>(f.size()) != query.child_count) {
    throw ConfigError("provider returned " + std::to_string(f.size()) + " factors for a node with " +
                      std::to_string(query.child_count) + " children");
  }
  return f;
}

}  // namespace calm
