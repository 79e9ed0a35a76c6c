#include "calm/core.hpp"

#include <algorithm>

namespace calm {

namespace {

constexpr std::array<Attr, 2> kHorizontal = {Attr::x, Attr::w};
constexpr std::array<Attr, 2> kVertical = {Attr::y, Attr::h};

}  // namespace

std::string_view attr_name(Attr a) {
  switch (a) {
    case Attr::x: return "x";
    case Attr::y: return "y";
    case Attr::w: return "w";
    case Attr::h: return "h";
  }
  return "?";
}

std::optional<Attr> parse_attr(std::string_view name) {
  for (Attr a : kAllAttrs) {
    if (attr_name(a) == name) return a;
  }
  return std::nullopt;
}

int Box::get(Attr a) const {
  switch (a) {
    case Attr::x: return x;
    case Attr::y: return y;
    case Attr::w: return w;
    case Attr::h: return h;
  }
  return 0;
}

void Box::set(Attr a, int v) {
  switch (a) {
    case Attr::x: x = v; break;
    case Attr::y: y = v; break;
    case Attr::w: w = v; break;
    case Attr::h: h = v; break;
  }
}

bool boxes_overlap(const Box& a, const Box& b) {
  return a.left() <= b.right() && b.left() <= a.right() && a.top() <= b.bottom() &&
         b.top() <= a.bottom();
}

std::string_view predicate_name(PredicateType t) {
  switch (t) {
    case PredicateType::leftof: return "leftof";
    case PredicateType::rightof: return "rightof";
    case PredicateType::above: return "above";
    case PredicateType::below: return "below";
    case PredicateType::category: return "category";
  }
  return "?";
}

std::optional<PredicateType> parse_predicate(std::string_view name) {
  for (PredicateType t : kAllPredicateTypes) {
    if (predicate_name(t) == name) return t;
  }
  return std::nullopt;
}

int predicate_arity(PredicateType t) { return t == PredicateType::category ? 1 : 2; }

bool is_spatial(PredicateType t) { return t != PredicateType::category; }

std::span<const Attr> affecting_set(PredicateType t) {
  switch (t) {
    case PredicateType::leftof:
    case PredicateType::rightof: return kHorizontal;
    case PredicateType::above:
    case PredicateType::below: return kVertical;
    case PredicateType::category: return kAllAttrs;
  }
  return {};
}

bool affects(PredicateType t, Attr a) {
  const auto set = affecting_set(t);
  return std::find(set.begin(), set.end(), a) != set.end();
}

}  // namespace calm
