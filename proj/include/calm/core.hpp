#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace calm {

// Bounding-box attributes carried by every entity, in refinement order.
enum class Attr : std::uint8_t { x = 0, y = 1, w = 2, h = 3 };

inline constexpr std::array<Attr, 4> kAllAttrs = {Attr::x, Attr::y, Attr::w, Attr::h};
inline constexpr int kNumAttrs = 4;

std::string_view attr_name(Attr a);
std::optional<Attr> parse_attr(std::string_view name);

inline int attr_index(Attr a) { return static_cast<int>(a); }

// Pixel box addressed by its center.
struct Box {
  int x = 0;
  int y = 0;
  int w = 1;
  int h = 1;

  int get(Attr a) const;
  void set(Attr a, int v);
  // Pixel extent: [left, left + w - 1] x [top, top + h - 1].
  int left() const { return x - w / 2; }
  int top() const { return y - h / 2; }
  int right() const { return left() + w - 1; }
  int bottom() const { return top() + h - 1; }
  bool operator==(const Box&) const = default;
};

// True when the two boxes share at least one pixel.
bool boxes_overlap(const Box& a, const Box& b);

enum class PredicateType : std::uint8_t { leftof, rightof, above, below, category };

inline constexpr std::array<PredicateType, 5> kAllPredicateTypes = {
    PredicateType::leftof, PredicateType::rightof, PredicateType::above, PredicateType::below,
    PredicateType::category};

std::string_view predicate_name(PredicateType t);
std::optional<PredicateType> parse_predicate(std::string_view name);

int predicate_arity(PredicateType t);
bool is_spatial(PredicateType t);

// Affecting attribute set A_p.
std::span<const Attr> affecting_set(PredicateType t);
bool affects(PredicateType t, Attr a);

}  // namespace calm
