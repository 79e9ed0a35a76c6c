#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "calm/core.hpp"
#include "calm/domain_tree.hpp"
#include "calm/embedding.hpp"
#include "calm/scene.hpp"

namespace calm {

struct SourceSpan {
  int line = 1;
  int column = 1;
};

struct ContextArg {
  enum class Kind { text, ident };
  Kind kind = Kind::ident;
  std::string value;
  bool operator==(const ContextArg&) const = default;
};

struct Atom {
  PredicateType type = PredicateType::category;
  std::vector<std::string> args;
  std::vector<ContextArg> contexts;
  bool operator==(const Atom&) const = default;
};

// Logic AST. Conjunction and disjunction hold >= 2 children; negation and
// the quantifiers hold exactly one.
struct Statement {
  enum class Kind { atom, conj, disj, negation, forall, exists };

  Kind kind = Kind::atom;
  Atom atom;
  std::vector<Statement> children;
  std::string variable;
  std::vector<std::string> domain;
  double threshold = 0.0;
  SourceSpan span;

  static Statement make_atom(Atom a);
  static Statement conj(std::vector<Statement> parts);
  static Statement disj(std::vector<Statement> parts);
  static Statement negate(Statement child);
  static Statement quantifier(Kind kind, std::string var, std::vector<std::string> set,
                              double threshold, Statement body);
};

// Structural equality; source spans are ignored.
bool operator==(const Statement& a, const Statement& b);

// Grammar:
//   stmt  := or
//   or    := and ("|" and)*
//   and   := unary ("&" unary)*
//   unary := "!" unary | quant | atom | "(" stmt ")"
//   quant := ("forall" | "exists") "[" float "]" ident "in" "{" ident ("," ident)* "}" ":" unary
//   atom  := ident "(" ident ("," ident)* (";" ctxarg ("," ctxarg)*)? ")"
//   ctxarg := string | ident
// Throws ParseError (with line/column) on syntax errors, unknown predicate
// names and arity mismatches.
Statement parse_statement(std::string_view text);

// Canonical DSL text; parse_statement(to_string(s)) == s.
std::string to_string(const Statement& s);

// ---------------------------------------------------------------------------
// Grounding against a scene.

enum class EntityKind { constant, variable };

struct EntityState {
  std::string id;
  EntityKind kind = EntityKind::constant;
  std::array<AttrDomain, 4> domains;
};

struct PredicateInstance {
  PredicateType type = PredicateType::category;
  int arity = 1;
  std::array<int, 2> args{-1, -1};  // entity indices
  std::vector<std::string> image_contexts;
  std::string text;
  ContextEmbedding embedding;
  std::string label;  // atom as written, after quantifier substitution
};

struct FreeAttr {
  int entity = 0;
  Attr attr = Attr::x;
  bool operator==(const FreeAttr&) const = default;
};

// One refinable attribute inside a predicate's scope.
struct ScopeEntry {
  int free_index = 0;
  int arg = 0;
  Attr attr = Attr::x;
};

struct FormulaNode {
  Statement::Kind kind = Statement::Kind::atom;
  int atom = -1;
  std::vector<int> children;
  double threshold = 0.0;
};

// A statement resolved against a scene: quantifiers are expanded over their
// sets, atoms are flattened into `atoms`, and the free attributes are listed
// in refinement order (entity declaration order, then x, y, w, h).
struct GroundedStatement {
  std::vector<EntityState> entities;
  std::vector<PredicateInstance> atoms;
  std::vector<FormulaNode> nodes;
  int root = -1;
  std::vector<FreeAttr> order;
  std::vector<DomainTree> trees;                // parallel to `order`
  std::vector<std::vector<ScopeEntry>> scope;   // per atom, by free index
  std::vector<std::vector<int>> touching;       // per free attribute: atoms
  std::array<Interval, 4> attr_ranges{};        // normalisation ranges
  int k = 2;
  bool evaluation_only = false;
  bool has_negation = false;
  bool has_quantifier = false;

  int entity_index(std::string_view id) const;
  // Index into `order`, or -1 when (entity, attr) is not free.
  int free_index(int entity, Attr attr) const;
  // Fixed value or full domain; the state before any refinement.
  Interval static_interval(int entity, Attr attr) const;
  std::string free_attr_name(int free_index) const;

  // Connective semantics over per-atom truths: And = min, Or = max,
  // Not = 1 - t, quantifiers threshold the min / max of their instances.
  // With `complete == false` quantifier nodes score 1 (their truth is only
  // defined once every atom is fully refined).
  double combine(std::span<const double> atom_truths, bool complete = true) const;
};

// Errors: unresolved entity or context ids, quantifier variables shadowing a
// scene entity, repeated arguments to a spatial predicate.
GroundedStatement validate(const Statement& ast, const Scene& scene);

}  // namespace calm
