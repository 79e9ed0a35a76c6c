#include "calm/statement.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <unordered_map>

#include "calm/error.hpp"

namespace calm {

// ---------------------------------------------------------------------------
// AST helpers

Statement Statement::make_atom(Atom a) {
  Statement s;
  s.kind = Kind::atom;
  s.atom = std::move(a);
  return s;
}

Statement Statement::conj(std::vector<Statement> parts) {
  if (parts.size() < 2) throw InvalidArgument("conjunction needs at least two operands");
  Statement s;
  s.kind = Kind::conj;
  s.children = std::move(parts);
  return s;
}

Statement Statement::disj(std::vector<Statement> parts) {
  if (parts.size() < 2) throw InvalidArgument("disjunction needs at least two operands");
  Statement s;
  s.kind = Kind::disj;
  s.children = std::move(parts);
  return s;
}

Statement Statement::negate(Statement child) {
  Statement s;
  s.kind = Kind::negation;
  s.children.push_back(std::move(child));
  return s;
}

Statement Statement::quantifier(Kind kind, std::string var, std::vector<std::string> set,
                                double threshold, Statement body) {
  if (kind != Kind::forall && kind != Kind::exists) {
    throw InvalidArgument("quantifier kind must be forall or exists");
  }
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw InvalidArgument("quantifier threshold must lie in [0, 1]");
  }
  if (set.empty()) throw InvalidArgument("quantifier set must be non-empty");
  Statement s;
  s.kind = kind;
  s.variable = std::move(var);
  s.domain = std::move(set);
  s.threshold = threshold;
  s.children.push_back(std::move(body));
  return s;
}

bool operator==(const Statement& a, const Statement& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Statement::Kind::atom: return a.atom == b.atom;
    case Statement::Kind::forall:
    case Statement::Kind::exists:
      if (a.variable != b.variable || a.domain != b.domain || a.threshold != b.threshold) {
        return false;
      }
      break;
    default: break;
  }
  return a.children == b.children;
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

enum class Tok {
  ident, number, string, lparen, rparen, lbracket, rbracket, lbrace, rbrace,
  comma, semicolon, colon, bang, amp, pipe, end
};

struct Token {
  Tok kind = Tok::end;
  std::string text;
  int line = 1;
  int column = 1;
};

std::string_view tok_name(Tok t) {
  switch (t) {
    case Tok::ident: return "identifier";
    case Tok::number: return "number";
    case Tok::string: return "string";
    case Tok::lparen: return "'('";
    case Tok::rparen: return "')'";
    case Tok::lbracket: return "'['";
    case Tok::rbracket: return "']'";
    case Tok::lbrace: return "'{'";
    case Tok::rbrace: return "'}'";
    case Tok::comma: return "','";
    case Tok::semicolon: return "';'";
    case Tok::colon: return "':'";
    case Tok::bang: return "'!'";
    case Tok::amp: return "'&'";
    case Tok::pipe: return "'|'";
    case Tok::end: return "end of input";
  }
  return "?";
}

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;
  auto advance = [&] {
    if (src[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++i;
  };
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance();
      continue;
    }
    Token t;
    t.line = line;
    t.column = col;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) {
        t.text.push_back(src[i]);
        advance();
      }
      t.kind = Tok::ident;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      while (i < src.size() && (std::isdigit(static_cast<unsigned char>(src[i])) ||
                                src[i] == '.' || src[i] == 'e' || src[i] == 'E' ||
                                ((src[i] == '+' || src[i] == '-') && !t.text.empty() &&
                                 (t.text.back() == 'e' || t.text.back() == 'E')))) {
        t.text.push_back(src[i]);
        advance();
      }
      t.kind = Tok::number;
    } else if (c == '"') {
      advance();
      bool closed = false;
      while (i < src.size()) {
        if (src[i] == '\\' && i + 1 < src.size()) {
          advance();
          t.text.push_back(src[i]);
          advance();
        } else if (src[i] == '"') {
          advance();
          closed = true;
          break;
        } else {
          t.text.push_back(src[i]);
          advance();
        }
      }
      if (!closed) throw ParseError("unterminated string literal", t.line, t.column);
      t.kind = Tok::string;
    } else {
      switch (c) {
        case '(': t.kind = Tok::lparen; break;
        case ')': t.kind = Tok::rparen; break;
        case '[': t.kind = Tok::lbracket; break;
        case ']': t.kind = Tok::rbracket; break;
        case '{': t.kind = Tok::lbrace; break;
        case '}': t.kind = Tok::rbrace; break;
        case ',': t.kind = Tok::comma; break;
        case ';': t.kind = Tok::semicolon; break;
        case ':': t.kind = Tok::colon; break;
        case '!': t.kind = Tok::bang; break;
        case '&': t.kind = Tok::amp; break;
        case '|': t.kind = Tok::pipe; break;
        default:
          throw ParseError(std::string("unexpected character '") + c + "'", line, col);
      }
      t.text.assign(1, c);
      advance();
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.kind = Tok::end;
  end.line = line;
  end.column = col;
  out.push_back(end);
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Statement parse() {
    Statement s = parse_or();
    if (peek().kind != Tok::end) fail("unexpected " + std::string(tok_name(peek().kind)));
    return s;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_++]; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, peek().line, peek().column);
  }

  const Token& expect(Tok kind) {
    if (peek().kind != kind) {
      fail("expected " + std::string(tok_name(kind)) + ", found " +
           std::string(tok_name(peek().kind)));
    }
    return next();
  }

  bool is_keyword(std::string_view kw) const {
    return peek().kind == Tok::ident && peek().text == kw;
  }

  static SourceSpan span_of(const Token& t) { return {t.line, t.column}; }

  Statement parse_or() {
    const SourceSpan span = span_of(peek());
    std::vector<Statement> parts;
    parts.push_back(parse_and());
    while (peek().kind == Tok::pipe) {
      next();
      parts.push_back(parse_and());
    }
    if (parts.size() == 1) return std::move(parts.front());
    Statement s = Statement::disj(std::move(parts));
    s.span = span;
    return s;
  }

  Statement parse_and() {
    const SourceSpan span = span_of(peek());
    std::vector<Statement> parts;
    parts.push_back(parse_unary());
    while (peek().kind == Tok::amp) {
      next();
      parts.push_back(parse_unary());
    }
    if (parts.size() == 1) return std::move(parts.front());
    Statement s = Statement::conj(std::move(parts));
    s.span = span;
    return s;
  }

  Statement parse_unary() {
    const SourceSpan span = span_of(peek());
    if (peek().kind == Tok::bang) {
      next();
      Statement s = Statement::negate(parse_unary());
      s.span = span;
      return s;
    }
    if (peek().kind == Tok::lparen) {
      next();
      Statement s = parse_or();
      expect(Tok::rparen);
      return s;
    }
    if (is_keyword("forall") || is_keyword("exists")) return parse_quant();
    if (peek().kind == Tok::ident) return parse_atom();
    fail("expected a predicate, quantifier, '!' or '(' but found " +
         std::string(tok_name(peek().kind)));
  }

  Statement parse_quant() {
    const Token& kw = next();
    const SourceSpan span = span_of(kw);
    const auto kind = kw.text == "forall" ? Statement::Kind::forall : Statement::Kind::exists;
    expect(Tok::lbracket);
    const Token& num = peek();
    if (num.kind != Tok::number) fail("expected a threshold");
    double threshold = 0.0;
    const char* first = num.text.data();
    const char* last = first + num.text.size();
    auto [ptr, ec] = std::from_chars(first, last, threshold);
    if (ec != std::errc{} || ptr != last) fail("malformed threshold '" + num.text + "'");
    if (!(threshold >= 0.0 && threshold <= 1.0)) fail("threshold must lie in [0, 1]");
    next();
    expect(Tok::rbracket);
    std::string var = expect(Tok::ident).text;
    if (!is_keyword("in")) fail("expected 'in'");
    next();
    expect(Tok::lbrace);
    std::vector<std::string> set;
    set.push_back(expect(Tok::ident).text);
    while (peek().kind == Tok::comma) {
      next();
      set.push_back(expect(Tok::ident).text);
    }
    expect(Tok::rbrace);
    expect(Tok::colon);
    Statement body = parse_unary();
    Statement s = Statement::quantifier(kind, std::move(var), std::move(set), threshold,
                                        std::move(body));
    s.span = span;
    return s;
  }

  Statement parse_atom() {
    const Token& name = next();
    const SourceSpan span = span_of(name);
    auto type = parse_predicate(name.text);
    if (!type) throw ParseError("unknown predicate '" + name.text + "'", name.line, name.column);
    expect(Tok::lparen);
    Atom atom;
    atom.type = *type;
    atom.args.push_back(expect(Tok::ident).text);
    while (peek().kind == Tok::comma) {
      next();
      atom.args.push_back(expect(Tok::ident).text);
    }
    if (peek().kind == Tok::semicolon) {
      next();
      atom.contexts.push_back(parse_ctx());
      while (peek().kind == Tok::comma) {
        next();
        atom.contexts.push_back(parse_ctx());
      }
    }
    expect(Tok::rparen);
    const int arity = predicate_arity(*type);
    if (static_cast<int>(atom.args.size()) != arity) {
      throw ParseError("predicate '" + name.text + "' takes " + std::to_string(arity) +
                           " entity argument(s), got " + std::to_string(atom.args.size()),
                       name.line, name.column);
    }
    Statement s = Statement::make_atom(std::move(atom));
    s.span = span;
    return s;
  }

  ContextArg parse_ctx() {
    if (peek().kind == Tok::string) return {ContextArg::Kind::text, next().text};
    if (peek().kind == Tok::ident) return {ContextArg::Kind::ident, next().text};
    fail("expected a context (string or identifier)");
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_threshold(double t) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), t);
  std::string s(buf, ptr);
  // Keep the literal numeric-looking for the lexer ("1e-05" is fine, "1" too).
  return s;
}

void print(const Statement& s, std::string& out);

void print_child(const Statement& child, bool wrap, std::string& out) {
  if (wrap) out.push_back('(');
  print(child, out);
  if (wrap) out.push_back(')');
}

void print(const Statement& s, std::string& out) {
  using K = Statement::Kind;
  switch (s.kind) {
    case K::atom: {
      out += predicate_name(s.atom.type);
      out.push_back('(');
      for (std::size_t i = 0; i < s.atom.args.size(); ++i) {
        if (i) out += ", ";
        out += s.atom.args[i];
      }
      if (!s.atom.contexts.empty()) {
        out += "; ";
        for (std::size_t i = 0; i < s.atom.contexts.size(); ++i) {
          if (i) out += ", ";
          const ContextArg& c = s.atom.contexts[i];
          out += c.kind == ContextArg::Kind::text ? quote(c.value) : c.value;
        }
      }
      out.push_back(')');
      break;
    }
    case K::conj:
      for (std::size_t i = 0; i < s.children.size(); ++i) {
        if (i) out += " & ";
        const K ck = s.children[i].kind;
        print_child(s.children[i], ck == K::conj || ck == K::disj, out);
      }
      break;
    case K::disj:
      for (std::size_t i = 0; i < s.children.size(); ++i) {
        if (i) out += " | ";
        print_child(s.children[i], s.children[i].kind == K::disj, out);
      }
      break;
    case K::negation: {
      out.push_back('!');
      const K ck = s.children[0].kind;
      print_child(s.children[0], ck == K::conj || ck == K::disj, out);
      break;
    }
    case K::forall:
    case K::exists: {
      out += s.kind == K::forall ? "forall[" : "exists[";
      out += format_threshold(s.threshold);
      out += "] ";
      out += s.variable;
      out += " in {";
      for (std::size_t i = 0; i < s.domain.size(); ++i) {
        if (i) out += ", ";
        out += s.domain[i];
      }
      out += "}: ";
      const K ck = s.children[0].kind;
      print_child(s.children[0], ck == K::conj || ck == K::disj, out);
      break;
    }
  }
}

}  // namespace

Statement parse_statement(std::string_view text) {
  Parser p(tokenize(text));
  return p.parse();
}

std::string to_string(const Statement& s) {
  std::string out;
  print(s, out);
  return out;
}

// ---------------------------------------------------------------------------
// GroundedStatement

int GroundedStatement::entity_index(std::string_view id) const {
  for (std::size_t i = 0; i < entities.size(); ++i) {
    if (entities[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

int GroundedStatement::free_index(int entity, Attr attr) const {
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (order[i].entity == entity && order[i].attr == attr) return static_cast<int>(i);
  }
  return -1;
}

Interval GroundedStatement::static_interval(int entity, Attr attr) const {
  return entities[static_cast<std::size_t>(entity)].domains[attr_index(attr)].interval();
}

std::string GroundedStatement::free_attr_name(int i) const {
  const FreeAttr& f = order[static_cast<std::size_t>(i)];
  return entities[static_cast<std::size_t>(f.entity)].id + "." + std::string(attr_name(f.attr));
}

namespace {

double combine_node(const GroundedStatement& st, int idx, std::span<const double> truths,
                    bool complete) {
  const FormulaNode& n = st.nodes[static_cast<std::size_t>(idx)];
  using K = Statement::Kind;
  switch (n.kind) {
    case K::atom: return truths[static_cast<std::size_t>(n.atom)];
    case K::conj: {
      double v = 1.0;
      for (int c : n.children) v = std::min(v, combine_node(st, c, truths, complete));
      return v;
    }
    case K::disj: {
      double v = 0.0;
      for (int c : n.children) v = std::max(v, combine_node(st, c, truths, complete));
      return v;
    }
    case K::negation: return 1.0 - combine_node(st, n.children[0], truths, complete);
    case K::forall: {
      if (!complete) return 1.0;
      double v = 1.0;
      for (int c : n.children) v = std::min(v, combine_node(st, c, truths, complete));
      return v >= n.threshold ? 1.0 : 0.0;
    }
    case K::exists: {
      if (!complete) return 1.0;
      double v = 0.0;
      for (int c : n.children) v = std::max(v, combine_node(st, c, truths, complete));
      return v >= n.threshold ? 1.0 : 0.0;
    }
  }
  return 0.0;
}

struct Grounder {
  const Scene& scene;
  GroundedStatement& out;
  std::unordered_map<std::string, int> entity_by_id;
  std::map<std::string, ContextEmbedding> embed_cache;
  Scene raster_scene;  // constants only; the image context

  Grounder(const Scene& s, GroundedStatement& o) : scene(s), out(o) {
    raster_scene = scene;
    raster_scene.variables.clear();
  }

  const ContextEmbedding& embedding_for(const std::string& text) {
    auto it = embed_cache.find(text);
    if (it == embed_cache.end()) {
      it = embed_cache.emplace(text, embed_context(raster_scene, text)).first;
    }
    return it->second;
  }

  int resolve(const std::string& id, const std::map<std::string, std::string>& bindings,
              const SourceSpan& span) const {
    std::string name = id;
    if (auto b = bindings.find(id); b != bindings.end()) name = b->second;
    auto it = entity_by_id.find(name);
    if (it == entity_by_id.end()) {
      throw ValidationError("unresolved id '" + id + "' at " + std::to_string(span.line) + ":" +
                            std::to_string(span.column));
    }
    return it->second;
  }

  int ground(const Statement& s, const std::map<std::string, std::string>& bindings) {
    using K = Statement::Kind;
    FormulaNode node;
    node.kind = s.kind;
    switch (s.kind) {
      case K::atom: {
        PredicateInstance p;
        p.type = s.atom.type;
        p.arity = predicate_arity(s.atom.type);
        Atom printed = s.atom;
        for (int i = 0; i < p.arity; ++i) {
          p.args[static_cast<std::size_t>(i)] = resolve(s.atom.args[static_cast<std::size_t>(i)],
                                                        bindings, s.span);
          printed.args[static_cast<std::size_t>(i)] =
              out.entities[static_cast<std::size_t>(p.args[static_cast<std::size_t>(i)])].id;
        }
        if (p.arity == 2 && p.args[0] == p.args[1]) {
          throw ValidationError("spatial predicate '" + std::string(predicate_name(p.type)) +
                                "' relates entity '" + printed.args[0] + "' to itself");
        }
        for (const ContextArg& c : s.atom.contexts) {
          if (c.kind == ContextArg::Kind::ident) {
            if (!scene.has_image_context(c.value)) {
              throw ValidationError("unresolved id '" + c.value + "' (context) at " +
                                    std::to_string(s.span.line) + ":" +
                                    std::to_string(s.span.column));
            }
            p.image_contexts.push_back(c.value);
          } else {
            if (!p.text.empty()) p.text.push_back(' ');
            p.text += c.value;
          }
        }
        p.embedding = embedding_for(p.text);
        p.label = to_string(Statement::make_atom(printed));
        node.atom = static_cast<int>(out.atoms.size());
        out.atoms.push_back(std::move(p));
        break;
      }
      case K::forall:
      case K::exists: {
        out.has_quantifier = true;
        if (entity_by_id.count(s.variable)) {
          throw ValidationError("quantifier variable '" + s.variable + "' shadows a scene entity");
        }
        node.threshold = s.threshold;
        for (const std::string& member : s.domain) {
          const int e = resolve(member, bindings, s.span);
          auto inner = bindings;
          inner[s.variable] = out.entities[static_cast<std::size_t>(e)].id;
          node.children.push_back(ground(s.children[0], inner));
        }
        break;
      }
      case K::negation:
        out.has_negation = true;
        [[fallthrough]];
      default:
        for (const Statement& c : s.children) node.children.push_back(ground(c, bindings));
        break;
    }
    out.nodes.push_back(std::move(node));
    return static_cast<int>(out.nodes.size()) - 1;
  }
};

}  // namespace

double GroundedStatement::combine(std::span<const double> atom_truths, bool complete) const {
  return combine_node(*this, root, atom_truths, complete);
}

GroundedStatement validate(const Statement& ast, const Scene& scene) {
  GroundedStatement out;
  out.k = scene.k;
  if (scene.k < 2) throw ValidationError("scene branching factor k must be >= 2");
  for (Attr a : kAllAttrs) out.attr_ranges[attr_index(a)] = scene.attr_range(a);

  Grounder g(scene, out);
  auto add_entity = [&](EntityState e) {
    if (g.entity_by_id.count(e.id)) throw ValidationError("duplicate entity id '" + e.id + "'");
    g.entity_by_id[e.id] = static_cast<int>(out.entities.size());
    out.entities.push_back(std::move(e));
  };
  for (const SceneObject& o : scene.objects) {
    EntityState e{o.id, EntityKind::constant, {}};
    for (Attr a : kAllAttrs) e.domains[attr_index(a)] = AttrDomain::at(o.box.get(a));
    add_entity(std::move(e));
  }
  for (const VariableDecl& v : scene.variables) {
    add_entity(EntityState{v.id, EntityKind::variable, v.domains});
  }

  out.root = g.ground(ast, {});

  // Free attributes: A_p of every atom, restricted to non-fixed attributes,
  // ordered by entity declaration then x, y, w, h.
  std::set<std::pair<int, int>> free;
  for (const PredicateInstance& p : out.atoms) {
    for (int i = 0; i < p.arity; ++i) {
      const int e = p.args[static_cast<std::size_t>(i)];
      for (Attr a : affecting_set(p.type)) {
        if (!out.entities[static_cast<std::size_t>(e)].domains[attr_index(a)].fixed) {
          free.insert({e, attr_index(a)});
        }
      }
    }
  }
  for (const auto& [e, a] : free) {
    out.order.push_back({e, static_cast<Attr>(a)});
    const AttrDomain& d = out.entities[static_cast<std::size_t>(e)].domains[static_cast<std::size_t>(a)];
    out.trees.emplace_back(d.lo, d.hi, scene.k);
  }
  out.evaluation_only = out.order.empty();

  out.touching.assign(out.order.size(), {});
  out.scope.assign(out.atoms.size(), {});
  for (std::size_t pi = 0; pi < out.atoms.size(); ++pi) {
    const PredicateInstance& p = out.atoms[pi];
    for (int i = 0; i < p.arity; ++i) {
      for (Attr a : affecting_set(p.type)) {
        const int fi = out.free_index(p.args[static_cast<std::size_t>(i)], a);
        if (fi >= 0) out.scope[pi].push_back({fi, i, a});
      }
    }
    std::sort(out.scope[pi].begin(), out.scope[pi].end(),
              [](const ScopeEntry& x, const ScopeEntry& y) { return x.free_index < y.free_index; });
    for (const ScopeEntry& s : out.scope[pi]) {
      out.touching[static_cast<std::size_t>(s.free_index)].push_back(static_cast<int>(pi));
    }
  }
  return out;
}

}  // namespace calm
