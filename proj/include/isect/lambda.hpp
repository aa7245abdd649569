#pragma once

// Lambda terms with pairs, and a typing layer whose judgments carry their
// sequent-calculus subtyping evidence. Subject reduction and subject
// expansion are implemented as executable transformations on typing
// derivations, built from generation lemmas, constructor inversion, and a
// substitution lemma.

#include <algorithm>
#include <cctype>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "isc.hpp"
#include "parse.hpp"
#include "types.hpp"

namespace isect {

// ---- terms ----

class Term {
 public:
  enum class Kind { Var, Abs, App, Pair, Proj1, Proj2 };

  static Term var(std::string name) {
    return make(Kind::Var, std::move(name), {});
  }
  static Term abs(std::string name, Term body) {
    return make(Kind::Abs, std::move(name), {std::move(body)});
  }
  static Term app(Term f, Term a) {
    return make(Kind::App, "", {std::move(f), std::move(a)});
  }
  static Term pair(Term a, Term b) {
    return make(Kind::Pair, "", {std::move(a), std::move(b)});
  }
  static Term proj1(Term t) { return make(Kind::Proj1, "", {std::move(t)}); }
  static Term proj2(Term t) { return make(Kind::Proj2, "", {std::move(t)}); }

  Kind kind() const { return node_->kind; }
  const std::string& name() const { return node_->name; }
  const Term& child(std::size_t i) const { return node_->children[i]; }
  std::size_t arity() const { return node_->children.size(); }

  // alpha-equivalence
  bool operator==(const Term& o) const {
    std::vector<std::pair<std::string, std::string>> env;
    return alpha_eq(*this, o, env);
  }
  bool operator!=(const Term& o) const { return !(*this == o); }

 private:
  struct Node {
    Kind kind;
    std::string name;
    std::vector<Term> children;
  };
  static Term make(Kind k, std::string n, std::vector<Term> ch) {
    return Term(
        std::make_shared<Node>(Node{k, std::move(n), std::move(ch)}));
  }
  explicit Term(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  static bool alpha_eq(const Term& a, const Term& b,
                       std::vector<std::pair<std::string, std::string>>& env) {
    if (a.kind() != b.kind()) return false;
    switch (a.kind()) {
      case Kind::Var: {
        for (auto it = env.rbegin(); it != env.rend(); ++it) {
          if (it->first == a.name() || it->second == b.name())
            return it->first == a.name() && it->second == b.name();
        }
        return a.name() == b.name();
      }
      case Kind::Abs: {
        env.emplace_back(a.name(), b.name());
        bool r = alpha_eq(a.child(0), b.child(0), env);
        env.pop_back();
        return r;
      }
      default: {
        for (std::size_t i = 0; i < a.arity(); ++i)
          if (!alpha_eq(a.child(i), b.child(i), env)) return false;
        return true;
      }
    }
  }

  std::shared_ptr<const Node> node_;
};

inline void free_vars_into(const Term& t, std::set<std::string>& out,
                           std::vector<std::string>& bound) {
  switch (t.kind()) {
    case Term::Kind::Var:
      if (std::find(bound.begin(), bound.end(), t.name()) == bound.end())
        out.insert(t.name());
      return;
    case Term::Kind::Abs:
      bound.push_back(t.name());
      free_vars_into(t.child(0), out, bound);
      bound.pop_back();
      return;
    default:
      for (std::size_t i = 0; i < t.arity(); ++i)
        free_vars_into(t.child(i), out, bound);
  }
}

inline std::set<std::string> free_vars(const Term& t) {
  std::set<std::string> out;
  std::vector<std::string> bound;
  free_vars_into(t, out, bound);
  return out;
}

inline std::string fresh_name(std::string base,
                              const std::set<std::string>& avoid) {
  while (avoid.count(base)) base += "'";
  return base;
}

// Capture-avoiding; clashing binders get primes appended.
inline Term substitute(const Term& t, const std::string& x, const Term& u) {
  switch (t.kind()) {
    case Term::Kind::Var:
      return t.name() == x ? u : t;
    case Term::Kind::Abs: {
      if (t.name() == x) return t;
      std::set<std::string> fvu = free_vars(u);
      if (fvu.count(t.name())) {
        std::set<std::string> avoid = fvu;
        std::set<std::string> fvb = free_vars(t.child(0));
        avoid.insert(fvb.begin(), fvb.end());
        avoid.insert(x);
        std::string fresh = fresh_name(t.name(), avoid);
        Term body = substitute(t.child(0), t.name(), Term::var(fresh));
        return Term::abs(fresh, substitute(body, x, u));
      }
      return Term::abs(t.name(), substitute(t.child(0), x, u));
    }
    case Term::Kind::App:
      return Term::app(substitute(t.child(0), x, u),
                       substitute(t.child(1), x, u));
    case Term::Kind::Pair:
      return Term::pair(substitute(t.child(0), x, u),
                        substitute(t.child(1), x, u));
    case Term::Kind::Proj1:
      return Term::proj1(substitute(t.child(0), x, u));
    case Term::Kind::Proj2:
      return Term::proj2(substitute(t.child(0), x, u));
  }
  throw Error("unreachable");
}

using TermPath = std::vector<std::size_t>;

inline const Term& subterm_at(const Term& t, const TermPath& path,
                              std::size_t from = 0) {
  if (from == path.size()) return t;
  if (path[from] >= t.arity()) throw Error("term path out of range");
  return subterm_at(t.child(path[from]), path, from + 1);
}

inline Term replace_at(const Term& t, const TermPath& path, const Term& s,
                       std::size_t from = 0) {
  if (from == path.size()) return s;
  if (path[from] >= t.arity()) throw Error("term path out of range");
  auto rebuild = [&](std::size_t i) {
    return i == path[from] ? replace_at(t.child(i), path, s, from + 1)
                           : t.child(i);
  };
  switch (t.kind()) {
    case Term::Kind::Abs:
      return Term::abs(t.name(), rebuild(0));
    case Term::Kind::App:
      return Term::app(rebuild(0), rebuild(1));
    case Term::Kind::Pair:
      return Term::pair(rebuild(0), rebuild(1));
    case Term::Kind::Proj1:
      return Term::proj1(rebuild(0));
    case Term::Kind::Proj2:
      return Term::proj2(rebuild(0));
    case Term::Kind::Var:
      break;
  }
  throw Error("term path out of range");
}

// ---- reduction ----

enum class RedexKind { Beta, Pi1, Pi2 };

struct RedexInfo {
  TermPath path;
  RedexKind kind;
  Term redex;  // the unreduced subterm
};

inline std::optional<RedexKind> redex_kind(const Term& t) {
  if (t.kind() == Term::Kind::App && t.child(0).kind() == Term::Kind::Abs)
    return RedexKind::Beta;
  if (t.kind() == Term::Kind::Proj1 && t.child(0).kind() == Term::Kind::Pair)
    return RedexKind::Pi1;
  if (t.kind() == Term::Kind::Proj2 && t.child(0).kind() == Term::Kind::Pair)
    return RedexKind::Pi2;
  return std::nullopt;
}

inline Term reduce_root(const Term& t) {
  auto k = redex_kind(t);
  if (!k) throw Error("not a redex");
  switch (*k) {
    case RedexKind::Beta:
      return substitute(t.child(0).child(0), t.child(0).name(), t.child(1));
    case RedexKind::Pi1:
      return t.child(0).child(0);
    case RedexKind::Pi2:
      return t.child(0).child(1);
  }
  throw Error("unreachable");
}

inline void find_redexes_into(const Term& t, TermPath& path,
                              std::vector<RedexInfo>& out) {
  if (auto k = redex_kind(t)) out.push_back({path, *k, t});
  for (std::size_t i = 0; i < t.arity(); ++i) {
    path.push_back(i);
    find_redexes_into(t.child(i), path, out);
    path.pop_back();
  }
}

// Preorder; the first entry is the leftmost-outermost redex.
inline std::vector<RedexInfo> find_redexes(const Term& t) {
  std::vector<RedexInfo> out;
  TermPath path;
  find_redexes_into(t, path, out);
  return out;
}

inline Term reduce_at(const Term& t, const TermPath& path) {
  return replace_at(t, path, reduce_root(subterm_at(t, path)));
}

// ---- term syntax ----

inline const char* term_kw_fst = "fst";
inline const char* term_kw_snd = "snd";

namespace detail {

inline void print_term_at(const Term& t, int prec, std::string& out) {
  // prec 0: anything; 1: application operand chain; 2: single factor
  switch (t.kind()) {
    case Term::Kind::Var:
      out += t.name();
      return;
    case Term::Kind::Abs:
      if (prec > 0) out += "(";
      out += "\\";
      out += t.name();
      out += ". ";
      print_term_at(t.child(0), 0, out);
      if (prec > 0) out += ")";
      return;
    case Term::Kind::App:
      if (prec > 1) out += "(";
      print_term_at(t.child(0), 1, out);
      out += " ";
      print_term_at(t.child(1), 2, out);
      if (prec > 1) out += ")";
      return;
    case Term::Kind::Pair:
      out += "<";
      print_term_at(t.child(0), 0, out);
      out += ", ";
      print_term_at(t.child(1), 0, out);
      out += ">";
      return;
    case Term::Kind::Proj1:
    case Term::Kind::Proj2:
      if (prec > 1) out += "(";
      out += t.kind() == Term::Kind::Proj1 ? term_kw_fst : term_kw_snd;
      out += " ";
      print_term_at(t.child(0), 2, out);
      if (prec > 1) out += ")";
      return;
  }
}

}  // namespace detail

inline std::string print_term(const Term& t) {
  std::string out;
  detail::print_term_at(t, 0, out);
  return out;
}

namespace detail {

// term   ::= "\" IDENT "." term | app
// app    ::= factor+
// factor ::= IDENT | "<" term "," term ">" | "fst" factor | "snd" factor
//          | "(" term ")"
struct TermParser {
  const std::string& src;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < src.size() && std::isspace((unsigned char)src[pos])) ++pos;
  }
  char peek() {
    skip_ws();
    return pos < src.size() ? src[pos] : '\0';
  }
  void expect(char c, const char* what) {
    if (peek() != c) throw SyntaxError(pos, std::string("expected ") + what);
    ++pos;
  }
  std::string ident() {
    skip_ws();
    if (pos >= src.size() || !ident_start(src[pos]))
      throw SyntaxError(pos, "expected an identifier");
    std::size_t start = pos;
    while (pos < src.size() && ident_char(src[pos])) ++pos;
    return src.substr(start, pos - start);
  }
  bool starts_factor() {
    char c = peek();
    return c == '(' || c == '<' || ident_start(c);
  }
  Term term() {
    if (peek() == '\\') {
      ++pos;
      std::string n = ident();
      if (n == term_kw_fst || n == term_kw_snd)
        throw SyntaxError(pos, "'" + n + "' is reserved");
      expect('.', "'.'");
      return Term::abs(std::move(n), term());
    }
    return app();
  }
  Term app() {
    Term t = factor();
    while (starts_factor()) t = Term::app(std::move(t), factor());
    return t;
  }
  Term factor() {
    char c = peek();
    if (c == '(') {
      ++pos;
      Term t = term();
      expect(')', "')'");
      return t;
    }
    if (c == '<') {
      ++pos;
      Term a = term();
      expect(',', "','");
      Term b = term();
      expect('>', "'>'");
      return Term::pair(std::move(a), std::move(b));
    }
    std::string n = ident();
    if (n == term_kw_fst) return Term::proj1(factor());
    if (n == term_kw_snd) return Term::proj2(factor());
    return Term::var(std::move(n));
  }
};

}  // namespace detail

inline Term parse_term(const std::string& src) {
  detail::TermParser p{src};
  Term t = p.term();
  p.skip_ws();
  if (p.pos != src.size())
    throw SyntaxError(p.pos, "trailing input after term");
  return t;
}

// ---- typing contexts and derivations ----

struct TypingEntry {
  std::string name;
  Type type;
};

using TypingContext = std::vector<TypingEntry>;

inline bool same_context(const TypingContext& a, const TypingContext& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].name != b[i].name || a[i].type != b[i].type) return false;
  return true;
}

inline std::optional<std::size_t> context_find(const TypingContext& ctx,
                                               const std::string& name) {
  for (std::size_t i = 0; i < ctx.size(); ++i)
    if (ctx[i].name == name) return i;
  return std::nullopt;
}

class TypingDerivation {
 public:
  enum class Kind { Var, Leq, Inter, Omega, Abs, App, Pair, Proj1, Proj2 };

  const TypingContext& ctx() const { return node_->ctx; }
  const Term& term() const { return node_->term; }
  const Type& type() const { return node_->type; }
  Kind kind() const { return node_->kind; }
  const std::vector<TypingDerivation>& premises() const {
    return node_->premises;
  }
  const TypingDerivation& premise(std::size_t i = 0) const {
    return node_->premises[i];
  }
  // Leq only
  const IscDerivation& evidence() const { return *node_->evidence; }

  static TypingDerivation var_rule(TypingContext ctx,
                                   const std::string& name) {
    auto i = context_find(ctx, name);
    if (!i) throw Error("var rule: " + name + " is not in the context");
    Type ty = ctx[*i].type;
    return make(Kind::Var, std::move(ctx), Term::var(name), std::move(ty), {},
                std::nullopt);
  }

  // evidence: [premise type] |- new type
  static TypingDerivation leq_rule(TypingDerivation p, IscDerivation ev) {
    const Sequent& s = ev.conclusion();
    if (s.context.size() != 1 || s.context[0] != p.type())
      throw Error("leq rule: evidence context is not the premise type");
    TypingContext c = p.ctx();
    Term t = p.term();
    Type ty = s.goal;
    return make(Kind::Leq, std::move(c), std::move(t), std::move(ty),
                {std::move(p)}, std::move(ev));
  }

  static TypingDerivation inter_rule(TypingDerivation p1,
                                     TypingDerivation p2) {
    if (!same_context(p1.ctx(), p2.ctx()) || p1.term() != p2.term())
      throw Error("inter rule: premises type different judgments");
    TypingContext c = p1.ctx();
    Term t = p1.term();
    Type ty = Type::inter(p1.type(), p2.type());
    return make(Kind::Inter, std::move(c), std::move(t), std::move(ty),
                {std::move(p1), std::move(p2)}, std::nullopt);
  }

  // any subject, even one with stray free variables
  static TypingDerivation omega_rule(TypingContext ctx, Term t, Type top) {
    return make(Kind::Omega, std::move(ctx), std::move(t), std::move(top), {},
                std::nullopt);
  }

  // premise context must end with the bound hypothesis
  static TypingDerivation abs_rule(TypingDerivation p) {
    if (p.ctx().empty()) throw Error("abs rule: no hypothesis to bind");
    TypingContext c(p.ctx().begin(), p.ctx().end() - 1);
    const TypingEntry& hyp = p.ctx().back();
    Term t = Term::abs(hyp.name, p.term());
    Type ty = Type::constr("arrow", {hyp.type}, {p.type()});
    return make(Kind::Abs, std::move(c), std::move(t), std::move(ty),
                {std::move(p)}, std::nullopt);
  }

  static TypingDerivation app_rule(TypingDerivation pf, TypingDerivation pa) {
    if (!same_context(pf.ctx(), pa.ctx()))
      throw Error("app rule: contexts differ");
    const Type& fty = pf.type();
    if (!fty.is_constr() || fty.head() != "arrow" ||
        fty.contra_args().size() != 1 || fty.co_args().size() != 1)
      throw Error("app rule: operator type is not an arrow");
    if (fty.contra_args()[0] != pa.type())
      throw Error("app rule: argument type mismatch");
    TypingContext c = pf.ctx();
    Term t = Term::app(pf.term(), pa.term());
    Type ty = fty.co_args()[0];
    return make(Kind::App, std::move(c), std::move(t), std::move(ty),
                {std::move(pf), std::move(pa)}, std::nullopt);
  }

  static TypingDerivation pair_rule(TypingDerivation p1,
                                    TypingDerivation p2) {
    if (!same_context(p1.ctx(), p2.ctx()))
      throw Error("pair rule: contexts differ");
    TypingContext c = p1.ctx();
    Term t = Term::pair(p1.term(), p2.term());
    Type ty = Type::constr("prod", {}, {p1.type(), p2.type()});
    return make(Kind::Pair, std::move(c), std::move(t), std::move(ty),
                {std::move(p1), std::move(p2)}, std::nullopt);
  }

  static TypingDerivation proj_rule(bool first, TypingDerivation p) {
    const Type& pty = p.type();
    if (!pty.is_constr() || pty.head() != "prod" ||
        !pty.contra_args().empty() || pty.co_args().size() != 2)
      throw Error("proj rule: premise type is not a pair type");
    TypingContext c = p.ctx();
    Term t = first ? Term::proj1(p.term()) : Term::proj2(p.term());
    Type ty = pty.co_args()[first ? 0 : 1];
    return make(first ? Kind::Proj1 : Kind::Proj2, std::move(c), std::move(t),
                std::move(ty), {std::move(p)}, std::nullopt);
  }
  static TypingDerivation proj1_rule(TypingDerivation p) {
    return proj_rule(true, std::move(p));
  }
  static TypingDerivation proj2_rule(TypingDerivation p) {
    return proj_rule(false, std::move(p));
  }

 private:
  struct Node {
    Kind kind;
    TypingContext ctx;
    Term term;
    Type type;
    std::vector<TypingDerivation> premises;
    std::optional<IscDerivation> evidence;
  };
  static TypingDerivation make(Kind k, TypingContext c, Term t, Type ty,
                               std::vector<TypingDerivation> prem,
                               std::optional<IscDerivation> ev) {
    return TypingDerivation(std::make_shared<Node>(
        Node{k, std::move(c), std::move(t), std::move(ty), std::move(prem),
             std::move(ev)}));
  }
  explicit TypingDerivation(std::shared_ptr<const Node> n)
      : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

inline std::string print_typing_judgment(const TypingDerivation& d) {
  std::string out;
  for (std::size_t i = 0; i < d.ctx().size(); ++i) {
    if (i) out += ", ";
    out += d.ctx()[i].name + " : " + print_type(d.ctx()[i].type);
  }
  if (!d.ctx().empty()) out += " ";
  out += "|- " + print_term(d.term()) + " : " + print_type(d.type());
  return out;
}

// ---- checking ----

namespace detail {

inline void check_typing_node(const TypingDerivation& d, const Signature& sig,
                              std::string& path) {
  auto fail = [&](const std::string& what) -> void {
    throw RuleViolation(path.empty() ? "root" : path, what);
  };
  std::set<std::string> seen;
  for (const auto& e : d.ctx()) {
    if (!seen.insert(e.name).second)
      fail("duplicate context variable " + e.name);
    validate_type(e.type, sig);
  }
  validate_type(d.type(), sig);
  using K = TypingDerivation::Kind;
  switch (d.kind()) {
    case K::Var: {
      if (d.term().kind() != Term::Kind::Var) fail("var rule on a non-variable");
      auto i = context_find(d.ctx(), d.term().name());
      if (!i || d.ctx()[*i].type != d.type())
        fail("variable type does not match its context entry");
      break;
    }
    case K::Leq: {
      const Sequent& s = d.evidence().conclusion();
      if (s.context.size() != 1 || s.context[0] != d.premise().type() ||
          s.goal != d.type())
        fail("subtyping evidence concludes the wrong sequent");
      check_isc(d.evidence(), sig);
      if (d.premise().term() != d.term()) fail("subject changed across leq");
      if (!same_context(d.premise().ctx(), d.ctx()))
        fail("context changed across leq");
      break;
    }
    case K::Inter: {
      if (!d.type().is_inter()) fail("inter rule with a non-intersection type");
      for (int i = 0; i < 2; ++i) {
        const TypingDerivation& p = d.premise(i);
        if (!same_context(p.ctx(), d.ctx()) || p.term() != d.term())
          fail("inter premise types a different judgment");
      }
      if (d.premise(0).type() != d.type().left() ||
          d.premise(1).type() != d.type().right())
        fail("inter components do not match the premises");
      break;
    }
    case K::Omega:
      if (!is_top_atom(d.type(), sig))
        fail("omega rule must conclude a 0-ary width-0 atom");
      break;
    case K::Abs: {
      if (d.term().kind() != Term::Kind::Abs) fail("abs rule on a non-abstraction");
      const TypingDerivation& p = d.premise();
      if (p.ctx().size() != d.ctx().size() + 1 ||
          !same_context(TypingContext(p.ctx().begin(), p.ctx().end() - 1),
                        d.ctx()))
        fail("abs premise context must extend the conclusion context");
      const TypingEntry& hyp = p.ctx().back();
      if (hyp.name != d.term().name()) fail("bound variable name mismatch");
      Type want = Type::constr("arrow", {hyp.type}, {p.type()});
      if (d.type() != want) fail("abs type mismatch");
      break;
    }
    case K::App:
    case K::Pair:
    case K::Proj1:
    case K::Proj2:
      // structural factories enforce the shape; re-verify contexts
      for (const auto& p : d.premises())
        if (!same_context(p.ctx(), d.ctx()))
          fail("premise context differs from the conclusion");
      break;
  }
  std::size_t base = path.size();
  for (std::size_t i = 0; i < d.premises().size(); ++i) {
    path += path.empty() ? "" : "/";
    path += std::to_string(i);
    check_typing_node(d.premises()[i], sig, path);
    path.resize(base);
  }
}

}  // namespace detail

inline void check_typing(const TypingDerivation& d, const Signature& sig) {
  std::string path;
  detail::check_typing_node(d, sig, path);
}

// ---- structural transformations on typing derivations ----

// Inserts an unused hypothesis at context position pos (everywhere).
inline TypingDerivation weaken_typing(const TypingDerivation& d,
                                      std::size_t pos, const std::string& name,
                                      const Type& type) {
  using K = TypingDerivation::Kind;
  if (pos > d.ctx().size()) throw Error("weaken_typing: position out of range");
  TypingContext c = d.ctx();
  c.insert(c.begin() + pos, {name, type});
  switch (d.kind()) {
    case K::Var:
      return TypingDerivation::var_rule(std::move(c), d.term().name());
    case K::Leq:
      return TypingDerivation::leq_rule(
          weaken_typing(d.premise(), pos, name, type), d.evidence());
    case K::Inter:
      return TypingDerivation::inter_rule(
          weaken_typing(d.premise(0), pos, name, type),
          weaken_typing(d.premise(1), pos, name, type));
    case K::Omega:
      return TypingDerivation::omega_rule(std::move(c), d.term(), d.type());
    case K::Abs:
      return TypingDerivation::abs_rule(
          weaken_typing(d.premise(), pos, name, type));
    case K::App:
      return TypingDerivation::app_rule(
          weaken_typing(d.premise(0), pos, name, type),
          weaken_typing(d.premise(1), pos, name, type));
    case K::Pair:
      return TypingDerivation::pair_rule(
          weaken_typing(d.premise(0), pos, name, type),
          weaken_typing(d.premise(1), pos, name, type));
    case K::Proj1:
      return TypingDerivation::proj1_rule(
          weaken_typing(d.premise(), pos, name, type));
    case K::Proj2:
      return TypingDerivation::proj2_rule(
          weaken_typing(d.premise(), pos, name, type));
  }
  throw Error("unreachable");
}

// Removes the hypothesis at pos; it must be unused by any variable leaf.
inline TypingDerivation strengthen_typing(const TypingDerivation& d,
                                          std::size_t pos) {
  using K = TypingDerivation::Kind;
  if (pos >= d.ctx().size())
    throw Error("strengthen_typing: position out of range");
  const std::string& name = d.ctx()[pos].name;
  TypingContext c = d.ctx();
  c.erase(c.begin() + pos);
  switch (d.kind()) {
    case K::Var:
      if (d.term().name() == name)
        throw Error("strengthen_typing: hypothesis " + name + " is used");
      return TypingDerivation::var_rule(std::move(c), d.term().name());
    case K::Leq:
      return TypingDerivation::leq_rule(strengthen_typing(d.premise(), pos),
                                        d.evidence());
    case K::Inter:
      return TypingDerivation::inter_rule(strengthen_typing(d.premise(0), pos),
                                          strengthen_typing(d.premise(1), pos));
    case K::Omega:
      return TypingDerivation::omega_rule(std::move(c), d.term(), d.type());
    case K::Abs:
      return TypingDerivation::abs_rule(strengthen_typing(d.premise(), pos));
    case K::App:
      return TypingDerivation::app_rule(strengthen_typing(d.premise(0), pos),
                                        strengthen_typing(d.premise(1), pos));
    case K::Pair:
      return TypingDerivation::pair_rule(strengthen_typing(d.premise(0), pos),
                                         strengthen_typing(d.premise(1), pos));
    case K::Proj1:
      return TypingDerivation::proj1_rule(strengthen_typing(d.premise(), pos));
    case K::Proj2:
      return TypingDerivation::proj2_rule(strengthen_typing(d.premise(), pos));
  }
  throw Error("unreachable");
}

// Renames a context hypothesis (and the matching free occurrences). The new
// name must be unused anywhere in the derivation.
inline TypingDerivation rename_hyp(const TypingDerivation& d,
                                   const std::string& from,
                                   const std::string& to) {
  using K = TypingDerivation::Kind;
  TypingContext c = d.ctx();
  for (auto& e : c)
    if (e.name == from) e.name = to;
  Term t = substitute(d.term(), from, Term::var(to));
  switch (d.kind()) {
    case K::Var:
      return TypingDerivation::var_rule(std::move(c), t.name());
    case K::Leq:
      return TypingDerivation::leq_rule(rename_hyp(d.premise(), from, to),
                                        d.evidence());
    case K::Inter:
      return TypingDerivation::inter_rule(rename_hyp(d.premise(0), from, to),
                                          rename_hyp(d.premise(1), from, to));
    case K::Omega:
      return TypingDerivation::omega_rule(std::move(c), std::move(t),
                                          d.type());
    case K::Abs:
      return TypingDerivation::abs_rule(rename_hyp(d.premise(), from, to));
    case K::App:
      return TypingDerivation::app_rule(rename_hyp(d.premise(0), from, to),
                                        rename_hyp(d.premise(1), from, to));
    case K::Pair:
      return TypingDerivation::pair_rule(rename_hyp(d.premise(0), from, to),
                                         rename_hyp(d.premise(1), from, to));
    case K::Proj1:
      return TypingDerivation::proj1_rule(rename_hyp(d.premise(), from, to));
    case K::Proj2:
      return TypingDerivation::proj2_rule(rename_hyp(d.premise(), from, to));
  }
  throw Error("unreachable");
}

// Replaces the type of hypothesis `name` by `stronger`, patching every use
// with the given evidence [stronger] |- old type.
inline TypingDerivation coerce_hyp(const TypingDerivation& d,
                                   const std::string& name,
                                   const Type& stronger,
                                   const IscDerivation& ev) {
  using K = TypingDerivation::Kind;
  TypingContext c = d.ctx();
  for (auto& e : c)
    if (e.name == name) e.type = stronger;
  switch (d.kind()) {
    case K::Var: {
      TypingDerivation v = TypingDerivation::var_rule(std::move(c),
                                                      d.term().name());
      if (d.term().name() != name) return v;
      return TypingDerivation::leq_rule(std::move(v), ev);
    }
    case K::Leq:
      return TypingDerivation::leq_rule(
          coerce_hyp(d.premise(), name, stronger, ev), d.evidence());
    case K::Inter:
      return TypingDerivation::inter_rule(
          coerce_hyp(d.premise(0), name, stronger, ev),
          coerce_hyp(d.premise(1), name, stronger, ev));
    case K::Omega:
      return TypingDerivation::omega_rule(std::move(c), d.term(), d.type());
    case K::Abs:
      return TypingDerivation::abs_rule(
          coerce_hyp(d.premise(), name, stronger, ev));
    case K::App:
      return TypingDerivation::app_rule(
          coerce_hyp(d.premise(0), name, stronger, ev),
          coerce_hyp(d.premise(1), name, stronger, ev));
    case K::Pair:
      return TypingDerivation::pair_rule(
          coerce_hyp(d.premise(0), name, stronger, ev),
          coerce_hyp(d.premise(1), name, stronger, ev));
    case K::Proj1:
      return TypingDerivation::proj1_rule(
          coerce_hyp(d.premise(), name, stronger, ev));
    case K::Proj2:
      return TypingDerivation::proj2_rule(
          coerce_hyp(d.premise(), name, stronger, ev));
  }
  throw Error("unreachable");
}

// Swaps the adjacent context entries at pos, pos+1 throughout. Hypothesis
// lookup is by name, so only the contexts change.
inline TypingDerivation swap_hyps(const TypingDerivation& d,
                                  std::size_t pos) {
  using K = TypingDerivation::Kind;
  if (pos + 1 >= d.ctx().size()) throw Error("swap_hyps: position out of range");
  TypingContext c = d.ctx();
  std::swap(c[pos], c[pos + 1]);
  switch (d.kind()) {
    case K::Var:
      return TypingDerivation::var_rule(std::move(c), d.term().name());
    case K::Leq:
      return TypingDerivation::leq_rule(swap_hyps(d.premise(), pos),
                                        d.evidence());
    case K::Inter:
      return TypingDerivation::inter_rule(swap_hyps(d.premise(0), pos),
                                          swap_hyps(d.premise(1), pos));
    case K::Omega:
      return TypingDerivation::omega_rule(std::move(c), d.term(), d.type());
    case K::Abs:
      return TypingDerivation::abs_rule(swap_hyps(d.premise(), pos));
    case K::App:
      return TypingDerivation::app_rule(swap_hyps(d.premise(0), pos),
                                        swap_hyps(d.premise(1), pos));
    case K::Pair:
      return TypingDerivation::pair_rule(swap_hyps(d.premise(0), pos),
                                         swap_hyps(d.premise(1), pos));
    case K::Proj1:
      return TypingDerivation::proj1_rule(swap_hyps(d.premise(), pos));
    case K::Proj2:
      return TypingDerivation::proj2_rule(swap_hyps(d.premise(), pos));
  }
  throw Error("unreachable");
}

namespace detail {

inline std::set<std::string> all_hyp_names(const TypingDerivation& d) {
  std::set<std::string> out;
  for (const auto& e : d.ctx()) out.insert(e.name);
  for (const auto& p : d.premises()) {
    auto sub = all_hyp_names(p);
    out.insert(sub.begin(), sub.end());
  }
  return out;
}

}  // namespace detail

// Substitution lemma, constructively: from ctx, x:B, ctx' |- t : A (the
// hypothesis x is the unique one missing from d_u's context) and
// d_u : ctx, ctx' |- u : B, produce ctx, ctx' |- t[x:=u] : A.
inline TypingDerivation substitute_typing(const TypingDerivation& d_t,
                                          const TypingDerivation& d_u) {
  using K = TypingDerivation::Kind;
  // identify x
  std::size_t xpos = d_t.ctx().size();
  for (std::size_t i = 0; i < d_t.ctx().size(); ++i) {
    if (!context_find(d_u.ctx(), d_t.ctx()[i].name)) {
      if (xpos != d_t.ctx().size())
        throw Error("substitute_typing: several candidate hypotheses");
      xpos = i;
    }
  }
  if (xpos == d_t.ctx().size())
    throw Error("substitute_typing: no hypothesis to substitute");
  const std::string x = d_t.ctx()[xpos].name;
  const Type& xty = d_t.ctx()[xpos].type;
  {
    TypingContext rest = d_t.ctx();
    rest.erase(rest.begin() + xpos);
    if (!same_context(rest, d_u.ctx()))
      throw Error("substitute_typing: contexts do not line up");
    if (xty != d_u.type())
      throw Error("substitute_typing: hypothesis and argument types differ");
  }

  switch (d_t.kind()) {
    case K::Var:
      if (d_t.term().name() == x) return d_u;
      return TypingDerivation::var_rule(d_u.ctx(), d_t.term().name());
    case K::Leq:
      return TypingDerivation::leq_rule(
          substitute_typing(d_t.premise(), d_u), d_t.evidence());
    case K::Inter:
      return TypingDerivation::inter_rule(
          substitute_typing(d_t.premise(0), d_u),
          substitute_typing(d_t.premise(1), d_u));
    case K::Omega:
      return TypingDerivation::omega_rule(
          d_u.ctx(), substitute(d_t.term(), x, d_u.term()), d_t.type());
    case K::Abs: {
      TypingDerivation p = d_t.premise();
      std::string y = p.ctx().back().name;
      Type yty = p.ctx().back().type;
      std::set<std::string> fvu = free_vars(d_u.term());
      if (fvu.count(y)) {
        std::set<std::string> avoid = fvu;
        auto names = detail::all_hyp_names(p);
        avoid.insert(names.begin(), names.end());
        auto tf = free_vars(p.term());
        avoid.insert(tf.begin(), tf.end());
        std::string y2 = fresh_name(y, avoid);
        p = rename_hyp(p, y, y2);
        y = y2;
      }
      TypingDerivation u_ext =
          weaken_typing(d_u, d_u.ctx().size(), y, yty);
      return TypingDerivation::abs_rule(substitute_typing(p, u_ext));
    }
    case K::App:
      return TypingDerivation::app_rule(substitute_typing(d_t.premise(0), d_u),
                                        substitute_typing(d_t.premise(1), d_u));
    case K::Pair:
      return TypingDerivation::pair_rule(
          substitute_typing(d_t.premise(0), d_u),
          substitute_typing(d_t.premise(1), d_u));
    case K::Proj1:
      return TypingDerivation::proj1_rule(
          substitute_typing(d_t.premise(), d_u));
    case K::Proj2:
      return TypingDerivation::proj2_rule(
          substitute_typing(d_t.premise(), d_u));
  }
  throw Error("unreachable");
}

// ---- generation lemmas ----

namespace detail {

// Given evidence [big_inter(sub)] |- X and sub's types listed among `full`,
// produce [big_inter(full)] |- X.
inline IscDerivation lift_evidence(const Signature& sig,
                                   const std::vector<Type>& full,
                                   const std::vector<Type>& sub,
                                   const IscDerivation& ev) {
  Type bigF = big_inter(full, sig);
  if (sub.empty()) {
    IscDerivation toTop = derive_top({bigF}, big_inter({}, sig));
    return derive_cut(toTop, ev, 0);
  }
  Type bigS = big_inter(sub, sig);
  if (bigF == bigS) return ev;
  return derive_cut(derive_le(bigF, bigS), ev, 0);
}

}  // namespace detail

struct VarGeneration {
  IscDerivation evidence;  // [context type of x] |- concluded type
};

struct AppGeneration {
  std::vector<std::pair<Type, Type>> families;  // (A_i, B_i)
  std::vector<TypingDerivation> fun;            // t : A_i -> B_i
  std::vector<TypingDerivation> arg;            // u : A_i
  IscDerivation evidence;                       // [inter B_i] |- type
};

struct AbsGeneration {
  std::vector<std::pair<Type, Type>> families;  // (A_i, B_i)
  std::vector<TypingDerivation> body;  // ctx, x:A_i |- t : B_i
  IscDerivation evidence;              // [inter (A_i -> B_i)] |- type
};

struct PairGeneration {
  std::vector<std::pair<Type, Type>> families;  // (A_i, B_i)
  std::vector<TypingDerivation> first, second;  // a : A_i, b : B_i
  IscDerivation evidence;                       // [inter (A_i * B_i)] |- type
};

struct ProjGeneration {
  std::vector<std::pair<Type, Type>> families;  // (A_i, B_i)
  std::vector<TypingDerivation> pair;           // p : A_i * B_i
  IscDerivation evidence;  // [inter A_i] |- type (or B_i for snd)
};

namespace detail {

// Shared recursion: walks leq/inter/omega wrappers; `base` handles the one
// structural rule and merging/empty construction of the result.
template <class Gen, class Base>
Gen generate(const TypingDerivation& d, const Signature& sig,
             Term::Kind subject, const Base& base,
             std::vector<Type> (*famTypes)(
                 const std::vector<std::pair<Type, Type>>&)) {
  using K = TypingDerivation::Kind;
  if (d.term().kind() != subject)
    throw Error("generation lemma applied to the wrong subject");
  switch (d.kind()) {
    case K::Leq: {
      Gen g = generate<Gen>(d.premise(), sig, subject, base, famTypes);
      g.evidence = derive_cut(g.evidence, d.evidence(), 0);
      return g;
    }
    case K::Inter: {
      Gen g1 = generate<Gen>(d.premise(0), sig, subject, base, famTypes);
      Gen g2 = generate<Gen>(d.premise(1), sig, subject, base, famTypes);
      std::vector<Type> t1 = famTypes(g1.families);
      std::vector<Type> t2 = famTypes(g2.families);
      std::vector<Type> all = t1;
      all.insert(all.end(), t2.begin(), t2.end());
      IscDerivation e1 = lift_evidence(sig, all, t1, g1.evidence);
      IscDerivation e2 = lift_evidence(sig, all, t2, g2.evidence);
      Gen g = std::move(g1);
      g.evidence = IscDerivation::inter_r(std::move(e1), std::move(e2));
      base.merge(g, std::move(g2));
      return g;
    }
    case K::Omega:
      return base.empty(derive_top({big_inter({}, sig)}, d.type()));
    default:
      return base(d);
  }
}

}  // namespace detail

inline VarGeneration generation_var(const TypingDerivation& d,
                                    const Signature& sig) {
  using K = TypingDerivation::Kind;
  if (d.term().kind() != Term::Kind::Var)
    throw Error("generation lemma applied to the wrong subject");
  switch (d.kind()) {
    case K::Var:
      return {derive_ax(d.type())};
    case K::Leq: {
      VarGeneration g = generation_var(d.premise(), sig);
      return {derive_cut(g.evidence, d.evidence(), 0)};
    }
    case K::Inter: {
      VarGeneration g1 = generation_var(d.premise(0), sig);
      VarGeneration g2 = generation_var(d.premise(1), sig);
      return {IscDerivation::inter_r(g1.evidence, g2.evidence)};
    }
    case K::Omega: {
      auto i = context_find(d.ctx(), d.term().name());
      if (!i) throw Error("generation_var: variable not in context");
      return {derive_top({d.ctx()[*i].type}, d.type())};
    }
    default:
      throw Error("unreachable");
  }
}

inline AppGeneration generation_app(const TypingDerivation& d,
                                    const Signature& sig) {
  struct Base {
    AppGeneration operator()(const TypingDerivation& d) const {
      if (d.kind() != TypingDerivation::Kind::App)
        throw Error("generation_app: unexpected rule for an application");
      const Type& fty = d.premise(0).type();
      return {{{fty.contra_args()[0], fty.co_args()[0]}},
              {d.premise(0)},
              {d.premise(1)},
              derive_ax(fty.co_args()[0])};
    }
    AppGeneration empty(IscDerivation ev) const {
      return {{}, {}, {}, std::move(ev)};
    }
    void merge(AppGeneration& g, AppGeneration o) const {
      g.families.insert(g.families.end(), o.families.begin(),
                        o.families.end());
      g.fun.insert(g.fun.end(), o.fun.begin(), o.fun.end());
      g.arg.insert(g.arg.end(), o.arg.begin(), o.arg.end());
    }
  };
  auto famTypes = +[](const std::vector<std::pair<Type, Type>>& fams) {
    std::vector<Type> out;
    for (const auto& f : fams) out.push_back(f.second);
    return out;
  };
  return detail::generate<AppGeneration>(d, sig, Term::Kind::App, Base{},
                                         famTypes);
}

inline AbsGeneration generation_abs(const TypingDerivation& d,
                                    const Signature& sig) {
  struct Base {
    AbsGeneration operator()(const TypingDerivation& d) const {
      if (d.kind() != TypingDerivation::Kind::Abs)
        throw Error("generation_abs: unexpected rule for an abstraction");
      return {{{d.type().contra_args()[0], d.type().co_args()[0]}},
              {d.premise()},
              derive_ax(d.type())};
    }
    AbsGeneration empty(IscDerivation ev) const {
      return {{}, {}, std::move(ev)};
    }
    void merge(AbsGeneration& g, AbsGeneration o) const {
      g.families.insert(g.families.end(), o.families.begin(),
                        o.families.end());
      g.body.insert(g.body.end(), o.body.begin(), o.body.end());
    }
  };
  auto famTypes = +[](const std::vector<std::pair<Type, Type>>& fams) {
    std::vector<Type> out;
    for (const auto& f : fams)
      out.push_back(Type::constr("arrow", {f.first}, {f.second}));
    return out;
  };
  return detail::generate<AbsGeneration>(d, sig, Term::Kind::Abs, Base{},
                                         famTypes);
}

inline PairGeneration generation_pair(const TypingDerivation& d,
                                      const Signature& sig) {
  struct Base {
    PairGeneration operator()(const TypingDerivation& d) const {
      if (d.kind() != TypingDerivation::Kind::Pair)
        throw Error("generation_pair: unexpected rule for a pair");
      return {{{d.premise(0).type(), d.premise(1).type()}},
              {d.premise(0)},
              {d.premise(1)},
              derive_ax(d.type())};
    }
    PairGeneration empty(IscDerivation ev) const {
      return {{}, {}, {}, std::move(ev)};
    }
    void merge(PairGeneration& g, PairGeneration o) const {
      g.families.insert(g.families.end(), o.families.begin(),
                        o.families.end());
      g.first.insert(g.first.end(), o.first.begin(), o.first.end());
      g.second.insert(g.second.end(), o.second.begin(), o.second.end());
    }
  };
  auto famTypes = +[](const std::vector<std::pair<Type, Type>>& fams) {
    std::vector<Type> out;
    for (const auto& f : fams)
      out.push_back(Type::constr("prod", {}, {f.first, f.second}));
    return out;
  };
  return detail::generate<PairGeneration>(d, sig, Term::Kind::Pair, Base{},
                                          famTypes);
}

inline ProjGeneration generation_proj(const TypingDerivation& d,
                                      const Signature& sig, bool first) {
  struct Base {
    bool first;
    ProjGeneration operator()(const TypingDerivation& d) const {
      auto want = first ? TypingDerivation::Kind::Proj1
                        : TypingDerivation::Kind::Proj2;
      if (d.kind() != want)
        throw Error("generation_proj: unexpected rule for a projection");
      const Type& pty = d.premise().type();
      return {{{pty.co_args()[0], pty.co_args()[1]}},
              {d.premise()},
              derive_ax(d.type())};
    }
    ProjGeneration empty(IscDerivation ev) const {
      return {{}, {}, std::move(ev)};
    }
    void merge(ProjGeneration& g, ProjGeneration o) const {
      g.families.insert(g.families.end(), o.families.begin(),
                        o.families.end());
      g.pair.insert(g.pair.end(), o.pair.begin(), o.pair.end());
    }
  };
  if (first) {
    auto famTypes = +[](const std::vector<std::pair<Type, Type>>& fams) {
      std::vector<Type> out;
      for (const auto& f : fams) out.push_back(f.first);
      return out;
    };
    return detail::generate<ProjGeneration>(
        d, sig, Term::Kind::Proj1, Base{true}, famTypes);
  }
  auto famTypes = +[](const std::vector<std::pair<Type, Type>>& fams) {
    std::vector<Type> out;
    for (const auto& f : fams) out.push_back(f.second);
    return out;
  };
  return detail::generate<ProjGeneration>(d, sig, Term::Kind::Proj2,
                                          Base{false}, famTypes);
}

// ---- subject reduction ----

namespace detail {

inline Type designated_top(const Signature& sig) {
  auto n = sig.top_name();
  if (!n) throw Error("the typing layer needs a 0-ary width-0 constructor");
  return Type::atom(*n);
}

// Right-nested intersection introduction matching big_inter order.
inline TypingDerivation fold_inter_rules(std::vector<TypingDerivation> parts) {
  TypingDerivation acc = parts.back();
  for (std::size_t i = parts.size() - 1; i-- > 0;)
    acc = TypingDerivation::inter_rule(parts[i], acc);
  return acc;
}

// ctx |- t' : B_i for one application family member, by inverting the
// abstraction's arrow family against (A_i -> B_i) and substituting.
inline TypingDerivation reduce_app_family(const TypingDerivation& fun,
                                          const TypingDerivation& arg,
                                          const Type& a, const Type& b,
                                          const Signature& sig) {
  AbsGeneration h = generation_abs(fun, sig);
  Sequent s{{}, Type::constr("arrow", {a}, {b})};
  for (const auto& [aj, bj] : h.families)
    s.context.push_back(Type::constr("arrow", {aj}, {bj}));
  auto w = invert_constr(s, sig);
  if (!w) throw Error("internal: arrow family fails to invert");
  Term reduced = substitute(fun.term().child(0), fun.term().name(),
                            arg.term());
  if (w->selected.empty()) {
    TypingDerivation r = TypingDerivation::omega_rule(
        fun.ctx(), reduced, designated_top(sig));
    IscDerivation ev = IscDerivation::wk(0, designated_top(sig), w->co[0]);
    return TypingDerivation::leq_rule(std::move(r), std::move(ev));
  }
  std::vector<TypingDerivation> parts;
  for (std::size_t q = 0; q < w->selected.size(); ++q) {
    std::size_t j = w->selected[q];
    TypingDerivation arg_j =
        TypingDerivation::leq_rule(arg, w->contra[0][q]);
    parts.push_back(substitute_typing(h.body[j], arg_j));
  }
  TypingDerivation folded = fold_inter_rules(std::move(parts));
  return TypingDerivation::leq_rule(std::move(folded),
                                    fold_context(w->co[0]));
}

// ctx |- a or b : A_i / B_i for one projection family member.
inline TypingDerivation reduce_proj_family(const TypingDerivation& pr,
                                           const Type& a, const Type& b,
                                           bool first, const Signature& sig) {
  PairGeneration h = generation_pair(pr, sig);
  Sequent s{{}, Type::constr("prod", {}, {a, b})};
  for (const auto& [xj, yj] : h.families)
    s.context.push_back(Type::constr("prod", {}, {xj, yj}));
  auto w = invert_constr(s, sig);
  if (!w) throw Error("internal: pair family fails to invert");
  if (w->selected.empty())
    throw Error("internal: pair inversion selected nothing");
  const std::vector<TypingDerivation>& comps = first ? h.first : h.second;
  std::vector<TypingDerivation> parts;
  for (std::size_t j : w->selected) parts.push_back(comps[j]);
  TypingDerivation folded = fold_inter_rules(std::move(parts));
  return TypingDerivation::leq_rule(std::move(folded),
                                    fold_context(w->co[first ? 0 : 1]));
}

inline TypingDerivation reduce_root_typing(const TypingDerivation& d,
                                           const Signature& sig) {
  auto rk = redex_kind(d.term());
  if (!rk) throw Error("subject_reduction: no redex at the given path");
  Type top = designated_top(sig);
  Term reduced = reduce_root(d.term());

  if (*rk == RedexKind::Beta) {
    AppGeneration g = generation_app(d, sig);
    if (g.families.empty()) {
      TypingDerivation r =
          TypingDerivation::omega_rule(d.ctx(), reduced, top);
      return TypingDerivation::leq_rule(std::move(r), g.evidence);
    }
    std::vector<TypingDerivation> parts;
    for (std::size_t i = 0; i < g.families.size(); ++i)
      parts.push_back(reduce_app_family(g.fun[i], g.arg[i],
                                        g.families[i].first,
                                        g.families[i].second, sig));
    TypingDerivation folded = fold_inter_rules(std::move(parts));
    return TypingDerivation::leq_rule(std::move(folded), g.evidence);
  }

  bool first = *rk == RedexKind::Pi1;
  ProjGeneration g = generation_proj(d, sig, first);
  if (g.families.empty()) {
    TypingDerivation r = TypingDerivation::omega_rule(d.ctx(), reduced, top);
    return TypingDerivation::leq_rule(std::move(r), g.evidence);
  }
  std::vector<TypingDerivation> parts;
  for (std::size_t i = 0; i < g.families.size(); ++i)
    parts.push_back(reduce_proj_family(g.pair[i], g.families[i].first,
                                       g.families[i].second, first, sig));
  TypingDerivation folded = fold_inter_rules(std::move(parts));
  return TypingDerivation::leq_rule(std::move(folded), g.evidence);
}

}  // namespace detail

// Transforms a typing derivation of t into one of the term with the redex
// at `path` contracted, preserving the type.
inline TypingDerivation subject_reduction(const TypingDerivation& d,
                                          const TermPath& path,
                                          const Signature& sig,
                                          std::size_t from = 0) {
  using K = TypingDerivation::Kind;
  // wrappers around the subject are congruent to the rewrite
  switch (d.kind()) {
    case K::Leq:
      return TypingDerivation::leq_rule(
          subject_reduction(d.premise(), path, sig, from), d.evidence());
    case K::Inter:
      return TypingDerivation::inter_rule(
          subject_reduction(d.premise(0), path, sig, from),
          subject_reduction(d.premise(1), path, sig, from));
    case K::Omega: {
      TermPath rest(path.begin() + from, path.end());
      return TypingDerivation::omega_rule(
          d.ctx(), reduce_at(d.term(), rest), d.type());
    }
    default:
      break;
  }
  if (from == path.size()) return detail::reduce_root_typing(d, sig);
  std::size_t step = path[from];
  switch (d.kind()) {
    case K::Abs:
      if (step != 0) throw Error("term path out of range");
      return TypingDerivation::abs_rule(
          subject_reduction(d.premise(), path, sig, from + 1));
    case K::App:
      if (step >= 2) throw Error("term path out of range");
      if (step == 0)
        return TypingDerivation::app_rule(
            subject_reduction(d.premise(0), path, sig, from + 1),
            d.premise(1));
      return TypingDerivation::app_rule(
          d.premise(0), subject_reduction(d.premise(1), path, sig, from + 1));
    case K::Pair:
      if (step >= 2) throw Error("term path out of range");
      if (step == 0)
        return TypingDerivation::pair_rule(
            subject_reduction(d.premise(0), path, sig, from + 1),
            d.premise(1));
      return TypingDerivation::pair_rule(
          d.premise(0), subject_reduction(d.premise(1), path, sig, from + 1));
    case K::Proj1:
      if (step != 0) throw Error("term path out of range");
      return TypingDerivation::proj1_rule(
          subject_reduction(d.premise(), path, sig, from + 1));
    case K::Proj2:
      if (step != 0) throw Error("term path out of range");
      return TypingDerivation::proj2_rule(
          subject_reduction(d.premise(), path, sig, from + 1));
    case K::Var:
      throw Error("term path out of range");
    default:
      throw Error("unreachable");
  }
}

// ---- subject expansion ----

// Decomposition of a substitution instance: given d : ctx |- s : A together
// with b, x, u such that s = b[x:=u], produce a hypothesis type B with
// ctx, x:B |- b : A and ctx |- u : B.
struct SubstDecomposition {
  Type hyp_type;
  TypingDerivation body;  // ctx, x:B |- b : A
  TypingDerivation arg;   // ctx |- u : B
};

namespace detail {

inline SubstDecomposition decompose_subst(const TypingDerivation& d,
                                          const Term& b, const std::string& x,
                                          const Term& u,
                                          const Signature& sig) {
  using K = TypingDerivation::Kind;
  Type top = designated_top(sig);
  std::set<std::string> fvb = free_vars(b);
  if (!fvb.count(x)) {
    if (d.term() != b)
      throw Error("decompose_subst: term mismatch");
    return {top, weaken_typing(d, d.ctx().size(), x, top),
            TypingDerivation::omega_rule(d.ctx(), u, top)};
  }
  if (b.kind() == Term::Kind::Var) {  // b == x
    TypingContext ext = d.ctx();
    ext.push_back({x, d.type()});
    return {d.type(), TypingDerivation::var_rule(std::move(ext), x), d};
  }
  switch (d.kind()) {
    case K::Leq: {
      SubstDecomposition s = decompose_subst(d.premise(), b, x, u, sig);
      s.body = TypingDerivation::leq_rule(std::move(s.body), d.evidence());
      return s;
    }
    case K::Omega:
      {
        TypingContext ext = d.ctx();
        ext.push_back({x, top});
        return {top, TypingDerivation::omega_rule(std::move(ext), b, d.type()),
                TypingDerivation::omega_rule(d.ctx(), u, top)};
      }
    case K::Inter: {
      SubstDecomposition s1 = decompose_subst(d.premise(0), b, x, u, sig);
      SubstDecomposition s2 = decompose_subst(d.premise(1), b, x, u, sig);
      Type merged = Type::inter(s1.hyp_type, s2.hyp_type);
      TypingDerivation b1 =
          coerce_hyp(s1.body, x, merged, derive_le(merged, s1.hyp_type));
      TypingDerivation b2 =
          coerce_hyp(s2.body, x, merged, derive_le(merged, s2.hyp_type));
      return {merged, TypingDerivation::inter_rule(std::move(b1),
                                                   std::move(b2)),
              TypingDerivation::inter_rule(s1.arg, s2.arg)};
    }
    default:
      break;
  }
  // structural nodes, in lockstep with b
  auto binary = [&](const Term& b1, const Term& b2, auto rebuild) {
    SubstDecomposition s1 = decompose_subst(d.premise(0), b1, x, u, sig);
    SubstDecomposition s2 = decompose_subst(d.premise(1), b2, x, u, sig);
    Type merged = Type::inter(s1.hyp_type, s2.hyp_type);
    TypingDerivation c1 =
        coerce_hyp(s1.body, x, merged, derive_le(merged, s1.hyp_type));
    TypingDerivation c2 =
        coerce_hyp(s2.body, x, merged, derive_le(merged, s2.hyp_type));
    return SubstDecomposition{
        merged, rebuild(std::move(c1), std::move(c2)),
        TypingDerivation::inter_rule(s1.arg, s2.arg)};
  };
  switch (d.kind()) {
    case K::App: {
      if (b.kind() != Term::Kind::App)
        throw Error("decompose_subst: term mismatch");
      return binary(b.child(0), b.child(1),
                    [](TypingDerivation l, TypingDerivation r) {
                      return TypingDerivation::app_rule(std::move(l),
                                                        std::move(r));
                    });
    }
    case K::Pair: {
      if (b.kind() != Term::Kind::Pair)
        throw Error("decompose_subst: term mismatch");
      return binary(b.child(0), b.child(1),
                    [](TypingDerivation l, TypingDerivation r) {
                      return TypingDerivation::pair_rule(std::move(l),
                                                         std::move(r));
                    });
    }
    case K::Proj1:
    case K::Proj2: {
      if (b.kind() != (d.kind() == K::Proj1 ? Term::Kind::Proj1
                                            : Term::Kind::Proj2))
        throw Error("decompose_subst: term mismatch");
      SubstDecomposition s = decompose_subst(d.premise(), b.child(0), x, u,
                                             sig);
      s.body = d.kind() == K::Proj1
                   ? TypingDerivation::proj1_rule(std::move(s.body))
                   : TypingDerivation::proj2_rule(std::move(s.body));
      return s;
    }
    case K::Abs: {
      if (b.kind() != Term::Kind::Abs)
        throw Error("decompose_subst: term mismatch");
      TypingDerivation p = d.premise();
      std::string z = p.ctx().back().name;
      Type zty = p.ctx().back().type;
      // line the syntactic binder up with the derivation's hypothesis,
      // renaming both to something globally safe
      std::set<std::string> avoid = free_vars(u);
      auto names = all_hyp_names(p);
      avoid.insert(names.begin(), names.end());
      auto bf = free_vars(b.child(0));
      avoid.insert(bf.begin(), bf.end());
      auto pf = free_vars(p.term());
      avoid.insert(pf.begin(), pf.end());
      avoid.insert(x);
      std::string z2 = fresh_name(z, avoid);
      p = rename_hyp(p, z, z2);
      Term b0 = substitute(b.child(0), b.name(), Term::var(z2));
      SubstDecomposition s = decompose_subst(p, b0, x, u, sig);
      // hypotheses arrive as ..., z2 : zty, x : B; swap before binding z2
      TypingDerivation body = swap_hyps(s.body, s.body.ctx().size() - 2);
      s.body = TypingDerivation::abs_rule(std::move(body));
      s.arg = strengthen_typing(s.arg, s.arg.ctx().size() - 1);
      return s;
    }
    default:
      throw Error("decompose_subst: unexpected rule");
  }
}

}  // namespace detail

inline SubstDecomposition decompose_substitution(const TypingDerivation& d,
                                                 const Term& b,
                                                 const std::string& x,
                                                 const Term& u,
                                                 const Signature& sig) {
  if (substitute(b, x, u) != d.term())
    throw Error("decompose_substitution: derivation does not type b[x:=u]");
  std::string h = x;
  Term body = b;
  std::set<std::string> used;
  for (const auto& e : d.ctx()) used.insert(e.name);
  if (used.count(x)) {
    auto fv = free_vars(b);
    used.insert(fv.begin(), fv.end());
    auto fu = free_vars(u);
    used.insert(fu.begin(), fu.end());
    h = fresh_name(x, used);
    body = substitute(b, x, Term::var(h));
  }
  return detail::decompose_subst(d, body, h, u, sig);
}

// Expands the redex described by `info` back into the typing derivation:
// `d` types the reduced term; the result types the term with `info.redex`
// restored at `info.path`, at the same type.
inline TypingDerivation subject_expansion(const TypingDerivation& d,
                                          const RedexInfo& info,
                                          const Signature& sig,
                                          std::size_t from = 0) {
  using K = TypingDerivation::Kind;
  switch (d.kind()) {
    case K::Leq:
      return TypingDerivation::leq_rule(
          subject_expansion(d.premise(), info, sig, from), d.evidence());
    case K::Inter:
      return TypingDerivation::inter_rule(
          subject_expansion(d.premise(0), info, sig, from),
          subject_expansion(d.premise(1), info, sig, from));
    case K::Omega: {
      TermPath rest(info.path.begin() + from, info.path.end());
      return TypingDerivation::omega_rule(
          d.ctx(), replace_at(d.term(), rest, info.redex), d.type());
    }
    default:
      break;
  }
  if (from == info.path.size()) {
    if (reduce_root(info.redex) != d.term())
      throw Error("subject_expansion: redex does not reduce to the subject");
    if (info.kind == RedexKind::Beta) {
      const Term& fn = info.redex.child(0);
      SubstDecomposition s = decompose_substitution(
          d, fn.child(0), fn.name(), info.redex.child(1), sig);
      return TypingDerivation::app_rule(
          TypingDerivation::abs_rule(std::move(s.body)), std::move(s.arg));
    }
    bool first = info.kind == RedexKind::Pi1;
    const Term& erased = info.redex.child(0).child(first ? 1 : 0);
    TypingDerivation other =
        TypingDerivation::omega_rule(d.ctx(), erased,
                                     detail::designated_top(sig));
    TypingDerivation pr =
        first ? TypingDerivation::pair_rule(d, std::move(other))
              : TypingDerivation::pair_rule(std::move(other), d);
    return TypingDerivation::proj_rule(first, std::move(pr));
  }
  std::size_t step = info.path[from];
  switch (d.kind()) {
    case K::Abs:
      if (step != 0) throw Error("term path out of range");
      return TypingDerivation::abs_rule(
          subject_expansion(d.premise(), info, sig, from + 1));
    case K::App:
      if (step >= 2) throw Error("term path out of range");
      if (step == 0)
        return TypingDerivation::app_rule(
            subject_expansion(d.premise(0), info, sig, from + 1),
            d.premise(1));
      return TypingDerivation::app_rule(
          d.premise(0), subject_expansion(d.premise(1), info, sig, from + 1));
    case K::Pair:
      if (step >= 2) throw Error("term path out of range");
      if (step == 0)
        return TypingDerivation::pair_rule(
            subject_expansion(d.premise(0), info, sig, from + 1),
            d.premise(1));
      return TypingDerivation::pair_rule(
          d.premise(0), subject_expansion(d.premise(1), info, sig, from + 1));
    case K::Proj1:
      if (step != 0) throw Error("term path out of range");
      return TypingDerivation::proj1_rule(
          subject_expansion(d.premise(), info, sig, from + 1));
    case K::Proj2:
      if (step != 0) throw Error("term path out of range");
      return TypingDerivation::proj2_rule(
          subject_expansion(d.premise(), info, sig, from + 1));
    case K::Var:
      throw Error("term path out of range");
    default:
      throw Error("unreachable");
  }
}

}  // namespace isect
