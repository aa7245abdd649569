#pragma once

// Text format for derivations: s-expressions whose head is the rule tag,
// followed by the stated conclusion in square brackets and the premise
// subtrees. Parsing rebuilds each node through the rule constructors and
// rejects files whose stated conclusions do not match the reconstruction.
//
//   (wk @1 [X, Y |- X]
//     (constr [X |- X]))
//
//   (trans [X /\ Y <= X /\ X] ...)
//
//   (app [f : X -> Y, x : X |- f x : Y] (var [...]) (var [...]))
//
// Judgment files carry one header line `ctx |- term : type` (comments start
// with '#') followed by a typing derivation for exactly that judgment.

#include <cctype>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "axiomatic.hpp"
#include "isc.hpp"
#include "lambda.hpp"
#include "parse.hpp"
#include "types.hpp"

namespace isect {

// ---- emitting ----

inline std::string print_ax_conclusion(const AxDerivation& d) {
  return print_type(d.lhs()) + " <= " + print_type(d.rhs());
}

inline std::string print_typing_conclusion(const TypingDerivation& d) {
  std::string out;
  for (std::size_t i = 0; i < d.ctx().size(); ++i) {
    if (i) out += ", ";
    out += d.ctx()[i].name + " : " + print_type(d.ctx()[i].type);
  }
  if (!d.ctx().empty()) out += " ";
  out += "|- " + print_term(d.term()) + " : " + print_type(d.type());
  return out;
}

namespace detail {

inline void emit_child_sep(bool compact, int depth, std::string& out) {
  if (compact) {
    out += " ";
  } else {
    out += "\n";
    out.append(2 * (depth + 1), ' ');
  }
}

inline void emit_isc_node(const IscDerivation& d, bool compact, int depth,
                          std::string& out) {
  using K = IscDerivation::Kind;
  out += "(";
  switch (d.kind()) {
    case K::Wk:
      out += "wk @" + std::to_string(d.pos());
      break;
    case K::InterR:
      out += "interR";
      break;
    case K::InterL:
      out += "interL @" + std::to_string(d.pos());
      break;
    case K::Constr:
      out += "constr";
      break;
  }
  out += " [" + print_sequent(d.conclusion()) + "]";
  for (const auto& p : d.premises()) {
    emit_child_sep(compact, depth, out);
    emit_isc_node(p, compact, depth + 1, out);
  }
  out += ")";
}

inline void emit_ax_node(const AxDerivation& d, bool compact, int depth,
                         std::string& out) {
  out += "(";
  out += ax_rule_name(d.rule());
  out += " [" + print_ax_conclusion(d) + "]";
  for (const auto& p : d.premises()) {
    emit_child_sep(compact, depth, out);
    emit_ax_node(p, compact, depth + 1, out);
  }
  out += ")";
}

inline const char* typing_rule_tag(TypingDerivation::Kind k) {
  using K = TypingDerivation::Kind;
  switch (k) {
    case K::Var: return "var";
    case K::Leq: return "leq";
    case K::Inter: return "inter";
    case K::Omega: return "omega";
    case K::Abs: return "abs";
    case K::App: return "app";
    case K::Pair: return "pair";
    case K::Proj1: return "proj1";
    case K::Proj2: return "proj2";
  }
  return "?";
}

inline void emit_typing_node(const TypingDerivation& d, bool compact,
                             int depth, std::string& out) {
  out += "(";
  out += typing_rule_tag(d.kind());
  out += " [" + print_typing_conclusion(d) + "]";
  for (const auto& p : d.premises()) {
    emit_child_sep(compact, depth, out);
    emit_typing_node(p, compact, depth + 1, out);
  }
  if (d.kind() == TypingDerivation::Kind::Leq) {
    emit_child_sep(compact, depth, out);
    emit_isc_node(d.evidence(), compact, depth + 1, out);
  }
  out += ")";
}

}  // namespace detail

inline std::string emit_isc(const IscDerivation& d, bool compact = false) {
  std::string out;
  detail::emit_isc_node(d, compact, 0, out);
  return out;
}

inline std::string emit_ax(const AxDerivation& d, bool compact = false) {
  std::string out;
  detail::emit_ax_node(d, compact, 0, out);
  return out;
}

inline std::string emit_typing(const TypingDerivation& d,
                               bool compact = false) {
  std::string out;
  detail::emit_typing_node(d, compact, 0, out);
  return out;
}

// ---- parsing ----

namespace detail {

// '#' comments run to end of line, anywhere outside a bracket block
struct SexpScanner {
  const std::string& src;
  std::size_t pos = 0;

  void skip() {
    while (pos < src.size()) {
      if (std::isspace((unsigned char)src[pos])) {
        ++pos;
      } else if (src[pos] == '#') {
        while (pos < src.size() && src[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
  }
  char peek() {
    skip();
    return pos < src.size() ? src[pos] : '\0';
  }
  void expect(char c, const char* what) {
    if (peek() != c) throw SyntaxError(pos, std::string("expected ") + what);
    ++pos;
  }
  std::string tag() {
    skip();
    std::size_t start = pos;
    while (pos < src.size() &&
           (std::isalnum((unsigned char)src[pos]) || src[pos] == '_'))
      ++pos;
    if (pos == start) throw SyntaxError(pos, "expected a rule tag");
    return src.substr(start, pos - start);
  }
  std::size_t position_arg() {
    skip();
    if (peek() != '@') throw SyntaxError(pos, "expected a position '@N'");
    ++pos;
    std::size_t start = pos;
    while (pos < src.size() && std::isdigit((unsigned char)src[pos])) ++pos;
    if (pos == start) throw SyntaxError(pos, "expected digits after '@'");
    return std::stoul(src.substr(start, pos - start));
  }
  // bracket blocks never nest: types and terms contain no ']'
  std::pair<std::string, std::size_t> block() {
    expect('[', "'['");
    std::size_t start = pos;
    std::size_t end = src.find(']', pos);
    if (end == std::string::npos)
      throw SyntaxError(start, "unterminated '[' block");
    pos = end + 1;
    return {src.substr(start, end - start), start};
  }
};

inline void block_fail(std::size_t base, const std::string& what) {
  throw SyntaxError(base, what);
}

// splits at top-level (paren depth 0) occurrences of a single character
inline std::vector<std::pair<std::string, std::size_t>> split_top(
    const std::string& s, char delim, std::size_t base) {
  std::vector<std::pair<std::string, std::size_t>> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '(') ++depth;
    else if (s[i] == ')') --depth;
    else if (s[i] == delim && depth == 0) {
      out.emplace_back(s.substr(start, i - start), base + start);
      start = i + 1;
    }
  }
  out.emplace_back(s.substr(start), base + start);
  return out;
}

inline std::size_t find_top(const std::string& s, const std::string& needle) {
  int depth = 0;
  for (std::size_t i = 0; i + needle.size() <= s.size(); ++i) {
    if (s[i] == '(') ++depth;
    else if (s[i] == ')') --depth;
    else if (depth == 0 && s.compare(i, needle.size(), needle) == 0)
      return i;
  }
  return std::string::npos;
}

inline bool blank(const std::string& s) {
  for (char c : s)
    if (!std::isspace((unsigned char)c)) return false;
  return true;
}

inline Type parse_type_at(const std::string& text, std::size_t base,
                          const Signature& sig) {
  try {
    return parse_type(text, sig);
  } catch (const SyntaxError& e) {
    throw SyntaxError(base + e.pos, e.msg);
  } catch (const Error& e) {
    throw SyntaxError(base, e.what());
  }
}

inline Sequent parse_sequent_block(const std::string& text, std::size_t base,
                                   const Signature& sig) {
  std::size_t bar = find_top(text, "|-");
  if (bar == std::string::npos)
    block_fail(base, "expected '|-' in the sequent");
  Sequent s{{}, parse_type_at(text.substr(bar + 2), base + bar + 2, sig)};
  std::string left = text.substr(0, bar);
  if (!blank(left)) {
    for (auto& [piece, at] : split_top(left, ',', base))
      s.context.push_back(parse_type_at(piece, at, sig));
  }
  return s;
}

inline std::pair<Type, Type> parse_ax_block(const std::string& text,
                                            std::size_t base,
                                            const Signature& sig) {
  try {
    return parse_inequality(text, sig);
  } catch (const SyntaxError& e) {
    throw SyntaxError(base + e.pos, e.msg);
  } catch (const Error& e) {
    throw SyntaxError(base, e.what());
  }
}

struct TypingJudgment {
  TypingContext ctx;
  Term term;
  Type type;
};

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace((unsigned char)s[a])) ++a;
  while (b > a && std::isspace((unsigned char)s[b - 1])) --b;
  return s.substr(a, b - a);
}

inline TypingJudgment parse_typing_block(const std::string& text,
                                         std::size_t base,
                                         const Signature& sig) {
  std::size_t bar = find_top(text, "|-");
  if (bar == std::string::npos)
    block_fail(base, "expected '|-' in the judgment");
  TypingJudgment j{{},
                   Term::var("x"),  // placeholder, replaced below
                   Type::atom("x")};
  std::string left = text.substr(0, bar);
  if (!blank(left)) {
    for (auto& [piece, at] : split_top(left, ',', base)) {
      std::size_t colon = piece.find(':');
      if (colon == std::string::npos)
        block_fail(at, "expected 'name : type' in the context");
      std::string name = trim(piece.substr(0, colon));
      if (name.empty() || !ident_start(name[0]))
        block_fail(at, "expected a variable name");
      for (char c : name)
        if (!ident_char(c)) block_fail(at, "bad variable name");
      j.ctx.push_back(
          {name, parse_type_at(piece.substr(colon + 1), at + colon + 1, sig)});
    }
  }
  std::string right = text.substr(bar + 2);
  // terms and types contain no ':', so the separator is unambiguous
  std::size_t colon = right.find(':');
  if (colon == std::string::npos)
    block_fail(base + bar + 2, "expected 'term : type' after '|-'");
  try {
    j.term = parse_term(right.substr(0, colon));
  } catch (const SyntaxError& e) {
    throw SyntaxError(base + bar + 2 + e.pos, e.msg);
  }
  j.type = parse_type_at(right.substr(colon + 1), base + bar + 2 + colon + 1,
                         sig);
  return j;
}

inline IscDerivation parse_isc_node(SexpScanner& p, const Signature& sig) {
  p.expect('(', "'('");
  std::string t = p.tag();
  std::optional<std::size_t> at;
  if (t == "wk" || t == "interL") at = p.position_arg();
  auto [btext, bpos] = p.block();
  Sequent stated = parse_sequent_block(btext, bpos, sig);
  std::vector<IscDerivation> kids;
  while (p.peek() == '(') kids.push_back(parse_isc_node(p, sig));
  p.expect(')', "')'");

  auto finish = [&](IscDerivation d) {
    if (d.conclusion() != stated)
      block_fail(bpos, "stated conclusion does not match the rule");
    return d;
  };
  try {
    if (t == "wk") {
      if (kids.size() != 1) block_fail(bpos, "wk takes one premise");
      if (*at >= stated.context.size())
        block_fail(bpos, "wk position out of range");
      return finish(
          IscDerivation::wk(*at, stated.context[*at], std::move(kids[0])));
    }
    if (t == "interR") {
      if (kids.size() != 2) block_fail(bpos, "interR takes two premises");
      return finish(
          IscDerivation::inter_r(std::move(kids[0]), std::move(kids[1])));
    }
    if (t == "interL") {
      if (kids.size() != 1) block_fail(bpos, "interL takes one premise");
      return finish(IscDerivation::inter_l(*at, std::move(kids[0])));
    }
    if (t == "constr") {
      if (!is_atom(stated.goal))
        block_fail(bpos, "constr goal must be a constructor application");
      std::size_t k = stated.context.size();
      std::size_t m = stated.goal.contra_args().size();
      std::size_t n = stated.goal.co_args().size();
      if (kids.size() != k * m + n)
        block_fail(bpos, "constr premise count mismatch");
      std::vector<IscDerivation> contra(kids.begin(), kids.begin() + k * m);
      std::vector<IscDerivation> co(kids.begin() + k * m, kids.end());
      return finish(IscDerivation::constr(stated.goal, stated.context,
                                          std::move(contra), std::move(co)));
    }
  } catch (const SyntaxError&) {
    throw;
  } catch (const Error& e) {
    throw SyntaxError(bpos, e.what());
  }
  block_fail(bpos, "unknown rule tag '" + t + "'");
  throw Error("unreachable");
}

inline AxDerivation parse_ax_node(SexpScanner& p, const Signature& sig) {
  p.expect('(', "'('");
  std::string t = p.tag();
  auto [btext, bpos] = p.block();
  auto [lhs, rhs] = parse_ax_block(btext, bpos, sig);
  std::vector<AxDerivation> kids;
  while (p.peek() == '(') kids.push_back(parse_ax_node(p, sig));
  p.expect(')', "')'");

  auto arity = [&](std::size_t n) {
    if (kids.size() != n)
      block_fail(bpos, t + " takes " + std::to_string(n) + " premise(s)");
  };
  auto finish = [&](AxDerivation d) {
    if (d.lhs() != lhs || d.rhs() != rhs)
      block_fail(bpos, "stated conclusion does not match the rule");
    return d;
  };
  auto shape = [&](bool ok, const char* what) {
    if (!ok) block_fail(bpos, what);
  };
  try {
    if (t == "refl") {
      arity(0);
      return finish(AxDerivation::refl(lhs));
    }
    if (t == "trans") {
      arity(2);
      return finish(
          AxDerivation::trans(std::move(kids[0]), std::move(kids[1])));
    }
    if (t == "omegaR") {
      arity(0);
      return finish(AxDerivation::omega_r(lhs, rhs));
    }
    if (t == "interL1" || t == "interL2") {
      arity(0);
      shape(lhs.is_inter(), "left side must be an intersection");
      return finish(t == "interL1"
                        ? AxDerivation::inter_l1(lhs.left(), lhs.right())
                        : AxDerivation::inter_l2(lhs.left(), lhs.right()));
    }
    if (t == "interIdem") {
      arity(0);
      return finish(AxDerivation::inter_idem(lhs));
    }
    if (t == "interMono") {
      arity(2);
      return finish(
          AxDerivation::inter_mono(std::move(kids[0]), std::move(kids[1])));
    }
    if (t == "arrowMono") {
      arity(2);
      shape(rhs.is_constr(), "right side must be a constructor application");
      return finish(AxDerivation::arrow_mono(rhs.head(), std::move(kids[0]),
                                             std::move(kids[1])));
    }
    if (t == "arrowDistrib") {
      arity(0);
      shape(rhs.is_constr() && rhs.contra_args().size() == 1 &&
                rhs.co_args().size() == 1 && rhs.co_args()[0].is_inter(),
            "right side must be k(A; B /\\ C)");
      return finish(AxDerivation::arrow_distrib(
          rhs.head(), rhs.contra_args()[0], rhs.co_args()[0].left(),
          rhs.co_args()[0].right()));
    }
    if (t == "omegaArrow") {
      arity(0);
      shape(rhs.is_constr(), "right side must be a constructor application");
      return finish(AxDerivation::omega_arrow(rhs.head(), lhs));
    }
    if (t == "prodMono") {
      arity(2);
      shape(rhs.is_constr(), "right side must be a constructor application");
      return finish(AxDerivation::prod_mono(rhs.head(), std::move(kids[0]),
                                            std::move(kids[1])));
    }
    if (t == "prodDistrib") {
      arity(0);
      shape(lhs.is_inter() && lhs.left().is_constr() &&
                lhs.left().co_args().size() == 2 && lhs.right().is_constr() &&
                lhs.right().co_args().size() == 2,
            "left side must be k(; A, B) /\\ k(; C, D)");
      return finish(AxDerivation::prod_distrib(
          lhs.left().head(), lhs.left().co_args()[0], lhs.left().co_args()[1],
          lhs.right().co_args()[0], lhs.right().co_args()[1]));
    }
    if (t == "unaryMono") {
      arity(1);
      shape(rhs.is_constr(), "right side must be a constructor application");
      return finish(AxDerivation::unary_mono(rhs.head(), std::move(kids[0])));
    }
    if (t == "unaryDistrib") {
      arity(0);
      shape(lhs.is_inter() && lhs.left().is_constr() &&
                lhs.left().co_args().size() == 1 && lhs.right().is_constr() &&
                lhs.right().co_args().size() == 1,
            "left side must be k(; A) /\\ k(; B)");
      return finish(AxDerivation::unary_distrib(lhs.left().head(),
                                                lhs.left().co_args()[0],
                                                lhs.right().co_args()[0]));
    }
  } catch (const SyntaxError&) {
    throw;
  } catch (const Error& e) {
    throw SyntaxError(bpos, e.what());
  }
  block_fail(bpos, "unknown rule tag '" + t + "'");
  throw Error("unreachable");
}

inline TypingDerivation parse_typing_node(SexpScanner& p,
                                          const Signature& sig) {
  p.expect('(', "'('");
  std::string t = p.tag();
  auto [btext, bpos] = p.block();
  TypingJudgment stated = parse_typing_block(btext, bpos, sig);

  std::vector<TypingDerivation> kids;
  std::optional<IscDerivation> evidence;
  std::size_t want = 0;
  if (t == "var" || t == "omega") want = 0;
  else if (t == "leq" || t == "abs" || t == "proj1" || t == "proj2") want = 1;
  else if (t == "inter" || t == "app" || t == "pair") want = 2;
  else block_fail(bpos, "unknown rule tag '" + t + "'");
  for (std::size_t i = 0; i < want; ++i) {
    if (p.peek() != '(')
      block_fail(p.pos, t + " needs " + std::to_string(want) + " premise(s)");
    kids.push_back(parse_typing_node(p, sig));
  }
  if (t == "leq") evidence = parse_isc_node(p, sig);
  p.expect(')', "')'");

  auto finish = [&](TypingDerivation d) {
    if (!same_context(d.ctx(), stated.ctx) || d.term() != stated.term ||
        d.type() != stated.type)
      block_fail(bpos, "stated conclusion does not match the rule");
    return d;
  };
  try {
    if (t == "var") {
      if (stated.term.kind() != Term::Kind::Var)
        block_fail(bpos, "var rule needs a variable subject");
      return finish(
          TypingDerivation::var_rule(stated.ctx, stated.term.name()));
    }
    if (t == "leq")
      return finish(
          TypingDerivation::leq_rule(std::move(kids[0]), std::move(*evidence)));
    if (t == "inter")
      return finish(TypingDerivation::inter_rule(std::move(kids[0]),
                                                 std::move(kids[1])));
    if (t == "omega")
      return finish(TypingDerivation::omega_rule(stated.ctx, stated.term,
                                                 stated.type));
    if (t == "abs")
      return finish(TypingDerivation::abs_rule(std::move(kids[0])));
    if (t == "app")
      return finish(
          TypingDerivation::app_rule(std::move(kids[0]), std::move(kids[1])));
    if (t == "pair")
      return finish(
          TypingDerivation::pair_rule(std::move(kids[0]), std::move(kids[1])));
    if (t == "proj1")
      return finish(TypingDerivation::proj1_rule(std::move(kids[0])));
    if (t == "proj2")
      return finish(TypingDerivation::proj2_rule(std::move(kids[0])));
  } catch (const SyntaxError&) {
    throw;
  } catch (const Error& e) {
    throw SyntaxError(bpos, e.what());
  }
  throw Error("unreachable");
}

}  // namespace detail

inline IscDerivation parse_isc_derivation(const std::string& text,
                                          const Signature& sig) {
  detail::SexpScanner p{text};
  IscDerivation d = detail::parse_isc_node(p, sig);
  if (p.peek() != '\0')
    throw SyntaxError(p.pos, "trailing input after derivation");
  return d;
}

inline AxDerivation parse_ax_derivation(const std::string& text,
                                        const Signature& sig) {
  detail::SexpScanner p{text};
  AxDerivation d = detail::parse_ax_node(p, sig);
  if (p.peek() != '\0')
    throw SyntaxError(p.pos, "trailing input after derivation");
  return d;
}

inline TypingDerivation parse_typing_derivation(const std::string& text,
                                                const Signature& sig) {
  detail::SexpScanner p{text};
  TypingDerivation d = detail::parse_typing_node(p, sig);
  if (p.peek() != '\0')
    throw SyntaxError(p.pos, "trailing input after derivation");
  return d;
}

// ---- judgment files ----

// A header line stating the judgment, then a typing derivation proving
// exactly that judgment.
inline std::string emit_judgment_file(const TypingDerivation& d,
                                      bool compact = false) {
  return print_typing_conclusion(d) + "\n" + emit_typing(d, compact) + "\n";
}

inline TypingDerivation parse_judgment_file(const std::string& text,
                                            const Signature& sig) {
  std::size_t at = 0;
  while (at < text.size()) {
    std::size_t eol = text.find('\n', at);
    if (eol == std::string::npos) eol = text.size();
    std::string line = text.substr(at, eol - at);
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    if (!detail::blank(line)) {
      detail::TypingJudgment j = detail::parse_typing_block(line, at, sig);
      std::size_t body = eol < text.size() ? eol + 1 : eol;
      std::string rest = text.substr(body);
      detail::SexpScanner p{rest};
      TypingDerivation d = [&] {
        try {
          return detail::parse_typing_node(p, sig);
        } catch (const SyntaxError& e) {
          throw SyntaxError(body + e.pos, e.msg);
        }
      }();
      if (p.peek() != '\0')
        throw SyntaxError(body + p.pos, "trailing input after derivation");
      if (!same_context(d.ctx(), j.ctx) || d.term() != j.term ||
          d.type() != j.type)
        throw SyntaxError(at,
                          "derivation does not prove the stated judgment");
      return d;
    }
    at = eol + (eol < text.size() ? 1 : 0);
    if (eol == text.size()) break;
  }
  throw SyntaxError(text.size(), "missing judgment line");
}

}  // namespace isect
