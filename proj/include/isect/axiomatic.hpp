#pragma once

// Hilbert-style subtyping over the standard rule set: reflexivity,
// transitivity, top, intersection projections/idempotence/monotonicity,
// and per-shape constructor rules (monotonicity and distribution for
// function-like (1;1) heads, pair-like (;2) heads, and unary covariant
// (;1) heads, plus top-collapses-to-function).
//
// Both directions of the equivalence with the sequent layer are
// constructive: ax_to_isc compiles each rule to a derivation (transitivity
// becomes cut), isc_to_ax translates sequent derivations back when the
// signature stays within the rule set's reach.

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "isc.hpp"
#include "rand.hpp"
#include "types.hpp"

namespace isect {

struct UnsupportedSignature : Error {
  using Error::Error;
};

enum class AxRule {
  Refl,
  Trans,
  OmegaR,
  InterL1,
  InterL2,
  InterIdem,
  InterMono,
  ArrowMono,
  ArrowDistrib,
  OmegaArrow,
  ProdMono,
  ProdDistrib,
  UnaryMono,
  UnaryDistrib,
};

inline const char* ax_rule_name(AxRule r) {
  switch (r) {
    case AxRule::Refl: return "refl";
    case AxRule::Trans: return "trans";
    case AxRule::OmegaR: return "omegaR";
    case AxRule::InterL1: return "interL1";
    case AxRule::InterL2: return "interL2";
    case AxRule::InterIdem: return "interIdem";
    case AxRule::InterMono: return "interMono";
    case AxRule::ArrowMono: return "arrowMono";
    case AxRule::ArrowDistrib: return "arrowDistrib";
    case AxRule::OmegaArrow: return "omegaArrow";
    case AxRule::ProdMono: return "prodMono";
    case AxRule::ProdDistrib: return "prodDistrib";
    case AxRule::UnaryMono: return "unaryMono";
    case AxRule::UnaryDistrib: return "unaryDistrib";
  }
  return "?";
}

class AxDerivation {
 public:
  AxRule rule() const { return node_->rule; }
  const Type& lhs() const { return node_->lhs; }
  const Type& rhs() const { return node_->rhs; }
  const std::vector<AxDerivation>& premises() const {
    return node_->premises;
  }

  static AxDerivation refl(const Type& a) {
    return make(AxRule::Refl, a, a, {});
  }
  static AxDerivation trans(AxDerivation p1, AxDerivation p2) {
    if (p1.rhs() != p2.lhs())
      throw Error("trans: premises do not chain");
    Type a = p1.lhs(), c = p2.rhs();
    return make(AxRule::Trans, a, c, {std::move(p1), std::move(p2)});
  }
  static AxDerivation omega_r(const Type& a, const Type& top) {
    return make(AxRule::OmegaR, a, top, {});
  }
  static AxDerivation inter_l1(const Type& a, const Type& b) {
    return make(AxRule::InterL1, Type::inter(a, b), a, {});
  }
  static AxDerivation inter_l2(const Type& a, const Type& b) {
    return make(AxRule::InterL2, Type::inter(a, b), b, {});
  }
  static AxDerivation inter_idem(const Type& a) {
    return make(AxRule::InterIdem, a, Type::inter(a, a), {});
  }
  static AxDerivation inter_mono(AxDerivation p1, AxDerivation p2) {
    Type l = Type::inter(p1.lhs(), p2.lhs());
    Type r = Type::inter(p1.rhs(), p2.rhs());
    return make(AxRule::InterMono, l, r, {std::move(p1), std::move(p2)});
  }
  // p1: A' <= A (argument, flipped), p2: B <= B'.
  static AxDerivation arrow_mono(const std::string& head, AxDerivation p1,
                                 AxDerivation p2) {
    Type l = Type::constr(head, {p1.rhs()}, {p2.lhs()});
    Type r = Type::constr(head, {p1.lhs()}, {p2.rhs()});
    return make(AxRule::ArrowMono, l, r, {std::move(p1), std::move(p2)});
  }
  static AxDerivation arrow_distrib(const std::string& head, const Type& a,
                                    const Type& b, const Type& c) {
    Type l = Type::inter(Type::constr(head, {a}, {b}),
                         Type::constr(head, {a}, {c}));
    Type r = Type::constr(head, {a}, {Type::inter(b, c)});
    return make(AxRule::ArrowDistrib, l, r, {});
  }
  static AxDerivation omega_arrow(const std::string& head, const Type& top) {
    return make(AxRule::OmegaArrow, top, Type::constr(head, {top}, {top}),
                {});
  }
  static AxDerivation prod_mono(const std::string& head, AxDerivation p1,
                                AxDerivation p2) {
    Type l = Type::constr(head, {}, {p1.lhs(), p2.lhs()});
    Type r = Type::constr(head, {}, {p1.rhs(), p2.rhs()});
    return make(AxRule::ProdMono, l, r, {std::move(p1), std::move(p2)});
  }
  static AxDerivation prod_distrib(const std::string& head, const Type& a,
                                   const Type& b, const Type& c,
                                   const Type& d) {
    Type l = Type::inter(Type::constr(head, {}, {a, b}),
                         Type::constr(head, {}, {c, d}));
    Type r = Type::constr(head, {},
                          {Type::inter(a, c), Type::inter(b, d)});
    return make(AxRule::ProdDistrib, l, r, {});
  }
  static AxDerivation unary_mono(const std::string& head, AxDerivation p1) {
    Type l = Type::constr(head, {}, {p1.lhs()});
    Type r = Type::constr(head, {}, {p1.rhs()});
    return make(AxRule::UnaryMono, l, r, {std::move(p1)});
  }
  static AxDerivation unary_distrib(const std::string& head, const Type& a,
                                    const Type& b) {
    Type l = Type::inter(Type::constr(head, {}, {a}),
                         Type::constr(head, {}, {b}));
    Type r = Type::constr(head, {}, {Type::inter(a, b)});
    return make(AxRule::UnaryDistrib, l, r, {});
  }

  bool operator==(const AxDerivation& o) const {
    if (node_ == o.node_) return true;
    if (rule() != o.rule() || lhs() != o.lhs() || rhs() != o.rhs() ||
        premises().size() != o.premises().size())
      return false;
    for (std::size_t i = 0; i < premises().size(); ++i)
      if (!(premises()[i] == o.premises()[i])) return false;
    return true;
  }

 private:
  struct Node {
    AxRule rule;
    Type lhs, rhs;
    std::vector<AxDerivation> premises;
  };
  static AxDerivation make(AxRule r, Type l, Type rh,
                           std::vector<AxDerivation> prem) {
    return AxDerivation(std::make_shared<Node>(
        Node{r, std::move(l), std::move(rh), std::move(prem)}));
  }
  explicit AxDerivation(std::shared_ptr<const Node> n)
      : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

// ---- checking ----

namespace detail {

inline bool arrow_like(const Type& t) {
  return t.is_constr() && t.contra_args().size() == 1 &&
         t.co_args().size() == 1;
}
inline bool prod_like(const Type& t) {
  return t.is_constr() && t.contra_args().empty() &&
         t.co_args().size() == 2;
}
inline bool unary_like(const Type& t) {
  return t.is_constr() && t.contra_args().empty() &&
         t.co_args().size() == 1;
}

inline void check_ax_node(const AxDerivation& d, const Signature& sig,
                          std::string& path) {
  auto fail = [&](const std::string& what) -> void {
    throw RuleViolation(path.empty() ? "root" : path, what);
  };
  validate_type(d.lhs(), sig);
  validate_type(d.rhs(), sig);
  const Type& l = d.lhs();
  const Type& r = d.rhs();
  std::size_t nprem = d.premises().size();
  auto want_prem = [&](std::size_t n) {
    if (nprem != n)
      fail(std::string(ax_rule_name(d.rule())) + " takes " +
           std::to_string(n) + " premises");
  };
  auto prem_is = [&](std::size_t i, const Type& pl, const Type& pr) {
    const AxDerivation& p = d.premises()[i];
    if (p.lhs() != pl || p.rhs() != pr)
      fail("premise " + std::to_string(i) + " concludes " +
           print_type(p.lhs()) + " <= " + print_type(p.rhs()) + ", wanted " +
           print_type(pl) + " <= " + print_type(pr));
  };
  switch (d.rule()) {
    case AxRule::Refl:
      want_prem(0);
      if (l != r) fail("refl needs equal sides");
      break;
    case AxRule::Trans: {
      want_prem(2);
      const AxDerivation &p1 = d.premises()[0], &p2 = d.premises()[1];
      if (p1.lhs() != l || p2.rhs() != r || p1.rhs() != p2.lhs())
        fail("trans premises do not chain");
      break;
    }
    case AxRule::OmegaR:
      want_prem(0);
      if (!is_top_atom(r, sig))
        fail("omegaR right side is not a 0-ary width-0 atom");
      break;
    case AxRule::InterL1:
      want_prem(0);
      if (!l.is_inter() || l.left() != r) fail("interL1 shape mismatch");
      break;
    case AxRule::InterL2:
      want_prem(0);
      if (!l.is_inter() || l.right() != r) fail("interL2 shape mismatch");
      break;
    case AxRule::InterIdem:
      want_prem(0);
      if (!r.is_inter() || r.left() != l || r.right() != l)
        fail("interIdem shape mismatch");
      break;
    case AxRule::InterMono:
      want_prem(2);
      if (!l.is_inter() || !r.is_inter()) fail("interMono needs intersections");
      prem_is(0, l.left(), r.left());
      prem_is(1, l.right(), r.right());
      break;
    case AxRule::ArrowMono:
      want_prem(2);
      if (!arrow_like(l) || !arrow_like(r) || l.head() != r.head())
        fail("arrowMono needs (1;1) types with one head");
      prem_is(0, r.contra_args()[0], l.contra_args()[0]);
      prem_is(1, l.co_args()[0], r.co_args()[0]);
      break;
    case AxRule::ArrowDistrib: {
      want_prem(0);
      if (!arrow_like(r) || !r.co_args()[0].is_inter())
        fail("arrowDistrib right side shape mismatch");
      const Type& a = r.contra_args()[0];
      Type want = Type::inter(
          Type::constr(r.head(), {a}, {r.co_args()[0].left()}),
          Type::constr(r.head(), {a}, {r.co_args()[0].right()}));
      if (l != want) fail("arrowDistrib left side shape mismatch");
      break;
    }
    case AxRule::OmegaArrow:
      want_prem(0);
      if (!is_top_atom(l, sig)) fail("omegaArrow left side is not a top atom");
      if (!arrow_like(r) || r.contra_args()[0] != l || r.co_args()[0] != l)
        fail("omegaArrow right side shape mismatch");
      if (sig.decl(r.head()).width != 0)
        fail("omegaArrow needs a width-0 head");
      break;
    case AxRule::ProdMono:
      want_prem(2);
      if (!prod_like(l) || !prod_like(r) || l.head() != r.head())
        fail("prodMono needs (;2) types with one head");
      prem_is(0, l.co_args()[0], r.co_args()[0]);
      prem_is(1, l.co_args()[1], r.co_args()[1]);
      break;
    case AxRule::ProdDistrib: {
      want_prem(0);
      if (!prod_like(r) || !r.co_args()[0].is_inter() ||
          !r.co_args()[1].is_inter())
        fail("prodDistrib right side shape mismatch");
      Type want = Type::inter(
          Type::constr(r.head(), {},
                       {r.co_args()[0].left(), r.co_args()[1].left()}),
          Type::constr(r.head(), {},
                       {r.co_args()[0].right(), r.co_args()[1].right()}));
      if (l != want) fail("prodDistrib left side shape mismatch");
      break;
    }
    case AxRule::UnaryMono:
      want_prem(1);
      if (!unary_like(l) || !unary_like(r) || l.head() != r.head())
        fail("unaryMono needs (;1) types with one head");
      prem_is(0, l.co_args()[0], r.co_args()[0]);
      break;
    case AxRule::UnaryDistrib: {
      want_prem(0);
      if (!unary_like(r) || !r.co_args()[0].is_inter())
        fail("unaryDistrib right side shape mismatch");
      Type want =
          Type::inter(Type::constr(r.head(), {}, {r.co_args()[0].left()}),
                      Type::constr(r.head(), {}, {r.co_args()[0].right()}));
      if (l != want) fail("unaryDistrib left side shape mismatch");
      break;
    }
  }
  std::size_t base = path.size();
  for (std::size_t i = 0; i < nprem; ++i) {
    path += path.empty() ? "" : "/";
    path += std::to_string(i);
    check_ax_node(d.premises()[i], sig, path);
    path.resize(base);
  }
}

}  // namespace detail

inline void check_ax(const AxDerivation& d, const Signature& sig) {
  std::string path;
  detail::check_ax_node(d, sig, path);
}

// ---- compilation into the sequent calculus ----

// [lhs] |- rhs, rule by rule; transitivity becomes cut.
inline IscDerivation ax_to_isc(const AxDerivation& d, const Signature& sig) {
  const Type& l = d.lhs();
  const Type& r = d.rhs();
  switch (d.rule()) {
    case AxRule::Refl:
      return derive_ax(l);
    case AxRule::Trans: {
      IscDerivation p1 = ax_to_isc(d.premises()[0], sig);
      IscDerivation p2 = ax_to_isc(d.premises()[1], sig);
      return derive_cut(p1, p2, 0);
    }
    case AxRule::OmegaR:
      return derive_top({l}, r);
    case AxRule::InterL1:
    case AxRule::InterL2:
    case AxRule::InterIdem:
      return derive_le(l, r);
    case AxRule::InterMono: {
      IscDerivation p1 = ax_to_isc(d.premises()[0], sig);
      IscDerivation p2 = ax_to_isc(d.premises()[1], sig);
      p1 = derive_weaken_gen(p1, 1, l.right());
      p2 = derive_weaken_gen(p2, 0, l.left());
      return IscDerivation::inter_l(0, IscDerivation::inter_r(p1, p2));
    }
    case AxRule::ArrowMono: {
      IscDerivation p1 = ax_to_isc(d.premises()[0], sig);
      IscDerivation p2 = ax_to_isc(d.premises()[1], sig);
      return IscDerivation::constr(r, {l}, {std::move(p1)}, {std::move(p2)});
    }
    case AxRule::ArrowDistrib: {
      const Type& a = r.contra_args()[0];
      const Type& bc = r.co_args()[0];
      IscDerivation co =
          derive_le_ctx({bc.left(), bc.right()}, bc);
      IscDerivation k = IscDerivation::constr(
          r, {l.left(), l.right()}, {derive_ax(a), derive_ax(a)},
          {std::move(co)});
      return IscDerivation::inter_l(0, k);
    }
    case AxRule::OmegaArrow: {
      IscDerivation topd = IscDerivation::constr(l, {}, {}, {});
      IscDerivation k = IscDerivation::constr(r, {}, {}, {topd});
      return IscDerivation::wk(0, l, k);
    }
    case AxRule::ProdMono: {
      IscDerivation p1 = ax_to_isc(d.premises()[0], sig);
      IscDerivation p2 = ax_to_isc(d.premises()[1], sig);
      return IscDerivation::constr(r, {l}, {},
                                   {std::move(p1), std::move(p2)});
    }
    case AxRule::ProdDistrib: {
      IscDerivation co1 = derive_le_ctx(
          {l.left().co_args()[0], l.right().co_args()[0]}, r.co_args()[0]);
      IscDerivation co2 = derive_le_ctx(
          {l.left().co_args()[1], l.right().co_args()[1]}, r.co_args()[1]);
      IscDerivation k =
          IscDerivation::constr(r, {l.left(), l.right()}, {},
                                {std::move(co1), std::move(co2)});
      return IscDerivation::inter_l(0, k);
    }
    case AxRule::UnaryMono: {
      IscDerivation p1 = ax_to_isc(d.premises()[0], sig);
      return IscDerivation::constr(r, {l}, {}, {std::move(p1)});
    }
    case AxRule::UnaryDistrib: {
      IscDerivation co = derive_le_ctx(
          {l.left().co_args()[0], l.right().co_args()[0]}, r.co_args()[0]);
      IscDerivation k = IscDerivation::constr(r, {l.left(), l.right()}, {},
                                              {std::move(co)});
      return IscDerivation::inter_l(0, k);
    }
  }
  throw Error("unreachable");
}

// ---- translation back out of the sequent calculus ----

namespace detail {

inline bool atom_occurs(const Type& t, const Type& atom) {
  if (t.is_constr()) return t == atom;
  return atom_occurs(t.left(), atom) || atom_occurs(t.right(), atom);
}

}  // namespace detail

// t1 <= t2 whenever every atom of t2 occurs among the atoms of t1, by
// projections, idempotence and monotonicity alone.
inline AxDerivation ax_le(const Type& t1, const Type& t2) {
  if (t1 == t2) return AxDerivation::refl(t1);
  if (t2.is_inter())
    return AxDerivation::trans(
        AxDerivation::inter_idem(t1),
        AxDerivation::inter_mono(ax_le(t1, t2.left()),
                                 ax_le(t1, t2.right())));
  if (!t1.is_inter()) throw Error("ax_le: goal atom not present");
  if (detail::atom_occurs(t1.left(), t2))
    return AxDerivation::trans(
        AxDerivation::inter_l1(t1.left(), t1.right()), ax_le(t1.left(), t2));
  if (detail::atom_occurs(t1.right(), t2))
    return AxDerivation::trans(
        AxDerivation::inter_l2(t1.left(), t1.right()),
        ax_le(t1.right(), t2));
  throw Error("ax_le: goal atom not present");
}

namespace detail {

inline Type inter_of_context(const std::vector<Type>& ctx,
                             const Signature& sig) {
  if (ctx.empty() && !sig.top_name())
    throw UnsupportedSignature(
        "translating an empty context needs a designated top");
  return big_inter(ctx, sig);
}

inline AxDerivation isc_to_ax_node(const IscDerivation& d,
                                   const Signature& sig) {
  using K = IscDerivation::Kind;
  const Sequent& c = d.conclusion();
  Type L = inter_of_context(c.context, sig);
  switch (d.kind()) {
    case K::Wk: {
      AxDerivation p = isc_to_ax_node(d.premise(), sig);
      // L collapses onto the premise context's intersection.
      if (d.premise().conclusion().context.empty())
        return AxDerivation::trans(AxDerivation::omega_r(L, p.lhs()), p);
      return AxDerivation::trans(ax_le(L, p.lhs()), p);
    }
    case K::InterR:
      return AxDerivation::trans(
          AxDerivation::inter_idem(L),
          AxDerivation::inter_mono(isc_to_ax_node(d.premises()[0], sig),
                                   isc_to_ax_node(d.premises()[1], sig)));
    case K::InterL: {
      AxDerivation p = isc_to_ax_node(d.premise(), sig);
      if (L == p.lhs()) return p;  // single-entry context: same type
      return AxDerivation::trans(ax_le(L, p.lhs()), p);
    }
    case K::Constr:
      break;
  }

  // Constructor step. Only same-head columns have an axiomatic image.
  const Type& goal = c.goal;
  const std::string& head = goal.head();
  std::size_t k = c.context.size();
  for (const auto& col : c.context)
    if (col.head() != head)
      throw UnsupportedSignature(
          "a constructor preorder step between " + col.head() + " and " +
          head + " has no axiomatic counterpart");
  std::size_t m = goal.contra_args().size(), n = goal.co_args().size();

  if (m == 0 && n == 0) {
    // 0-ary head: all columns equal the goal.
    if (k == 0) {
      auto top = sig.top_name();
      if (!top) throw UnsupportedSignature("empty context needs a top");
      if (Type::atom(*top) == goal) return AxDerivation::refl(goal);
      return AxDerivation::omega_r(Type::atom(*top), goal);
    }
    if (k == 1) return AxDerivation::refl(goal);
    return ax_le(L, goal);
  }

  if (m == 1 && n == 1) {
    // function-like
    if (k == 0) {
      auto top = sig.top_name();
      if (!top)
        throw UnsupportedSignature("empty-context constructor needs a top");
      Type omega = Type::atom(*top);
      AxDerivation oa = AxDerivation::omega_arrow(head, omega);
      AxDerivation arg = AxDerivation::omega_r(goal.contra_args()[0], omega);
      AxDerivation body = isc_to_ax_node(d.co_premise(0), sig);
      return AxDerivation::trans(
          oa, AxDerivation::arrow_mono(head, std::move(arg),
                                       std::move(body)));
    }
    // Narrow every column's argument to the goal argument, fold the bodies
    // together, then widen the body to the goal body. The fold's left side
    // reproduces the right-nested context intersection exactly.
    const Type& a = goal.contra_args()[0];
    std::vector<Type> bodies;
    for (std::size_t j = 0; j < k; ++j)
      bodies.push_back(c.context[j].co_args()[0]);
    std::vector<AxDerivation> narrowed;
    for (std::size_t j = 0; j < k; ++j)
      narrowed.push_back(AxDerivation::arrow_mono(
          head, isc_to_ax_node(d.contra_premise(0, j), sig),
          AxDerivation::refl(bodies[j])));
    std::function<std::pair<AxDerivation, Type>(std::size_t)> fold =
        [&](std::size_t j) -> std::pair<AxDerivation, Type> {
      if (j + 1 == k) return {narrowed[j], bodies[j]};
      auto [rest, restBody] = fold(j + 1);
      Type body = Type::inter(bodies[j], restBody);
      AxDerivation mono =
          AxDerivation::inter_mono(narrowed[j], std::move(rest));
      AxDerivation dist =
          AxDerivation::arrow_distrib(head, a, bodies[j], restBody);
      return {AxDerivation::trans(std::move(mono), std::move(dist)), body};
    };
    auto [folded, foldedBody] = fold(0);
    (void)foldedBody;
    AxDerivation widen = AxDerivation::arrow_mono(
        head, AxDerivation::refl(a), isc_to_ax_node(d.co_premise(0), sig));
    return AxDerivation::trans(std::move(folded), std::move(widen));
  }

  if (m == 0 && (n == 1 || n == 2)) {
    if (k == 0)
      throw UnsupportedSignature(
          "empty-context " + head + " step has no axiomatic counterpart");
    auto mono1 = [&](AxDerivation p) {
      return AxDerivation::unary_mono(head, std::move(p));
    };
    auto mono2 = [&](AxDerivation p, AxDerivation q) {
      return AxDerivation::prod_mono(head, std::move(p), std::move(q));
    };
    // fold columns into one constructor over intersected arguments
    std::function<std::pair<AxDerivation, std::vector<Type>>(std::size_t)>
        fold = [&](std::size_t j) -> std::pair<AxDerivation, std::vector<Type>> {
      std::vector<Type> args(c.context[j].co_args());
      if (j + 1 == k) return {AxDerivation::refl(c.context[j]), args};
      auto [rest, restArgs] = fold(j + 1);
      std::vector<Type> merged;
      for (std::size_t i = 0; i < n; ++i)
        merged.push_back(Type::inter(args[i], restArgs[i]));
      AxDerivation mono =
          AxDerivation::inter_mono(AxDerivation::refl(c.context[j]), rest);
      AxDerivation dist =
          n == 1 ? AxDerivation::unary_distrib(head, args[0], restArgs[0])
                 : AxDerivation::prod_distrib(head, args[0], args[1],
                                              restArgs[0], restArgs[1]);
      return {AxDerivation::trans(std::move(mono), std::move(dist)), merged};
    };
    auto [folded, argTypes] = fold(0);
    (void)argTypes;
    AxDerivation widen =
        n == 1 ? mono1(isc_to_ax_node(d.co_premise(0), sig))
               : mono2(isc_to_ax_node(d.co_premise(0), sig),
                       isc_to_ax_node(d.co_premise(1), sig));
    if (k == 1) return widen;  // single column: widen already starts at it
    return AxDerivation::trans(std::move(folded), std::move(widen));
  }

  throw UnsupportedSignature("constructor arity (" + std::to_string(m) + ";" +
                             std::to_string(n) +
                             ") is outside the axiomatic rule set");
}

}  // namespace detail

// Translates a derivation of T1, ..., Tk |- T into one of
// T1 /\ (... /\ Tk) <= T; the empty context becomes the designated top.
inline AxDerivation isc_to_ax(const IscDerivation& d, const Signature& sig) {
  return detail::isc_to_ax_node(d, sig);
}

// ---- random derivations ----

namespace detail {

class AxGen {
 public:
  AxGen(std::mt19937_64& rng, const Signature& sig, std::size_t type_size)
      : rng_(rng), sig_(sig), tsize_(type_size) {
    for (const auto& nm : sig.names()) {
      const auto& dc = sig.decl(nm);
      if (dc.convar == 1 && dc.covar == 1) arrows_.push_back(nm);
      if (dc.convar == 0 && dc.covar == 2) prods_.push_back(nm);
      if (dc.convar == 0 && dc.covar == 1) unaries_.push_back(nm);
      if (dc.convar == 1 && dc.covar == 1 && dc.width == 0)
        omega_arrows_.push_back(nm);
    }
    top_ = sig.top_name();
  }

  AxDerivation gen_any(std::size_t depth) {
    std::vector<std::function<AxDerivation()>> opts;
    opts.push_back([&] { return AxDerivation::refl(ty()); });
    opts.push_back(
        [&] { return AxDerivation::inter_l1(ty(), ty()); });
    opts.push_back(
        [&] { return AxDerivation::inter_l2(ty(), ty()); });
    opts.push_back([&] { return AxDerivation::inter_idem(ty()); });
    if (top_)
      opts.push_back([&] { return AxDerivation::omega_r(ty(), top_ty()); });
    for (const auto& h : arrows_)
      opts.push_back(
          [&, h] { return AxDerivation::arrow_distrib(h, ty(), ty(), ty()); });
    for (const auto& h : omega_arrows_)
      if (top_)
        opts.push_back([&, h] { return AxDerivation::omega_arrow(h, top_ty()); });
    for (const auto& h : prods_)
      opts.push_back([&, h] {
        return AxDerivation::prod_distrib(h, ty(), ty(), ty(), ty());
      });
    for (const auto& h : unaries_)
      opts.push_back(
          [&, h] { return AxDerivation::unary_distrib(h, ty(), ty()); });
    if (depth > 0) {
      opts.push_back([&] {
        AxDerivation p1 = gen_any(depth - 1);
        AxDerivation p2 = gen_from(p1.rhs(), depth - 1);
        return AxDerivation::trans(std::move(p1), std::move(p2));
      });
      opts.push_back([&] {
        return AxDerivation::inter_mono(gen_any(depth - 1),
                                        gen_any(depth - 1));
      });
      for (const auto& h : arrows_)
        opts.push_back([&, h] {
          return AxDerivation::arrow_mono(h, gen_any(depth - 1),
                                          gen_any(depth - 1));
        });
      for (const auto& h : prods_)
        opts.push_back([&, h] {
          return AxDerivation::prod_mono(h, gen_any(depth - 1),
                                         gen_any(depth - 1));
        });
      for (const auto& h : unaries_)
        opts.push_back(
            [&, h] { return AxDerivation::unary_mono(h, gen_any(depth - 1)); });
    }
    return pick(opts)();
  }

  // Derivation whose conclusion has the given left side.
  AxDerivation gen_from(const Type& lhs, std::size_t depth) {
    std::vector<std::function<AxDerivation()>> opts;
    opts.push_back([&] { return AxDerivation::refl(lhs); });
    opts.push_back([&] { return AxDerivation::inter_idem(lhs); });
    if (top_)
      opts.push_back([&] { return AxDerivation::omega_r(lhs, top_ty()); });
    if (lhs.is_inter()) {
      opts.push_back(
          [&] { return AxDerivation::inter_l1(lhs.left(), lhs.right()); });
      opts.push_back(
          [&] { return AxDerivation::inter_l2(lhs.left(), lhs.right()); });
      const Type& la = lhs.left();
      const Type& lb = lhs.right();
      if (la.is_constr() && lb.is_constr() && la.head() == lb.head()) {
        if (arrow_like(la) && arrow_like(lb) &&
            la.contra_args()[0] == lb.contra_args()[0])
          opts.push_back([&lhs] {
            return AxDerivation::arrow_distrib(
                lhs.left().head(), lhs.left().contra_args()[0],
                lhs.left().co_args()[0], lhs.right().co_args()[0]);
          });
        if (prod_like(la) && prod_like(lb))
          opts.push_back([&lhs] {
            return AxDerivation::prod_distrib(
                lhs.left().head(), lhs.left().co_args()[0],
                lhs.left().co_args()[1], lhs.right().co_args()[0],
                lhs.right().co_args()[1]);
          });
        if (unary_like(la) && unary_like(lb))
          opts.push_back([&lhs] {
            return AxDerivation::unary_distrib(lhs.left().head(),
                                               lhs.left().co_args()[0],
                                               lhs.right().co_args()[0]);
          });
      }
      if (depth > 0)
        opts.push_back([&] {
          return AxDerivation::inter_mono(gen_from(lhs.left(), depth - 1),
                                          gen_from(lhs.right(), depth - 1));
        });
    }
    if (top_ && is_top_atom(lhs, sig_))
      for (const auto& h : omega_arrows_)
        opts.push_back([&, h] { return AxDerivation::omega_arrow(h, lhs); });
    if (depth > 0 && lhs.is_constr()) {
      if (arrow_like(lhs))
        opts.push_back([&] {
          return AxDerivation::arrow_mono(
              lhs.head(), gen_to(lhs.contra_args()[0], depth - 1),
              gen_from(lhs.co_args()[0], depth - 1));
        });
      if (prod_like(lhs))
        opts.push_back([&] {
          return AxDerivation::prod_mono(
              lhs.head(), gen_from(lhs.co_args()[0], depth - 1),
              gen_from(lhs.co_args()[1], depth - 1));
        });
      if (unary_like(lhs))
        opts.push_back([&] {
          return AxDerivation::unary_mono(
              lhs.head(), gen_from(lhs.co_args()[0], depth - 1));
        });
    }
    if (depth > 0)
      opts.push_back([&] {
        AxDerivation p1 = gen_from(lhs, depth - 1);
        AxDerivation p2 = gen_from(p1.rhs(), depth - 1);
        return AxDerivation::trans(std::move(p1), std::move(p2));
      });
    return pick(opts)();
  }

  // Derivation whose conclusion has the given right side.
  AxDerivation gen_to(const Type& rhs, std::size_t depth) {
    std::vector<std::function<AxDerivation()>> opts;
    opts.push_back([&] { return AxDerivation::refl(rhs); });
    opts.push_back([&] { return AxDerivation::inter_l1(rhs, ty()); });
    opts.push_back([&] { return AxDerivation::inter_l2(ty(), rhs); });
    if (is_top_atom(rhs, sig_))
      opts.push_back([&] { return AxDerivation::omega_r(ty(), rhs); });
    if (rhs.is_inter()) {
      if (rhs.left() == rhs.right())
        opts.push_back([&] { return AxDerivation::inter_idem(rhs.left()); });
      if (depth > 0)
        opts.push_back([&] {
          return AxDerivation::inter_mono(gen_to(rhs.left(), depth - 1),
                                          gen_to(rhs.right(), depth - 1));
        });
    }
    if (rhs.is_constr()) {
      if (arrow_like(rhs)) {
        if (rhs.co_args()[0].is_inter())
          opts.push_back([&] {
            return AxDerivation::arrow_distrib(
                rhs.head(), rhs.contra_args()[0], rhs.co_args()[0].left(),
                rhs.co_args()[0].right());
          });
        if (is_top_atom(rhs.contra_args()[0], sig_) &&
            rhs.co_args()[0] == rhs.contra_args()[0] &&
            sig_.decl(rhs.head()).width == 0)
          opts.push_back([&] {
            return AxDerivation::omega_arrow(rhs.head(), rhs.contra_args()[0]);
          });
        if (depth > 0)
          opts.push_back([&] {
            return AxDerivation::arrow_mono(
                rhs.head(), gen_from(rhs.contra_args()[0], depth - 1),
                gen_to(rhs.co_args()[0], depth - 1));
          });
      }
      if (prod_like(rhs)) {
        if (rhs.co_args()[0].is_inter() && rhs.co_args()[1].is_inter())
          opts.push_back([&] {
            return AxDerivation::prod_distrib(
                rhs.head(), rhs.co_args()[0].left(), rhs.co_args()[1].left(),
                rhs.co_args()[0].right(), rhs.co_args()[1].right());
          });
        if (depth > 0)
          opts.push_back([&] {
            return AxDerivation::prod_mono(rhs.head(),
                                           gen_to(rhs.co_args()[0], depth - 1),
                                           gen_to(rhs.co_args()[1], depth - 1));
          });
      }
      if (unary_like(rhs)) {
        if (rhs.co_args()[0].is_inter())
          opts.push_back([&] {
            return AxDerivation::unary_distrib(rhs.head(),
                                               rhs.co_args()[0].left(),
                                               rhs.co_args()[0].right());
          });
        if (depth > 0)
          opts.push_back([&] {
            return AxDerivation::unary_mono(
                rhs.head(), gen_to(rhs.co_args()[0], depth - 1));
          });
      }
    }
    if (depth > 0)
      opts.push_back([&] {
        AxDerivation p2 = gen_to(rhs, depth - 1);
        AxDerivation p1 = gen_to(p2.lhs(), depth - 1);
        return AxDerivation::trans(std::move(p1), std::move(p2));
      });
    return pick(opts)();
  }

 private:
  Type ty() { return random_type(rng_, sig_, tsize_); }
  Type top_ty() { return Type::atom(*top_); }
  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(
        rng_)];
  }

  std::mt19937_64& rng_;
  const Signature& sig_;
  std::size_t tsize_;
  std::vector<std::string> arrows_, prods_, unaries_, omega_arrows_;
  std::optional<std::string> top_;
};

}  // namespace detail

// Random valid derivation; deterministic in the generator state.
inline AxDerivation random_ax_derivation(std::mt19937_64& rng,
                                         const Signature& sig,
                                         std::size_t depth,
                                         std::size_t type_size = 5) {
  detail::AxGen g(rng, sig, type_size);
  return g.gen_any(depth);
}

// ---- inversion lemmas on the axiomatic surface ----

struct ArrowInversion {
  std::vector<std::size_t> selected;  // indices into the input family
  std::vector<AxDerivation> arg;      // c <= A_j for each selected j
  AxDerivation body;                  // inter of selected B_j <= d
};

// Inverts inter (A_i -> B_i) <= c -> d, if it holds. An empty family reads
// as the top type on the left.
inline std::optional<ArrowInversion> inversion_arrow(
    const std::vector<std::pair<Type, Type>>& families, const Type& c,
    const Type& d, const Signature& sig, const std::string& head = "arrow") {
  Sequent s{{}, Type::constr(head, {c}, {d})};
  for (const auto& [a, b] : families)
    s.context.push_back(Type::constr(head, {a}, {b}));
  auto w = invert_constr(s, sig);
  if (!w) return std::nullopt;
  ArrowInversion out{std::move(w->selected), {}, isc_to_ax(w->co[0], sig)};
  for (std::size_t q = 0; q < out.selected.size(); ++q)
    out.arg.push_back(isc_to_ax(w->contra[0][q], sig));
  return out;
}

struct ProdInversion {
  AxDerivation first;   // inter of all X_i <= c
  AxDerivation second;  // inter of all Y_i <= d
};

// Inverts inter (X_i * Y_i) <= c * d over the full family.
inline std::optional<ProdInversion> inversion_product(
    const std::vector<std::pair<Type, Type>>& families, const Type& c,
    const Type& d, const Signature& sig, const std::string& head = "prod") {
  Sequent s{{}, Type::constr(head, {}, {c, d})};
  for (const auto& [x, y] : families)
    s.context.push_back(Type::constr(head, {}, {x, y}));
  auto w = invert_constr(s, sig);
  if (!w) return std::nullopt;
  AxDerivation selFirst = isc_to_ax(w->co[0], sig);
  AxDerivation selSecond = isc_to_ax(w->co[1], sig);
  if (w->selected.size() == families.size())
    return ProdInversion{std::move(selFirst), std::move(selSecond)};
  // widen from the selected columns to the full family
  std::vector<Type> xs, ys;
  for (const auto& [x, y] : families) {
    xs.push_back(x);
    ys.push_back(y);
  }
  Type allX = big_inter(xs, sig), allY = big_inter(ys, sig);
  auto widen = [&](const Type& all, AxDerivation part) {
    if (is_top_atom(part.lhs(), sig))  // nothing selected
      return AxDerivation::trans(AxDerivation::omega_r(all, part.lhs()),
                                 std::move(part));
    return AxDerivation::trans(ax_le(all, part.lhs()), std::move(part));
  };
  return ProdInversion{widen(allX, std::move(selFirst)),
                       widen(allY, std::move(selSecond))};
}

}  // namespace isect
