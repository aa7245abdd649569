#pragma once

// Sequent calculus for subtyping: a sequent T1, ..., Tk |- T states that the
// intersection of the context is a subtype of the goal. Four primitive rules:
//
//   (wk)     Γ, Δ ⊦ C            =>  Γ, κ(As; Bs), Δ ⊦ C
//   (interR) Γ ⊦ A   Γ ⊦ B       =>  Γ ⊦ A /\ B
//   (interL) Γ, A, B, Δ ⊦ C      =>  Γ, A /\ B, Δ ⊦ C
//   (constr) [Ai ⊦ Ai_j]  [Bi_1..Bi_k ⊦ Bi]  =>  κ1(..) .. κk(..) ⊦ κ(As; Bs)
//            with every κj <= κ in the constructor preorder and width(κ) <= k
//
// There is no cut rule; cut, exchange, contraction and the other structural
// rules are admissible and implemented here as derivation transformers.
// Derivations are immutable trees; every node stores its conclusion.

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "types.hpp"

namespace isect {

struct Sequent {
  std::vector<Type> context;
  Type goal;

  int compare(const Sequent& o) const {
    if (context.size() != o.context.size())
      return context.size() < o.context.size() ? -1 : 1;
    for (std::size_t i = 0; i < context.size(); ++i)
      if (int c = context[i].compare(o.context[i])) return c;
    return goal.compare(o.goal);
  }
  bool operator==(const Sequent& o) const { return compare(o) == 0; }
  bool operator!=(const Sequent& o) const { return compare(o) != 0; }
  bool operator<(const Sequent& o) const { return compare(o) < 0; }
};

inline std::string print_sequent(const Sequent& s) {
  std::string out;
  for (std::size_t i = 0; i < s.context.size(); ++i) {
    if (i) out += ", ";
    out += print_type(s.context[i]);
  }
  if (!s.context.empty()) out += " ";
  out += "|- ";
  out += print_type(s.goal);
  return out;
}

struct RuleViolation : Error {
  std::string path;
  RuleViolation(const std::string& p, const std::string& what)
      : Error("invalid derivation at " + p + ": " + what), path(p) {}
};

struct BadPermutation : Error {
  BadPermutation() : Error("not a permutation of the context") {}
};
struct PositionNotIntersection : Error {
  PositionNotIntersection(std::size_t p)
      : Error("context position " + std::to_string(p) +
              " does not hold an intersection") {}
};
struct NotDuplicated : Error {
  NotDuplicated(std::size_t p)
      : Error("context positions " + std::to_string(p) + ", " +
              std::to_string(p + 1) + " are not equal") {}
};
struct CutFormulaMismatch : Error {
  CutFormulaMismatch()
      : Error("cut position does not hold the goal of the left premise") {}
};
struct PreconditionViolated : Error {
  using Error::Error;
};

class IscDerivation {
 public:
  enum class Kind { Wk, InterR, InterL, Constr };

  // Conclusion: premise context with `dropped` (constructor-rooted) inserted
  // at `pos`.
  static IscDerivation wk(std::size_t pos, const Type& dropped,
                          IscDerivation premise) {
    Sequent c = premise.conclusion();
    if (pos > c.context.size()) throw Error("wk: position out of range");
    c.context.insert(c.context.begin() + pos, dropped);
    return make(Kind::Wk, std::move(c), pos, {std::move(premise)});
  }

  static IscDerivation inter_r(IscDerivation l, IscDerivation r) {
    if (l.conclusion().context != r.conclusion().context)
      throw Error("interR: premises have different contexts");
    Sequent c{l.conclusion().context,
              Type::inter(l.conclusion().goal, r.conclusion().goal)};
    return make(Kind::InterR, std::move(c), 0, {std::move(l), std::move(r)});
  }

  // Conclusion: premise context with the entries at pos, pos+1 merged.
  static IscDerivation inter_l(std::size_t pos, IscDerivation premise) {
    Sequent c = premise.conclusion();
    if (pos + 1 >= c.context.size())
      throw Error("interL: position out of range");
    Type merged = Type::inter(c.context[pos], c.context[pos + 1]);
    c.context.erase(c.context.begin() + pos, c.context.begin() + pos + 2);
    c.context.insert(c.context.begin() + pos, merged);
    return make(Kind::InterL, std::move(c), pos, {std::move(premise)});
  }

  // goal = κ(A1..Am; B1..Bn), columns = the context atoms. Premises in order:
  // contra premises row-major ([Ai] ⊦ contra-arg i of column j, index i*k+j),
  // then the n covariant premises.
  static IscDerivation constr(const Type& goal, std::vector<Type> columns,
                              std::vector<IscDerivation> contra,
                              std::vector<IscDerivation> co) {
    Sequent c{std::move(columns), goal};
    std::vector<IscDerivation> prem = std::move(contra);
    prem.insert(prem.end(), std::make_move_iterator(co.begin()),
                std::make_move_iterator(co.end()));
    return make(Kind::Constr, std::move(c), 0, std::move(prem));
  }

  Kind kind() const { return node_->kind; }
  const Sequent& conclusion() const { return node_->conclusion; }
  std::size_t pos() const { return node_->pos; }
  const std::vector<IscDerivation>& premises() const { return node_->premises; }
  std::size_t height() const { return node_->height; }

  const IscDerivation& premise() const { return node_->premises[0]; }

  // Constr layout helpers.
  std::size_t columns() const { return conclusion().context.size(); }
  std::size_t contra_arity() const {
    return conclusion().goal.contra_args().size();
  }
  std::size_t co_arity() const { return conclusion().goal.co_args().size(); }
  const IscDerivation& contra_premise(std::size_t i, std::size_t j) const {
    return node_->premises[i * columns() + j];
  }
  const IscDerivation& co_premise(std::size_t i) const {
    return node_->premises[contra_arity() * columns() + i];
  }

  bool operator==(const IscDerivation& o) const {
    if (node_ == o.node_) return true;
    if (kind() != o.kind() || pos() != o.pos() ||
        conclusion() != o.conclusion() ||
        premises().size() != o.premises().size())
      return false;
    for (std::size_t i = 0; i < premises().size(); ++i)
      if (!(premises()[i] == o.premises()[i])) return false;
    return true;
  }

 private:
  struct Node {
    Kind kind;
    Sequent conclusion;
    std::size_t pos;
    std::vector<IscDerivation> premises;
    std::size_t height;
  };

  static IscDerivation make(Kind k, Sequent c, std::size_t pos,
                            std::vector<IscDerivation> prem) {
    std::size_t h = 1;
    for (const auto& p : prem) h = std::max(h, p.height() + 1);
    auto n = std::make_shared<Node>(
        Node{k, std::move(c), pos, std::move(prem), h});
    return IscDerivation(std::move(n));
  }
  explicit IscDerivation(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

inline std::size_t sequent_size(const Sequent& s) {
  std::size_t n = size(s.goal);
  for (const auto& t : s.context) n += size(t);
  return n;
}

// ---- checking ----

namespace detail {

inline void check_isc_node(const IscDerivation& d, const Signature& sig,
                           std::string& path) {
  auto fail = [&](const std::string& what) -> void {
    throw RuleViolation(path.empty() ? "root" : path, what);
  };
  const Sequent& c = d.conclusion();
  for (const auto& t : c.context) validate_type(t, sig);
  validate_type(c.goal, sig);

  switch (d.kind()) {
    case IscDerivation::Kind::Wk: {
      if (d.premises().size() != 1) fail("wk needs one premise");
      if (d.pos() >= c.context.size()) fail("wk position out of range");
      if (!is_atom(c.context[d.pos()]))
        fail("wk may only drop a constructor-rooted type");
      Sequent want = c;
      want.context.erase(want.context.begin() + d.pos());
      if (d.premise().conclusion() != want)
        fail("wk premise concludes " +
             print_sequent(d.premise().conclusion()) + ", wanted " +
             print_sequent(want));
      break;
    }
    case IscDerivation::Kind::InterR: {
      if (d.premises().size() != 2) fail("interR needs two premises");
      if (!c.goal.is_inter()) fail("interR goal is not an intersection");
      Sequent wl{c.context, c.goal.left()}, wr{c.context, c.goal.right()};
      if (d.premises()[0].conclusion() != wl)
        fail("interR left premise concludes " +
             print_sequent(d.premises()[0].conclusion()) + ", wanted " +
             print_sequent(wl));
      if (d.premises()[1].conclusion() != wr)
        fail("interR right premise concludes " +
             print_sequent(d.premises()[1].conclusion()) + ", wanted " +
             print_sequent(wr));
      break;
    }
    case IscDerivation::Kind::InterL: {
      if (d.premises().size() != 1) fail("interL needs one premise");
      if (d.pos() >= c.context.size()) fail("interL position out of range");
      const Type& t = c.context[d.pos()];
      if (!t.is_inter()) fail("interL position is not an intersection");
      Sequent want = c;
      want.context[d.pos()] = t.left();
      want.context.insert(want.context.begin() + d.pos() + 1, t.right());
      if (d.premise().conclusion() != want)
        fail("interL premise concludes " +
             print_sequent(d.premise().conclusion()) + ", wanted " +
             print_sequent(want));
      break;
    }
    case IscDerivation::Kind::Constr: {
      if (!is_atom(c.goal)) fail("constr goal is not constructor-rooted");
      std::size_t k = c.context.size();
      std::size_t m = c.goal.contra_args().size();
      std::size_t n = c.goal.co_args().size();
      if ((std::size_t)sig.decl(c.goal.head()).width > k)
        fail("width of " + c.goal.head() + " exceeds context length " +
             std::to_string(k));
      for (std::size_t j = 0; j < k; ++j) {
        const Type& col = c.context[j];
        if (!is_atom(col)) fail("constr context entry is not an atom");
        if (!sig.constr_leq(col.head(), c.goal.head()))
          fail("head " + col.head() + " is not below " + c.goal.head());
        if (col.contra_args().size() != m || col.co_args().size() != n)
          fail("column arity differs from goal arity");
      }
      if (d.premises().size() != m * k + n)
        fail("constr premise count mismatch");
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < k; ++j) {
          Sequent want{{c.goal.contra_args()[i]},
                       c.context[j].contra_args()[i]};
          if (d.contra_premise(i, j).conclusion() != want)
            fail("contravariant premise (" + std::to_string(i) + "," +
                 std::to_string(j) + ") concludes " +
                 print_sequent(d.contra_premise(i, j).conclusion()) +
                 ", wanted " + print_sequent(want));
        }
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<Type> ctx;
        ctx.reserve(k);
        for (std::size_t j = 0; j < k; ++j)
          ctx.push_back(c.context[j].co_args()[i]);
        Sequent want{std::move(ctx), c.goal.co_args()[i]};
        if (d.co_premise(i).conclusion() != want)
          fail("covariant premise " + std::to_string(i) + " concludes " +
               print_sequent(d.co_premise(i).conclusion()) + ", wanted " +
               print_sequent(want));
      }
      break;
    }
  }
  std::size_t base = path.size();
  for (std::size_t i = 0; i < d.premises().size(); ++i) {
    path += path.empty() ? "" : "/";
    path += std::to_string(i);
    check_isc_node(d.premises()[i], sig, path);
    path.resize(base);
  }
}

}  // namespace detail

// Throws RuleViolation at the first invalid node in a preorder walk.
inline void check_isc(const IscDerivation& d, const Signature& sig) {
  std::string path;
  detail::check_isc_node(d, sig, path);
}

// ---- admissible structural rules, as derivation transformers ----

// Γ, Δ ⊦ C  becomes  Γ, A, Δ ⊦ C for an arbitrary type A.
inline IscDerivation derive_weaken_gen(const IscDerivation& d, std::size_t pos,
                                       const Type& a) {
  if (is_atom(a)) return IscDerivation::wk(pos, a, d);
  IscDerivation step = derive_weaken_gen(d, pos, a.left());
  step = derive_weaken_gen(step, pos + 1, a.right());
  return IscDerivation::inter_l(pos, step);
}

// A ⊦ A for every type A.
inline IscDerivation derive_ax(const Type& a) {
  if (is_atom(a)) {
    std::size_t m = a.contra_args().size(), n = a.co_args().size();
    std::vector<IscDerivation> contra, co;
    contra.reserve(m);
    co.reserve(n);
    for (std::size_t i = 0; i < m; ++i)
      contra.push_back(derive_ax(a.contra_args()[i]));
    for (std::size_t i = 0; i < n; ++i)
      co.push_back(derive_ax(a.co_args()[i]));
    return IscDerivation::constr(a, {a}, std::move(contra), std::move(co));
  }
  IscDerivation l = derive_weaken_gen(derive_ax(a.left()), 1, a.right());
  IscDerivation r = derive_weaken_gen(derive_ax(a.right()), 0, a.left());
  return IscDerivation::inter_l(0, IscDerivation::inter_r(l, r));
}

// Height-preserving context permutation: new context i holds old context
// perm[i].
inline IscDerivation derive_exchange(const IscDerivation& d,
                                     const std::vector<std::size_t>& perm) {
  const Sequent& c = d.conclusion();
  std::size_t n = c.context.size();
  if (perm.size() != n) throw BadPermutation();
  {
    std::vector<bool> seen(n, false);
    for (std::size_t v : perm) {
      if (v >= n || seen[v]) throw BadPermutation();
      seen[v] = true;
    }
  }
  auto position_of = [&](std::size_t old) {
    for (std::size_t i = 0; i < n; ++i)
      if (perm[i] == old) return i;
    throw BadPermutation();
  };
  switch (d.kind()) {
    case IscDerivation::Kind::Wk: {
      std::size_t p = d.pos(), np = position_of(p);
      std::vector<std::size_t> sub;
      sub.reserve(n - 1);
      for (std::size_t i = 0; i < n; ++i) {
        if (i == np) continue;
        std::size_t v = perm[i];
        sub.push_back(v - (v > p ? 1 : 0));
      }
      return IscDerivation::wk(np, c.context[p],
                               derive_exchange(d.premise(), sub));
    }
    case IscDerivation::Kind::InterR:
      return IscDerivation::inter_r(derive_exchange(d.premises()[0], perm),
                                    derive_exchange(d.premises()[1], perm));
    case IscDerivation::Kind::InterL: {
      std::size_t p = d.pos(), np = position_of(p);
      std::vector<std::size_t> sub;
      sub.reserve(n + 1);
      for (std::size_t i = 0; i < n; ++i) {
        if (i == np) {
          sub.push_back(p);
          sub.push_back(p + 1);
          continue;
        }
        std::size_t v = perm[i];
        sub.push_back(v + (v > p ? 1 : 0));
      }
      return IscDerivation::inter_l(np, derive_exchange(d.premise(), sub));
    }
    case IscDerivation::Kind::Constr: {
      std::size_t k = n, m = d.contra_arity(), nn = d.co_arity();
      std::vector<Type> cols;
      cols.reserve(k);
      for (std::size_t j = 0; j < k; ++j) cols.push_back(c.context[perm[j]]);
      std::vector<IscDerivation> contra, co;
      contra.reserve(m * k);
      co.reserve(nn);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < k; ++j)
          contra.push_back(d.contra_premise(i, perm[j]));
      for (std::size_t i = 0; i < nn; ++i)
        co.push_back(derive_exchange(d.co_premise(i), perm));
      return IscDerivation::constr(c.goal, std::move(cols), std::move(contra),
                                   std::move(co));
    }
  }
  throw Error("unreachable");
}

// Inverse of interL: from Γ, A /\ B, Δ ⊦ C recover Γ, A, B, Δ ⊦ C.
inline IscDerivation derive_interL_e(const IscDerivation& d, std::size_t pos) {
  const Sequent& c = d.conclusion();
  if (pos >= c.context.size() || !c.context[pos].is_inter())
    throw PositionNotIntersection(pos);
  switch (d.kind()) {
    case IscDerivation::Kind::InterL: {
      std::size_t q = d.pos();
      if (q == pos) return d.premise();
      if (q < pos)
        return IscDerivation::inter_l(q, derive_interL_e(d.premise(), pos + 1));
      return IscDerivation::inter_l(q + 1, derive_interL_e(d.premise(), pos));
    }
    case IscDerivation::Kind::Wk: {
      std::size_t q = d.pos();
      const Type& dropped = c.context[q];
      if (q < pos)
        return IscDerivation::wk(q, dropped,
                                 derive_interL_e(d.premise(), pos - 1));
      return IscDerivation::wk(q + 1, dropped,
                               derive_interL_e(d.premise(), pos));
    }
    case IscDerivation::Kind::InterR:
      return IscDerivation::inter_r(derive_interL_e(d.premises()[0], pos),
                                    derive_interL_e(d.premises()[1], pos));
    case IscDerivation::Kind::Constr:
      break;
  }
  throw Error("internal: intersection in a constr context");
}

// Γ, A, A, Δ ⊦ C  becomes  Γ, A, Δ ⊦ C. Terminates on (size of A, height).
inline IscDerivation derive_contract(const IscDerivation& d, std::size_t pos) {
  const Sequent& c = d.conclusion();
  if (pos + 1 >= c.context.size() || c.context[pos] != c.context[pos + 1])
    throw NotDuplicated(pos);
  switch (d.kind()) {
    case IscDerivation::Kind::Wk: {
      std::size_t q = d.pos();
      if (q == pos || q == pos + 1) return d.premise();
      const Type& dropped = c.context[q];
      if (q < pos)
        return IscDerivation::wk(q, dropped,
                                 derive_contract(d.premise(), pos - 1));
      return IscDerivation::wk(q - 1, dropped,
                               derive_contract(d.premise(), pos));
    }
    case IscDerivation::Kind::InterR:
      return IscDerivation::inter_r(derive_contract(d.premises()[0], pos),
                                    derive_contract(d.premises()[1], pos));
    case IscDerivation::Kind::InterL: {
      std::size_t q = d.pos();
      if (q == pos || q == pos + 1) {
        // The other copy of A = A1 /\ A2 is still whole in the premise; split
        // it, pair up the components, contract each, then reassemble.
        std::size_t whole = (q == pos) ? pos + 2 : pos;
        IscDerivation e = derive_interL_e(d.premise(), whole);
        // e: Γ, A1, A2, A1, A2, Δ. Swap the middle two.
        std::vector<std::size_t> perm(e.conclusion().context.size());
        for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
        std::swap(perm[pos + 1], perm[pos + 2]);
        e = derive_exchange(e, perm);
        e = derive_contract(e, pos);
        e = derive_contract(e, pos + 1);
        return IscDerivation::inter_l(pos, e);
      }
      if (q < pos)
        return IscDerivation::inter_l(q, derive_contract(d.premise(), pos + 1));
      return IscDerivation::inter_l(q - 1, derive_contract(d.premise(), pos));
    }
    case IscDerivation::Kind::Constr: {
      std::size_t k = c.context.size(), m = d.contra_arity(),
                  n = d.co_arity();
      std::vector<Type> cols;
      for (std::size_t j = 0; j < k; ++j)
        if (j != pos + 1) cols.push_back(c.context[j]);
      std::vector<IscDerivation> contra, co;
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < k; ++j)
          if (j != pos + 1) contra.push_back(d.contra_premise(i, j));
      for (std::size_t i = 0; i < n; ++i)
        co.push_back(derive_contract(d.co_premise(i), pos));
      return IscDerivation::constr(c.goal, std::move(cols), std::move(contra),
                                   std::move(co));
    }
  }
  throw Error("unreachable");
}

namespace detail {

// Merges two equal adjacent context blocks of length len starting at `start`.
inline IscDerivation contract_block(IscDerivation d, std::size_t start,
                                    std::size_t len) {
  if (len == 0) return d;
  std::size_t total = d.conclusion().context.size();
  std::vector<std::size_t> perm;
  perm.reserve(total);
  for (std::size_t i = 0; i < start; ++i) perm.push_back(i);
  for (std::size_t i = 0; i < len; ++i) {
    perm.push_back(start + i);
    perm.push_back(start + len + i);
  }
  for (std::size_t i = start + 2 * len; i < total; ++i) perm.push_back(i);
  d = derive_exchange(d, perm);
  for (std::size_t i = 0; i < len; ++i) d = derive_contract(d, start + i);
  return d;
}

struct CutMeasure {
  std::size_t formula, h1, h2;
  bool operator<(const CutMeasure& o) const {
    if (formula != o.formula) return formula < o.formula;
    if (h1 != o.h1) return h1 < o.h1;
    return h2 < o.h2;
  }
};

inline IscDerivation cut_impl(const IscDerivation& d1, const IscDerivation& d2,
                              std::size_t pos, const CutMeasure* parent) {
  using K = IscDerivation::Kind;
  const Type& a = d1.conclusion().goal;
  const std::vector<Type>& gamma = d1.conclusion().context;
  CutMeasure own{size(a), d1.height(), d2.height()};
  assert(!parent || own < *parent);
  (void)parent;
  auto rec = [&](const IscDerivation& l, const IscDerivation& r,
                 std::size_t p) { return cut_impl(l, r, p, &own); };

  switch (d2.kind()) {
    case K::InterR:
      return IscDerivation::inter_r(rec(d1, d2.premises()[0], pos),
                                    rec(d1, d2.premises()[1], pos));
    case K::Wk: {
      std::size_t q = d2.pos();
      if (q == pos) {
        IscDerivation out = d2.premise();
        for (std::size_t i = 0; i < gamma.size(); ++i)
          out = derive_weaken_gen(out, pos + i, gamma[i]);
        return out;
      }
      IscDerivation r = rec(d1, d2.premise(), pos - (q < pos ? 1 : 0));
      std::size_t nq = q + (q > pos ? gamma.size() - 1 : 0);
      return IscDerivation::wk(nq, d2.conclusion().context[q], r);
    }
    case K::InterL: {
      std::size_t q = d2.pos();
      if (q != pos) {
        IscDerivation r = rec(d1, d2.premise(), pos + (q < pos ? 1 : 0));
        std::size_t nq = q + (q > pos ? gamma.size() - 1 : 0);
        return IscDerivation::inter_l(nq, r);
      }
      // The cut formula A = A1 /\ A2 is split on the right.
      switch (d1.kind()) {
        case K::InterR: {
          IscDerivation s1 = rec(d1.premises()[1], d2.premise(), pos + 1);
          IscDerivation s2 = rec(d1.premises()[0], s1, pos);
          return contract_block(s2, pos, gamma.size());
        }
        case K::Wk: {
          IscDerivation r = rec(d1.premise(), d2, pos);
          return IscDerivation::wk(pos + d1.pos(), gamma[d1.pos()], r);
        }
        case K::InterL: {
          IscDerivation r = rec(d1.premise(), d2, pos);
          return IscDerivation::inter_l(pos + d1.pos(), r);
        }
        case K::Constr:
          throw Error("internal: constr concluding an intersection");
      }
      throw Error("unreachable");
    }
    case K::Constr: {
      switch (d1.kind()) {
        case K::Wk: {
          IscDerivation r = rec(d1.premise(), d2, pos);
          return IscDerivation::wk(pos + d1.pos(), gamma[d1.pos()], r);
        }
        case K::InterL: {
          IscDerivation r = rec(d1.premise(), d2, pos);
          return IscDerivation::inter_l(pos + d1.pos(), r);
        }
        case K::InterR:
          throw Error("internal: interR concluding an atom");
        case K::Constr: {
          // Both principal: splice the left node's columns in place of the
          // cut column, cutting componentwise.
          const Sequent& c2 = d2.conclusion();
          std::size_t k = c2.context.size(), k1 = gamma.size();
          std::size_t m = d2.contra_arity(), n = d2.co_arity();
          std::vector<Type> cols;
          cols.reserve(k - 1 + k1);
          for (std::size_t j = 0; j < pos; ++j) cols.push_back(c2.context[j]);
          for (std::size_t j = 0; j < k1; ++j) cols.push_back(gamma[j]);
          for (std::size_t j = pos + 1; j < k; ++j)
            cols.push_back(c2.context[j]);
          std::vector<IscDerivation> contra, co;
          contra.reserve(m * cols.size());
          co.reserve(n);
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < pos; ++j)
              contra.push_back(d2.contra_premise(i, j));
            for (std::size_t j = 0; j < k1; ++j)
              contra.push_back(
                  rec(d2.contra_premise(i, pos), d1.contra_premise(i, j), 0));
            for (std::size_t j = pos + 1; j < k; ++j)
              contra.push_back(d2.contra_premise(i, j));
          }
          for (std::size_t i = 0; i < n; ++i)
            co.push_back(rec(d1.co_premise(i), d2.co_premise(i), pos));
          return IscDerivation::constr(c2.goal, std::move(cols),
                                       std::move(contra), std::move(co));
        }
      }
      throw Error("unreachable");
    }
  }
  throw Error("unreachable");
}

}  // namespace detail

// Cut: from Γ ⊦ A and Δ, A, Σ ⊦ C (A at position pos) derive Δ, Γ, Σ ⊦ C.
// The output is cut-free. Terminates on (size of A, height, height),
// asserted in debug builds at every recursive step.
inline IscDerivation derive_cut(const IscDerivation& d1,
                                const IscDerivation& d2, std::size_t pos) {
  const Sequent& c2 = d2.conclusion();
  if (pos >= c2.context.size() || c2.context[pos] != d1.conclusion().goal)
    throw CutFormulaMismatch();
  return detail::cut_impl(d1, d2, pos, nullptr);
}

// ---- small constructive helpers used by the translators ----

namespace detail {
// flat ⊦ to, where `flat` lists the atoms of the eventual context and `to`
// occurs among them: axiom plus weakenings.
inline IscDerivation pick_atom(const std::vector<Type>& flat,
                               const Type& to) {
  std::size_t hit = flat.size();
  for (std::size_t i = 0; i < flat.size(); ++i)
    if (flat[i] == to) {
      hit = i;
      break;
    }
  if (hit == flat.size())
    throw Error("pick_atom: goal atom not present in context");
  IscDerivation d = derive_ax(to);
  for (std::size_t i = 0; i < flat.size(); ++i) {
    if (i == hit) continue;
    d = IscDerivation::wk(i, flat[i], d);
  }
  return d;
}

// Re-folds the flattened entry at `pos` back into its intersection shape.
inline IscDerivation refold(const Type& entry, std::size_t pos,
                            IscDerivation d) {
  if (is_atom(entry)) return d;
  d = refold(entry.left(), pos, std::move(d));
  d = refold(entry.right(), pos + 1, std::move(d));
  return IscDerivation::inter_l(pos, d);
}
}  // namespace detail

// ctx ⊦ to whenever every atom of `to` occurs among the atoms of `ctx`.
inline IscDerivation derive_le_ctx(const std::vector<Type>& ctx,
                                   const Type& to) {
  if (to.is_inter())
    return IscDerivation::inter_r(derive_le_ctx(ctx, to.left()),
                                  derive_le_ctx(ctx, to.right()));
  std::vector<Type> flat;
  for (const auto& e : ctx) atomize_into(e, flat);
  IscDerivation d = detail::pick_atom(flat, to);
  std::size_t pos = 0;
  for (const auto& e : ctx) {
    d = detail::refold(e, pos, std::move(d));
    ++pos;
  }
  return d;
}

// [from] ⊦ to; the atoms of `to` must be a subset of the atoms of `from`.
inline IscDerivation derive_le(const Type& from, const Type& to) {
  return derive_le_ctx({from}, to);
}

// ctx ⊦ top for a 0-ary width-0 atom.
inline IscDerivation derive_top(const std::vector<Type>& ctx,
                                const Type& top_atom) {
  IscDerivation d = IscDerivation::constr(top_atom, {}, {}, {});
  for (std::size_t i = 0; i < ctx.size(); ++i)
    d = derive_weaken_gen(d, i, ctx[i]);
  return d;
}

// Merges the whole (nonempty) context into one right-nested intersection.
inline IscDerivation fold_context(IscDerivation d) {
  std::size_t n = d.conclusion().context.size();
  if (n == 0) throw Error("fold_context: empty context");
  for (std::size_t i = n - 1; i-- > 0;) d = IscDerivation::inter_l(i, d);
  return d;
}

// ---- proof search ----

struct ProveOptions {
  // Testing hooks: turning either off makes the prover unsound/incomplete on
  // purpose so the differential harness can demonstrate sensitivity.
  bool width_check = true;
  bool maximal_set = true;
};

namespace detail {

inline Sequent canonical(std::vector<Type> ctx, const Type& goal) {
  std::sort(ctx.begin(), ctx.end());
  ctx.erase(std::unique(ctx.begin(), ctx.end(),
                        [](const Type& a, const Type& b) { return a == b; }),
            ctx.end());
  return Sequent{std::move(ctx), goal};
}

class Prover {
 public:
  Prover(const Signature& sig, ProveOptions opt) : sig_(sig), opt_(opt) {}

  bool derivable(const std::vector<Type>& ctx, const Type& goal) {
    std::vector<Type> atoms;
    for (const auto& e : ctx) atomize_into(e, atoms);
    Sequent key = canonical(atoms, goal);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    bool res = compute(atoms, goal);
    memo_.emplace(std::move(key), res);
    return res;
  }

  IscDerivation build(const std::vector<Type>& ctx, const Type& goal) {
    for (std::size_t p = 0; p < ctx.size(); ++p) {
      if (!ctx[p].is_inter()) continue;
      std::vector<Type> sub = ctx;
      sub[p] = ctx[p].left();
      sub.insert(sub.begin() + p + 1, ctx[p].right());
      return IscDerivation::inter_l(p, build(sub, goal));
    }
    if (goal.is_inter())
      return IscDerivation::inter_r(build(ctx, goal.left()),
                                    build(ctx, goal.right()));
    std::vector<std::size_t> sel = qualified(ctx, goal);
    std::size_t m = goal.contra_args().size(), n = goal.co_args().size();
    std::vector<Type> cols;
    for (std::size_t j : sel) cols.push_back(ctx[j]);
    std::vector<IscDerivation> contra, co;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j : sel)
        contra.push_back(
            build({goal.contra_args()[i]}, ctx[j].contra_args()[i]));
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<Type> cctx;
      for (std::size_t j : sel) cctx.push_back(ctx[j].co_args()[i]);
      co.push_back(build(cctx, goal.co_args()[i]));
    }
    IscDerivation d = IscDerivation::constr(goal, std::move(cols),
                                            std::move(contra), std::move(co));
    std::size_t si = 0;
    for (std::size_t j = 0; j < ctx.size(); ++j) {
      if (si < sel.size() && sel[si] == j) {
        ++si;
        continue;
      }
      d = IscDerivation::wk(j, ctx[j], d);
    }
    return d;
  }

 private:
  // Columns whose every contravariant obligation holds. With maximal_set off
  // (testing hook) only the first such column is kept.
  std::vector<std::size_t> qualified(const std::vector<Type>& atoms,
                                     const Type& goal) {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < atoms.size(); ++j) {
      const Type& col = atoms[j];
      if (!sig_.constr_leq(col.head(), goal.head())) continue;
      bool ok = true;
      for (std::size_t i = 0; ok && i < goal.contra_args().size(); ++i)
        ok = derivable({goal.contra_args()[i]}, col.contra_args()[i]);
      if (!ok) continue;
      out.push_back(j);
      if (!opt_.maximal_set) break;
    }
    return out;
  }

  bool compute(const std::vector<Type>& atoms, const Type& goal) {
    if (goal.is_inter())
      return derivable(atoms, goal.left()) && derivable(atoms, goal.right());
    std::vector<std::size_t> sel = qualified(atoms, goal);
    if (opt_.width_check &&
        sel.size() < (std::size_t)sig_.decl(goal.head()).width)
      return false;
    for (std::size_t i = 0; i < goal.co_args().size(); ++i) {
      std::vector<Type> cctx;
      for (std::size_t j : sel) cctx.push_back(atoms[j].co_args()[i]);
      if (!derivable(cctx, goal.co_args()[i])) return false;
    }
    return true;
  }

  const Signature& sig_;
  ProveOptions opt_;
  std::map<Sequent, bool> memo_;
};

}  // namespace detail

// Backward proof search. Context intersections are split eagerly; a
// constructor goal succeeds through the maximal set of columns whose
// contravariant obligations all hold. Returns the derivation, or nothing.
inline std::optional<IscDerivation> prove(const Sequent& s,
                                          const Signature& sig,
                                          ProveOptions opt = {}) {
  for (const auto& t : s.context) validate_type(t, sig);
  validate_type(s.goal, sig);
  detail::Prover pr(sig, opt);
  if (!pr.derivable(s.context, s.goal)) return std::nullopt;
  return pr.build(s.context, s.goal);
}

// ---- exhaustive oracle ----

enum class OracleStatus { Derivable, NotDerivable, BudgetExceeded };

struct OracleResult {
  OracleStatus status;
  std::optional<IscDerivation> derivation;
};

namespace detail {

class Oracle {
 public:
  Oracle(const Signature& sig, std::size_t budget)
      : sig_(sig), budget_(budget) {}

  struct OutOfBudget {};

  bool search(const std::vector<Type>& ctx, const Type& goal) {
    Sequent key = canonical(ctx, goal);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    if (budget_ == 0) throw OutOfBudget{};
    --budget_;
    bool res = expand(key.context, goal);
    memo_.emplace(std::move(key), res);
    return res;
  }

  void unlimit() { budget_ = (std::size_t)-1; }

  // Rebuilds a derivation of the exact (non-canonical) sequent by replaying
  // the first rule choice whose subgoals are all derivable.
  IscDerivation build(const std::vector<Type>& ctx, const Type& goal) {
    if (goal.is_inter() && search(ctx, goal.left()) &&
        search(ctx, goal.right()))
      return IscDerivation::inter_r(build(ctx, goal.left()),
                                    build(ctx, goal.right()));
    for (std::size_t p = 0; p < ctx.size(); ++p) {
      if (!ctx[p].is_inter()) continue;
      std::vector<Type> sub = split_at(ctx, p);
      if (search(sub, goal))
        return IscDerivation::inter_l(p, build(sub, goal));
    }
    for (std::size_t p = 0; p < ctx.size(); ++p) {
      if (!is_atom(ctx[p])) continue;
      std::vector<Type> sub = ctx;
      sub.erase(sub.begin() + p);
      if (search(sub, goal))
        return IscDerivation::wk(p, ctx[p], build(sub, goal));
    }
    if (constr_subgoals_hold(ctx, goal)) {
      std::size_t m = goal.contra_args().size(), n = goal.co_args().size();
      std::vector<IscDerivation> contra, co;
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < ctx.size(); ++j)
          contra.push_back(
              build({goal.contra_args()[i]}, ctx[j].contra_args()[i]));
      for (std::size_t i = 0; i < n; ++i)
        co.push_back(build(co_ctx(ctx, i), goal.co_args()[i]));
      return IscDerivation::constr(goal, ctx, std::move(contra),
                                   std::move(co));
    }
    throw Error("internal: oracle build on an underivable sequent");
  }

 private:
  static std::vector<Type> split_at(const std::vector<Type>& ctx,
                                    std::size_t p) {
    std::vector<Type> sub = ctx;
    sub[p] = ctx[p].left();
    sub.insert(sub.begin() + p + 1, ctx[p].right());
    return sub;
  }
  static std::vector<Type> co_ctx(const std::vector<Type>& ctx,
                                  std::size_t i) {
    std::vector<Type> out;
    out.reserve(ctx.size());
    for (const auto& col : ctx) out.push_back(col.co_args()[i]);
    return out;
  }

  bool constr_applicable(const std::vector<Type>& ctx, const Type& goal) {
    if (!is_atom(goal)) return false;
    if ((std::size_t)sig_.decl(goal.head()).width > ctx.size()) return false;
    std::size_t m = goal.contra_args().size(), n = goal.co_args().size();
    for (const auto& col : ctx) {
      if (!is_atom(col)) return false;
      if (!sig_.constr_leq(col.head(), goal.head())) return false;
      if (col.contra_args().size() != m || col.co_args().size() != n)
        return false;
    }
    return true;
  }

  bool constr_subgoals_hold(const std::vector<Type>& ctx, const Type& goal) {
    if (!constr_applicable(ctx, goal)) return false;
    for (std::size_t i = 0; i < goal.contra_args().size(); ++i)
      for (std::size_t j = 0; j < ctx.size(); ++j)
        if (!search({goal.contra_args()[i]}, ctx[j].contra_args()[i]))
          return false;
    for (std::size_t i = 0; i < goal.co_args().size(); ++i)
      if (!search(co_ctx(ctx, i), goal.co_args()[i])) return false;
    return true;
  }

  bool expand(const std::vector<Type>& ctx, const Type& goal) {
    if (goal.is_inter() && search(ctx, goal.left()) &&
        search(ctx, goal.right()))
      return true;
    for (std::size_t p = 0; p < ctx.size(); ++p) {
      if (!ctx[p].is_inter()) continue;
      if (search(split_at(ctx, p), goal)) return true;
    }
    for (std::size_t p = 0; p < ctx.size(); ++p) {
      if (!is_atom(ctx[p])) continue;
      std::vector<Type> sub = ctx;
      sub.erase(sub.begin() + p);
      if (search(sub, goal)) return true;
    }
    return constr_subgoals_hold(ctx, goal);
  }

  const Signature& sig_;
  std::size_t budget_;
  std::map<Sequent, bool> memo_;
};

}  // namespace detail

// Complete backward search over every rule choice, memoized on canonical
// (sorted, deduplicated) sequents. Independent of prove(); used as its
// differential-testing oracle.
inline OracleResult prove_exhaustive(const Sequent& s, const Signature& sig,
                                     std::size_t budget) {
  for (const auto& t : s.context) validate_type(t, sig);
  validate_type(s.goal, sig);
  detail::Oracle o(sig, budget);
  bool ok;
  try {
    ok = o.search(s.context, s.goal);
  } catch (const detail::Oracle::OutOfBudget&) {
    return {OracleStatus::BudgetExceeded, std::nullopt};
  }
  if (!ok) return {OracleStatus::NotDerivable, std::nullopt};
  o.unlimit();
  return {OracleStatus::Derivable, o.build(s.context, s.goal)};
}

// ---- inversion ----

// For a derivable homogeneous sequent κ1(..), ..., κk(..) ⊦ κ(As; Bs) with
// every κj <= κ: the columns that actually feed the constructor step,
// together with the component derivations.
struct InversionWitness {
  std::vector<std::size_t> selected;               // strictly increasing
  std::vector<std::vector<IscDerivation>> contra;  // [i][q]: [Ai] ⊦ Ai_{sel q}
  std::vector<IscDerivation> co;                   // [i]: Bi over sel ⊦ Bi
};

inline std::optional<InversionWitness> invert_constr(const Sequent& s,
                                                     const Signature& sig) {
  for (const auto& t : s.context) validate_type(t, sig);
  validate_type(s.goal, sig);
  if (!is_atom(s.goal))
    throw PreconditionViolated("invert_constr: goal is not an atom");
  for (const auto& t : s.context) {
    if (!is_atom(t))
      throw PreconditionViolated("invert_constr: context entry is not an atom");
    if (!sig.constr_leq(t.head(), s.goal.head()))
      throw PreconditionViolated("invert_constr: head " + t.head() +
                                 " is not below " + s.goal.head());
  }
  auto d = prove(s, sig);
  if (!d) return std::nullopt;

  std::vector<std::size_t> alive(s.context.size());
  for (std::size_t i = 0; i < alive.size(); ++i) alive[i] = i;
  IscDerivation cur = *d;
  while (cur.kind() == IscDerivation::Kind::Wk) {
    alive.erase(alive.begin() + cur.pos());
    cur = cur.premise();
  }
  if (cur.kind() != IscDerivation::Kind::Constr)
    throw Error("internal: homogeneous derivation without constr spine");

  InversionWitness w;
  w.selected = std::move(alive);
  std::size_t m = cur.contra_arity(), n = cur.co_arity(),
              k = cur.columns();
  w.contra.resize(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < k; ++j)
      w.contra[i].push_back(cur.contra_premise(i, j));
  for (std::size_t i = 0; i < n; ++i) w.co.push_back(cur.co_premise(i));
  return w;
}

// Rebuilds a derivation of `s` from an inversion witness.
inline IscDerivation reassemble_inversion(const InversionWitness& w,
                                          const Sequent& s) {
  std::size_t m = s.goal.contra_args().size(), n = s.goal.co_args().size();
  std::vector<Type> cols;
  for (std::size_t j : w.selected) cols.push_back(s.context[j]);
  std::vector<IscDerivation> contra, co;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t q = 0; q < w.selected.size(); ++q)
      contra.push_back(w.contra[i][q]);
  for (std::size_t i = 0; i < n; ++i) co.push_back(w.co[i]);
  IscDerivation d = IscDerivation::constr(s.goal, std::move(cols),
                                          std::move(contra), std::move(co));
  std::size_t si = 0;
  for (std::size_t j = 0; j < s.context.size(); ++j) {
    if (si < w.selected.size() && w.selected[si] == j) {
      ++si;
      continue;
    }
    d = IscDerivation::wk(j, s.context[j], d);
  }
  return d;
}

}  // namespace isect
