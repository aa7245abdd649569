#pragma once

// Intersection types over a user-declared signature of type constructors.
// Every constructor carries a contravariant arity, a covariant arity and a
// width (0 or 1); intersections are a separate binary node. Types are
// immutable and cheap to copy (shared subtrees).

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace isect {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnknownConstructor : Error {
  std::string name;
  explicit UnknownConstructor(const std::string& n)
      : Error("unknown constructor: " + n), name(n) {}
};

struct ArityMismatch : Error {
  std::string name;
  std::size_t expected_contra, expected_co, got_contra, got_co;
  ArityMismatch(const std::string& n, std::size_t ec, std::size_t eo,
                std::size_t gc, std::size_t go)
      : Error("arity mismatch for " + n + ": expected (" + std::to_string(ec) +
              ";" + std::to_string(eo) + "), got (" + std::to_string(gc) +
              ";" + std::to_string(go) + ")"),
        name(n), expected_contra(ec), expected_co(eo), got_contra(gc),
        got_co(go) {}
};

struct NoTopType : Error {
  NoTopType() : Error("signature declares no 0-ary width-0 constructor") {}
};

struct InvalidSignature : Error {
  using Error::Error;
};

struct ConstructorDecl {
  std::string name;
  std::size_t convar = 0;  // contravariant arity
  std::size_t covar = 0;   // covariant arity
  int width = 0;           // 0 or 1
};

class Type {
 public:
  static Type inter(Type l, Type r);
  static Type constr(std::string head, std::vector<Type> contra,
                     std::vector<Type> co);
  static Type atom(std::string head) { return constr(std::move(head), {}, {}); }

  bool is_inter() const;
  bool is_constr() const { return !is_inter(); }

  const Type& left() const;
  const Type& right() const;
  const std::string& head() const;
  const std::vector<Type>& contra_args() const;
  const std::vector<Type>& co_args() const;

  // Total structural order; constructor-rooted types sort before inters.
  int compare(const Type& o) const {
    if (node_ == o.node_) return 0;
    if (is_constr() != o.is_constr()) return is_constr() ? -1 : 1;
    if (is_constr()) {
      if (int c = head().compare(o.head())) return c < 0 ? -1 : 1;
      if (int c = compare_lists(contra_args(), o.contra_args())) return c;
      return compare_lists(co_args(), o.co_args());
    }
    if (int c = left().compare(o.left())) return c;
    return right().compare(o.right());
  }
  bool operator==(const Type& o) const { return compare(o) == 0; }
  bool operator!=(const Type& o) const { return compare(o) != 0; }
  bool operator<(const Type& o) const { return compare(o) < 0; }

 private:
  struct Inter;
  struct Ctor;
  struct Node;
  explicit Type(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  static int compare_lists(const std::vector<Type>& a,
                           const std::vector<Type>& b) {
    if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (int c = a[i].compare(b[i])) return c;
    return 0;
  }

  std::shared_ptr<const Node> node_;
};

struct Type::Inter {
  Type l, r;
};
struct Type::Ctor {
  std::string head;
  std::vector<Type> contra, co;
};
struct Type::Node {
  std::variant<Inter, Ctor> v;
};

inline Type Type::inter(Type l, Type r) {
  return Type(std::make_shared<Node>(Node{Inter{std::move(l), std::move(r)}}));
}
inline Type Type::constr(std::string head, std::vector<Type> contra,
                         std::vector<Type> co) {
  return Type(std::make_shared<Node>(
      Node{Ctor{std::move(head), std::move(contra), std::move(co)}}));
}
inline bool Type::is_inter() const {
  return std::holds_alternative<Inter>(node_->v);
}
inline const Type& Type::left() const { return std::get<Inter>(node_->v).l; }
inline const Type& Type::right() const { return std::get<Inter>(node_->v).r; }
inline const std::string& Type::head() const {
  return std::get<Ctor>(node_->v).head;
}
inline const std::vector<Type>& Type::contra_args() const {
  return std::get<Ctor>(node_->v).contra;
}
inline const std::vector<Type>& Type::co_args() const {
  return std::get<Ctor>(node_->v).co;
}

// An atom is a constructor-rooted type.
inline bool is_atom(const Type& t) { return t.is_constr(); }

inline std::size_t size(const Type& t) {
  if (t.is_inter()) return 1 + size(t.left()) + size(t.right());
  std::size_t n = 1;
  for (const auto& a : t.contra_args()) n += size(a);
  for (const auto& a : t.co_args()) n += size(a);
  return n;
}

// Maximal constructor-rooted subterms, left to right.
inline void atomize_into(const Type& t, std::vector<Type>& out) {
  if (t.is_inter()) {
    atomize_into(t.left(), out);
    atomize_into(t.right(), out);
  } else {
    out.push_back(t);
  }
}
inline std::vector<Type> atomize(const Type& t) {
  std::vector<Type> out;
  atomize_into(t, out);
  return out;
}

class Signature {
 public:
  void declare(ConstructorDecl d) {
    if (d.width != 0 && d.width != 1)
      throw InvalidSignature("width of " + d.name + " must be 0 or 1");
    if (d.name.empty()) throw InvalidSignature("empty constructor name");
    if (decls_.count(d.name))
      throw InvalidSignature("duplicate constructor: " + d.name);
    order_.push_back(d.name);
    decls_.emplace(d.name, std::move(d));
  }

  // Adds kappa1 <= kappa2 to the constructor preorder. Related constructors
  // must agree on both arities and width; the stored relation is kept
  // reflexive-transitively closed.
  void declare_leq(const std::string& a, const std::string& b) {
    const auto& da = decl(a);
    const auto& db = decl(b);
    if (da.convar != db.convar || da.covar != db.covar ||
        da.width != db.width)
      throw InvalidSignature("preorder " + a + " <= " + b +
                             " relates constructors of different shape");
    leq_.insert({a, b});
    close();
  }

  bool has(const std::string& name) const { return decls_.count(name) != 0; }

  const ConstructorDecl& decl(const std::string& name) const {
    auto it = decls_.find(name);
    if (it == decls_.end()) throw UnknownConstructor(name);
    return it->second;
  }

  bool constr_leq(const std::string& a, const std::string& b) const {
    return a == b || leq_.count({a, b}) != 0;
  }

  // The designated top: first declared 0-ary width-0 constructor.
  std::optional<std::string> top_name() const {
    for (const auto& n : order_) {
      const auto& d = decls_.at(n);
      if (d.convar == 0 && d.covar == 0 && d.width == 0) return n;
    }
    return std::nullopt;
  }
  Type top() const {
    auto n = top_name();
    if (!n) throw NoTopType();
    return Type::atom(*n);
  }

  const std::vector<std::string>& names() const { return order_; }

 private:
  void close() {
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& p : leq_)
        for (const auto& q : leq_)
          if (p.second == q.first && !leq_.count({p.first, q.second})) {
            leq_.insert({p.first, q.second});
            changed = true;
          }
    }
  }

  std::vector<std::string> order_;
  std::map<std::string, ConstructorDecl> decls_;
  std::set<std::pair<std::string, std::string>> leq_;
};

inline void validate_type(const Type& t, const Signature& sig) {
  if (t.is_inter()) {
    validate_type(t.left(), sig);
    validate_type(t.right(), sig);
    return;
  }
  const auto& d = sig.decl(t.head());
  if (t.contra_args().size() != d.convar || t.co_args().size() != d.covar)
    throw ArityMismatch(t.head(), d.convar, d.covar, t.contra_args().size(),
                        t.co_args().size());
  for (const auto& a : t.contra_args()) validate_type(a, sig);
  for (const auto& a : t.co_args()) validate_type(a, sig);
}

// Right-nested intersection of a list; the empty list is the designated top.
inline Type big_inter(const std::vector<Type>& ts, const Signature& sig) {
  if (ts.empty()) return sig.top();
  Type acc = ts.back();
  for (std::size_t i = ts.size() - 1; i-- > 0;)
    acc = Type::inter(ts[i], acc);
  return acc;
}

// True for 0-ary width-0 atoms: every such constructor acts as a top type.
inline bool is_top_atom(const Type& t, const Signature& sig) {
  if (!t.is_constr()) return false;
  const auto& d = sig.decl(t.head());
  return d.convar == 0 && d.covar == 0 && d.width == 0;
}

// ---- printing ----

namespace detail {
enum TypePrec { kPrecArrow = 0, kPrecInter = 1, kPrecProd = 2, kPrecAtom = 3 };

inline bool arrow_shaped(const Type& t) {
  return t.is_constr() && t.head() == "arrow" && t.contra_args().size() == 1 &&
         t.co_args().size() == 1;
}
inline bool prod_shaped(const Type& t) {
  return t.is_constr() && t.head() == "prod" && t.contra_args().empty() &&
         t.co_args().size() == 2;
}

inline void print_at(const Type& t, int min_prec, std::string& out);

inline int print_raw(const Type& t, std::string& out) {
  if (t.is_inter()) {
    print_at(t.left(), kPrecProd, out);
    out += " /\\ ";
    print_at(t.right(), kPrecInter, out);
    return kPrecInter;
  }
  if (arrow_shaped(t)) {
    print_at(t.contra_args()[0], kPrecInter, out);
    out += " -> ";
    print_at(t.co_args()[0], kPrecArrow, out);
    return kPrecArrow;
  }
  if (prod_shaped(t)) {
    print_at(t.co_args()[0], kPrecAtom, out);
    out += " * ";
    print_at(t.co_args()[1], kPrecProd, out);
    return kPrecProd;
  }
  out += t.head();
  if (!t.contra_args().empty() || !t.co_args().empty()) {
    out += "(";
    for (std::size_t i = 0; i < t.contra_args().size(); ++i) {
      if (i) out += ", ";
      print_at(t.contra_args()[i], kPrecArrow, out);
    }
    out += ";";
    for (std::size_t i = 0; i < t.co_args().size(); ++i) {
      out += i ? ", " : " ";
      print_at(t.co_args()[i], kPrecArrow, out);
    }
    out += ")";
  }
  return kPrecAtom;
}

inline void print_at(const Type& t, int min_prec, std::string& out) {
  std::string s;
  int p = print_raw(t, s);
  if (p < min_prec) {
    out += "(";
    out += s;
    out += ")";
  } else {
    out += s;
  }
}
}  // namespace detail

inline std::string print_type(const Type& t) {
  std::string out;
  detail::print_raw(t, out);
  return out;
}

// The standard arrow/product instance: a top, a 1-1 arrow of width 0, a
// covariant pair of width 1, plus 0-ary width-1 base atoms.
inline Signature default_signature(const std::vector<std::string>& atoms = {}) {
  Signature sig;
  sig.declare({"Omega", 0, 0, 0});
  sig.declare({"arrow", 1, 1, 0});
  sig.declare({"prod", 0, 2, 1});
  for (const auto& a : atoms) sig.declare({a, 0, 0, 1});
  return sig;
}

}  // namespace isect
