#include <catch2/catch_amalgamated.hpp>

#include "isect/isc.hpp"
#include "isect/parse.hpp"

using namespace isect;

namespace {
Signature sig_xyz() { return default_signature({"X", "Y", "Z"}); }

Type ty(const std::string& s) {
  Signature sig = sig_xyz();
  return parse_type(s, sig);
}

Sequent seq(std::vector<std::string> ctx, const std::string& goal) {
  Sequent s{{}, ty(goal)};
  for (const auto& c : ctx) s.context.push_back(ty(c));
  return s;
}

bool provable(std::vector<std::string> ctx, const std::string& goal) {
  Signature sig = sig_xyz();
  auto d = prove(seq(std::move(ctx), goal), sig);
  if (d) check_isc(*d, sig);
  return d.has_value();
}
}  // namespace

TEST_CASE("derive_ax proves A |- A for every shape") {
  Signature sig = sig_xyz();
  for (const char* s :
       {"X", "Omega", "X /\\ Y", "X -> Y", "(X /\\ Y) -> X * Z",
        "(X -> Y) /\\ (Y /\\ Z)"}) {
    Type a = ty(s);
    IscDerivation d = derive_ax(a);
    check_isc(d, sig);
    CHECK(d.conclusion() == Sequent{{a}, a});
  }
}

TEST_CASE("checker rejects malformed nodes with a path") {
  Signature sig = sig_xyz();
  // wk may only drop constructor-rooted types
  IscDerivation bad_wk = IscDerivation::wk(0, ty("X /\\ Y"), derive_ax(ty("X")));
  CHECK_THROWS_AS(check_isc(bad_wk, sig), RuleViolation);

  // constr with no columns violates the width bound of X
  IscDerivation bad_constr = IscDerivation::constr(ty("X"), {}, {}, {});
  try {
    check_isc(IscDerivation::wk(0, ty("Y"), bad_constr), sig);
    FAIL("expected RuleViolation");
  } catch (const RuleViolation& e) {
    CHECK(e.path == "0");  // first premise of the root
  }

  // covariant premise concluding the wrong sequent
  IscDerivation wrong_co =
      IscDerivation::constr(ty("X -> Y"), {ty("X -> Z")},
                            {derive_ax(ty("X"))}, {derive_ax(ty("Z"))});
  CHECK_THROWS_AS(check_isc(wrong_co, sig), RuleViolation);

  // valid derivations pass
  check_isc(derive_ax(ty("(X -> Y) /\\ Z")), sig);
}

TEST_CASE("derive_weaken_gen inserts arbitrary types") {
  Signature sig = sig_xyz();
  IscDerivation d = derive_ax(ty("X"));
  d = derive_weaken_gen(d, 0, ty("(Y -> Z) /\\ (X /\\ Y)"));
  d = derive_weaken_gen(d, 2, ty("Omega"));
  check_isc(d, sig);
  CHECK(d.conclusion() ==
        seq({"(Y -> Z) /\\ (X /\\ Y)", "X", "Omega"}, "X"));
}

TEST_CASE("derive_exchange permutes the context, height-preserving") {
  Signature sig = sig_xyz();
  IscDerivation d = derive_ax(ty("X"));
  d = derive_weaken_gen(d, 1, ty("Y -> Z"));
  d = derive_weaken_gen(d, 2, ty("X /\\ Y"));
  REQUIRE(d.conclusion() == seq({"X", "Y -> Z", "X /\\ Y"}, "X"));

  IscDerivation e = derive_exchange(d, {2, 0, 1});
  check_isc(e, sig);
  CHECK(e.conclusion() == seq({"X /\\ Y", "X", "Y -> Z"}, "X"));
  CHECK(e.height() == d.height());

  CHECK_THROWS_AS(derive_exchange(d, {0, 0, 1}), BadPermutation);
  CHECK_THROWS_AS(derive_exchange(d, {0, 1}), BadPermutation);
  CHECK_THROWS_AS(derive_exchange(d, {0, 1, 3}), BadPermutation);
}

TEST_CASE("derive_interL_e splits a context intersection back apart") {
  Signature sig = sig_xyz();
  IscDerivation d = derive_ax(ty("X"));
  d = IscDerivation::wk(1, ty("Y"), d);
  d = IscDerivation::inter_l(0, d);
  REQUIRE(d.conclusion() == seq({"X /\\ Y"}, "X"));

  IscDerivation e = derive_interL_e(d, 0);
  check_isc(e, sig);
  CHECK(e.conclusion() == seq({"X", "Y"}, "X"));

  CHECK_THROWS_AS(derive_interL_e(derive_ax(ty("X")), 0),
                  PositionNotIntersection);

  // also through an interR node
  IscDerivation both = IscDerivation::inter_r(d, d);
  IscDerivation eb = derive_interL_e(both, 0);
  check_isc(eb, sig);
  CHECK(eb.conclusion() == seq({"X", "Y"}, "X /\\ X"));
}

TEST_CASE("derive_contract merges adjacent duplicates") {
  Signature sig = sig_xyz();

  IscDerivation d = derive_ax(ty("X"));
  d = IscDerivation::wk(1, ty("X"), d);
  REQUIRE(d.conclusion() == seq({"X", "X"}, "X"));
  IscDerivation c = derive_contract(d, 0);
  check_isc(c, sig);
  CHECK(c.conclusion() == seq({"X"}, "X"));

  // duplicated intersection: exercises the interL-at-duplicate case
  IscDerivation e = derive_ax(ty("X /\\ Y"));
  e = derive_weaken_gen(e, 1, ty("X /\\ Y"));
  REQUIRE(e.conclusion() == seq({"X /\\ Y", "X /\\ Y"}, "X /\\ Y"));
  IscDerivation ce = derive_contract(e, 0);
  check_isc(ce, sig);
  CHECK(ce.conclusion() == seq({"X /\\ Y"}, "X /\\ Y"));

  // duplicated arrows through a constr node
  Sequent s = seq({"X -> Y", "X -> Y"}, "X -> Y");
  Signature sg = sig_xyz();
  auto pd = prove(s, sg);
  REQUIRE(pd.has_value());
  IscDerivation cc = derive_contract(*pd, 0);
  check_isc(cc, sg);
  CHECK(cc.conclusion() == seq({"X -> Y"}, "X -> Y"));

  CHECK_THROWS_AS(derive_contract(derive_weaken_gen(derive_ax(ty("X")), 1,
                                                    ty("Y")),
                                  0),
                  NotDuplicated);
}

TEST_CASE("derive_cut composes derivations, eliminating the cut formula") {
  Signature sig = sig_xyz();

  SECTION("cut against an axiom") {
    IscDerivation d1 = derive_le(ty("X /\\ Y"), ty("X"));
    IscDerivation d2 = derive_ax(ty("X"));
    IscDerivation r = derive_cut(d1, d2, 0);
    check_isc(r, sig);
    CHECK(r.conclusion() == seq({"X /\\ Y"}, "X"));
  }

  SECTION("transitivity through constructor nodes") {
    // [X -> Y /\ Z] |- X -> Y   and   [X -> Y] |- (X /\ Z) -> Y
    IscDerivation d1 = IscDerivation::constr(
        ty("X -> Y"), {ty("X -> Y /\\ Z")}, {derive_ax(ty("X"))},
        {derive_le(ty("Y /\\ Z"), ty("Y"))});
    check_isc(d1, sig);
    IscDerivation d2 = IscDerivation::constr(
        ty("(X /\\ Z) -> Y"), {ty("X -> Y")},
        {derive_le(ty("X /\\ Z"), ty("X"))}, {derive_ax(ty("Y"))});
    check_isc(d2, sig);
    IscDerivation r = derive_cut(d1, d2, 0);
    check_isc(r, sig);
    CHECK(r.conclusion() == seq({"X -> Y /\\ Z"}, "(X /\\ Z) -> Y"));
  }

  SECTION("interR against interL forces block contraction") {
    IscDerivation d1 =
        IscDerivation::inter_r(derive_ax(ty("X")), derive_ax(ty("X")));
    REQUIRE(d1.conclusion() == seq({"X"}, "X /\\ X"));
    IscDerivation d2 = derive_ax(ty("X"));
    d2 = IscDerivation::wk(1, ty("X"), d2);
    d2 = IscDerivation::inter_l(0, d2);
    REQUIRE(d2.conclusion() == seq({"X /\\ X"}, "X"));
    IscDerivation r = derive_cut(d1, d2, 0);
    check_isc(r, sig);
    CHECK(r.conclusion() == seq({"X"}, "X"));
  }

  SECTION("cut into a longer context") {
    IscDerivation d1 = derive_le(ty("X /\\ (Y /\\ Z)"), ty("Y"));
    IscDerivation d2 = derive_le_ctx({ty("X"), ty("Y"), ty("Z")}, ty("Y"));
    IscDerivation r = derive_cut(d1, d2, 1);
    check_isc(r, sig);
    CHECK(r.conclusion() == seq({"X", "X /\\ (Y /\\ Z)", "Z"}, "Y"));
  }

  SECTION("mismatched cut formula") {
    CHECK_THROWS_AS(derive_cut(derive_ax(ty("X")), derive_ax(ty("Y")), 0),
                    CutFormulaMismatch);
    CHECK_THROWS_AS(derive_cut(derive_ax(ty("X")), derive_ax(ty("X")), 3),
                    CutFormulaMismatch);
  }
}

TEST_CASE("helper derivations: derive_le, derive_top, fold_context") {
  Signature sig = sig_xyz();

  IscDerivation le = derive_le(ty("X /\\ (Y /\\ Z)"), ty("Y /\\ X"));
  check_isc(le, sig);
  CHECK(le.conclusion() == seq({"X /\\ (Y /\\ Z)"}, "Y /\\ X"));

  CHECK_THROWS_AS(derive_le(ty("X"), ty("Y")), Error);

  IscDerivation lc = derive_le_ctx({ty("X -> Y"), ty("Z /\\ X")},
                                   ty("X /\\ (X -> Y)"));
  check_isc(lc, sig);
  CHECK(lc.conclusion() == seq({"X -> Y", "Z /\\ X"}, "X /\\ (X -> Y)"));

  IscDerivation top = derive_top({ty("X"), ty("Y /\\ Z")}, ty("Omega"));
  check_isc(top, sig);
  CHECK(top.conclusion() == seq({"X", "Y /\\ Z"}, "Omega"));

  IscDerivation w = derive_le_ctx({ty("X"), ty("Y"), ty("Z")}, ty("Z"));
  IscDerivation folded = fold_context(w);
  check_isc(folded, sig);
  CHECK(folded.conclusion() == seq({"X /\\ (Y /\\ Z)"}, "Z"));
  CHECK_THROWS_AS(fold_context(derive_top({}, ty("Omega"))), Error);
}

TEST_CASE("prove: frozen verdicts on the arrow/product signature") {
  // derivable
  CHECK(provable({"X /\\ Y"}, "X"));
  CHECK(provable({"X", "Y"}, "X /\\ Y"));
  CHECK(provable({}, "Omega"));
  CHECK(provable({}, "Omega -> Omega"));
  CHECK(provable({"Omega"}, "X -> Omega"));
  CHECK(provable({"(X -> Y) /\\ (X -> Z)"}, "X -> Y /\\ Z"));
  CHECK(provable({"X -> Y /\\ Z"}, "(X -> Y) /\\ (X -> Z)"));
  CHECK(provable({"X -> Z"}, "(X /\\ Y) -> Z"));
  CHECK(provable({"(X /\\ Y) * Z"}, "X * Z"));
  CHECK(provable({"(X * Y) /\\ (Z * Y)"}, "(X /\\ Z) * Y"));
  CHECK(provable({"(X /\\ Z) * Y"}, "(X * Y) /\\ (Z * Y)"));
  CHECK(provable({"X -> Y", "Z"}, "X -> Y"));

  // not derivable
  CHECK_FALSE(provable({}, "X"));
  CHECK_FALSE(provable({"Y"}, "X"));
  CHECK_FALSE(provable({"Omega"}, "Omega * Omega"));
  CHECK_FALSE(provable({}, "Omega * Omega"));
  CHECK_FALSE(provable({"(X /\\ Y) -> Z"}, "X -> Z"));
  CHECK_FALSE(provable({"X -> Y"}, "X -> Z"));
  CHECK_FALSE(provable({"X * Y"}, "Y * X"));
}

TEST_CASE("prove respects a declared constructor preorder") {
  Signature sig;
  sig.declare({"Omega", 0, 0, 0});
  sig.declare({"a", 0, 1, 1});
  sig.declare({"b", 0, 1, 1});
  sig.declare({"X", 0, 0, 1});
  sig.declare_leq("a", "b");

  Type aX = parse_type("a(; X)", sig), bX = parse_type("b(; X)", sig);
  auto d = prove(Sequent{{aX}, bX}, sig);
  REQUIRE(d.has_value());
  check_isc(*d, sig);
  CHECK_FALSE(prove(Sequent{{bX}, aX}, sig).has_value());

  // nesting through the covariant argument
  Type aaX = parse_type("a(; a(; X))", sig);
  Type bbX = parse_type("b(; b(; X))", sig);
  CHECK(prove(Sequent{{aaX}, bbX}, sig).has_value());
  CHECK_FALSE(prove(Sequent{{bbX}, aaX}, sig).has_value());
}

TEST_CASE("prove agrees with the exhaustive oracle on mixed samples") {
  Signature sig = sig_xyz();
  const std::vector<std::pair<std::vector<std::string>, std::string>> cases = {
      {{"X /\\ Y"}, "Y"},
      {{"X -> Y", "X -> Z"}, "X -> Y /\\ Z"},
      {{"X -> Y", "Y -> Z"}, "X -> Z"},
      {{}, "Omega -> Omega"},
      {{"Omega"}, "Omega * Omega"},
      {{"X * (Y /\\ Z)"}, "X * Y"},
      {{"X", "Y -> Z"}, "(Y /\\ X) -> Z"},
      {{"X"}, "X /\\ Omega"},
      {{"X /\\ (Y /\\ Z)"}, "Z /\\ X"},
  };
  for (const auto& [ctx, goal] : cases) {
    Sequent s = seq(ctx, goal);
    auto d = prove(s, sig);
    OracleResult o = prove_exhaustive(s, sig, 1u << 22);
    REQUIRE(o.status != OracleStatus::BudgetExceeded);
    INFO(print_sequent(s));
    CHECK(d.has_value() == (o.status == OracleStatus::Derivable));
    if (d) {
      check_isc(*d, sig);
      CHECK(d->conclusion() == s);
    }
    if (o.derivation) {
      check_isc(*o.derivation, sig);
      CHECK(o.derivation->conclusion() == s);
    }
  }
}

TEST_CASE("prove_exhaustive reports budget exhaustion") {
  Signature sig = sig_xyz();
  OracleResult r = prove_exhaustive(seq({}, "Omega"), sig, 0);
  CHECK(r.status == OracleStatus::BudgetExceeded);
  CHECK_FALSE(r.derivation.has_value());

  r = prove_exhaustive(seq({"X /\\ Y", "X"}, "X"), sig, 1u << 20);
  REQUIRE(r.status == OracleStatus::Derivable);
  check_isc(*r.derivation, sig);
  CHECK(r.derivation->conclusion() == seq({"X /\\ Y", "X"}, "X"));
}

TEST_CASE("prover testing hooks produce detectably wrong behavior") {
  Signature sig = sig_xyz();

  // disabled width bound: emits a derivation the checker rejects
  ProveOptions no_width{false, true};
  Sequent s1 = seq({"Omega"}, "Omega * Omega");
  auto d1 = prove(s1, sig, no_width);
  REQUIRE(d1.has_value());
  CHECK_THROWS_AS(check_isc(*d1, sig), RuleViolation);

  // first-qualified-column-only: misses derivable sequents
  ProveOptions first_only{true, false};
  Sequent s2 = seq({"X -> Y", "X -> Z"}, "X -> Y /\\ Z");
  CHECK(prove(s2, sig).has_value());
  CHECK_FALSE(prove(s2, sig, first_only).has_value());
}

TEST_CASE("invert_constr extracts the feeding columns") {
  Signature sig = sig_xyz();

  SECTION("all columns feed") {
    Sequent s = seq({"X -> Y", "X -> Z"}, "X -> Y /\\ Z");
    auto w = invert_constr(s, sig);
    REQUIRE(w.has_value());
    CHECK(w->selected == std::vector<std::size_t>{0, 1});
    REQUIRE(w->contra.size() == 1);
    REQUIRE(w->contra[0].size() == 2);
    REQUIRE(w->co.size() == 1);
    CHECK(w->co[0].conclusion() == seq({"Y", "Z"}, "Y /\\ Z"));
    IscDerivation back = reassemble_inversion(*w, s);
    check_isc(back, sig);
    CHECK(back.conclusion() == s);
  }

  SECTION("a column is discarded") {
    Sequent s = seq({"Z -> Y", "X -> Y"}, "X -> Y");
    auto w = invert_constr(s, sig);
    REQUIRE(w.has_value());
    CHECK(w->selected == std::vector<std::size_t>{1});
    IscDerivation back = reassemble_inversion(*w, s);
    check_isc(back, sig);
    CHECK(back.conclusion() == s);
  }

  SECTION("underivable gives nothing") {
    CHECK_FALSE(invert_constr(seq({"X -> Y"}, "X -> Z"), sig).has_value());
  }

  SECTION("precondition violations") {
    CHECK_THROWS_AS(
        invert_constr(seq({"(X -> Y) /\\ (X -> Z)"}, "X -> Y"), sig),
        PreconditionViolated);
    CHECK_THROWS_AS(invert_constr(seq({"X -> Y"}, "X /\\ Y"), sig),
                    PreconditionViolated);
    CHECK_THROWS_AS(invert_constr(seq({"Omega"}, "X -> Y"), sig),
                    PreconditionViolated);
  }

  SECTION("products select at least one column") {
    Sequent s = seq({"X * Y", "Z * Y"}, "X * Y");
    auto w = invert_constr(s, sig);
    REQUIRE(w.has_value());
    REQUIRE_FALSE(w->selected.empty());
    IscDerivation back = reassemble_inversion(*w, s);
    check_isc(back, sig);
    CHECK(back.conclusion() == s);
  }
}
