#include <catch2/catch_amalgamated.hpp>

#include "isect/axiomatic.hpp"
#include "isect/parse.hpp"

using namespace isect;

namespace {
Signature sig_xyz() { return default_signature({"X", "Y", "Z"}); }

Type ty(const std::string& s) {
  Signature sig = sig_xyz();
  return parse_type(s, sig);
}

Signature sig_unary() {
  Signature sig;
  sig.declare({"Omega", 0, 0, 0});
  sig.declare({"u", 0, 1, 1});
  sig.declare({"X", 0, 0, 1});
  sig.declare({"Y", 0, 0, 1});
  return sig;
}

// compile a rule application and confirm it lands on [lhs] |- rhs
void compile_ok(const AxDerivation& d, const Signature& sig) {
  check_ax(d, sig);
  IscDerivation i = ax_to_isc(d, sig);
  check_isc(i, sig);
  REQUIRE(i.conclusion() == Sequent{{d.lhs()}, d.rhs()});
}
}  // namespace

TEST_CASE("checker accepts factory-built rules") {
  Signature sig = sig_xyz();
  check_ax(AxDerivation::refl(ty("X -> Y")), sig);
  check_ax(AxDerivation::omega_r(ty("X /\\ Y"), ty("Omega")), sig);
  check_ax(AxDerivation::inter_l1(ty("X"), ty("Y")), sig);
  check_ax(AxDerivation::inter_idem(ty("X * Y")), sig);
  check_ax(AxDerivation::arrow_distrib("arrow", ty("X"), ty("Y"), ty("Z")),
           sig);
  check_ax(AxDerivation::omega_arrow("arrow", ty("Omega")), sig);
  check_ax(
      AxDerivation::prod_distrib("prod", ty("X"), ty("Y"), ty("Z"), ty("X")),
      sig);
}

TEST_CASE("checker rejects rule instances outside their side conditions") {
  Signature sig = sig_xyz();
  // right side of the top rule must be a 0-ary width-0 atom
  CHECK_THROWS_AS(check_ax(AxDerivation::omega_r(ty("X"), ty("Y")), sig),
                  RuleViolation);
  // top-collapse needs a top atom on the left
  CHECK_THROWS_AS(check_ax(AxDerivation::omega_arrow("arrow", ty("X")), sig),
                  RuleViolation);
  // non-chaining transitivity is rejected at construction
  CHECK_THROWS_AS(AxDerivation::trans(AxDerivation::refl(ty("X")),
                                      AxDerivation::refl(ty("Y"))),
                  Error);
  // width-1 function-like heads may not absorb the top
  Signature wsig;
  wsig.declare({"Omega", 0, 0, 0});
  wsig.declare({"arr1", 1, 1, 1});
  CHECK_THROWS_AS(
      check_ax(AxDerivation::omega_arrow("arr1", Type::atom("Omega")), wsig),
      RuleViolation);
}

TEST_CASE("the two-sided intersection rule is derivable") {
  Signature sig = sig_xyz();
  // From A <= B1 and A <= B2, conclude A <= B1 /\ B2.
  AxDerivation p1 = AxDerivation::inter_l1(ty("X"), ty("Y"));
  AxDerivation p2 = AxDerivation::omega_r(ty("X /\\ Y"), ty("Omega"));
  AxDerivation d = AxDerivation::trans(
      AxDerivation::inter_idem(ty("X /\\ Y")),
      AxDerivation::inter_mono(p1, p2));
  check_ax(d, sig);
  CHECK(d.lhs() == ty("X /\\ Y"));
  CHECK(d.rhs() == ty("X /\\ Omega"));
  compile_ok(d, sig);
}

TEST_CASE("every rule compiles to a checkable sequent derivation") {
  Signature sig = sig_xyz();
  compile_ok(AxDerivation::refl(ty("(X -> Y) /\\ Z")), sig);
  compile_ok(AxDerivation::omega_r(ty("X * Y"), ty("Omega")), sig);
  compile_ok(AxDerivation::inter_l1(ty("X -> Y"), ty("Z")), sig);
  compile_ok(AxDerivation::inter_l2(ty("X -> Y"), ty("Z")), sig);
  compile_ok(AxDerivation::inter_idem(ty("X /\\ Y")), sig);
  compile_ok(AxDerivation::inter_mono(
                 AxDerivation::inter_l1(ty("X"), ty("Y")),
                 AxDerivation::omega_r(ty("Z"), ty("Omega"))),
             sig);
  compile_ok(AxDerivation::trans(AxDerivation::inter_l1(ty("X"), ty("Y")),
                                 AxDerivation::omega_r(ty("X"), ty("Omega"))),
             sig);
  compile_ok(AxDerivation::arrow_mono(
                 "arrow", AxDerivation::inter_l1(ty("X"), ty("Z")),
                 AxDerivation::refl(ty("Y"))),
             sig);
  compile_ok(AxDerivation::arrow_distrib("arrow", ty("X"), ty("Y"), ty("Z")),
             sig);
  compile_ok(AxDerivation::omega_arrow("arrow", ty("Omega")), sig);
  compile_ok(AxDerivation::prod_mono(
                 "prod", AxDerivation::inter_l2(ty("X"), ty("Y")),
                 AxDerivation::refl(ty("Z"))),
             sig);
  compile_ok(AxDerivation::prod_distrib("prod", ty("X"), ty("Y"), ty("Z"),
                                        ty("X -> Y")),
             sig);

  Signature us = sig_unary();
  Type ux = parse_type("u(; X)", us);
  compile_ok(AxDerivation::unary_mono(
                 "u", AxDerivation::omega_r(parse_type("X", us),
                                            parse_type("Omega", us))),
             us);
  compile_ok(AxDerivation::unary_distrib("u", parse_type("X", us),
                                         parse_type("Y", us)),
             us);
  compile_ok(AxDerivation::refl(ux), us);
}

TEST_CASE("ax_le projects onto any atom subset") {
  Signature sig = sig_xyz();
  AxDerivation d = ax_le(ty("X /\\ (Y /\\ Z)"), ty("Z /\\ X"));
  check_ax(d, sig);
  CHECK(d.lhs() == ty("X /\\ (Y /\\ Z)"));
  CHECK(d.rhs() == ty("Z /\\ X"));
  compile_ok(d, sig);
  CHECK_THROWS_AS(ax_le(ty("X"), ty("Y")), Error);
}

TEST_CASE("sequent derivations translate back to the rule system") {
  Signature sig = sig_xyz();
  const std::vector<std::pair<std::vector<std::string>, std::string>> cases = {
      {{"X /\\ Y"}, "X"},
      {{"X", "Y"}, "Y /\\ X"},
      {{}, "Omega"},
      {{}, "Omega -> Omega"},
      {{"Omega"}, "X -> Omega"},
      {{"(X -> Y) /\\ (X -> Z)"}, "X -> Y /\\ Z"},
      {{"X -> Y /\\ Z"}, "(X -> Y) /\\ (X -> Z)"},
      {{"X -> Z"}, "(X /\\ Y) -> Z"},
      {{"(X /\\ Y) * Z"}, "X * Z"},
      {{"(X * Y) /\\ (Z * Y)"}, "(X /\\ Z) * Y"},
      {{"X -> Y", "X -> Z", "Y"}, "X -> Y /\\ Z"},
      {{"X", "Y", "Z"}, "Omega"},
  };
  for (const auto& [ctxs, goals] : cases) {
    Sequent s{{}, ty(goals)};
    for (const auto& c : ctxs) s.context.push_back(ty(c));
    auto d = prove(s, sig);
    REQUIRE(d.has_value());
    AxDerivation a = isc_to_ax(*d, sig);
    check_ax(a, sig);
    INFO(print_sequent(s));
    CHECK(a.lhs() == big_inter(s.context, sig));
    CHECK(a.rhs() == s.goal);
  }

  Signature us = sig_unary();
  Sequent s{{parse_type("u(; X) /\\ u(; Y)", us)},
            parse_type("u(; X /\\ Y)", us)};
  auto d = prove(s, us);
  REQUIRE(d.has_value());
  AxDerivation a = isc_to_ax(*d, us);
  check_ax(a, us);
  CHECK(a.lhs() == s.context[0]);
  CHECK(a.rhs() == s.goal);
}

TEST_CASE("constructor preorder steps have no rule-system image") {
  Signature sig;
  sig.declare({"Omega", 0, 0, 0});
  sig.declare({"a", 0, 1, 1});
  sig.declare({"b", 0, 1, 1});
  sig.declare({"X", 0, 0, 1});
  sig.declare_leq("a", "b");
  Sequent s{{parse_type("a(; X)", sig)}, parse_type("b(; X)", sig)};
  auto d = prove(s, sig);
  REQUIRE(d.has_value());
  CHECK_THROWS_AS(isc_to_ax(*d, sig), UnsupportedSignature);
}

TEST_CASE("round trip: rule derivations survive compilation both ways") {
  Signature sig = sig_xyz();
  std::mt19937_64 rng(20240817);
  for (int i = 0; i < 150; ++i) {
    AxDerivation d = random_ax_derivation(rng, sig, 3, 5);
    check_ax(d, sig);
    IscDerivation mid = ax_to_isc(d, sig);
    check_isc(mid, sig);
    REQUIRE(mid.conclusion() == Sequent{{d.lhs()}, d.rhs()});
    AxDerivation back = isc_to_ax(mid, sig);
    check_ax(back, sig);
    CHECK(back.lhs() == d.lhs());
    CHECK(back.rhs() == d.rhs());
  }
}

TEST_CASE("random rule derivations are deterministic in the seed") {
  Signature sig = sig_xyz();
  std::mt19937_64 r1(7), r2(7);
  for (int i = 0; i < 50; ++i) {
    AxDerivation a = random_ax_derivation(r1, sig, 4, 6);
    AxDerivation b = random_ax_derivation(r2, sig, 4, 6);
    CHECK(a == b);
  }
  // unary heads show up when declared
  Signature us = sig_unary();
  std::mt19937_64 r3(7);
  bool saw_unary = false;
  for (int i = 0; i < 100 && !saw_unary; ++i) {
    AxDerivation d = random_ax_derivation(r3, us, 3, 4);
    check_ax(d, us);
    saw_unary = d.rule() == AxRule::UnaryMono ||
                d.rule() == AxRule::UnaryDistrib;
  }
  CHECK(saw_unary);
}

TEST_CASE("function inversion recovers argument and body bounds") {
  Signature sig = sig_xyz();

  SECTION("both components feed the result") {
    auto inv = inversion_arrow({{ty("X"), ty("Y")}, {ty("X"), ty("Z")}},
                               ty("X"), ty("Y /\\ Z"), sig);
    REQUIRE(inv.has_value());
    CHECK(inv->selected == std::vector<std::size_t>{0, 1});
    REQUIRE(inv->arg.size() == 2);
    for (const auto& a : inv->arg) {
      check_ax(a, sig);
      CHECK(a.lhs() == ty("X"));
    }
    check_ax(inv->body, sig);
    CHECK(inv->body.lhs() == ty("Y /\\ Z"));
    CHECK(inv->body.rhs() == ty("Y /\\ Z"));
  }

  SECTION("unrelated components are filtered out") {
    auto inv = inversion_arrow({{ty("Z"), ty("Y")}, {ty("X"), ty("Y")}},
                               ty("X"), ty("Y"), sig);
    REQUIRE(inv.has_value());
    CHECK(inv->selected == std::vector<std::size_t>{1});
    check_ax(inv->body, sig);
    CHECK(inv->body.lhs() == ty("Y"));
  }

  SECTION("empty family against a top body") {
    auto inv = inversion_arrow({}, ty("X"), ty("Omega"), sig);
    REQUIRE(inv.has_value());
    CHECK(inv->selected.empty());
    check_ax(inv->body, sig);
    CHECK(inv->body.lhs() == ty("Omega"));
    CHECK(inv->body.rhs() == ty("Omega"));
  }

  SECTION("failure cases") {
    CHECK_FALSE(inversion_arrow({{ty("X"), ty("Y")}}, ty("X"), ty("Z"), sig)
                    .has_value());
    CHECK_FALSE(inversion_arrow({}, ty("X"), ty("Y"), sig).has_value());
  }
}

TEST_CASE("pair inversion projects both components over the whole family") {
  Signature sig = sig_xyz();

  auto inv = inversion_product({{ty("X"), ty("Y")}, {ty("Z"), ty("Y")}},
                               ty("X"), ty("Y"), sig);
  REQUIRE(inv.has_value());
  check_ax(inv->first, sig);
  check_ax(inv->second, sig);
  CHECK(inv->first.lhs() == ty("X /\\ Z"));
  CHECK(inv->first.rhs() == ty("X"));
  CHECK(inv->second.lhs() == ty("Y /\\ Y"));
  CHECK(inv->second.rhs() == ty("Y"));

  CHECK_FALSE(
      inversion_product({{ty("X"), ty("Y")}}, ty("Z"), ty("Y"), sig)
          .has_value());
  CHECK_FALSE(inversion_product({}, ty("X"), ty("Y"), sig).has_value());
}
