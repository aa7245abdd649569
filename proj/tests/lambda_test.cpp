#include <catch2/catch_amalgamated.hpp>

#include "isect/lambda.hpp"
#include "isect/parse.hpp"

using namespace isect;

namespace {

Signature sig_xyzw() { return default_signature({"X", "Y", "Z", "W"}); }

Type ty(const std::string& s) {
  Signature sig = sig_xyzw();
  return parse_type(s, sig);
}

TypingContext cx(std::vector<std::pair<std::string, std::string>> entries) {
  TypingContext out;
  for (auto& [n, t] : entries) out.push_back({n, ty(t)});
  return out;
}

// conclusion triple equality up to alpha
bool concludes(const TypingDerivation& d, const TypingContext& ctx,
               const std::string& term, const std::string& type) {
  return same_context(d.ctx(), ctx) && d.term() == parse_term(term) &&
         d.type() == ty(type);
}

}  // namespace

TEST_CASE("term parsing and printing round-trip") {
  for (const char* s : {
           "x",
           "\\x. x",
           "\\x. \\y. x",
           "f x y",
           "f (g x)",
           "(\\x. x) y",
           "<x, y>",
           "fst p",
           "snd (f x)",
           "fst <x, \\y. y>",
           "\\p. <snd p, fst p>",
           "f fst p",
           "x' x_1",
       }) {
    Term t = parse_term(s);
    CHECK(parse_term(print_term(t)) == t);
  }
  // fixed prints
  CHECK(print_term(parse_term("f x y")) == "f x y");
  CHECK(print_term(Term::app(Term::var("f"),
                             Term::app(Term::var("x"), Term::var("y")))) ==
        "f (x y)");
  CHECK(print_term(Term::app(Term::abs("x", Term::var("x")),
                             Term::var("y"))) == "(\\x. x) y");
  CHECK(print_term(Term::proj1(Term::app(Term::var("f"), Term::var("x")))) ==
        "fst (f x)");
  // "f fst p" applies f to the projection
  Term t = parse_term("f fst p");
  REQUIRE(t.kind() == Term::Kind::App);
  CHECK(t.child(1).kind() == Term::Kind::Proj1);
}

TEST_CASE("term parser rejects malformed input") {
  CHECK_THROWS_AS(parse_term(""), SyntaxError);
  CHECK_THROWS_AS(parse_term("\\x x"), SyntaxError);
  CHECK_THROWS_AS(parse_term("<x y>"), SyntaxError);
  CHECK_THROWS_AS(parse_term("x )"), SyntaxError);
  CHECK_THROWS_AS(parse_term("fst"), SyntaxError);
  CHECK_THROWS_AS(parse_term("\\fst. x"), SyntaxError);
}

TEST_CASE("alpha-equivalence identifies renamed bound variables") {
  CHECK(parse_term("\\x. x") == parse_term("\\y. y"));
  CHECK(parse_term("\\x. \\y. x y") == parse_term("\\a. \\b. a b"));
  CHECK(parse_term("\\x. z") == parse_term("\\y. z"));
  CHECK(parse_term("\\x. x") != parse_term("\\x. y"));
  CHECK(parse_term("x") != parse_term("y"));
  // free occurrences must match exactly
  CHECK(parse_term("\\x. y") != parse_term("\\y. x"));
  // bound/free confusion
  CHECK(parse_term("\\x. x y") != parse_term("\\y. y y"));
}

TEST_CASE("free variables and substitution") {
  CHECK(free_vars(parse_term("\\x. x y")) == std::set<std::string>{"y"});
  CHECK(free_vars(parse_term("fst <x, \\y. y z>")) ==
        std::set<std::string>{"x", "z"});

  CHECK(substitute(parse_term("x y"), "x", parse_term("\\z. z")) ==
        parse_term("(\\z. z) y"));
  // shadowed binder blocks the substitution
  CHECK(substitute(parse_term("\\x. x"), "x", parse_term("y")) ==
        parse_term("\\x. x"));
  // capture is avoided by renaming the binder
  Term r = substitute(parse_term("\\y. x"), "x", parse_term("y"));
  CHECK(r == Term::abs("q", Term::var("y")));
  CHECK(r != parse_term("\\y. y"));
}

TEST_CASE("subterm navigation and redex discovery") {
  Term t = parse_term("fst <(\\x. x) y, z>");
  CHECK(subterm_at(t, {0, 1}) == parse_term("z"));
  CHECK(replace_at(t, {0, 1}, parse_term("w")) ==
        parse_term("fst <(\\x. x) y, w>"));
  CHECK_THROWS_AS(subterm_at(t, {2}), Error);

  auto rs = find_redexes(t);
  REQUIRE(rs.size() == 2);
  CHECK(rs[0].path == TermPath{});
  CHECK(rs[0].kind == RedexKind::Pi1);
  CHECK(rs[1].path == TermPath{0, 0});
  CHECK(rs[1].kind == RedexKind::Beta);

  CHECK(reduce_at(t, {}) == parse_term("(\\x. x) y"));
  CHECK(reduce_at(t, {0, 0}) == parse_term("fst <y, z>"));
  CHECK(reduce_at(parse_term("snd <x, y>"), {}) == parse_term("y"));
  CHECK_THROWS_AS(reduce_at(parse_term("f x"), {}), Error);
}

TEST_CASE("typing rule constructors compute conclusions") {
  Signature sig = sig_xyzw();
  TypingContext g = cx({{"x", "X"}});

  TypingDerivation vx = TypingDerivation::var_rule(g, "x");
  CHECK(concludes(vx, g, "x", "X"));
  check_typing(vx, sig);

  TypingDerivation id = TypingDerivation::abs_rule(vx);
  CHECK(concludes(id, {}, "\\x. x", "X -> X"));
  check_typing(id, sig);

  TypingContext gy = cx({{"y", "X"}});
  TypingDerivation app = TypingDerivation::app_rule(
      weaken_typing(id, 0, "y", ty("X")), TypingDerivation::var_rule(gy, "y"));
  CHECK(concludes(app, gy, "(\\x. x) y", "X"));
  check_typing(app, sig);

  TypingContext g2 = cx({{"a", "X"}, {"b", "Y"}});
  TypingDerivation pr = TypingDerivation::pair_rule(
      TypingDerivation::var_rule(g2, "a"), TypingDerivation::var_rule(g2, "b"));
  CHECK(concludes(pr, g2, "<a, b>", "X * Y"));
  TypingDerivation p1 = TypingDerivation::proj1_rule(pr);
  CHECK(concludes(p1, g2, "fst <a, b>", "X"));
  TypingDerivation p2 = TypingDerivation::proj2_rule(pr);
  CHECK(concludes(p2, g2, "snd <a, b>", "Y"));
  check_typing(p1, sig);
  check_typing(p2, sig);

  TypingContext gi = cx({{"x", "X /\\ Y"}});
  TypingDerivation v = TypingDerivation::var_rule(gi, "x");
  TypingDerivation lx =
      TypingDerivation::leq_rule(v, derive_le(ty("X /\\ Y"), ty("X")));
  TypingDerivation ly =
      TypingDerivation::leq_rule(v, derive_le(ty("X /\\ Y"), ty("Y")));
  TypingDerivation both = TypingDerivation::inter_rule(ly, lx);
  CHECK(concludes(both, gi, "x", "Y /\\ X"));
  check_typing(both, sig);

  TypingDerivation om =
      TypingDerivation::omega_rule({}, parse_term("y z"), ty("Omega"));
  CHECK(concludes(om, {}, "y z", "Omega"));
  check_typing(om, sig);
}

TEST_CASE("typing rule constructors reject ill-formed applications") {
  TypingContext g = cx({{"x", "X"}, {"f", "X -> Y"}});
  CHECK_THROWS_AS(TypingDerivation::var_rule(g, "q"), Error);
  TypingDerivation vf = TypingDerivation::var_rule(g, "f");
  TypingDerivation vx = TypingDerivation::var_rule(g, "x");
  // argument type mismatch
  CHECK_THROWS_AS(TypingDerivation::app_rule(vf, vf), Error);
  // operator is not an arrow
  CHECK_THROWS_AS(TypingDerivation::app_rule(vx, vx), Error);
  // projection of a non-pair type
  CHECK_THROWS_AS(TypingDerivation::proj1_rule(vx), Error);
  // evidence context must be the premise type
  CHECK_THROWS_AS(
      TypingDerivation::leq_rule(vx, derive_le(ty("Y"), ty("Y"))), Error);
  // abstraction needs a hypothesis
  TypingDerivation closed =
      TypingDerivation::omega_rule({}, parse_term("x"), ty("Omega"));
  CHECK_THROWS_AS(TypingDerivation::abs_rule(closed), Error);
  // intersection premises must share subject and context
  CHECK_THROWS_AS(TypingDerivation::inter_rule(vf, vx), Error);
}

TEST_CASE("typing checker rejects bad contexts and omega misuse") {
  Signature sig = sig_xyzw();
  TypingContext dup = {{"x", ty("X")}, {"x", ty("Y")}};
  TypingDerivation d = TypingDerivation::var_rule(dup, "x");
  CHECK_THROWS_AS(check_typing(d, sig), RuleViolation);

  TypingDerivation om =
      TypingDerivation::omega_rule({}, parse_term("x"), ty("X"));
  CHECK_THROWS_AS(check_typing(om, sig), RuleViolation);
  TypingDerivation om2 =
      TypingDerivation::omega_rule({}, parse_term("x"), ty("X -> Omega"));
  CHECK_THROWS_AS(check_typing(om2, sig), RuleViolation);

  // nested failure is located by its path
  TypingDerivation bad = TypingDerivation::abs_rule(
      TypingDerivation::omega_rule(cx({{"x", "X"}}), parse_term("x"),
                                   ty("Y")));
  try {
    check_typing(bad, sig);
    FAIL("expected a rule violation");
  } catch (const RuleViolation& e) {
    CHECK(e.path == "0");
  }
}

TEST_CASE("context transformations preserve validity") {
  Signature sig = sig_xyzw();
  TypingContext g = cx({{"x", "X"}});
  TypingDerivation id = TypingDerivation::abs_rule(
      TypingDerivation::var_rule(cx({{"x", "X"}, {"z", "Y"}}), "z"));
  // id : x:X |- \z. z : Y -> Y
  check_typing(id, sig);

  TypingDerivation w = weaken_typing(id, 1, "u", ty("Z"));
  check_typing(w, sig);
  REQUIRE(w.ctx().size() == 2);
  CHECK(w.ctx()[1].name == "u");
  CHECK(w.term() == id.term());
  CHECK(w.type() == id.type());

  TypingDerivation s = strengthen_typing(w, 1);
  check_typing(s, sig);
  CHECK(same_context(s.ctx(), g));
  CHECK(s.term() == id.term());

  // the bound hypothesis is in use
  TypingDerivation inner = TypingDerivation::var_rule(g, "x");
  CHECK_THROWS_AS(strengthen_typing(inner, 0), Error);

  TypingDerivation r = rename_hyp(inner, "x", "w");
  check_typing(r, sig);
  CHECK(concludes(r, cx({{"w", "X"}}), "w", "X"));

  TypingDerivation c =
      coerce_hyp(inner, "x", ty("X /\\ Y"), derive_le(ty("X /\\ Y"), ty("X")));
  check_typing(c, sig);
  CHECK(concludes(c, cx({{"x", "X /\\ Y"}}), "x", "X"));

  TypingContext g2 = cx({{"a", "X"}, {"b", "Y"}});
  TypingDerivation sw = swap_hyps(TypingDerivation::var_rule(g2, "a"), 0);
  check_typing(sw, sig);
  CHECK(concludes(sw, cx({{"b", "Y"}, {"a", "X"}}), "a", "X"));
  CHECK_THROWS_AS(swap_hyps(sw, 1), Error);
}

TEST_CASE("substitution on typing derivations") {
  Signature sig = sig_xyzw();

  SECTION("variable for variable") {
    TypingDerivation d_t =
        TypingDerivation::var_rule(cx({{"y", "X"}, {"x", "X"}}), "x");
    TypingDerivation d_u = TypingDerivation::var_rule(cx({{"y", "X"}}), "y");
    TypingDerivation r = substitute_typing(d_t, d_u);
    check_typing(r, sig);
    CHECK(concludes(r, cx({{"y", "X"}}), "y", "X"));
  }

  SECTION("under a binder") {
    // u:X, x:X->X |- \z. x z : X -> X
    TypingContext inner = cx({{"u", "X"}, {"x", "X -> X"}, {"z", "X"}});
    TypingDerivation body = TypingDerivation::app_rule(
        TypingDerivation::var_rule(inner, "x"),
        TypingDerivation::var_rule(inner, "z"));
    TypingDerivation d_t = TypingDerivation::abs_rule(body);
    // u:X |- \w. w : X -> X
    TypingDerivation d_u = TypingDerivation::abs_rule(
        TypingDerivation::var_rule(cx({{"u", "X"}, {"w", "X"}}), "w"));
    TypingDerivation r = substitute_typing(d_t, d_u);
    check_typing(r, sig);
    CHECK(concludes(r, cx({{"u", "X"}}), "\\z. (\\w. w) z", "X -> X"));
  }

  SECTION("binder is renamed away from the argument's free variables") {
    // d_u : q:X |- w : Omega with a stray free w
    TypingDerivation d_u =
        TypingDerivation::omega_rule(cx({{"q", "X"}}), parse_term("w"),
                                     ty("Omega"));
    // q:X, x:Omega |- \w. x : Y -> Omega
    TypingDerivation body = TypingDerivation::var_rule(
        cx({{"q", "X"}, {"x", "Omega"}, {"w", "Y"}}), "x");
    TypingDerivation d_t = TypingDerivation::abs_rule(body);
    TypingDerivation r = substitute_typing(d_t, d_u);
    check_typing(r, sig);
    // the binder no longer captures the stray w
    CHECK(r.term() == Term::abs("v", Term::var("w")));
    CHECK(r.term() != parse_term("\\w. w"));
    CHECK(r.type() == ty("Y -> Omega"));
  }

  SECTION("mismatched judgments are rejected") {
    TypingDerivation a = TypingDerivation::var_rule(cx({{"x", "X"}}), "x");
    CHECK_THROWS_AS(substitute_typing(a, a), Error);
    TypingDerivation b = TypingDerivation::var_rule(cx({{"y", "Y"}}), "y");
    // hypothesis type X does not match argument type Y
    TypingDerivation d_t =
        TypingDerivation::var_rule(cx({{"y", "Y"}, {"x", "X"}}), "x");
    CHECK_THROWS_AS(substitute_typing(d_t, b), Error);
  }
}

namespace {

// f : (X->Y) /\ (X->Z), x : X |- f x : Y /\ Z with two application families
TypingDerivation two_family_app() {
  TypingContext g = cx({{"f", "(X -> Y) /\\ (X -> Z)"}, {"x", "X"}});
  TypingDerivation vf = TypingDerivation::var_rule(g, "f");
  TypingDerivation vx = TypingDerivation::var_rule(g, "x");
  Type fty = ty("(X -> Y) /\\ (X -> Z)");
  TypingDerivation fy =
      TypingDerivation::leq_rule(vf, derive_le(fty, ty("X -> Y")));
  TypingDerivation fz =
      TypingDerivation::leq_rule(vf, derive_le(fty, ty("X -> Z")));
  return TypingDerivation::inter_rule(
      TypingDerivation::app_rule(fy, vx),
      TypingDerivation::app_rule(fz, vx));
}

}  // namespace

TEST_CASE("generation lemmas expose the structural premises") {
  Signature sig = sig_xyzw();

  SECTION("variable") {
    TypingContext g = cx({{"x", "X /\\ Y"}});
    TypingDerivation v = TypingDerivation::var_rule(g, "x");
    TypingDerivation d = TypingDerivation::inter_rule(
        TypingDerivation::leq_rule(v, derive_le(ty("X /\\ Y"), ty("Y"))),
        TypingDerivation::leq_rule(v, derive_le(ty("X /\\ Y"), ty("X"))));
    VarGeneration g1 = generation_var(d, sig);
    check_isc(g1.evidence, sig);
    CHECK(g1.evidence.conclusion() ==
          Sequent{{ty("X /\\ Y")}, ty("Y /\\ X")});

    TypingDerivation om =
        TypingDerivation::omega_rule(g, parse_term("x"), ty("Omega"));
    VarGeneration g2 = generation_var(om, sig);
    check_isc(g2.evidence, sig);
    CHECK(g2.evidence.conclusion() == Sequent{{ty("X /\\ Y")}, ty("Omega")});
  }

  SECTION("application") {
    TypingDerivation d = two_family_app();
    AppGeneration g = generation_app(d, sig);
    REQUIRE(g.families.size() == 2);
    CHECK(g.families[0] == std::pair{ty("X"), ty("Y")});
    CHECK(g.families[1] == std::pair{ty("X"), ty("Z")});
    CHECK(g.fun[0].type() == ty("X -> Y"));
    CHECK(g.arg[1].type() == ty("X"));
    check_isc(g.evidence, sig);
    CHECK(g.evidence.conclusion() == Sequent{{ty("Y /\\ Z")}, ty("Y /\\ Z")});
  }

  SECTION("application typed only by omega") {
    TypingDerivation d = TypingDerivation::omega_rule(
        {}, parse_term("f x"), ty("Omega"));
    AppGeneration g = generation_app(d, sig);
    CHECK(g.families.empty());
    check_isc(g.evidence, sig);
    CHECK(g.evidence.conclusion() == Sequent{{ty("Omega")}, ty("Omega")});
  }

  SECTION("abstraction over two arrow families") {
    TypingDerivation a1 = TypingDerivation::abs_rule(
        TypingDerivation::var_rule(cx({{"x", "X"}}), "x"));
    TypingDerivation a2 = TypingDerivation::abs_rule(
        TypingDerivation::var_rule(cx({{"x", "Y"}}), "x"));
    TypingDerivation d = TypingDerivation::inter_rule(a1, a2);
    AbsGeneration g = generation_abs(d, sig);
    REQUIRE(g.families.size() == 2);
    CHECK(g.families[0] == std::pair{ty("X"), ty("X")});
    CHECK(g.body[1].type() == ty("Y"));
    check_isc(g.evidence, sig);
    CHECK(g.evidence.conclusion() ==
          Sequent{{ty("(X -> X) /\\ (Y -> Y)")},
                  ty("(X -> X) /\\ (Y -> Y)")});
  }

  SECTION("pair and projection") {
    TypingContext g2 = cx({{"a", "X"}, {"b", "Y"}});
    TypingDerivation pr = TypingDerivation::pair_rule(
        TypingDerivation::var_rule(g2, "a"),
        TypingDerivation::var_rule(g2, "b"));
    PairGeneration gp = generation_pair(pr, sig);
    REQUIRE(gp.families.size() == 1);
    CHECK(gp.first[0].type() == ty("X"));
    CHECK(gp.second[0].type() == ty("Y"));
    check_isc(gp.evidence, sig);

    TypingDerivation p1 = TypingDerivation::proj1_rule(pr);
    ProjGeneration gj = generation_proj(p1, sig, true);
    REQUIRE(gj.families.size() == 1);
    CHECK(gj.families[0] == std::pair{ty("X"), ty("Y")});
    check_isc(gj.evidence, sig);
    CHECK(gj.evidence.conclusion() == Sequent{{ty("X")}, ty("X")});
  }

  SECTION("wrong subject is rejected") {
    TypingDerivation v = TypingDerivation::var_rule(cx({{"x", "X"}}), "x");
    CHECK_THROWS_AS(generation_app(v, sig), Error);
    CHECK_THROWS_AS(generation_abs(v, sig), Error);
  }
}

namespace {

// checks that reduction at `path` preserves context and type exactly
TypingDerivation sr_checked(const TypingDerivation& d, const TermPath& path,
                            const Signature& sig) {
  TypingDerivation r = subject_reduction(d, path, sig);
  check_typing(r, sig);
  CHECK(same_context(r.ctx(), d.ctx()));
  CHECK(r.type() == d.type());
  CHECK(r.term() == reduce_at(d.term(), path));
  return r;
}

}  // namespace

TEST_CASE("subject reduction at the root") {
  Signature sig = sig_xyzw();

  SECTION("plain beta redex") {
    TypingContext g = cx({{"y", "X"}});
    TypingDerivation id = TypingDerivation::abs_rule(
        TypingDerivation::var_rule(cx({{"y", "X"}, {"x", "X"}}), "x"));
    TypingDerivation d = TypingDerivation::app_rule(
        id, TypingDerivation::var_rule(g, "y"));
    TypingDerivation r = sr_checked(d, {}, sig);
    CHECK(concludes(r, g, "y", "X"));
  }

  SECTION("vacuous binder") {
    TypingContext g = cx({{"y", "X"}});
    // (\x. y) (\w. w) : X
    TypingDerivation konst = TypingDerivation::abs_rule(
        TypingDerivation::var_rule(cx({{"y", "X"}, {"x", "Z -> Z"}}), "y"));
    TypingDerivation arg = TypingDerivation::abs_rule(
        TypingDerivation::var_rule(cx({{"y", "X"}, {"w", "Z"}}), "w"));
    TypingDerivation d = TypingDerivation::app_rule(konst, arg);
    TypingDerivation r = sr_checked(d, {}, sig);
    CHECK(concludes(r, g, "y", "X"));
  }

  SECTION("two application families reduce to an intersection") {
    TypingContext g = cx({{"g", "X -> Y /\\ Z"}, {"x", "X"}});
    TypingContext gi = cx({{"g", "X -> Y /\\ Z"}, {"x", "X"}, {"v", "X"}});
    TypingDerivation body = TypingDerivation::app_rule(
        TypingDerivation::var_rule(gi, "g"),
        TypingDerivation::var_rule(gi, "v"));
    // \v. g v : (X -> Y /\ Z); project the two halves through leq
    TypingDerivation lam = TypingDerivation::abs_rule(body);
    Type lt = ty("X -> Y /\\ Z");
    IscDerivation toY = prove(Sequent{{lt}, ty("X -> Y")}, sig).value();
    IscDerivation toZ = prove(Sequent{{lt}, ty("X -> Z")}, sig).value();
    TypingDerivation fam = TypingDerivation::inter_rule(
        TypingDerivation::leq_rule(lam, toY),
        TypingDerivation::leq_rule(lam, toZ));
    TypingDerivation d2 = TypingDerivation::inter_rule(
        TypingDerivation::app_rule(
            TypingDerivation::leq_rule(
                fam, derive_le(ty("(X -> Y) /\\ (X -> Z)"), ty("X -> Y"))),
            TypingDerivation::var_rule(g, "x")),
        TypingDerivation::app_rule(
            TypingDerivation::leq_rule(
                fam, derive_le(ty("(X -> Y) /\\ (X -> Z)"), ty("X -> Z"))),
            TypingDerivation::var_rule(g, "x")));
    CHECK(d2.type() == ty("Y /\\ Z"));
    TypingDerivation r = sr_checked(d2, {}, sig);
    CHECK(concludes(r, g, "g x", "Y /\\ Z"));
  }

  SECTION("inversion selects the matching arrow family") {
    // h : (X->Y) /\ (Z->W) used at X->Y only
    TypingContext g = cx({{"h", "(X -> Y) /\\ (Z -> W)"}, {"a", "X"}});
    TypingContext gi =
        cx({{"h", "(X -> Y) /\\ (Z -> W)"}, {"a", "X"}, {"v", "X"}});
    TypingContext gj =
        cx({{"h", "(X -> Y) /\\ (Z -> W)"}, {"a", "X"}, {"v", "Z"}});
    Type hty = ty("(X -> Y) /\\ (Z -> W)");
    TypingDerivation b1 = TypingDerivation::app_rule(
        TypingDerivation::leq_rule(TypingDerivation::var_rule(gi, "h"),
                                   derive_le(hty, ty("X -> Y"))),
        TypingDerivation::var_rule(gi, "v"));
    TypingDerivation b2 = TypingDerivation::app_rule(
        TypingDerivation::leq_rule(TypingDerivation::var_rule(gj, "h"),
                                   derive_le(hty, ty("Z -> W"))),
        TypingDerivation::var_rule(gj, "v"));
    // \v. h v typed at both arrows
    TypingDerivation lam = TypingDerivation::inter_rule(
        TypingDerivation::abs_rule(b1), TypingDerivation::abs_rule(b2));
    TypingDerivation d = TypingDerivation::app_rule(
        TypingDerivation::leq_rule(lam, derive_le(lam.type(), ty("X -> Y"))),
        TypingDerivation::var_rule(g, "a"));
    TypingDerivation r = sr_checked(d, {}, sig);
    CHECK(concludes(r, g, "h a", "Y"));
  }

  SECTION("projection redexes") {
    TypingContext g = cx({{"y", "X"}, {"z", "Z"}});
    TypingDerivation pr = TypingDerivation::pair_rule(
        TypingDerivation::var_rule(g, "y"), TypingDerivation::var_rule(g, "z"));
    TypingDerivation r1 =
        sr_checked(TypingDerivation::proj1_rule(pr), {}, sig);
    CHECK(concludes(r1, g, "y", "X"));
    TypingDerivation r2 =
        sr_checked(TypingDerivation::proj2_rule(pr), {}, sig);
    CHECK(concludes(r2, g, "z", "Z"));
  }

  SECTION("omega-typed redex short-circuits") {
    Term loop = parse_term("(\\x. x x) (\\x. x x)");
    TypingDerivation d =
        TypingDerivation::omega_rule({}, loop, ty("Omega"));
    TypingDerivation r = sr_checked(d, {}, sig);
    CHECK(r.term() == loop);
  }
}

TEST_CASE("subject reduction below the root") {
  Signature sig = sig_xyzw();

  SECTION("inside an abstraction") {
    TypingContext gi = cx({{"q", "X"}, {"x", "X"}});
    TypingDerivation inner_id = TypingDerivation::abs_rule(
        TypingDerivation::var_rule(gi, "x"));
    // \q. (\x. x) q : X -> X
    TypingDerivation body = TypingDerivation::app_rule(
        inner_id, TypingDerivation::var_rule(cx({{"q", "X"}}), "q"));
    TypingDerivation d = TypingDerivation::abs_rule(body);
    TypingDerivation r = sr_checked(d, {0}, sig);
    CHECK(concludes(r, {}, "\\q. q", "X -> X"));
  }

  SECTION("inside a pair component, under a leq wrapper") {
    TypingContext g = cx({{"y", "X"}});
    TypingDerivation id = TypingDerivation::abs_rule(
        TypingDerivation::var_rule(cx({{"y", "X"}, {"x", "X"}}), "x"));
    TypingDerivation red = TypingDerivation::app_rule(
        id, TypingDerivation::var_rule(g, "y"));
    TypingDerivation pr = TypingDerivation::pair_rule(
        red, TypingDerivation::var_rule(g, "y"));
    TypingDerivation d = TypingDerivation::leq_rule(
        pr, derive_le(pr.type(), ty("X * X")));
    TypingDerivation r = sr_checked(d, {0}, sig);
    CHECK(concludes(r, g, "<y, y>", "X * X"));
  }

  SECTION("argument position") {
    TypingContext g = cx({{"f", "X -> Y"}, {"y", "X"}});
    TypingDerivation id = TypingDerivation::abs_rule(TypingDerivation::var_rule(
        cx({{"f", "X -> Y"}, {"y", "X"}, {"x", "X"}}), "x"));
    TypingDerivation d = TypingDerivation::app_rule(
        TypingDerivation::var_rule(g, "f"),
        TypingDerivation::app_rule(id, TypingDerivation::var_rule(g, "y")));
    TypingDerivation r = sr_checked(d, {1}, sig);
    CHECK(concludes(r, g, "f y", "Y"));
  }
}

TEST_CASE("substitution decomposition splits a typed instance") {
  Signature sig = sig_xyzw();
  TypingContext g = cx({{"f", "X -> X"}, {"a", "X"}});
  TypingDerivation d = TypingDerivation::app_rule(
      TypingDerivation::var_rule(g, "f"), TypingDerivation::var_rule(g, "a"));

  SECTION("function position") {
    SubstDecomposition s = decompose_substitution(
        d, parse_term("x a"), "x", parse_term("f"), sig);
    check_typing(s.body, sig);
    check_typing(s.arg, sig);
    CHECK(s.hyp_type == ty("(X -> X) /\\ Omega"));
    CHECK(s.body.ctx().size() == 3);
    CHECK(s.body.ctx().back().name == "x");
    CHECK(s.body.term() == parse_term("x a"));
    CHECK(s.body.type() == ty("X"));
    CHECK(concludes(s.arg, g, "f", "(X -> X) /\\ Omega"));
  }

  SECTION("variable itself") {
    TypingDerivation v = TypingDerivation::var_rule(g, "a");
    SubstDecomposition s =
        decompose_substitution(v, parse_term("x"), "x", parse_term("a"), sig);
    CHECK(s.hyp_type == ty("X"));
    CHECK(s.body.term() == parse_term("x"));
    check_typing(s.body, sig);
  }

  SECTION("unused variable gets the top type") {
    TypingDerivation v = TypingDerivation::var_rule(g, "a");
    SubstDecomposition s = decompose_substitution(
        v, parse_term("a"), "x", parse_term("w w"), sig);
    CHECK(s.hyp_type == ty("Omega"));
    check_typing(s.body, sig);
    check_typing(s.arg, sig);
    CHECK(s.arg.term() == parse_term("w w"));
  }

  SECTION("mismatched instance is rejected") {
    CHECK_THROWS_AS(
        decompose_substitution(d, parse_term("x x"), "x", parse_term("f"),
                               sig),
        Error);
  }
}

TEST_CASE("subject expansion restores a contracted redex") {
  Signature sig = sig_xyzw();

  SECTION("beta at the root") {
    TypingContext g = cx({{"y", "X"}});
    TypingDerivation d = TypingDerivation::var_rule(g, "y");
    RedexInfo info{{}, RedexKind::Beta, parse_term("(\\x. x) y")};
    TypingDerivation r = subject_expansion(d, info, sig);
    check_typing(r, sig);
    CHECK(concludes(r, g, "(\\x. x) y", "X"));
  }

  SECTION("beta whose argument only needs omega") {
    TypingContext g = cx({{"y", "X"}});
    TypingDerivation d = TypingDerivation::var_rule(g, "y");
    RedexInfo info{{}, RedexKind::Beta, parse_term("(\\q. y) (w w)")};
    TypingDerivation r = subject_expansion(d, info, sig);
    check_typing(r, sig);
    CHECK(concludes(r, g, "(\\q. y) (w w)", "X"));
  }

  SECTION("projection with an erased component") {
    TypingContext g = cx({{"y", "X"}});
    TypingDerivation d = TypingDerivation::var_rule(g, "y");
    RedexInfo i1{{}, RedexKind::Pi1, parse_term("fst <y, \\w. w w>")};
    TypingDerivation r = subject_expansion(d, i1, sig);
    check_typing(r, sig);
    CHECK(concludes(r, g, "fst <y, \\w. w w>", "X"));

    RedexInfo i2{{}, RedexKind::Pi2, parse_term("snd <\\w. w w, y>")};
    TypingDerivation r2 = subject_expansion(d, i2, sig);
    check_typing(r2, sig);
    CHECK(concludes(r2, g, "snd <\\w. w w, y>", "X"));
  }

  SECTION("below the root") {
    TypingContext g = cx({{"y", "X"}});
    TypingDerivation d = TypingDerivation::pair_rule(
        TypingDerivation::var_rule(g, "y"),
        TypingDerivation::var_rule(g, "y"));
    RedexInfo info{{0}, RedexKind::Beta, parse_term("(\\x. x) y")};
    TypingDerivation r = subject_expansion(d, info, sig);
    check_typing(r, sig);
    CHECK(concludes(r, g, "<(\\x. x) y, y>", "X * X"));
  }

  SECTION("redex that does not reduce to the subject is rejected") {
    TypingDerivation d =
        TypingDerivation::var_rule(cx({{"y", "X"}}), "y");
    RedexInfo info{{}, RedexKind::Beta, parse_term("(\\x. x) z")};
    CHECK_THROWS_AS(subject_expansion(d, info, sig), Error);
  }
}

TEST_CASE("expansion after reduction round-trips the judgment") {
  Signature sig = sig_xyzw();

  auto round_trip = [&](const TypingDerivation& d, std::size_t which) {
    auto rs = find_redexes(d.term());
    REQUIRE(which < rs.size());
    TypingDerivation reduced = subject_reduction(d, rs[which].path, sig);
    check_typing(reduced, sig);
    TypingDerivation back = subject_expansion(reduced, rs[which], sig);
    check_typing(back, sig);
    CHECK(back.term() == d.term());
    CHECK(back.type() == d.type());
    CHECK(same_context(back.ctx(), d.ctx()));
  };

  TypingContext g = cx({{"y", "X"}});
  TypingDerivation id = TypingDerivation::abs_rule(
      TypingDerivation::var_rule(cx({{"y", "X"}, {"x", "X"}}), "x"));
  TypingDerivation beta = TypingDerivation::app_rule(
      id, TypingDerivation::var_rule(g, "y"));
  round_trip(beta, 0);

  TypingDerivation pr = TypingDerivation::pair_rule(
      beta, TypingDerivation::var_rule(g, "y"));
  TypingDerivation proj = TypingDerivation::proj2_rule(pr);
  round_trip(proj, 0);  // the root projection itself
  round_trip(TypingDerivation::proj1_rule(pr), 1);  // the buried beta redex
}
