#pragma once

// Randomized differential testing. Six batteries cross-check the independent
// decision procedures and the derivation transforms against each other on
// generated inputs; failures are greedily shrunk before being reported.
// Everything is deterministic in the configured seed.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "axiomatic.hpp"
#include "isc.hpp"
#include "lambda.hpp"
#include "rand.hpp"
#include "types.hpp"

namespace isect {

struct GenConfig {
  std::uint64_t seed = 1;
  std::size_t rounds = 100;
  std::size_t max_type_size = 6;
  std::size_t max_ctx_len = 3;
  std::size_t max_term_depth = 4;
  std::size_t oracle_budget = 2000000;
};

// Deliberate prover defects, used to demonstrate the harness catches bugs.
enum class Mutant { None, SkipWidth, FirstSingleton };

inline const char* mutant_name(Mutant m) {
  switch (m) {
    case Mutant::None: return "none";
    case Mutant::SkipWidth: return "skip-width";
    case Mutant::FirstSingleton: return "first-singleton";
  }
  return "?";
}

inline std::optional<Mutant> mutant_from_name(const std::string& s) {
  if (s == "none") return Mutant::None;
  if (s == "skip-width") return Mutant::SkipWidth;
  if (s == "first-singleton") return Mutant::FirstSingleton;
  return std::nullopt;
}

inline ProveOptions mutant_options(Mutant m) {
  ProveOptions o;
  if (m == Mutant::SkipWidth) o.width_check = false;
  if (m == Mutant::FirstSingleton) o.maximal_set = false;
  return o;
}

struct BatteryResult {
  std::string name;
  std::size_t cases = 0;
  std::size_t failures = 0;
  std::size_t skipped = 0;  // oracle budget, underivable samples
  std::vector<std::string> notes;
};

struct DifftestReport {
  std::uint64_t seed = 0;
  Mutant mutant = Mutant::None;
  std::vector<BatteryResult> batteries;

  bool ok() const {
    for (const auto& b : batteries)
      if (b.failures) return false;
    return true;
  }
  std::size_t total_failures() const {
    std::size_t n = 0;
    for (const auto& b : batteries) n += b.failures;
    return n;
  }

  std::string text() const {
    std::string out = "differential test, seed " + std::to_string(seed);
    if (mutant != Mutant::None)
      out += std::string(", mutant ") + mutant_name(mutant);
    out += "\n";
    for (const auto& b : batteries) {
      out += "  " + b.name + ": " + std::to_string(b.cases) + " cases, " +
             std::to_string(b.failures) + " failures";
      if (b.skipped) out += " (" + std::to_string(b.skipped) + " skipped)";
      out += "\n";
      for (const auto& n : b.notes) out += "    " + n + "\n";
    }
    out += ok() ? "all batteries clean\n"
                : std::to_string(total_failures()) + " failure(s)\n";
    return out;
  }

  std::string machine() const {
    std::string out;
    for (const auto& b : batteries)
      out += "battery " + b.name + " cases=" + std::to_string(b.cases) +
             " failures=" + std::to_string(b.failures) +
             " skipped=" + std::to_string(b.skipped) + "\n";
    out += std::string("result ") + (ok() ? "ok" : "fail") +
           " seed=" + std::to_string(seed) + " mutant=" + mutant_name(mutant) +
           "\n";
    return out;
  }
};

// ---- generators ----

// Context entries are drawn fresh, copied from the goal, or built as near
// misses of the goal (same head, one argument replaced). Correlated entries
// keep the derivable rate up and exercise the prover's column selection.
inline Sequent random_sequent(std::mt19937_64& rng, const Signature& sig,
                              const GenConfig& cfg) {
  auto pick = [&](std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  };
  Sequent s{{}, random_type(rng, sig, cfg.max_type_size)};
  std::size_t n =
      std::uniform_int_distribution<std::size_t>(0, cfg.max_ctx_len)(rng);
  for (std::size_t i = 0; i < n; ++i) {
    switch (pick(4)) {
      case 0:
        s.context.push_back(s.goal);
        break;
      case 1:
        if (s.goal.is_constr() &&
            s.goal.contra_args().size() + s.goal.co_args().size() > 0) {
          std::vector<Type> contra = s.goal.contra_args();
          std::vector<Type> co = s.goal.co_args();
          std::size_t j = pick(contra.size() + co.size());
          Type& slot = j < contra.size() ? contra[j] : co[j - contra.size()];
          slot = random_type(rng, sig, size(slot));
          s.context.push_back(
              Type::constr(s.goal.head(), std::move(contra), std::move(co)));
          break;
        }
        [[fallthrough]];
      default:
        s.context.push_back(random_type(rng, sig, cfg.max_type_size));
    }
  }
  return s;
}

namespace detail {

// Builds well-typed derivations bottom-up through the rule constructors, so
// every sample checks by construction. Application and projection nodes are
// introduced mostly as redexes to feed the rewrite batteries.
class TypingGen {
 public:
  TypingGen(std::mt19937_64& rng, const Signature& sig, const GenConfig& cfg)
      : rng_(rng), sig_(sig), cfg_(cfg), top_(sig.top()) {
    top_fn_ = prove(Sequent{{top_}, Type::constr("arrow", {top_}, {top_})},
                    sig_);
  }

  TypingDerivation gen() {
    TypingContext ctx;
    std::size_t n =
        std::uniform_int_distribution<std::size_t>(0, cfg_.max_ctx_len)(rng_);
    for (std::size_t i = 0; i < n; ++i)
      ctx.push_back({fresh(), random_type(rng_, sig_, cfg_.max_type_size)});
    return gen_at(ctx, cfg_.max_term_depth);
  }

 private:
  std::size_t pick(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  }
  std::string fresh() { return "v" + std::to_string(counter_++); }

  // arbitrary subject for top typings; may be open or ill-typed
  Term random_term(const TypingContext& ctx, std::size_t depth) {
    std::size_t stop = depth == 0 ? 0 : pick(3);
    if (stop == 0) {
      if (!ctx.empty() && pick(2) == 0)
        return Term::var(ctx[pick(ctx.size())].name);
      return Term::var("w" + std::to_string(pick(2)));
    }
    switch (pick(5)) {
      case 0: return Term::abs(fresh(), random_term(ctx, depth - 1));
      case 1:
        return Term::app(random_term(ctx, depth - 1),
                         random_term(ctx, depth - 1));
      case 2:
        return Term::pair(random_term(ctx, depth - 1),
                          random_term(ctx, depth - 1));
      case 3: return Term::proj1(random_term(ctx, depth - 1));
      default: return Term::proj2(random_term(ctx, depth - 1));
    }
  }

  TypingDerivation leaf(const TypingContext& ctx) {
    if (!ctx.empty() && pick(10) < 7)
      return TypingDerivation::var_rule(ctx, ctx[pick(ctx.size())].name);
    return TypingDerivation::omega_rule(ctx, random_term(ctx, 2), top_);
  }

  TypingDerivation gen_at(const TypingContext& ctx, std::size_t depth) {
    if (depth == 0) return leaf(ctx);
    switch (pick(16)) {
      case 0:
      case 1:
        return leaf(ctx);
      case 2:
      case 3:
      case 4: {  // abstraction
        TypingContext inner = ctx;
        inner.push_back({fresh(), random_type(rng_, sig_, cfg_.max_type_size)});
        return TypingDerivation::abs_rule(gen_at(inner, depth - 1));
      }
      case 5:
      case 6:
      case 7: {  // application that is itself a beta redex
        TypingDerivation arg = gen_at(ctx, depth - 1);
        TypingContext inner = ctx;
        inner.push_back({fresh(), arg.type()});
        TypingDerivation body = gen_at(inner, depth - 1);
        return TypingDerivation::app_rule(TypingDerivation::abs_rule(body),
                                          std::move(arg));
      }
      case 8: {  // application through a top-typed function
        if (!top_fn_) return leaf(ctx);
        TypingDerivation f = TypingDerivation::leq_rule(
            TypingDerivation::omega_rule(ctx, random_term(ctx, 2), top_),
            *top_fn_);
        TypingDerivation a =
            TypingDerivation::omega_rule(ctx, random_term(ctx, 2), top_);
        return TypingDerivation::app_rule(std::move(f), std::move(a));
      }
      case 9:
      case 10: {  // pair
        return TypingDerivation::pair_rule(gen_at(ctx, depth - 1),
                                           gen_at(ctx, depth - 1));
      }
      case 11:
      case 12: {  // projection of a pair: a pi redex
        TypingDerivation p = TypingDerivation::pair_rule(
            gen_at(ctx, depth - 1), gen_at(ctx, depth - 1));
        return pick(2) == 0 ? TypingDerivation::proj1_rule(std::move(p))
                            : TypingDerivation::proj2_rule(std::move(p));
      }
      case 13: {  // intersection of one subject with itself
        TypingDerivation d = gen_at(ctx, depth - 1);
        return TypingDerivation::inter_rule(d, d);
      }
      default: {  // step down to a shuffled subset of the component atoms
        TypingDerivation d = gen_at(ctx, depth - 1);
        std::vector<Type> atoms = atomize(d.type());
        std::vector<Type> kept;
        for (const auto& a : atoms)
          if (pick(2) == 0) kept.push_back(a);
        if (kept.empty() && !atoms.empty()) kept.push_back(atoms[pick(atoms.size())]);
        std::shuffle(kept.begin(), kept.end(), rng_);
        Type to = big_inter(kept, sig_);
        return TypingDerivation::leq_rule(d, derive_le(d.type(), to));
      }
    }
  }

  std::mt19937_64& rng_;
  const Signature& sig_;
  const GenConfig& cfg_;
  Type top_;
  std::optional<IscDerivation> top_fn_;  // [top] |- top -> top, if derivable
  std::size_t counter_ = 0;
};

inline void note(BatteryResult& r, std::string what) {
  ++r.failures;
  if (r.notes.size() < 5) r.notes.push_back(std::move(what));
}

inline bool checks_isc(const IscDerivation& d, const Signature& sig) {
  try {
    check_isc(d, sig);
    return true;
  } catch (const Error&) {
    return false;
  }
}

}  // namespace detail

// Greedy minimization: drop context entries, then replace any type in the
// sequent with one of its immediate components, while the failure persists.
template <class Fails>
inline Sequent shrink_sequent(Sequent s, Fails&& fails) {
  auto children = [](const Type& t) {
    std::vector<Type> out;
    if (t.is_inter()) {
      out.push_back(t.left());
      out.push_back(t.right());
    } else {
      for (const auto& a : t.contra_args()) out.push_back(a);
      for (const auto& a : t.co_args()) out.push_back(a);
    }
    return out;
  };
  bool progress = true;
  while (progress) {
    progress = false;
    for (std::size_t i = 0; i < s.context.size() && !progress; ++i) {
      Sequent t = s;
      t.context.erase(t.context.begin() + i);
      if (fails(t)) {
        s = std::move(t);
        progress = true;
      }
    }
    if (progress) continue;
    for (std::size_t i = 0; i < s.context.size() && !progress; ++i) {
      for (const Type& c : children(s.context[i])) {
        Sequent t = s;
        t.context[i] = c;
        if (fails(t)) {
          s = std::move(t);
          progress = true;
          break;
        }
      }
    }
    if (progress) continue;
    for (const Type& c : children(s.goal)) {
      Sequent t = s;
      t.goal = c;
      if (fails(t)) {
        s = std::move(t);
        progress = true;
        break;
      }
    }
  }
  return s;
}

namespace detail {

// goal-directed prover vs. exhaustive search, derivations replayed
inline BatteryResult battery_prover_agreement(std::mt19937_64& rng,
                                              const Signature& sig,
                                              const GenConfig& cfg, Mutant m) {
  BatteryResult r;
  r.name = "prover-agreement";
  ProveOptions opt = mutant_options(m);
  // 0 = agree and derivations replay, 1 = mismatch, 2 = budget ran out
  auto classify = [&](const Sequent& q) -> int {
    OracleResult o = prove_exhaustive(q, sig, cfg.oracle_budget);
    if (o.status == OracleStatus::BudgetExceeded) return 2;
    std::optional<IscDerivation> p = prove(q, sig, opt);
    if (p.has_value() != (o.status == OracleStatus::Derivable)) return 1;
    if (p) {
      if (!checks_isc(*p, sig) || p->conclusion() != q) return 1;
      if (!o.derivation || !checks_isc(*o.derivation, sig) ||
          o.derivation->conclusion() != q)
        return 1;
    }
    return 0;
  };
  for (std::size_t i = 0; i < cfg.rounds; ++i) {
    Sequent s = random_sequent(rng, sig, cfg);
    ++r.cases;
    int v = classify(s);
    if (v == 2) {
      ++r.skipped;
    } else if (v == 1) {
      Sequent small =
          shrink_sequent(s, [&](const Sequent& q) { return classify(q) == 1; });
      note(r, "disagree on " + print_sequent(small));
    }
  }
  return r;
}

// random inequality derivations translate over and back
inline BatteryResult battery_translations(std::mt19937_64& rng,
                                          const Signature& sig,
                                          const GenConfig& cfg) {
  BatteryResult r;
  r.name = "inequality-translations";
  auto ineq = [](const AxDerivation& a) {
    return print_type(a.lhs()) + " <= " + print_type(a.rhs());
  };
  for (std::size_t i = 0; i < cfg.rounds; ++i) {
    AxDerivation a = random_ax_derivation(rng, sig, 4, cfg.max_type_size);
    ++r.cases;
    try {
      check_ax(a, sig);
      IscDerivation d = ax_to_isc(a, sig);
      check_isc(d, sig);
      if (d.conclusion() != Sequent{{a.lhs()}, a.rhs()}) {
        note(r, "wrong sequent for " + ineq(a));
        continue;
      }
    } catch (const Error& e) {
      note(r, ineq(a) + ": " + e.what());
      continue;
    }

    Sequent s = random_sequent(rng, sig, cfg);
    if (auto p = prove(s, sig)) {
      ++r.cases;
      try {
        AxDerivation b = isc_to_ax(*p, sig);
        check_ax(b, sig);
        if (b.lhs() != big_inter(s.context, sig) || b.rhs() != s.goal)
          note(r, "wrong inequality for " + print_sequent(s));
      } catch (const UnsupportedSignature&) {
        ++r.skipped;
      } catch (const Error& e) {
        note(r, print_sequent(s) + ": " + e.what());
      }
    }
  }
  return r;
}

// weakening, exchange, contraction, intersection split, cut
inline BatteryResult battery_transforms(std::mt19937_64& rng,
                                        const Signature& sig,
                                        const GenConfig& cfg) {
  BatteryResult r;
  r.name = "admissible-transforms";
  auto pick = [&](std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  };
  auto derivable = [&]() -> std::pair<Sequent, IscDerivation> {
    for (int t = 0; t < 20; ++t) {
      Sequent s = random_sequent(rng, sig, cfg);
      if (auto p = prove(s, sig)) return {s, *p};
    }
    Sequent s = random_sequent(rng, sig, cfg);
    s.goal = sig.top();
    return {s, *prove(s, sig)};
  };
  auto expect = [&](const IscDerivation& d, const Sequent& want,
                    const char* which) {
    ++r.cases;
    if (!checks_isc(d, sig) || d.conclusion() != want)
      note(r, std::string(which) + " broke " + print_sequent(want));
  };

  for (std::size_t i = 0; i < cfg.rounds; ++i) {
    auto [s, d] = derivable();

    Type extra = random_type(rng, sig, cfg.max_type_size);
    std::size_t at = pick(s.context.size() + 1);
    Sequent w = s;
    w.context.insert(w.context.begin() + at, extra);
    IscDerivation wd = derive_weaken_gen(d, at, extra);
    expect(wd, w, "weaken");

    std::vector<std::size_t> perm(s.context.size());
    for (std::size_t j = 0; j < perm.size(); ++j) perm[j] = j;
    std::shuffle(perm.begin(), perm.end(), rng);
    Sequent x{{}, s.goal};
    for (std::size_t j : perm) x.context.push_back(s.context[j]);
    expect(derive_exchange(d, perm), x, "exchange");

    if (!s.context.empty()) {
      std::size_t j = pick(s.context.size());
      IscDerivation dup = derive_weaken_gen(d, j, s.context[j]);
      expect(derive_contract(dup, j), s, "contract");
    }

    // split a freshly weakened-in intersection
    Type a = random_type(rng, sig, cfg.max_type_size);
    Type b = random_type(rng, sig, cfg.max_type_size);
    IscDerivation wi = derive_weaken_gen(d, at, Type::inter(a, b));
    Sequent split = s;
    split.context.insert(split.context.begin() + at, b);
    split.context.insert(split.context.begin() + at, a);
    expect(derive_interL_e(wi, at), split, "intersection split");

    auto [s2, d2] = derivable();
    std::size_t cpos = pick(s2.context.size() + 1);
    IscDerivation host = derive_weaken_gen(d2, cpos, s.goal);
    Sequent cut{{}, s2.goal};
    cut.context.assign(s2.context.begin(), s2.context.begin() + cpos);
    cut.context.insert(cut.context.end(), s.context.begin(), s.context.end());
    cut.context.insert(cut.context.end(), s2.context.begin() + cpos,
                       s2.context.end());
    expect(derive_cut(d, host, cpos), cut, "cut");
  }
  return r;
}

// invert homogeneous sequents and reassemble the witness
inline BatteryResult battery_inversion(std::mt19937_64& rng,
                                       const Signature& sig,
                                       const GenConfig& cfg) {
  BatteryResult r;
  r.name = "constructor-inversion";
  auto pick = [&](std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  };
  std::vector<std::string> heads;
  for (const auto& n : sig.names()) {
    const auto& d = sig.decl(n);
    if (d.convar + d.covar > 0) heads.push_back(n);
  }
  if (heads.empty()) return r;

  auto random_app = [&](const std::string& head) {
    const auto& d = sig.decl(head);
    std::vector<Type> contra, co;
    for (std::size_t i = 0; i < d.convar; ++i)
      contra.push_back(random_type(rng, sig, cfg.max_type_size));
    for (std::size_t i = 0; i < d.covar; ++i)
      co.push_back(random_type(rng, sig, cfg.max_type_size));
    return Type::constr(head, std::move(contra), std::move(co));
  };

  for (std::size_t i = 0; i < cfg.rounds; ++i) {
    std::string head = heads[pick(heads.size())];
    Sequent s{{}, random_app(head)};
    std::size_t k = pick(cfg.max_ctx_len) + 1;
    for (std::size_t j = 0; j < k; ++j)
      // half the columns equal the goal, to keep the derivable rate up
      s.context.push_back(pick(2) == 0 ? s.goal : random_app(head));

    auto w = invert_constr(s, sig);
    if (!w) {
      ++r.skipped;
      continue;
    }
    ++r.cases;
    bool bad = false;
    for (std::size_t q = 1; q < w->selected.size() && !bad; ++q)
      bad = w->selected[q] <= w->selected[q - 1];
    std::size_t m = s.goal.contra_args().size();
    std::size_t n = s.goal.co_args().size();
    if (w->contra.size() != m || w->co.size() != n) bad = true;
    for (std::size_t a = 0; a < m && !bad; ++a) {
      if (w->contra[a].size() != w->selected.size()) {
        bad = true;
        break;
      }
      for (std::size_t q = 0; q < w->selected.size() && !bad; ++q) {
        const IscDerivation& piece = w->contra[a][q];
        Sequent want{{s.goal.contra_args()[a]},
                     s.context[w->selected[q]].contra_args()[a]};
        bad = !checks_isc(piece, sig) || piece.conclusion() != want;
      }
    }
    for (std::size_t a = 0; a < n && !bad; ++a) {
      Sequent want{{}, s.goal.co_args()[a]};
      for (std::size_t q : w->selected)
        want.context.push_back(s.context[q].co_args()[a]);
      bad = !checks_isc(w->co[a], sig) || w->co[a].conclusion() != want;
    }
    if (!bad) {
      IscDerivation back = reassemble_inversion(*w, s);
      bad = !checks_isc(back, sig) || back.conclusion() != s;
    }
    if (bad) note(r, "inversion broke on " + print_sequent(s));
  }
  return r;
}

// every redex of a generated well-typed term reduces without changing
// context or type
inline BatteryResult battery_reduction(std::mt19937_64& rng,
                                       const Signature& sig,
                                       const GenConfig& cfg) {
  BatteryResult r;
  r.name = "reduction-preserves-types";
  TypingGen gen(rng, sig, cfg);
  for (std::size_t i = 0; i < cfg.rounds; ++i) {
    TypingDerivation d = gen.gen();
    auto redexes = find_redexes(d.term());
    if (redexes.empty()) {
      ++r.skipped;
      continue;
    }
    for (std::size_t j = 0; j < redexes.size() && j < 3; ++j) {
      ++r.cases;
      try {
        check_typing(d, sig);
        TypingDerivation rd = subject_reduction(d, redexes[j].path, sig);
        check_typing(rd, sig);
        if (!same_context(rd.ctx(), d.ctx()) || rd.type() != d.type() ||
            !(rd.term() == reduce_at(d.term(), redexes[j].path)))
          note(r, "reduction changed the judgment of " + print_term(d.term()));
      } catch (const Error& e) {
        note(r, print_term(d.term()) + ": " + e.what());
      }
    }
  }
  return r;
}

// reducing then expanding restores the original subject, same type
inline BatteryResult battery_expansion(std::mt19937_64& rng,
                                       const Signature& sig,
                                       const GenConfig& cfg) {
  BatteryResult r;
  r.name = "expansion-restores-terms";
  TypingGen gen(rng, sig, cfg);
  for (std::size_t i = 0; i < cfg.rounds; ++i) {
    TypingDerivation d = gen.gen();
    auto redexes = find_redexes(d.term());
    if (redexes.empty()) {
      ++r.skipped;
      continue;
    }
    for (std::size_t j = 0; j < redexes.size() && j < 3; ++j) {
      ++r.cases;
      try {
        TypingDerivation rd = subject_reduction(d, redexes[j].path, sig);
        TypingDerivation ed = subject_expansion(rd, redexes[j], sig);
        check_typing(ed, sig);
        if (!same_context(ed.ctx(), d.ctx()) || ed.type() != d.type() ||
            !(ed.term() == d.term()))
          note(r, "round trip changed the judgment of " + print_term(d.term()));
      } catch (const Error& e) {
        note(r, print_term(d.term()) + ": " + e.what());
      }
    }
  }
  return r;
}

inline bool lambda_ready(const Signature& sig) {
  if (!sig.has("arrow") || !sig.has("prod") || !sig.top_name()) return false;
  const auto& a = sig.decl("arrow");
  const auto& p = sig.decl("prod");
  return a.convar == 1 && a.covar == 1 && p.convar == 0 && p.covar == 2;
}

}  // namespace detail

// A mutant run only exercises the battery the mutation can reach; it is
// expected to FAIL, demonstrating the harness has teeth.
inline DifftestReport run_difftest(const Signature& sig, const GenConfig& cfg,
                                   Mutant m = Mutant::None) {
  DifftestReport rep;
  rep.seed = cfg.seed;
  rep.mutant = m;
  std::mt19937_64 rng(cfg.seed);
  rep.batteries.push_back(detail::battery_prover_agreement(rng, sig, cfg, m));
  if (m != Mutant::None) return rep;
  rep.batteries.push_back(detail::battery_translations(rng, sig, cfg));
  rep.batteries.push_back(detail::battery_transforms(rng, sig, cfg));
  rep.batteries.push_back(detail::battery_inversion(rng, sig, cfg));
  if (detail::lambda_ready(sig)) {
    rep.batteries.push_back(detail::battery_reduction(rng, sig, cfg));
    rep.batteries.push_back(detail::battery_expansion(rng, sig, cfg));
  }
  return rep;
}

}  // namespace isect
