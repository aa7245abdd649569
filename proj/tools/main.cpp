// Command-line front end. Subcommands wrap the library one-to-one:
//
//   isect sub prove      decide an inequality, optionally emit the derivation
//   isect sub oracle     exhaustive reference search with a step budget
//   isect translate      convert derivation files between the two systems
//   isect invert         invert an inequality against a constructor family
//   isect type check     verify a typing judgment file
//   isect reduce         rewrite a judgment file one redex step forward
//   isect expand         rewrite a judgment file one redex step backward
//   isect difftest       run the randomized differential batteries
//
// stdout carries the machine-readable artifact (derivation, judgment file,
// report); status lines go to stderr whenever an artifact is requested.
// Exit codes: 0 success, 1 negative result (not derivable, rule violation,
// differential failure), 2 malformed input or usage.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include <isect/axiomatic.hpp>
#include <isect/derivation_io.hpp>
#include <isect/harness.hpp>
#include <isect/isc.hpp>
#include <isect/lambda.hpp>
#include <isect/parse.hpp>
#include <isect/types.hpp>

using namespace isect;

namespace {

std::string slurp(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// every identifier in the text becomes a width-1 atom unless already
// declared; extra atoms are harmless and this keeps ad-hoc inputs terse
void autodeclare_loose(const std::string& text, Signature& sig) {
  for (std::size_t i = 0; i < text.size();) {
    if (!detail::ident_start(text[i])) {
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < text.size() && detail::ident_char(text[i])) ++i;
    std::string name = text.substr(start, i - start);
    if (!sig.has(name)) sig.declare({name, 0, 0, 1});
  }
}

// --sig means exactly that signature; otherwise the standard one plus
// auto-declared atoms from the input itself
Signature resolve_sig(const std::string& sig_path, const std::string& input) {
  if (!sig_path.empty()) return load_signature(slurp(sig_path));
  Signature sig = default_signature({});
  autodeclare_loose(input, sig);
  return sig;
}

TermPath parse_path(const std::string& s) {
  TermPath p;
  if (s.empty() || s == ".") return p;
  std::size_t at = 0;
  while (true) {
    std::size_t next = s.find('/', at);
    std::string piece =
        s.substr(at, next == std::string::npos ? std::string::npos : next - at);
    if (piece.empty()) throw Error("empty path component in '" + s + "'");
    for (char c : piece)
      if (!std::isdigit((unsigned char)c))
        throw Error("bad path component '" + piece + "'");
    p.push_back(std::stoul(piece));
    if (next == std::string::npos) break;
    at = next + 1;
  }
  return p;
}

struct ProveArgs {
  std::string ineq, sig_path;
  bool emit = false, compact = false;
};

int cmd_prove(const ProveArgs& a) {
  Signature sig = resolve_sig(a.sig_path, a.ineq);
  auto [l, r] = parse_inequality(a.ineq, sig);
  std::optional<IscDerivation> d = prove(Sequent{{l}, r}, sig);
  std::ostream& status = a.emit ? std::cerr : std::cout;
  if (!d) {
    status << "not derivable\n";
    return 1;
  }
  status << "derivable\n";
  if (a.emit) std::cout << emit_isc(*d, a.compact) << "\n";
  return 0;
}

struct OracleArgs {
  std::string ineq, sig_path;
  std::uint64_t budget = 2000000;
  bool emit = false, compact = false;
};

int cmd_oracle(const OracleArgs& a) {
  Signature sig = resolve_sig(a.sig_path, a.ineq);
  auto [l, r] = parse_inequality(a.ineq, sig);
  OracleResult res = prove_exhaustive(Sequent{{l}, r}, sig, a.budget);
  std::ostream& status = a.emit ? std::cerr : std::cout;
  switch (res.status) {
    case OracleStatus::BudgetExceeded:
      status << "budget exceeded\n";
      return 2;
    case OracleStatus::NotDerivable:
      status << "not derivable\n";
      return 1;
    case OracleStatus::Derivable:
      status << "derivable\n";
      if (a.emit && res.derivation)
        std::cout << emit_isc(*res.derivation, a.compact) << "\n";
      return 0;
  }
  return 2;
}

struct TranslateArgs {
  std::string dir, in, sig_path;
  bool compact = false;
};

int cmd_translate(const TranslateArgs& a) {
  std::string text = slurp(a.in);
  Signature sig = resolve_sig(a.sig_path, text);
  if (a.dir == "ax2isc") {
    AxDerivation d = parse_ax_derivation(text, sig);
    check_ax(d, sig);
    std::cout << emit_isc(ax_to_isc(d, sig), a.compact) << "\n";
  } else {
    IscDerivation d = parse_isc_derivation(text, sig);
    check_isc(d, sig);
    std::cout << emit_ax(isc_to_ax(d, sig), a.compact) << "\n";
  }
  return 0;
}

struct InvertArgs {
  std::string head = "arrow";
  std::string ineq, sig_path;
  bool emit = false;
};

int cmd_invert(const InvertArgs& a) {
  Signature sig = resolve_sig(a.sig_path, a.ineq);
  auto [lhs, rhs] = parse_inequality(a.ineq, sig);
  if (!sig.has(a.head)) throw Error("no constructor named '" + a.head + "'");
  const ConstructorDecl& decl = sig.decl(a.head);
  auto pieces = [&](const Type& t) {
    std::vector<Type> out;
    for (const Type& at : atomize(t)) {
      if (!at.is_constr() || at.head() != a.head)
        throw Error("'" + print_type(at) + "' is not a '" + a.head +
                    "' application");
      out.push_back(at);
    }
    return out;
  };
  if (!rhs.is_constr() || rhs.head() != a.head)
    throw Error("right side must be a '" + a.head + "' application");
  std::vector<Type> fam = pieces(lhs);
  auto ineq_line = [](const AxDerivation& d) {
    return print_type(d.lhs()) + " <= " + print_type(d.rhs());
  };

  if (decl.convar == 1 && decl.covar == 1) {
    std::vector<std::pair<Type, Type>> families;
    for (const Type& t : fam)
      families.emplace_back(t.contra_args()[0], t.co_args()[0]);
    auto inv = inversion_arrow(families, rhs.contra_args()[0],
                               rhs.co_args()[0], sig, a.head);
    if (!inv) {
      std::cout << "not derivable\n";
      return 1;
    }
    std::cout << "selected";
    for (std::size_t j : inv->selected) std::cout << " " << (j + 1);
    std::cout << "\n";
    for (std::size_t i = 0; i < inv->selected.size(); ++i) {
      std::cout << "arg " << (inv->selected[i] + 1) << ": "
                << ineq_line(inv->arg[i]) << "\n";
      if (a.emit) std::cout << emit_ax(inv->arg[i]) << "\n";
    }
    std::cout << "body: " << ineq_line(inv->body) << "\n";
    if (a.emit) std::cout << emit_ax(inv->body) << "\n";
    return 0;
  }
  if (decl.convar == 0 && decl.covar == 2) {
    std::vector<std::pair<Type, Type>> families;
    for (const Type& t : fam)
      families.emplace_back(t.co_args()[0], t.co_args()[1]);
    auto inv = inversion_product(families, rhs.co_args()[0], rhs.co_args()[1],
                                 sig, a.head);
    if (!inv) {
      std::cout << "not derivable\n";
      return 1;
    }
    std::cout << "first: " << ineq_line(inv->first) << "\n";
    if (a.emit) std::cout << emit_ax(inv->first) << "\n";
    std::cout << "second: " << ineq_line(inv->second) << "\n";
    if (a.emit) std::cout << emit_ax(inv->second) << "\n";
    return 0;
  }
  throw Error("'" + a.head + "' must have arity (1;1) or (;2) to invert");
}

struct CheckArgs {
  std::string in, sig_path;
};

int cmd_type_check(const CheckArgs& a) {
  std::string text = slurp(a.in);
  Signature sig = resolve_sig(a.sig_path, text);
  TypingDerivation d = parse_judgment_file(text, sig);
  check_typing(d, sig);
  std::cout << "ok: " << print_typing_conclusion(d) << "\n";
  return 0;
}

struct ReduceArgs {
  std::string in, sig_path, path;
  bool check = false, compact = false;
};

int cmd_reduce(const ReduceArgs& a) {
  std::string text = slurp(a.in);
  Signature sig = resolve_sig(a.sig_path, text);
  TypingDerivation d = parse_judgment_file(text, sig);
  check_typing(d, sig);
  TermPath path;
  if (!a.path.empty()) {
    path = parse_path(a.path);
  } else {
    auto redexes = find_redexes(d.term());
    if (redexes.empty()) {
      std::cerr << "no redexes in " << print_term(d.term()) << "\n";
      return 1;
    }
    path = redexes[0].path;  // leftmost-outermost
  }
  TypingDerivation rd = subject_reduction(d, path, sig);
  if (a.check) {
    check_typing(rd, sig);
    if (!same_context(rd.ctx(), d.ctx()) || rd.type() != d.type())
      throw Error("internal: reduction changed the context or type");
    std::cerr << "preservation checked: type " << print_type(rd.type())
              << " kept\n";
  }
  std::cout << emit_judgment_file(rd, a.compact);
  return 0;
}

struct ExpandArgs {
  std::string in, sig_path, redex;
  std::string erased = "\\z. z";
  bool compact = false;
};

int cmd_expand(const ExpandArgs& a) {
  std::string text = slurp(a.in);
  Signature sig = resolve_sig(a.sig_path, text);
  TypingDerivation d = parse_judgment_file(text, sig);
  check_typing(d, sig);

  std::size_t colon = a.redex.find(':');
  if (colon == std::string::npos)
    throw Error("--redex wants 'PATH:TERM' (PATH may be empty for the root)");
  TermPath path = parse_path(a.redex.substr(0, colon));
  std::string spec = a.redex.substr(colon + 1);

  Term reduced = subterm_at(d.term(), path);
  Term redex = Term::var("_");
  if (spec == "pi1")
    redex = Term::proj1(Term::pair(reduced, parse_term(a.erased)));
  else if (spec == "pi2")
    redex = Term::proj2(Term::pair(parse_term(a.erased), reduced));
  else
    redex = parse_term(spec);
  auto kind = redex_kind(redex);
  if (!kind) throw Error("'" + print_term(redex) + "' is not a redex");

  RedexInfo info{std::move(path), *kind, std::move(redex)};
  TypingDerivation ed = subject_expansion(d, info, sig);
  std::cout << emit_judgment_file(ed, a.compact);
  return 0;
}

struct DifftestArgs {
  std::uint64_t seed = 1;
  std::size_t rounds = 100, size = 6, ctx = 3, depth = 4;
  std::uint64_t budget = 2000000;
  std::string mutant = "none", sig_path;
  bool machine = false;
};

int cmd_difftest(const DifftestArgs& a) {
  Signature sig = a.sig_path.empty()
                      ? default_signature({"X", "Y", "Z", "W"})
                      : load_signature(slurp(a.sig_path));
  GenConfig cfg;
  cfg.seed = a.seed;
  cfg.rounds = a.rounds;
  cfg.max_type_size = a.size;
  cfg.max_ctx_len = a.ctx;
  cfg.max_term_depth = a.depth;
  cfg.oracle_budget = a.budget;
  Mutant m = *mutant_from_name(a.mutant);  // choices enforced by the parser
  DifftestReport rep = run_difftest(sig, cfg, m);
  std::cout << (a.machine ? rep.machine() : rep.text());
  if (m == Mutant::None) return rep.ok() ? 0 : 1;
  // a mutant run demonstrates sensitivity: catching the defect is success
  if (rep.ok()) {
    std::cerr << "mutant '" << a.mutant << "' was NOT caught\n";
    return 1;
  }
  std::cerr << "mutant '" << a.mutant << "' caught\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"intersection subtyping engine"};
  app.require_subcommand(1);
  int rc = 0;

  CLI::App* sub = app.add_subcommand("sub", "inequality decisions");
  sub->require_subcommand(1);

  ProveArgs pa;
  CLI::App* sp = sub->add_subcommand("prove", "goal-directed proof search");
  sp->add_option("ineq", pa.ineq, "inequality \"A <= B\"")->required();
  sp->add_option("--sig", pa.sig_path, "signature file (strict mode)");
  sp->add_flag("--emit", pa.emit, "print the derivation to stdout");
  sp->add_flag("--compact", pa.compact, "single-line derivation");
  sp->callback([&] { rc = cmd_prove(pa); });

  OracleArgs oa;
  CLI::App* so = sub->add_subcommand("oracle", "exhaustive reference search");
  so->add_option("ineq", oa.ineq, "inequality \"A <= B\"")->required();
  so->add_option("--sig", oa.sig_path, "signature file (strict mode)");
  so->add_option("--budget", oa.budget, "search step budget");
  so->add_flag("--emit", oa.emit, "print the derivation to stdout");
  so->add_flag("--compact", oa.compact, "single-line derivation");
  so->callback([&] { rc = cmd_oracle(oa); });

  TranslateArgs ta;
  CLI::App* tr = app.add_subcommand("translate", "convert derivation files");
  tr->add_option("--dir", ta.dir, "direction")
      ->required()
      ->check(CLI::IsMember({"isc2ax", "ax2isc"}));
  tr->add_option("--in", ta.in, "derivation file ('-' for stdin)")->required();
  tr->add_option("--sig", ta.sig_path, "signature file (strict mode)");
  tr->add_flag("--compact", ta.compact, "single-line output");
  tr->callback([&] { rc = cmd_translate(ta); });

  InvertArgs ia;
  CLI::App* iv = app.add_subcommand("invert", "invert a derivable inequality");
  iv->add_option("ineq", ia.ineq, "inequality \"A <= B\"")->required();
  iv->add_option("--head", ia.head, "constructor to invert at (default arrow)");
  iv->add_option("--sig", ia.sig_path, "signature file (strict mode)");
  iv->add_flag("--emit", ia.emit, "also print component derivations");
  iv->callback([&] { rc = cmd_invert(ia); });

  CLI::App* ty = app.add_subcommand("type", "typing judgments");
  ty->require_subcommand(1);

  CheckArgs ca;
  CLI::App* tc = ty->add_subcommand("check", "verify a judgment file");
  tc->add_option("--in", ca.in, "judgment file ('-' for stdin)")->required();
  tc->add_option("--sig", ca.sig_path, "signature file (strict mode)");
  tc->callback([&] { rc = cmd_type_check(ca); });

  ReduceArgs ra;
  CLI::App* rd = app.add_subcommand("reduce", "one reduction step");
  rd->add_option("--in", ra.in, "judgment file ('-' for stdin)")->required();
  rd->add_option("--sig", ra.sig_path, "signature file (strict mode)");
  rd->add_option("--path", ra.path,
                 "redex path like 0/1 ('.' = root); default: leftmost");
  rd->add_flag("--check-preservation", ra.check,
               "re-verify the result against the original judgment");
  rd->add_flag("--compact", ra.compact, "single-line derivation");
  rd->callback([&] { rc = cmd_reduce(ra); });

  ExpandArgs ea;
  CLI::App* ex = app.add_subcommand("expand", "one expansion step");
  ex->add_option("--in", ea.in, "judgment file ('-' for stdin)")->required();
  ex->add_option("--sig", ea.sig_path, "signature file (strict mode)");
  ex->add_option("--redex", ea.redex,
                 "PATH:TERM, or PATH:pi1 / PATH:pi2 to rebuild a projection")
      ->required();
  ex->add_option("--erased", ea.erased,
                 "term for the erased pair component (default \\z. z)");
  ex->add_flag("--compact", ea.compact, "single-line derivation");
  ex->callback([&] { rc = cmd_expand(ea); });

  DifftestArgs da;
  CLI::App* df = app.add_subcommand("difftest", "randomized differential run");
  df->add_option("--seed", da.seed, "generator seed");
  df->add_option("--rounds", da.rounds, "cases per battery");
  df->add_option("--size", da.size, "maximum type size");
  df->add_option("--ctx", da.ctx, "maximum context length");
  df->add_option("--depth", da.depth, "maximum term depth");
  df->add_option("--budget", da.budget, "oracle step budget");
  df->add_option("--mutant", da.mutant, "planted prover defect")
      ->check(CLI::IsMember({"none", "skip-width", "first-singleton"}));
  df->add_flag("--machine", da.machine, "line-oriented report");
  df->add_option("--sig", da.sig_path, "signature file");
  df->callback([&] { rc = cmd_difftest(da); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const RuleViolation& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const UnsupportedSignature& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const SyntaxError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  return rc;
}
