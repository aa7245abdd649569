#pragma once

// Concrete syntax for types, sequents and inequalities.
//
//   type  ::= arrow
//   arrow ::= inter ("->" arrow)?          right associative
//   inter ::= prod ("/\" inter)?
//   prod  ::= atom ("*" prod)?
//   atom  ::= IDENT | IDENT "(" typelist? ";" typelist? ")" | "(" type ")"
//
// "/\" binds tighter than "->", "*" tighter than "/\". The infix forms are
// sugar for arrow(A; B) and prod(; A, B) and are only accepted when the
// signature declares those constructors at the matching arities.

#include <cctype>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "types.hpp"

namespace isect {

struct SyntaxError : Error {
  std::size_t pos;
  std::string msg;  // without the position prefix
  SyntaxError(std::size_t p, const std::string& what)
      : Error("syntax error at offset " + std::to_string(p) + ": " + what),
        pos(p),
        msg(what) {}
};

namespace detail {

enum class Tok {
  Ident,
  Arrow,      // ->
  Wedge,      // /\ .
  Star,       // *
  LParen,
  RParen,
  Comma,
  Semi,
  Leq,        // <=
  Turnstile,  // |-
  Colon,      // :
  End,
};

struct Token {
  Tok kind;
  std::string text;
  std::size_t pos;
};

inline bool ident_start(char c) { return std::isalpha((unsigned char)c) || c == '_'; }
inline bool ident_char(char c) {
  return std::isalnum((unsigned char)c) || c == '_' || c == '\'';
}

inline std::vector<Token> lex_types(const std::string& s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace((unsigned char)c)) {
      ++i;
      continue;
    }
    if (ident_start(c)) {
      std::size_t j = i;
      while (j < s.size() && ident_char(s[j])) ++j;
      out.push_back({Tok::Ident, s.substr(i, j - i), i});
      i = j;
      continue;
    }
    auto two = [&](char a, char b) {
      return c == a && i + 1 < s.size() && s[i + 1] == b;
    };
    if (two('-', '>')) { out.push_back({Tok::Arrow, "->", i}); i += 2; continue; }
    if (two('/', '\\')) { out.push_back({Tok::Wedge, "/\\", i}); i += 2; continue; }
    if (two('<', '=')) { out.push_back({Tok::Leq, "<=", i}); i += 2; continue; }
    if (two('|', '-')) { out.push_back({Tok::Turnstile, "|-", i}); i += 2; continue; }
    switch (c) {
      case '*': out.push_back({Tok::Star, "*", i}); ++i; continue;
      case '(': out.push_back({Tok::LParen, "(", i}); ++i; continue;
      case ')': out.push_back({Tok::RParen, ")", i}); ++i; continue;
      case ',': out.push_back({Tok::Comma, ",", i}); ++i; continue;
      case ';': out.push_back({Tok::Semi, ";", i}); ++i; continue;
      case ':': out.push_back({Tok::Colon, ":", i}); ++i; continue;
      default:
        throw SyntaxError(i, std::string("unexpected character '") + c + "'");
    }
  }
  out.push_back({Tok::End, "", s.size()});
  return out;
}

class TypeParser {
 public:
  TypeParser(std::vector<Token> toks, const Signature& sig)
      : toks_(std::move(toks)), sig_(&sig) {}

  const Token& peek() const { return toks_[i_]; }
  Token next() { return toks_[i_++]; }
  void expect(Tok k, const char* what) {
    if (peek().kind != k)
      throw SyntaxError(peek().pos, std::string("expected ") + what);
    ++i_;
  }
  bool at_end() const { return peek().kind == Tok::End; }

  Type parse_arrow() {
    Type l = parse_inter();
    if (peek().kind == Tok::Arrow) {
      std::size_t at = peek().pos;
      ++i_;
      require_infix("arrow", 1, 1, at, "'->'");
      Type r = parse_arrow();
      return Type::constr("arrow", {std::move(l)}, {std::move(r)});
    }
    return l;
  }

 private:
  Type parse_inter() {
    Type l = parse_prod();
    if (peek().kind == Tok::Wedge) {
      ++i_;
      Type r = parse_inter();
      return Type::inter(std::move(l), std::move(r));
    }
    return l;
  }

  Type parse_prod() {
    Type l = parse_atom();
    if (peek().kind == Tok::Star) {
      std::size_t at = peek().pos;
      ++i_;
      require_infix("prod", 0, 2, at, "'*'");
      Type r = parse_prod();
      return Type::constr("prod", {}, {std::move(l), std::move(r)});
    }
    return l;
  }

  Type parse_atom() {
    if (peek().kind == Tok::LParen) {
      ++i_;
      Type t = parse_arrow();
      expect(Tok::RParen, "')'");
      return t;
    }
    if (peek().kind != Tok::Ident)
      throw SyntaxError(peek().pos, "expected a type");
    Token id = next();
    if (!sig_->has(id.text))
      throw SyntaxError(id.pos, "unknown constructor '" + id.text + "'");
    if (peek().kind != Tok::LParen) return Type::atom(id.text);
    ++i_;
    std::vector<Type> contra, co;
    if (peek().kind != Tok::Semi) contra = parse_typelist();
    expect(Tok::Semi, "';'");
    if (peek().kind != Tok::RParen) co = parse_typelist();
    expect(Tok::RParen, "')'");
    return Type::constr(id.text, std::move(contra), std::move(co));
  }

  std::vector<Type> parse_typelist() {
    std::vector<Type> out;
    out.push_back(parse_arrow());
    while (peek().kind == Tok::Comma) {
      ++i_;
      out.push_back(parse_arrow());
    }
    return out;
  }

  void require_infix(const char* name, std::size_t convar, std::size_t covar,
                     std::size_t at, const char* op) {
    if (!sig_->has(name))
      throw SyntaxError(at, std::string(op) + " needs a declared '" + name +
                                "' constructor");
    const auto& d = sig_->decl(name);
    if (d.convar != convar || d.covar != covar)
      throw SyntaxError(at, std::string(op) + " needs '" + name + "' at arity (" +
                                std::to_string(convar) + ";" +
                                std::to_string(covar) + ")");
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
  const Signature* sig_;
};

}  // namespace detail

inline Type parse_type(const std::string& text, const Signature& sig) {
  detail::TypeParser p(detail::lex_types(text), sig);
  Type t = p.parse_arrow();
  if (!p.at_end())
    throw SyntaxError(p.peek().pos, "trailing input after type");
  validate_type(t, sig);
  return t;
}

// "A <= B"
inline std::pair<Type, Type> parse_inequality(const std::string& text,
                                              const Signature& sig) {
  detail::TypeParser p(detail::lex_types(text), sig);
  Type l = p.parse_arrow();
  p.expect(detail::Tok::Leq, "'<='");
  Type r = p.parse_arrow();
  if (!p.at_end())
    throw SyntaxError(p.peek().pos, "trailing input after inequality");
  validate_type(l, sig);
  validate_type(r, sig);
  return {std::move(l), std::move(r)};
}

// Declares every identifier that is used as a bare atom and not yet known as
// a 0-ary width-1 constructor. Convenience for CLI input.
inline void autodeclare_atoms(const std::string& text, Signature& sig) {
  auto toks = detail::lex_types(text);
  for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
    if (toks[i].kind != detail::Tok::Ident) continue;
    if (toks[i + 1].kind == detail::Tok::LParen) continue;
    if (!sig.has(toks[i].text)) sig.declare({toks[i].text, 0, 0, 1});
  }
}

// Signature files: one declaration per line, "name convar covar width",
// plus optional preorder lines "prec a <= b". '#' starts a comment.
inline Signature load_signature(const std::string& text) {
  Signature sig;
  std::vector<std::pair<std::string, std::string>> precs;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    std::string w;
    while (ls >> w) tok.push_back(w);
    if (tok.empty()) continue;
    auto fail = [&](const std::string& msg) -> void {
      throw InvalidSignature("signature line " + std::to_string(lineno) + ": " + msg);
    };
    if (tok[0] == "prec") {
      if (tok.size() != 4 || tok[2] != "<=")
        fail("expected 'prec name1 <= name2'");
      precs.emplace_back(tok[1], tok[3]);
      continue;
    }
    if (tok.size() != 4) fail("expected 'name convar covar width'");
    ConstructorDecl d;
    d.name = tok[0];
    try {
      d.convar = std::stoul(tok[1]);
      d.covar = std::stoul(tok[2]);
      d.width = std::stoi(tok[3]);
    } catch (const std::exception&) {
      fail("arities and width must be numbers");
    }
    sig.declare(std::move(d));
  }
  for (const auto& [a, b] : precs) {
    try {
      sig.declare_leq(a, b);
    } catch (const Error& e) {
      throw InvalidSignature(std::string("signature preorder: ") + e.what());
    }
  }
  return sig;
}

}  // namespace isect
