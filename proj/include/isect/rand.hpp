#pragma once

#include <random>
#include <vector>

#include "types.hpp"

namespace isect {

// Uniform-ish random type with at most max_size nodes. Deterministic in the
// generator state.
inline Type random_type(std::mt19937_64& rng, const Signature& sig,
                        std::size_t max_size) {
  std::vector<const ConstructorDecl*> nullary, compound;
  for (const auto& n : sig.names()) {
    const auto& d = sig.decl(n);
    if (d.convar + d.covar == 0)
      nullary.push_back(&d);
    else
      compound.push_back(&d);
  }
  if (nullary.empty())
    throw Error("random_type: signature has no 0-ary constructor");
  auto pick = [&](std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  };
  if (max_size < 3) return Type::atom(nullary[pick(nullary.size())]->name);

  // options: one per nullary head, one intersection, one per fitting head
  std::vector<int> opts;  // 0 = atom, 1 = inter, 2+i = compound[i]
  opts.push_back(0);
  opts.push_back(1);
  for (std::size_t i = 0; i < compound.size(); ++i) {
    const auto& d = *compound[i];
    if (1 + d.convar + d.covar <= max_size) opts.push_back(2 + (int)i);
  }
  int o = opts[pick(opts.size())];
  if (o == 0) return Type::atom(nullary[pick(nullary.size())]->name);
  if (o == 1) {
    std::size_t lb = 1 + pick(max_size - 2);
    return Type::inter(random_type(rng, sig, lb),
                       random_type(rng, sig, max_size - 1 - lb));
  }
  const auto& d = *compound[o - 2];
  std::size_t arity = d.convar + d.covar;
  std::size_t pool = max_size - 1 - arity;  // above the 1-node minimum each
  std::vector<Type> contra, co;
  for (std::size_t i = 0; i < arity; ++i) {
    std::size_t extra = pool ? pick(pool + 1) : 0;
    pool -= extra;
    Type arg = random_type(rng, sig, 1 + extra);
    if (i < d.convar)
      contra.push_back(std::move(arg));
    else
      co.push_back(std::move(arg));
  }
  return Type::constr(d.name, std::move(contra), std::move(co));
}

}  // namespace isect
