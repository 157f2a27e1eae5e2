#pragma once

// Shared helpers for the test suites.

#include <functional>
#include <string>
#include <vector>

#include "cflpfd/oracle.hpp"
#include "cflpfd/store.hpp"
#include "cflpfd/term.hpp"

namespace testsup {

using namespace cflpfd;

// Signature extended with the small recursive datatype used throughout the
// solver/semantics tests.
struct NatSig {
  Sig sig;
  VarTable vars;
  int nat_fam;
  SymbolId s_z, s_s;

  NatSig() {
    nat_fam = sig.add_family("nat");
    s_z = sig.add_constructor("z", 0, nat_fam);
    s_s = sig.add_constructor("s", 1, nat_fam);
  }

  TermPtr z() const { return mk_app(s_z); }
  TermPtr s(TermPtr t) const { return mk_app(s_s, {std::move(t)}); }
};

inline TermPtr mklist(const Sig& sig, const std::vector<TermPtr>& elems,
                      TermPtr tail = nullptr) {
  TermPtr t = tail ? tail : mk_app(sig.s_nil);
  for (auto it = elems.rbegin(); it != elems.rend(); ++it)
    t = mk_app(sig.s_cons, {*it, t});
  return t;
}

// Ground partial terms of depth <= 2: integers, booleans, naturals, bottom,
// and integer lists (with both closed and undefined tails).
inline std::vector<TermPtr> table1_universe(const NatSig& f) {
  std::vector<TermPtr> U;
  U.push_back(mk_bottom());
  for (long long n = -3; n <= 3; ++n) U.push_back(mk_int(n));
  U.push_back(mk_app(f.sig.s_true));
  U.push_back(mk_app(f.sig.s_false));
  U.push_back(f.z());
  U.push_back(f.s(mk_bottom()));
  U.push_back(f.s(f.z()));
  U.push_back(f.s(f.s(mk_bottom())));
  U.push_back(f.s(f.s(f.z())));

  std::vector<TermPtr> elems = {mk_bottom(), mk_int(-1), mk_int(0), mk_int(1),
                                mk_int(2)};
  U.push_back(mklist(f.sig, {}));
  for (const auto& a : elems) {
    U.push_back(mklist(f.sig, {a}));
    U.push_back(mk_app(f.sig.s_cons, {a, mk_bottom()}));
    for (const auto& b : elems) {
      U.push_back(mklist(f.sig, {a, b}));
      U.push_back(
          mk_app(f.sig.s_cons, {a, mk_app(f.sig.s_cons, {b, mk_bottom()})}));
    }
  }
  return U;
}

struct PropertyReport {
  long long mono_checked = 0;
  long long mono_violations = 0;
  long long radical_checked = 0;
  long long radical_violations = 0;
  bool ok() const { return mono_violations == 0 && radical_violations == 0; }
};

// Exhaustive monotonicity + radicality check of the primitive semantics over
// a universe of ground partial terms.
inline PropertyReport check_primitive_properties(const Sig& sig,
                                                 const std::vector<TermPtr>& U) {
  PropertyReport rep;
  // Refinement pairs (indices i,j with U[i] below U[j]).
  std::vector<std::pair<size_t, size_t>> R;
  for (size_t i = 0; i < U.size(); ++i)
    for (size_t j = 0; j < U.size(); ++j)
      if (info_leq(U[i], U[j])) R.push_back({i, j});

  const char* prims[] = {"seq", "leq", "+", "-", "*", "/", "domain"};
  for (const char* p : prims) {
    for (const auto& [a, a2] : R) {
      for (const auto& [b, b2] : R) {
        TermPtr lo = eval_primitive(sig, p, {U[a], U[b]});
        TermPtr hi = eval_primitive(sig, p, {U[a2], U[b2]});
        ++rep.mono_checked;
        if (!info_leq(lo, hi)) ++rep.mono_violations;
      }
    }
    for (const auto& x : U)
      for (const auto& y : U) {
        TermPtr v = eval_primitive(sig, p, {x, y});
        ++rep.radical_checked;
        if (!is_bottom(v) && !(is_total(v) && is_ground(v)))
          ++rep.radical_violations;
      }
  }
  for (const auto& [a, a2] : R) {
    TermPtr lo = eval_primitive(sig, "indomain", {U[a]});
    TermPtr hi = eval_primitive(sig, "indomain", {U[a2]});
    ++rep.mono_checked;
    if (!info_leq(lo, hi)) ++rep.mono_violations;
  }
  for (const auto& x : U) {
    TermPtr v = eval_primitive(sig, "indomain", {x});
    ++rep.radical_checked;
    if (!is_bottom(v) && !is_total(v)) ++rep.radical_violations;
  }
  return rep;
}

}  // namespace testsup
