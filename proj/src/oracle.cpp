#include "cflpfd/oracle.hpp"

#include <stdexcept>

namespace cflpfd {

std::vector<TermPtr> enumerate_universe(const Sig& sig,
                                        const UniverseSpec& spec) {
  // levels[d] holds the terms of depth exactly d.
  std::vector<std::vector<TermPtr>> levels(spec.depth + 1);
  if (spec.include_bottom) levels[0].push_back(mk_bottom());
  if (spec.include_ints)
    for (long long n = spec.int_lo; n <= spec.int_hi; ++n)
      levels[0].push_back(mk_int(n));
  for (int fam : spec.families)
    for (SymbolId c : sig.family_members(fam))
      if (sig.info(c).arity == 0) levels[0].push_back(mk_app(c));

  for (int d = 1; d <= spec.depth; ++d) {
    // Terms of depth d: a constructor whose deepest argument has depth d-1.
    std::vector<TermPtr> shallow;  // depth <= d-1
    for (int e = 0; e < d; ++e)
      shallow.insert(shallow.end(), levels[e].begin(), levels[e].end());
    auto depth_of = [&](const TermPtr& t) {
      // Recompute structurally; terms are tiny.
      auto rec = [](auto&& self, const TermPtr& x) -> int {
        int m = 0;
        for (const auto& a : x->args) m = std::max(m, 1 + self(self, a));
        return m;
      };
      return rec(rec, t);
    };
    for (int fam : spec.families) {
      for (SymbolId c : sig.family_members(fam)) {
        int ar = sig.info(c).arity;
        if (ar == 0) continue;
        std::vector<size_t> idx(ar, 0);
        while (true) {
          std::vector<TermPtr> args;
          args.reserve(ar);
          for (int i = 0; i < ar; ++i) args.push_back(shallow[idx[i]]);
          TermPtr t = mk_app(c, std::move(args));
          if (depth_of(t) == d) levels[d].push_back(t);
          int i = ar - 1;
          while (i >= 0 && ++idx[i] == shallow.size()) idx[i--] = 0;
          if (i < 0) break;
        }
      }
    }
  }

  std::vector<TermPtr> out;
  for (auto& l : levels) out.insert(out.end(), l.begin(), l.end());
  return out;
}

std::vector<Valuation> solutions_bruteforce(const Sig& sig, const Store& st,
                                            const VarUniverse& universe,
                                            long long cap) {
  std::vector<VarId> vs;
  std::vector<const std::vector<TermPtr>*> us;
  long long total = 1;
  for (const auto& [v, u] : universe) {
    vs.push_back(v);
    us.push_back(&u);
    if (u.empty()) return {};
    total *= static_cast<long long>(u.size());
    if (total > cap) throw std::runtime_error("universe-too-large");
  }

  std::vector<Valuation> sols;
  std::vector<size_t> idx(vs.size(), 0);
  while (true) {
    Valuation val;
    for (size_t i = 0; i < vs.size(); ++i) val[vs[i]] = (*us[i])[idx[i]];
    bool ok = true;
    for (const auto& c : st.cs)
      if (!(ok = ok && constraint_sat(sig, c, val))) break;
    if (ok) {
      for (const auto& [v, d] : st.doms) {
        auto it = val.find(v);
        TermPtr t = it == val.end() ? mk_bottom() : it->second;
        if (t->kind != TermKind::Int || !d.contains(t->ival)) {
          ok = false;
          break;
        }
      }
    }
    if (ok) sols.push_back(std::move(val));

    if (vs.empty()) break;
    size_t i = vs.size() - 1;
    while (true) {
      if (++idx[i] < us[i]->size()) break;
      idx[i] = 0;
      if (i == 0) return sols;
      --i;
    }
  }
  return sols;
}

std::vector<Valuation> solutions_bruteforce(const Sig& sig, const Store& st,
                                            const std::vector<TermPtr>& universe,
                                            long long cap) {
  VarUniverse vu;
  for (VarId v : st.vars()) vu[v] = universe;
  return solutions_bruteforce(sig, st, vu, cap);
}

std::string valuation_key(const Sig& sig, const Valuation& v,
                          const std::set<VarId>& proj) {
  std::string key;
  for (VarId x : proj) {
    auto it = v.find(x);
    key += std::to_string(x) + "=";
    key += it == v.end() ? "_|_" : raw_str(sig, it->second);
    key += ";";
  }
  return key;
}

std::set<std::string> solution_keys(const Sig& sig,
                                    const std::vector<Valuation>& sols,
                                    const std::set<VarId>& proj) {
  std::set<std::string> keys;
  for (const auto& s : sols) keys.insert(valuation_key(sig, s, proj));
  return keys;
}

}  // namespace cflpfd
