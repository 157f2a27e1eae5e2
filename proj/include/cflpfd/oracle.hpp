#pragma once

#include <string>
#include <vector>

#include "cflpfd/store.hpp"

namespace cflpfd {

// Enumeration of ground partial terms used as a brute-force universe.
struct UniverseSpec {
  long long int_lo = -3, int_hi = 3;
  int depth = 2;
  std::vector<int> families;  // constructor families to draw from
  bool include_bottom = true;
  bool include_ints = true;
};

std::vector<TermPtr> enumerate_universe(const Sig& sig,
                                        const UniverseSpec& spec);

// Exhaustive solutions of a store, enumerating each variable over its own
// universe.  Throws std::runtime_error when the valuation count exceeds cap.
using VarUniverse = std::map<VarId, std::vector<TermPtr>>;
std::vector<Valuation> solutions_bruteforce(const Sig& sig, const Store& st,
                                            const VarUniverse& universe,
                                            long long cap = 1000000);

// Convenience overload: every store variable ranges over the same universe.
std::vector<Valuation> solutions_bruteforce(const Sig& sig, const Store& st,
                                            const std::vector<TermPtr>& universe,
                                            long long cap = 1000000);

// Canonical text key of a valuation projected onto `proj`; lets tests
// compare solution sets.
std::string valuation_key(const Sig& sig, const Valuation& v,
                          const std::set<VarId>& proj);

std::set<std::string> solution_keys(const Sig& sig,
                                    const std::vector<Valuation>& sols,
                                    const std::set<VarId>& proj);

}  // namespace cflpfd
