#pragma once

#include <map>
#include <string>
#include <vector>

#include "cflpfd/term.hpp"

namespace cflpfd {

struct SrcLoc {
  int line = 0;
  int col = 0;
  std::string str() const {
    return std::to_string(line) + ":" + std::to_string(col);
  }
};

// One defining rule `f t1 ... tn = r <== c1, ..., ck`.  The left-hand
// patterns must be linear and transparent; the conditions are constraint
// expressions interpreted as a conjunction.
struct ProgramRule {
  SymbolId fn = -1;
  std::vector<TermPtr> lhs;
  TermPtr rhs;
  std::vector<TermPtr> conds;
  SrcLoc loc;
};

// All rules of a program in textual order, indexed by defined symbol.
struct Program {
  std::vector<ProgramRule> rules;
  std::map<SymbolId, std::vector<int>> rules_of;

  void add_rule(ProgramRule r) {
    rules_of[r.fn].push_back(static_cast<int>(rules.size()));
    rules.push_back(std::move(r));
  }
  const std::vector<int>* rules_for(SymbolId f) const {
    auto it = rules_of.find(f);
    return it == rules_of.end() ? nullptr : &it->second;
  }
};

}  // namespace cflpfd
