#pragma once

#include <string>
#include <vector>

#include "cflpfd/program.hpp"
#include "cflpfd/types.hpp"

namespace cflpfd {

struct TypeError {
  SrcLoc loc;
  std::string msg;
  std::string str() const {
    return (loc.line ? loc.str() + ": " : std::string()) + msg;
  }
};

// Checks one defining rule against the function's registered type scheme:
// left-hand side linearity, patternhood and transparency, totality of the
// right-hand side and conditions, argument/result typing, and that each
// condition types as bool or success.  The scheme's own variables are held
// rigid, so a rule cannot specialise a declared type.  Returns the list of
// problems found (empty means the rule is well-typed).
std::vector<TypeError> check_program_rule(const Sig& sig, const TypeTable& tt,
                                          const VarTable& vars,
                                          const ProgramRule& rule);

// Whole-program check.  Functions without a declared type are inferred in
// dependency order (mutually recursive groups together, monomorphic within
// the group) and their generalised types registered; then every rule is
// checked with check_program_rule, which also verifies that declared types
// are instances of the inferred ones.  Returns true when no errors.
bool typecheck_program(const Sig& sig, TypeTable& tt, const VarTable& vars,
                       const Program& prog, std::vector<TypeError>& errs);

// Types a goal: every conjunct must type as bool or success under one
// shared environment for the goal's free variables.  On success, `env_out`
// (when given) receives the variable typing for later inspection.
bool check_goal_types(const Sig& sig, const TypeTable& tt,
                      const std::vector<TermPtr>& conjuncts,
                      std::vector<TypeError>& errs,
                      TypeEnv* env_out = nullptr);

}  // namespace cflpfd
