#pragma once

#include <optional>

#include "cflpfd/store.hpp"

namespace cflpfd {

// One disjunct of a solver result: a transformed store plus the substitution
// accumulated along the way.  dom(sub) never meets var(store).
struct Alternative {
  Store store;
  Subst sub;
};

struct SolveStats {
  long long steps = 0;        // rule applications
  long long label_nodes = 0;  // labeling choice points expanded
};

// The finite-domain constraint solver.  `step` applies a single rule to an
// alternative while protecting the variables in chi from being bound;
// `solve` drives it to quiescence and returns the resulting disjunction of
// solved alternatives (empty = failure).
class Solver {
 public:
  enum class StepKind { None, Fail, Branch };
  struct StepResult {
    StepKind kind = StepKind::None;
    std::vector<Alternative> alts;
    const char* rule = "";
  };

  Solver(const Sig& sig, VarTable& vars) : sig_(sig), vars_(vars) {}

  StepResult step(const Alternative& alt, const std::set<VarId>& chi);

  // True when no rule fires on the store (a solved form w.r.t. chi).
  bool solved(const Store& st, const std::set<VarId>& chi);

  // Cheap refutability scan: definite failure detectable by the failure
  // rules plus one propagation fixpoint on a copy.
  bool refutable(const Store& st);

  // Syntactic underapproximation of the variables every solution maps to a
  // defined value.
  std::set<VarId> demanded(const Store& st) const;

  std::vector<Alternative> solve(const Store& st, const std::set<VarId>& chi,
                                 long long fuel = 2000000);

  SolveStats stats;

 private:
  StepResult step_inner(const Alternative& alt, const std::set<VarId>& chi,
                        bool label_plain);
  std::optional<StepResult> tier_fail(const Alternative& alt);
  std::optional<StepResult> tier_discharge(const Alternative& alt);
  std::optional<StepResult> tier_rewrite(const Alternative& alt);
  std::optional<StepResult> tier_bind(const Alternative& alt,
                                      const std::set<VarId>& chi);
  std::optional<StepResult> tier_propagate(const Alternative& alt,
                                           const std::set<VarId>& chi);
  std::optional<StepResult> tier_split(const Alternative& alt,
                                       const std::set<VarId>& chi,
                                       bool label_plain);

  // Branch-and-bound optimization labeling; returns the best solved
  // alternative, if any.
  std::optional<Alternative> solve_optimize(const Alternative& alt,
                                            const std::set<VarId>& chi,
                                            size_t label_idx);

  // Binary split of an undetermined 0/1 indicator variable.
  StepResult res_split_int(const Alternative& alt, VarId b);

  Alternative bound_child(const Alternative& a, const Subst& theta, bool* ok);

  const Sig& sig_;
  VarTable& vars_;
};

}  // namespace cflpfd
