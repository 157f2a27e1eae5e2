#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cflpfd/parser.hpp"
#include "cflpfd/solver.hpp"
#include "cflpfd/store.hpp"
#include "cflpfd/term.hpp"

namespace cflpfd {

// A suspended evaluation `lhs -> rhs`: the left expression must narrow to a
// refinement of the right pattern.  The variables of the pattern are said to
// be produced by the production; they stay existentially quantified and may
// only be bound by narrowing steps, never by the answer substitution.
struct Production {
  TermPtr lhs, rhs;
};

// Narrowing state: existentially quantified variables, suspended
// productions, pending surface constraints (not yet posted to the store),
// the primitive constraint store, and the answer substitution accumulated
// for the free variables of the original goal.
struct Goal {
  std::set<VarId> existential;
  std::vector<Production> prods;
  std::vector<TermPtr> pending;
  Store store;
  Subst answer;
  // true when the store changed since the last refutability probe
  bool sf_dirty = false;
};

// Initial goal for a conjunction: every conjunct starts out pending.
Goal goal_from_conjuncts(const std::vector<TermPtr>& conjuncts);

// A solved goal, projected for display: the residual store in solved form
// plus the answer substitution restricted to the goal's free variables.
struct Answer {
  Store store;
  Subst subst;
};

struct SearchStats {
  long long steps = 0;         // narrowing rule applications
  long long solver_steps = 0;  // solver rule applications driven by search
  long long solver_calls = 0;  // solver sessions plus refutability probes
  long long floundered = 0;    // branches dropped with no applicable rule
};

struct SearchOptions {
  long long step_budget = 2000000;  // engine plus solver steps combined
  int ho_depth = 2;            // fresh-argument depth for flexible heads
  bool check_invariants = false;  // run check_admissible before every step
  std::function<void(const std::string&)> trace;  // one line per rule
};

// Goal well-formedness: every produced variable is produced by exactly one
// production occurrence and is existential; the production relation is
// acyclic; the answer substitution avoids the goal's variables (and hence
// never binds a produced variable); production right-hand sides are
// patterns; pending constraints remain well-typed.
std::vector<std::string> check_admissible(const Module& m, const Goal& g);

struct HnfResult {
  TermPtr term;  // head-rigid refinement of the input expression
  Subst sub;     // bindings of the expression's free variables
  Store store;   // primitive constraints accumulated along the way
};

// Depth-first stream of answers for a goal under a loaded module.  Answers
// are pulled one at a time; the split into alternatives (defining rules,
// flexible-head bindings, solver case splits) is expanded lazily so the
// first answer never pays for the rest of the search space.
class Search {
 public:
  enum class End { Running, Exhausted, Budget };

  Search(Module& m, Goal g, SearchOptions opts = {});

  std::optional<Answer> next();       // next answer, or nullopt at the end
  std::optional<Goal> next_solved();  // same, but the whole solved goal

  End end_state() const { return end_; }
  const SearchStats& stats() const { return stats_; }
  const SolveStats& solver_stats() const { return solver_.stats; }
  const std::vector<std::string>& invariant_violations() const {
    return violations_;
  }
  const std::string& flounder_note() const { return flounder_note_; }
  const std::set<VarId>& initial_free() const { return init_free_; }

 private:
  friend std::vector<HnfResult> hnf(Module& m, const TermPtr& e,
                                    int max_results, SearchOptions opts);

  // Either a plain list of alternative goals or a lazily expanded solver
  // session; both are explored back to front.
  struct Frame {
    bool is_cs = false;
    std::vector<Goal> goals;
    std::vector<std::string> labels;  // trace line per goal ("" = silent)
    Goal base;                        // session context without the store
    std::set<VarId> chi;
    std::vector<Alternative> alts;
  };

  enum class K { Progress, Solved, Fail, Choice, Cs, Flounder };
  struct StepOut {
    K k = K::Progress;
    std::vector<Goal> children;
    std::vector<std::string> labels;
    std::set<VarId> chi;
    std::string line;  // trace line for this rule application
    std::string note;  // flounder description
  };

  StepOut step_goal(Goal& g);
  int det_production(Goal& g, size_t i, const std::set<VarId>& demand,
                     StepOut* out);
  bool df_child(const Goal& g, size_t i, const ProgramRule& rule,
                Goal* child);
  bool hnf_ready(Goal& g, const std::set<VarId>& demand);
  void emit(const std::string& line);
  bool over_budget() const;

  Module& m_;
  SearchOptions opts_;
  Solver solver_;
  std::vector<Frame> frames_;
  std::set<VarId> init_free_;
  SearchStats stats_;
  End end_ = End::Running;
  std::vector<std::string> violations_;
  std::string flounder_note_;
  VarId watch_ = -1;  // head-normalisation target (hnf mode), else -1
};

// Convenience driver: collects up to max_answers answers (all when < 0).
std::vector<Answer> solve_goal(Module& m, const Goal& g, int max_answers = -1,
                               SearchOptions opts = {});

// Head-normalisation: narrows `e` just far enough that its outermost shape
// is decided, leaving inner subexpressions unevaluated.  Yields up to
// max_results alternative head-normal refinements (all when < 0).
std::vector<HnfResult> hnf(Module& m, const TermPtr& e, int max_results = 1,
                           SearchOptions opts = {});

}  // namespace cflpfd
