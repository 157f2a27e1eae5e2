#pragma once

#include <map>
#include <optional>
#include <variant>
#include <vector>

#include "cflpfd/domain.hpp"
#include "cflpfd/term.hpp"

namespace cflpfd {

// An integer-or-variable argument of an arithmetic/comparison constraint.
struct IArg {
  bool is_var = false;
  long long val = 0;
  VarId var = -1;
};
inline IArg iarg(long long n) { return {false, n, -1}; }
inline IArg iarg_var(VarId v) { return {true, 0, v}; }

// Result slot of a reifiable constraint: a known truth value or a variable
// that will be bound to true/false.
struct Res {
  enum K : uint8_t { False, True, Var } k = True;
  VarId var = -1;
};
inline Res res_true() { return {Res::True, -1}; }
inline Res res_false() { return {Res::False, -1}; }
inline Res res_var(VarId v) { return {Res::Var, v}; }

enum class Rel : uint8_t { EQ, NE, LT, LE, GT, GE };
enum class AOp : uint8_t { Add, Sub, Mul, Div };

// Strict (dis)equality between patterns: `seq l r` must evaluate to the
// result slot.  `neg` requests the negated test (surface #\=); it is only
// kept while the result is an unknown variable.
struct SeqC {
  TermPtr l, r;
  Res res;
  bool neg = false;
};

// Integer comparison `a rel b == res` with rel in {LT, LE, GT, GE}.
struct CmpC {
  Rel rel;
  IArg a, b;
  Res res;
};

// Fused arithmetic comparison: (a op b) rel c.
struct ArithC {
  AOp op;
  IArg a, b;
  Rel rel;
  IArg c;
};

// Membership of `u` in an explicit, sorted integer list == res.
struct DomC {
  IArg u;
  TermPtr list;
  Res res;
};

// Range restriction: every variable in `us` lies in lo..hi.
struct DomRangeC {
  std::vector<IArg> us;
  IArg lo, hi;
};

// 0/1 indicator: b == 1 if x == v, b == 0 if x != v.
struct IndC {
  IArg x, v, b;
};

// Pending enumeration request over `vars`.
struct LabelC {
  bool first_fail = false;
  int optimize = 0;  // 0 none, 1 minimize, 2 maximize
  IArg objective;
  std::vector<IArg> vars;
};

using Constraint =
    std::variant<SeqC, CmpC, ArithC, DomC, DomRangeC, IndC, LabelC>;

void collect_constraint_vars(const Constraint& c, std::set<VarId>& out);

// Constraint store: a list of primitive constraints plus the accumulated
// integer domains.  Domain entries absorb range/membership information; the
// printer reads them back as `X in lo..hi` lines.
struct Store {
  std::vector<Constraint> cs;
  std::map<VarId, IntDomain> doms;

  void add(Constraint c) { cs.push_back(std::move(c)); }
  std::set<VarId> vars() const;
};

// Applies a substitution to every constraint and domain entry.  Returns
// false if a binding contradicts a recorded domain, binds a domain variable
// to a non-integer, or puts an impossible value into a constraint slot.
bool subst_store(const Sig& sig, const Subst& s, Store& st);

IArg subst_iarg(const Subst& s, const IArg& a, bool* ok);
Res subst_res(const Sig& sig, const Subst& s, const Res& r, bool* ok);

// ---------------------------------------------------------------------------
// Three-valued semantics of the primitive operations over ground partial
// terms.  Undefined results are reported as the Bottom term.
// ---------------------------------------------------------------------------

// Strict equality: true iff the sides are identical total terms, false iff
// they have no common refinement, undefined otherwise.
TermPtr seq_eval(const Sig& sig, const TermPtr& a, const TermPtr& b);
// leq: defined on integers only.
TermPtr leq_eval(const Sig& sig, const TermPtr& a, const TermPtr& b);
// a op b with truncating division; undefined on non-ints and division by 0.
TermPtr arith_eval(const Sig& sig, AOp op, const TermPtr& a, const TermPtr& b);
// Membership of u in an explicit list (which must be strictly ascending for
// a positive answer).
TermPtr domain_eval(const Sig& sig, const TermPtr& u, const TermPtr& list);
// True iff the argument is an integer.
TermPtr indomain_eval(const Sig& sig, const TermPtr& u);

// Ground truth for a whole constraint under a valuation of its variables:
// true iff the valuation is a solution.  Variables missing from the
// valuation are treated as Bottom.
using Valuation = std::map<VarId, TermPtr>;
bool constraint_sat(const Sig& sig, const Constraint& c, const Valuation& v);

// Name-based dispatcher over the primitive evaluators ("seq", "leq", "+",
// "-", "*", "/", "domain", "indomain"); used by the semantics tests.
TermPtr eval_primitive(const Sig& sig, const std::string& prim,
                       const std::vector<TermPtr>& args);

// ---------------------------------------------------------------------------
// Surface-constraint classification and normalization.
// ---------------------------------------------------------------------------

enum class SurfaceClass {
  NotConstraint,
  Eq,        // ==, #=
  Ne,        // /=, #\=
  Cmp,       // <, <=, >, >=, #<, #<=, #>, #>=  (rel() says which)
  Arith,     // +, -, *, /, #+, #-, #*, #/      (aop() says which)
  Domain3,   // domain [us] lo hi
  Labeling,  // labeling opts vars
  AllDiff,   // all_different
  Sum,       // sum us rel t
  ScalarProd,
  Count,
  Indomain,
};

SurfaceClass classify_symbol(const Sig& sig, SymbolId s);
Rel rel_of_symbol(const Sig& sig, SymbolId s);   // Cmp/Eq/Ne symbols
AOp aop_of_symbol(const Sig& sig, SymbolId s);   // Arith symbols
Rel flip_rel(Rel r);    // a rel b <-> b flip(rel) a
Rel negate_rel(Rel r);  // a rel b false <-> a negate(rel) b true

// Expands one surface constraint application with result `target` (a total
// pattern, usually `true`) into primitive store constraints, introducing
// fresh helper variables for n-ary combinators (sum/scalar_product/count).
// Returns nullopt when an argument still needs flattening by the narrowing
// engine (non-pattern subterm in a position that requires one).
std::optional<std::vector<Constraint>> normalize_notation(
    const Sig& sig, VarTable& vars, SymbolId head,
    const std::vector<TermPtr>& args, const TermPtr& target);

}  // namespace cflpfd
