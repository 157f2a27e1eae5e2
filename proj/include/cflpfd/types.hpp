#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "cflpfd/term.hpp"

namespace cflpfd {

using TypeVarId = int32_t;

// Type constructors are referenced by index into TypeTable.  Negative ids
// denote rigid placeholder constructors introduced when a declared type is
// checked against a defining rule: they unify only with themselves, so a
// rule cannot secretly specialise a declared type variable.
enum class TypeKind : uint8_t { Var, Con, Arrow, Tuple };

struct TypeExpr;
using TypePtr = std::shared_ptr<const TypeExpr>;

struct TypeExpr {
  TypeKind kind;
  TypeVarId var = -1;         // Var
  int con = -1;               // Con (negative: rigid placeholder)
  std::vector<TypePtr> args;  // Con arguments; Arrow {from, to}; Tuple parts
};

TypePtr t_var(TypeVarId v);
TypePtr t_con(int con, std::vector<TypePtr> args = {});
TypePtr t_arrow(TypePtr from, TypePtr to);
// params[0] -> params[1] -> ... -> result (right associative).
TypePtr t_fun(const std::vector<TypePtr>& params, TypePtr result);
TypePtr t_tuple(std::vector<TypePtr> parts);

bool type_eq(const TypePtr& a, const TypePtr& b);
void collect_type_vars(const TypePtr& t, std::set<TypeVarId>& out);
// Type variables in first-appearance order (left to right, depth first).
std::vector<TypeVarId> type_vars_in_order(const TypePtr& t);

constexpr int kMaxTupleWidth = 8;

// A symbol's declared or inferred type together with its universally
// quantified type variables, listed in first-appearance order.
struct TypeScheme {
  std::vector<TypeVarId> quant;
  TypePtr body;
};

// Idempotent mapping from type variables to types.  `apply` chases chains,
// so the result of one application contains no bound variables.
class TypeSubst {
 public:
  bool empty() const { return m_.empty(); }
  bool binds(TypeVarId v) const { return m_.count(v) != 0; }
  const TypePtr* lookup(TypeVarId v) const;
  void bind(TypeVarId v, TypePtr t);
  TypePtr apply(const TypePtr& t) const;
  const std::map<TypeVarId, TypePtr>& map() const { return m_; }

 private:
  std::map<TypeVarId, TypePtr> m_;
};

// Type constructors with their ranks, plus the type scheme of every
// term-level symbol (data constructors, primitives, defined functions).
class TypeTable {
 public:
  explicit TypeTable(const Sig& sig);

  int add_con(const std::string& name, int rank);
  int lookup_con(const std::string& name) const;  // -1 if absent
  const std::string& con_name(int c) const;
  int con_rank(int c) const;
  int num_cons() const { return static_cast<int>(cons_.size()); }

  void set_scheme(SymbolId s, TypeScheme sch);
  bool has_scheme(SymbolId s) const { return schemes_.count(s) != 0; }
  const TypeScheme& scheme(SymbolId s) const { return schemes_.at(s); }

  // All type variable ids used by registered schemes are below this mark;
  // inference sessions allocate fresh ids starting here.
  TypeVarId tvar_watermark() const { return watermark_; }

  TypePtr int_type() const { return t_con(c_int); }
  TypePtr bool_type() const { return t_con(c_bool); }
  TypePtr success_type() const { return t_con(c_success); }
  TypePtr list_of(TypePtr elem) const { return t_con(c_list, {std::move(elem)}); }

  int c_int = -1, c_bool = -1, c_char = -1, c_success = -1, c_list = -1,
      c_label = -1;

 private:
  std::vector<std::pair<std::string, int>> cons_;  // name, rank
  std::map<std::string, int> con_by_name_;
  std::map<SymbolId, TypeScheme> schemes_;
  TypeVarId watermark_ = 0;
};

// Pretty renderer: type variables become A, B, C ... by first appearance;
// rigid placeholders render as the letter of the declared variable they
// stand for.  Lists render as [t], arrows right-associate.
std::string type_str(const TypeTable& tt, const TypePtr& t);
std::string scheme_str(const TypeTable& tt, const TypeScheme& sch);

// Most general unifier with occurs check.  On success extends `sub` in
// place and returns true; on failure leaves an explanation in `err`.
bool unify_types(const TypeTable& tt, const TypePtr& a, const TypePtr& b,
                 TypeSubst& sub, std::string& err);

// Monomorphic assumptions for term variables.
using TypeEnv = std::map<VarId, TypePtr>;

// One inference session: a shared substitution, a fresh-variable supply and
// an environment that extends itself with a fresh type variable whenever an
// unseen term variable appears (free variables of goals and rules are
// implicitly typed).  Polymorphic symbols are instantiated freshly at each
// occurrence; symbols listed in `assume` use their assumption unchanged
// (used for inferring mutually recursive functions monomorphically).
class TypeInference {
 public:
  TypeInference(const Sig& sig, const TypeTable& tt)
      : sig_(sig), tt_(tt), next_(tt.tvar_watermark()) {}

  TypePtr fresh() { return t_var(next_++); }
  TypePtr instantiate(const TypeScheme& sch);
  // Instantiates with rigid placeholder constructors instead of fresh
  // variables, making the scheme's variables unspecialisable.
  TypePtr instantiate_rigid(const TypeScheme& sch);

  // Returns the type of e (with the current substitution applied), or null
  // after recording the first error.  Every visited subterm's type is noted
  // for later inspection (see noted()).
  TypePtr visit(const TermPtr& e, TypeEnv& env);

  bool unify(const TypePtr& a, const TypePtr& b);

  const std::string& error() const { return err_; }
  bool failed() const { return !err_.empty(); }
  TypeSubst& sub() { return sub_; }
  const std::map<const Term*, TypePtr>& noted() const { return noted_; }

  // Function-symbol assumptions that bypass scheme instantiation.
  std::map<SymbolId, TypePtr> assume;

 private:
  const Sig& sig_;
  const TypeTable& tt_;
  TypeSubst sub_;
  TypeVarId next_;
  std::string err_;
  std::map<const Term*, TypePtr> noted_;
};

// Convenience wrapper over one TypeInference session.
struct InferOutcome {
  bool ok = false;
  TypePtr type;       // principal type with all unifications applied
  TypeSubst sub;      // the unifications performed
  std::string error;  // empty when ok
};
InferOutcome infer_type(const Sig& sig, const TypeTable& tt, TypeEnv env,
                        const TermPtr& e);

}  // namespace cflpfd
