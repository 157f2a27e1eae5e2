#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace cflpfd {

using VarId = int32_t;
using SymbolId = int32_t;

enum class SymKind : uint8_t {
  Constructor,  // data constructor; belongs to a datatype family
  Defined,      // function defined by rewrite rules
  Primitive,    // built-in constraint or arithmetic operator
};

struct SymbolInfo {
  std::string name;
  SymKind kind = SymKind::Defined;
  int arity = 0;
  int family = -1;  // datatype index for constructors, -1 otherwise
};

// Symbol table.  Constructors are grouped into datatype families so the
// solver can enumerate the siblings of a constructor (needed when a
// disequation against a variable is split into constructor alternatives).
class Sig {
 public:
  Sig();

  SymbolId add(const std::string& name, SymKind kind, int arity);
  SymbolId add_constructor(const std::string& name, int arity, int family);
  int add_family(const std::string& type_name);

  SymbolId lookup(const std::string& name) const;  // -1 if absent
  bool has(const std::string& name) const { return lookup(name) >= 0; }
  const SymbolInfo& info(SymbolId s) const { return symbols_[s]; }
  SymbolInfo& info_mut(SymbolId s) { return symbols_[s]; }
  int num_symbols() const { return static_cast<int>(symbols_.size()); }

  int num_families() const { return static_cast<int>(families_.size()); }
  const std::vector<SymbolId>& family_members(int family) const {
    return families_[family];
  }
  const std::string& family_name(int family) const {
    return family_names_[family];
  }
  int family_of_type(const std::string& type_name) const;  // -1 if absent

  // Pre-registered symbols (see Sig() for the full set).
  SymbolId s_nil, s_cons, s_true, s_false;

 private:
  std::vector<SymbolInfo> symbols_;
  std::map<std::string, SymbolId> by_name_;
  std::vector<std::vector<SymbolId>> families_;
  std::vector<std::string> family_names_;
};

// Fresh-variable supply and display names.  Variables created by the engine
// get an empty name and are rendered as _A, _B, ... at print time.
class VarTable {
 public:
  VarId fresh(const std::string& name = "");
  const std::string& name(VarId v) const { return names_[v]; }
  int count() const { return static_cast<int>(names_.size()); }

 private:
  std::vector<std::string> names_;
};

enum class TermKind : uint8_t {
  Var,      // logic variable
  Int,      // integer literal
  App,      // application of a symbol to zero or more arguments
  FlexApp,  // application whose head is a variable (higher-order)
  Tuple,    // (t1, ..., tn)
  Bottom,   // the undefined value; used by the semantic oracle only
};

struct Term;
using TermPtr = std::shared_ptr<const Term>;

struct Term {
  TermKind kind;
  VarId var = -1;        // Var; FlexApp head
  long long ival = 0;    // Int
  SymbolId head = -1;    // App
  std::vector<TermPtr> args;  // App, FlexApp, Tuple
};

TermPtr mk_var(VarId v);
TermPtr mk_int(long long n);
TermPtr mk_app(SymbolId head, std::vector<TermPtr> args = {});
TermPtr mk_flex(VarId head, std::vector<TermPtr> args);
TermPtr mk_tuple(std::vector<TermPtr> elems);
TermPtr mk_bottom();

// Applies `fun` to additional arguments, flattening nested applications.
// `fun` must be a Var, App or FlexApp.
TermPtr mk_applied(const TermPtr& fun, std::vector<TermPtr> extra);

bool is_var(const TermPtr& t);
bool is_int(const TermPtr& t);
inline bool is_bottom(const TermPtr& t) { return t->kind == TermKind::Bottom; }

// Patterns: variables, integers, tuples of patterns, c t1..tk with k <= ar(c)
// for constructors, and f t1..tk with k < ar(f) for defined/primitive symbols
// (a partially applied function is a legitimate data value).
bool is_pattern(const Sig& sig, const TermPtr& t);

// Ground: no variables.  Total: no occurrence of Bottom.
bool is_ground(const TermPtr& t);
bool is_total(const TermPtr& t);

bool occurs(VarId v, const TermPtr& t);
void collect_vars(const TermPtr& t, std::set<VarId>& out);
std::set<VarId> vars_of(const TermPtr& t);

// Structural identity.
bool term_eq(const TermPtr& a, const TermPtr& b);
// Total order on terms, used to canonicalise answer sets in tests.
int term_cmp(const TermPtr& a, const TermPtr& b);

// Information ordering on partial terms: Bottom is below everything and
// applications are compared head-wise then argument-wise.  `info_leq(a,b)`
// holds iff b refines a.
bool info_leq(const TermPtr& a, const TermPtr& b);
// True iff some term refines both a and b (computed structurally; distinct
// variables are treated as distinct atoms).
bool has_common_upper_bound(const TermPtr& a, const TermPtr& b);

// Idempotent substitution.
class Subst {
 public:
  bool empty() const { return m_.empty(); }
  bool binds(VarId v) const { return m_.count(v) != 0; }
  const TermPtr* lookup(VarId v) const;
  void bind(VarId v, TermPtr t);  // must keep idempotency; asserts v unbound
  void erase(VarId v) { m_.erase(v); }
  const std::map<VarId, TermPtr>& map() const { return m_; }

  TermPtr apply(const TermPtr& t) const;
  // Composition: (a.compose(b)).apply(t) == b.apply(a.apply(t)).
  Subst compose(const Subst& later) const;
  Subst restricted_to(const std::set<VarId>& vs) const;

 private:
  std::map<VarId, TermPtr> m_;
};

// Debug rendering with raw variable ids; the user-facing printer lives in
// printer.hpp.
std::string raw_str(const Sig& sig, const TermPtr& t);

}  // namespace cflpfd
