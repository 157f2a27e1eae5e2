#include "cflpfd/term.hpp"

#include <cassert>
#include <stdexcept>

namespace cflpfd {

Sig::Sig() {
  int list_fam = add_family("list");
  int bool_fam = add_family("bool");
  s_nil = add_constructor("[]", 0, list_fam);
  s_cons = add_constructor(":", 2, list_fam);
  s_false = add_constructor("false", 0, bool_fam);
  s_true = add_constructor("true", 0, bool_fam);

  // Built-in constraint and arithmetic operators.
  for (const char* n : {"==", "/=", "#=", "#\\="}) add(n, SymKind::Primitive, 2);
  for (const char* n : {"<", "<=", ">", ">=", "#<", "#<=", "#>", "#>="})
    add(n, SymKind::Primitive, 2);
  for (const char* n : {"+", "-", "*", "/", "#+", "#-", "#*", "#/"})
    add(n, SymKind::Primitive, 2);
  add("domain", SymKind::Primitive, 3);
  add("labeling", SymKind::Primitive, 2);
  add("all_different", SymKind::Primitive, 1);
  add("sum", SymKind::Primitive, 3);
  add("scalar_product", SymKind::Primitive, 4);
  add("count", SymKind::Primitive, 4);
  add("indomain", SymKind::Primitive, 1);
}

SymbolId Sig::add(const std::string& name, SymKind kind, int arity) {
  auto it = by_name_.find(name);
  if (it != by_name_.end()) return it->second;
  SymbolId id = static_cast<SymbolId>(symbols_.size());
  symbols_.push_back({name, kind, arity, -1});
  by_name_[name] = id;
  return id;
}

SymbolId Sig::add_constructor(const std::string& name, int arity, int family) {
  SymbolId id = add(name, SymKind::Constructor, arity);
  symbols_[id].kind = SymKind::Constructor;
  symbols_[id].family = family;
  auto& members = families_[family];
  bool present = false;
  for (SymbolId m : members) present = present || m == id;
  if (!present) members.push_back(id);
  return id;
}

int Sig::add_family(const std::string& type_name) {
  int id = static_cast<int>(families_.size());
  families_.emplace_back();
  family_names_.push_back(type_name);
  return id;
}

SymbolId Sig::lookup(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? -1 : it->second;
}

int Sig::family_of_type(const std::string& type_name) const {
  for (int i = 0; i < num_families(); ++i)
    if (family_names_[i] == type_name) return i;
  return -1;
}

VarId VarTable::fresh(const std::string& name) {
  names_.push_back(name);
  return static_cast<VarId>(names_.size() - 1);
}

TermPtr mk_var(VarId v) {
  auto t = std::make_shared<Term>();
  t->kind = TermKind::Var;
  t->var = v;
  return t;
}

TermPtr mk_int(long long n) {
  auto t = std::make_shared<Term>();
  t->kind = TermKind::Int;
  t->ival = n;
  return t;
}

TermPtr mk_app(SymbolId head, std::vector<TermPtr> args) {
  auto t = std::make_shared<Term>();
  t->kind = TermKind::App;
  t->head = head;
  t->args = std::move(args);
  return t;
}

TermPtr mk_flex(VarId head, std::vector<TermPtr> args) {
  assert(!args.empty());
  auto t = std::make_shared<Term>();
  t->kind = TermKind::FlexApp;
  t->var = head;
  t->args = std::move(args);
  return t;
}

TermPtr mk_tuple(std::vector<TermPtr> elems) {
  auto t = std::make_shared<Term>();
  t->kind = TermKind::Tuple;
  t->args = std::move(elems);
  return t;
}

TermPtr mk_bottom() {
  static const TermPtr bot = [] {
    auto t = std::make_shared<Term>();
    t->kind = TermKind::Bottom;
    return t;
  }();
  return bot;
}

TermPtr mk_applied(const TermPtr& fun, std::vector<TermPtr> extra) {
  if (extra.empty()) return fun;
  switch (fun->kind) {
    case TermKind::Var:
      return mk_flex(fun->var, std::move(extra));
    case TermKind::App: {
      std::vector<TermPtr> args = fun->args;
      for (auto& e : extra) args.push_back(std::move(e));
      return mk_app(fun->head, std::move(args));
    }
    case TermKind::FlexApp: {
      std::vector<TermPtr> args = fun->args;
      for (auto& e : extra) args.push_back(std::move(e));
      return mk_flex(fun->var, std::move(args));
    }
    default:
      throw std::logic_error("mk_applied: head is not applicable");
  }
}

bool is_var(const TermPtr& t) { return t->kind == TermKind::Var; }
bool is_int(const TermPtr& t) { return t->kind == TermKind::Int; }

bool is_pattern(const Sig& sig, const TermPtr& t) {
  switch (t->kind) {
    case TermKind::Var:
    case TermKind::Int:
      return true;
    case TermKind::Bottom:
    case TermKind::FlexApp:
      return false;
    case TermKind::Tuple: {
      for (const auto& a : t->args)
        if (!is_pattern(sig, a)) return false;
      return true;
    }
    case TermKind::App: {
      const SymbolInfo& si = sig.info(t->head);
      int k = static_cast<int>(t->args.size());
      bool shape_ok = si.kind == SymKind::Constructor ? k <= si.arity
                                                      : k < si.arity;
      if (!shape_ok) return false;
      for (const auto& a : t->args)
        if (!is_pattern(sig, a)) return false;
      return true;
    }
  }
  return false;
}

bool is_ground(const TermPtr& t) {
  switch (t->kind) {
    case TermKind::Var:
    case TermKind::FlexApp:
      return false;
    case TermKind::Int:
    case TermKind::Bottom:
      return true;
    default:
      for (const auto& a : t->args)
        if (!is_ground(a)) return false;
      return true;
  }
}

bool is_total(const TermPtr& t) {
  switch (t->kind) {
    case TermKind::Bottom:
      return false;
    case TermKind::Var:
    case TermKind::Int:
      return true;
    default:
      for (const auto& a : t->args)
        if (!is_total(a)) return false;
      return true;
  }
}

bool occurs(VarId v, const TermPtr& t) {
  switch (t->kind) {
    case TermKind::Var:
      return t->var == v;
    case TermKind::FlexApp:
      if (t->var == v) return true;
      [[fallthrough]];
    case TermKind::App:
    case TermKind::Tuple:
      for (const auto& a : t->args)
        if (occurs(v, a)) return true;
      return false;
    default:
      return false;
  }
}

void collect_vars(const TermPtr& t, std::set<VarId>& out) {
  switch (t->kind) {
    case TermKind::Var:
      out.insert(t->var);
      return;
    case TermKind::FlexApp:
      out.insert(t->var);
      [[fallthrough]];
    case TermKind::App:
    case TermKind::Tuple:
      for (const auto& a : t->args) collect_vars(a, out);
      return;
    default:
      return;
  }
}

std::set<VarId> vars_of(const TermPtr& t) {
  std::set<VarId> s;
  collect_vars(t, s);
  return s;
}

bool term_eq(const TermPtr& a, const TermPtr& b) {
  if (a.get() == b.get()) return true;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case TermKind::Var:
      return a->var == b->var;
    case TermKind::Int:
      return a->ival == b->ival;
    case TermKind::Bottom:
      return true;
    case TermKind::FlexApp:
      if (a->var != b->var) return false;
      break;
    case TermKind::App:
      if (a->head != b->head) return false;
      break;
    case TermKind::Tuple:
      break;
  }
  if (a->args.size() != b->args.size()) return false;
  for (size_t i = 0; i < a->args.size(); ++i)
    if (!term_eq(a->args[i], b->args[i])) return false;
  return true;
}

int term_cmp(const TermPtr& a, const TermPtr& b) {
  if (a->kind != b->kind)
    return static_cast<int>(a->kind) < static_cast<int>(b->kind) ? -1 : 1;
  auto cmp_ll = [](long long x, long long y) { return x < y ? -1 : x > y ? 1 : 0; };
  switch (a->kind) {
    case TermKind::Var:
      return cmp_ll(a->var, b->var);
    case TermKind::Int:
      return cmp_ll(a->ival, b->ival);
    case TermKind::Bottom:
      return 0;
    case TermKind::FlexApp:
      if (int c = cmp_ll(a->var, b->var)) return c;
      break;
    case TermKind::App:
      if (int c = cmp_ll(a->head, b->head)) return c;
      break;
    case TermKind::Tuple:
      break;
  }
  if (a->args.size() != b->args.size())
    return a->args.size() < b->args.size() ? -1 : 1;
  for (size_t i = 0; i < a->args.size(); ++i)
    if (int c = term_cmp(a->args[i], b->args[i])) return c;
  return 0;
}

bool info_leq(const TermPtr& a, const TermPtr& b) {
  if (a->kind == TermKind::Bottom) return true;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case TermKind::Var:
      return a->var == b->var;
    case TermKind::Int:
      return a->ival == b->ival;
    case TermKind::FlexApp:
      if (a->var != b->var) return false;
      break;
    case TermKind::App:
      if (a->head != b->head) return false;
      break;
    default:
      break;
  }
  if (a->args.size() != b->args.size()) return false;
  for (size_t i = 0; i < a->args.size(); ++i)
    if (!info_leq(a->args[i], b->args[i])) return false;
  return true;
}

bool has_common_upper_bound(const TermPtr& a, const TermPtr& b) {
  if (a->kind == TermKind::Bottom || b->kind == TermKind::Bottom) return true;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case TermKind::Var:
      return a->var == b->var;
    case TermKind::Int:
      return a->ival == b->ival;
    case TermKind::FlexApp:
      if (a->var != b->var) return false;
      break;
    case TermKind::App:
      if (a->head != b->head) return false;
      break;
    default:
      break;
  }
  if (a->args.size() != b->args.size()) return false;
  for (size_t i = 0; i < a->args.size(); ++i)
    if (!has_common_upper_bound(a->args[i], b->args[i])) return false;
  return true;
}

const TermPtr* Subst::lookup(VarId v) const {
  auto it = m_.find(v);
  return it == m_.end() ? nullptr : &it->second;
}

void Subst::bind(VarId v, TermPtr t) {
  assert(!m_.count(v));
  m_[v] = std::move(t);
}

TermPtr Subst::apply(const TermPtr& t) const {
  if (m_.empty()) return t;
  switch (t->kind) {
    case TermKind::Var: {
      if (const TermPtr* b = lookup(t->var)) return *b;
      return t;
    }
    case TermKind::Int:
    case TermKind::Bottom:
      return t;
    case TermKind::FlexApp: {
      std::vector<TermPtr> args;
      args.reserve(t->args.size());
      bool changed = false;
      for (const auto& a : t->args) {
        args.push_back(apply(a));
        changed = changed || args.back().get() != a.get();
      }
      if (const TermPtr* b = lookup(t->var)) return mk_applied(*b, std::move(args));
      if (!changed) return t;
      return mk_flex(t->var, std::move(args));
    }
    case TermKind::App:
    case TermKind::Tuple: {
      std::vector<TermPtr> args;
      args.reserve(t->args.size());
      bool changed = false;
      for (const auto& a : t->args) {
        args.push_back(apply(a));
        changed = changed || args.back().get() != a.get();
      }
      if (!changed) return t;
      return t->kind == TermKind::App ? mk_app(t->head, std::move(args))
                                      : mk_tuple(std::move(args));
    }
  }
  return t;
}

Subst Subst::compose(const Subst& later) const {
  Subst r;
  for (const auto& [v, t] : m_) {
    TermPtr nt = later.apply(t);
    if (nt->kind == TermKind::Var && nt->var == v) continue;
    r.m_[v] = nt;
  }
  for (const auto& [v, t] : later.m_)
    if (!m_.count(v)) r.m_[v] = t;
  return r;
}

Subst Subst::restricted_to(const std::set<VarId>& vs) const {
  Subst r;
  for (const auto& [v, t] : m_)
    if (vs.count(v)) r.m_[v] = t;
  return r;
}

std::string raw_str(const Sig& sig, const TermPtr& t) {
  switch (t->kind) {
    case TermKind::Var:
      return "_v" + std::to_string(t->var);
    case TermKind::Int:
      return std::to_string(t->ival);
    case TermKind::Bottom:
      return "_|_";
    case TermKind::Tuple: {
      std::string s = "(";
      for (size_t i = 0; i < t->args.size(); ++i) {
        if (i) s += ", ";
        s += raw_str(sig, t->args[i]);
      }
      return s + ")";
    }
    case TermKind::FlexApp: {
      std::string s = "(_v" + std::to_string(t->var);
      for (const auto& a : t->args) s += " " + raw_str(sig, a);
      return s + ")";
    }
    case TermKind::App: {
      if (t->args.empty()) return sig.info(t->head).name;
      std::string s = "(" + sig.info(t->head).name;
      for (const auto& a : t->args) s += " " + raw_str(sig, a);
      return s + ")";
    }
  }
  return "?";
}

}  // namespace cflpfd
