#include "cflpfd/types.hpp"

#include <algorithm>
#include <cassert>
#include <functional>

namespace cflpfd {

TypePtr t_var(TypeVarId v) {
  auto t = std::make_shared<TypeExpr>();
  t->kind = TypeKind::Var;
  t->var = v;
  return t;
}

TypePtr t_con(int con, std::vector<TypePtr> args) {
  auto t = std::make_shared<TypeExpr>();
  t->kind = TypeKind::Con;
  t->con = con;
  t->args = std::move(args);
  return t;
}

TypePtr t_arrow(TypePtr from, TypePtr to) {
  auto t = std::make_shared<TypeExpr>();
  t->kind = TypeKind::Arrow;
  t->args = {std::move(from), std::move(to)};
  return t;
}

TypePtr t_fun(const std::vector<TypePtr>& params, TypePtr result) {
  TypePtr acc = std::move(result);
  for (auto it = params.rbegin(); it != params.rend(); ++it)
    acc = t_arrow(*it, acc);
  return acc;
}

TypePtr t_tuple(std::vector<TypePtr> parts) {
  auto t = std::make_shared<TypeExpr>();
  t->kind = TypeKind::Tuple;
  t->args = std::move(parts);
  return t;
}

bool type_eq(const TypePtr& a, const TypePtr& b) {
  if (a.get() == b.get()) return true;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case TypeKind::Var:
      return a->var == b->var;
    case TypeKind::Con:
      if (a->con != b->con) return false;
      break;
    case TypeKind::Arrow:
    case TypeKind::Tuple:
      break;
  }
  if (a->args.size() != b->args.size()) return false;
  for (size_t i = 0; i < a->args.size(); ++i)
    if (!type_eq(a->args[i], b->args[i])) return false;
  return true;
}

void collect_type_vars(const TypePtr& t, std::set<TypeVarId>& out) {
  if (t->kind == TypeKind::Var) {
    out.insert(t->var);
    return;
  }
  for (const auto& a : t->args) collect_type_vars(a, out);
}

std::vector<TypeVarId> type_vars_in_order(const TypePtr& t) {
  std::vector<TypeVarId> order;
  std::set<TypeVarId> seen;
  std::function<void(const TypePtr&)> go = [&](const TypePtr& u) {
    if (u->kind == TypeKind::Var) {
      if (seen.insert(u->var).second) order.push_back(u->var);
      return;
    }
    for (const auto& a : u->args) go(a);
  };
  go(t);
  return order;
}

// ---------------------------------------------------------------------------
// Substitution
// ---------------------------------------------------------------------------

const TypePtr* TypeSubst::lookup(TypeVarId v) const {
  auto it = m_.find(v);
  return it == m_.end() ? nullptr : &it->second;
}

void TypeSubst::bind(TypeVarId v, TypePtr t) {
  assert(m_.count(v) == 0);
  m_[v] = std::move(t);
}

TypePtr TypeSubst::apply(const TypePtr& t) const {
  switch (t->kind) {
    case TypeKind::Var: {
      const TypePtr* bound = lookup(t->var);
      return bound ? apply(*bound) : t;
    }
    case TypeKind::Con:
    case TypeKind::Arrow:
    case TypeKind::Tuple: {
      bool changed = false;
      std::vector<TypePtr> args;
      args.reserve(t->args.size());
      for (const auto& a : t->args) {
        args.push_back(apply(a));
        changed = changed || args.back().get() != a.get();
      }
      if (!changed) return t;
      auto u = std::make_shared<TypeExpr>(*t);
      u->args = std::move(args);
      return u;
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// TypeTable
// ---------------------------------------------------------------------------

namespace {

TypeScheme closed(TypePtr body) { return TypeScheme{{}, std::move(body)}; }

TypeScheme generic(TypePtr body) {
  TypeScheme sch;
  sch.body = std::move(body);
  sch.quant = type_vars_in_order(sch.body);
  return sch;
}

}  // namespace

TypeTable::TypeTable(const Sig& sig) {
  c_int = add_con("int", 0);
  c_bool = add_con("bool", 0);
  c_char = add_con("char", 0);
  c_success = add_con("success", 0);
  c_list = add_con("[]", 1);
  c_label = add_con("labelType", 0);

  const TypePtr a = t_var(0);
  const TypePtr i = int_type();
  const TypePtr b = bool_type();
  const TypePtr il = list_of(i);
  const TypePtr rel2 = t_fun({i, i}, b);  // int -> int -> bool

  set_scheme(sig.s_nil, generic(list_of(a)));
  set_scheme(sig.s_cons, generic(t_fun({a, list_of(a)}, list_of(a))));
  set_scheme(sig.s_true, closed(b));
  set_scheme(sig.s_false, closed(b));

  for (const char* n : {"==", "/="})
    set_scheme(sig.lookup(n), generic(t_fun({a, a}, b)));
  for (const char* n : {"#=", "#\\=", "<", "<=", ">", ">=", "#<", "#<=", "#>",
                        "#>="})
    set_scheme(sig.lookup(n), closed(t_fun({i, i}, b)));
  for (const char* n : {"+", "-", "*", "/", "#+", "#-", "#*", "#/"})
    set_scheme(sig.lookup(n), closed(t_fun({i, i}, i)));

  set_scheme(sig.lookup("domain"), closed(t_fun({il, i, i}, b)));
  set_scheme(sig.lookup("labeling"),
             closed(t_fun({list_of(t_con(c_label)), il}, b)));
  set_scheme(sig.lookup("all_different"), closed(t_fun({il}, b)));
  set_scheme(sig.lookup("sum"), closed(t_fun({il, rel2, i}, b)));
  set_scheme(sig.lookup("scalar_product"),
             closed(t_fun({il, il, rel2, i}, b)));
  set_scheme(sig.lookup("count"), closed(t_fun({i, il, rel2, i}, b)));
  set_scheme(sig.lookup("indomain"), closed(t_fun({i}, success_type())));
}

int TypeTable::add_con(const std::string& name, int rank) {
  auto it = con_by_name_.find(name);
  if (it != con_by_name_.end()) return it->second;
  int id = static_cast<int>(cons_.size());
  cons_.emplace_back(name, rank);
  con_by_name_[name] = id;
  return id;
}

int TypeTable::lookup_con(const std::string& name) const {
  auto it = con_by_name_.find(name);
  return it == con_by_name_.end() ? -1 : it->second;
}

const std::string& TypeTable::con_name(int c) const {
  assert(c >= 0 && c < num_cons());
  return cons_[c].first;
}

int TypeTable::con_rank(int c) const {
  assert(c >= 0 && c < num_cons());
  return cons_[c].second;
}

void TypeTable::set_scheme(SymbolId s, TypeScheme sch) {
  assert(s >= 0);
  std::set<TypeVarId> tvs;
  collect_type_vars(sch.body, tvs);
  for (TypeVarId v : tvs) watermark_ = std::max(watermark_, v + 1);
  schemes_[s] = std::move(sch);
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

namespace {

std::string tvar_letter(int index) {
  std::string s;
  s += static_cast<char>('A' + index % 26);
  if (index >= 26) s += std::to_string(index / 26);
  return s;
}

struct Renderer {
  const TypeTable& tt;
  std::map<TypeVarId, int> letter;  // tvar -> letter index by appearance

  std::string go(const TypePtr& t, bool arrow_operand, bool con_arg) {
    switch (t->kind) {
      case TypeKind::Var: {
        auto it = letter.find(t->var);
        if (it == letter.end())
          it = letter.emplace(t->var, static_cast<int>(letter.size())).first;
        return tvar_letter(it->second);
      }
      case TypeKind::Con: {
        if (t->con < 0) return tvar_letter(-t->con - 2);  // rigid placeholder
        if (t->con == tt.c_list)
          return "[" + go(t->args[0], false, false) + "]";
        std::string s = tt.con_name(t->con);
        for (const auto& a : t->args) s += " " + go(a, true, true);
        if (con_arg && !t->args.empty()) s = "(" + s + ")";
        return s;
      }
      case TypeKind::Arrow: {
        std::string s =
            go(t->args[0], true, false) + " -> " + go(t->args[1], false, false);
        if (arrow_operand) s = "(" + s + ")";
        return s;
      }
      case TypeKind::Tuple: {
        std::string s = "(";
        for (size_t i = 0; i < t->args.size(); ++i) {
          if (i) s += ", ";
          s += go(t->args[i], false, false);
        }
        return s + ")";
      }
    }
    return "?";
  }
};

}  // namespace

std::string type_str(const TypeTable& tt, const TypePtr& t) {
  Renderer r{tt, {}};
  return r.go(t, false, false);
}

std::string scheme_str(const TypeTable& tt, const TypeScheme& sch) {
  Renderer r{tt, {}};
  for (TypeVarId v : sch.quant)
    r.letter.emplace(v, static_cast<int>(r.letter.size()));
  return r.go(sch.body, false, false);
}

// ---------------------------------------------------------------------------
// Unification
// ---------------------------------------------------------------------------

namespace {

bool occurs_tv(TypeVarId v, const TypePtr& t, const TypeSubst& sub) {
  switch (t->kind) {
    case TypeKind::Var: {
      if (t->var == v) return true;
      const TypePtr* bound = sub.lookup(t->var);
      return bound && occurs_tv(v, *bound, sub);
    }
    default:
      for (const auto& a : t->args)
        if (occurs_tv(v, a, sub)) return true;
      return false;
  }
}

// Resolves the top-level variable chain without rebuilding subterms.
TypePtr walk(TypePtr t, const TypeSubst& sub) {
  while (t->kind == TypeKind::Var) {
    const TypePtr* bound = sub.lookup(t->var);
    if (!bound) break;
    t = *bound;
  }
  return t;
}

bool unify_rec(const TypeTable& tt, TypePtr a, TypePtr b, TypeSubst& sub,
               std::string& err) {
  a = walk(std::move(a), sub);
  b = walk(std::move(b), sub);
  if (a->kind == TypeKind::Var && b->kind == TypeKind::Var &&
      a->var == b->var)
    return true;
  if (a->kind == TypeKind::Var) {
    if (occurs_tv(a->var, b, sub)) {
      err = "occurs check: cannot construct the infinite type " +
            type_str(tt, sub.apply(a)) + " = " + type_str(tt, sub.apply(b));
      return false;
    }
    sub.bind(a->var, std::move(b));
    return true;
  }
  if (b->kind == TypeKind::Var) return unify_rec(tt, std::move(b), std::move(a), sub, err);
  bool match = a->kind == b->kind && a->args.size() == b->args.size();
  if (match && a->kind == TypeKind::Con) match = a->con == b->con;
  if (!match) {
    err = "cannot match " + type_str(tt, sub.apply(a)) + " with " +
          type_str(tt, sub.apply(b));
    return false;
  }
  for (size_t i = 0; i < a->args.size(); ++i)
    if (!unify_rec(tt, a->args[i], b->args[i], sub, err)) return false;
  return true;
}

}  // namespace

bool unify_types(const TypeTable& tt, const TypePtr& a, const TypePtr& b,
                 TypeSubst& sub, std::string& err) {
  return unify_rec(tt, a, b, sub, err);
}

// ---------------------------------------------------------------------------
// Inference
// ---------------------------------------------------------------------------

TypePtr TypeInference::instantiate(const TypeScheme& sch) {
  if (sch.quant.empty()) return sch.body;
  TypeSubst ren;
  for (TypeVarId v : sch.quant) ren.bind(v, fresh());
  return ren.apply(sch.body);
}

TypePtr TypeInference::instantiate_rigid(const TypeScheme& sch) {
  if (sch.quant.empty()) return sch.body;
  TypeSubst ren;
  for (size_t i = 0; i < sch.quant.size(); ++i)
    ren.bind(sch.quant[i], t_con(-2 - static_cast<int>(i)));
  return ren.apply(sch.body);
}

bool TypeInference::unify(const TypePtr& a, const TypePtr& b) {
  if (failed()) return false;
  return unify_types(tt_, a, b, sub_, err_);
}

TypePtr TypeInference::visit(const TermPtr& e, TypeEnv& env) {
  if (failed()) return nullptr;
  TypePtr result;
  switch (e->kind) {
    case TermKind::Int:
      result = tt_.int_type();
      break;
    case TermKind::Var: {
      auto it = env.find(e->var);
      if (it == env.end()) it = env.emplace(e->var, fresh()).first;
      result = sub_.apply(it->second);
      break;
    }
    case TermKind::App: {
      if (!tt_.has_scheme(e->head) && !assume.count(e->head)) {
        err_ = "no type known for symbol '" + sig_.info(e->head).name + "'";
        return nullptr;
      }
      auto asm_it = assume.find(e->head);
      TypePtr fn = asm_it != assume.end() ? sub_.apply(asm_it->second)
                                          : instantiate(tt_.scheme(e->head));
      result = fn;
      for (const auto& arg : e->args) {
        TypePtr ta = visit(arg, env);
        if (!ta) return nullptr;
        TypePtr res = fresh();
        if (!unify(result, t_arrow(ta, res))) {
          err_ = "cannot apply '" + sig_.info(e->head).name + "': " + err_;
          return nullptr;
        }
        result = sub_.apply(res);
      }
      break;
    }
    case TermKind::FlexApp: {
      auto it = env.find(e->var);
      if (it == env.end()) it = env.emplace(e->var, fresh()).first;
      result = sub_.apply(it->second);
      for (const auto& arg : e->args) {
        TypePtr ta = visit(arg, env);
        if (!ta) return nullptr;
        TypePtr res = fresh();
        if (!unify(result, t_arrow(ta, res))) return nullptr;
        result = sub_.apply(res);
      }
      break;
    }
    case TermKind::Tuple: {
      if (static_cast<int>(e->args.size()) > kMaxTupleWidth) {
        err_ = "tuple wider than " + std::to_string(kMaxTupleWidth) +
               " components";
        return nullptr;
      }
      std::vector<TypePtr> parts;
      parts.reserve(e->args.size());
      for (const auto& arg : e->args) {
        TypePtr ta = visit(arg, env);
        if (!ta) return nullptr;
        parts.push_back(ta);
      }
      result = t_tuple(std::move(parts));
      break;
    }
    case TermKind::Bottom:
      err_ = "the undefined value has no type";
      return nullptr;
  }
  noted_[e.get()] = result;
  return result;
}

InferOutcome infer_type(const Sig& sig, const TypeTable& tt, TypeEnv env,
                        const TermPtr& e) {
  TypeInference inf(sig, tt);
  TypePtr t = inf.visit(e, env);
  InferOutcome out;
  if (!t) {
    out.error = inf.error();
    return out;
  }
  out.ok = true;
  out.type = inf.sub().apply(t);
  out.sub = inf.sub();
  return out;
}

}  // namespace cflpfd
