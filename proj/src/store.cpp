#include "cflpfd/store.hpp"

namespace cflpfd {

namespace {

void add_iarg(const IArg& a, std::set<VarId>& out) {
  if (a.is_var) out.insert(a.var);
}

void add_res(const Res& r, std::set<VarId>& out) {
  if (r.k == Res::Var) out.insert(r.var);
}

TermPtr tru(const Sig& sig) { return mk_app(sig.s_true); }
TermPtr fls(const Sig& sig) { return mk_app(sig.s_false); }

}  // namespace

void collect_constraint_vars(const Constraint& c, std::set<VarId>& out) {
  if (auto* s = std::get_if<SeqC>(&c)) {
    collect_vars(s->l, out);
    collect_vars(s->r, out);
    add_res(s->res, out);
  } else if (auto* m = std::get_if<CmpC>(&c)) {
    add_iarg(m->a, out);
    add_iarg(m->b, out);
    add_res(m->res, out);
  } else if (auto* a = std::get_if<ArithC>(&c)) {
    add_iarg(a->a, out);
    add_iarg(a->b, out);
    add_iarg(a->c, out);
  } else if (auto* d = std::get_if<DomC>(&c)) {
    add_iarg(d->u, out);
    collect_vars(d->list, out);
    add_res(d->res, out);
  } else if (auto* r = std::get_if<DomRangeC>(&c)) {
    for (const auto& u : r->us) add_iarg(u, out);
    add_iarg(r->lo, out);
    add_iarg(r->hi, out);
  } else if (auto* i = std::get_if<IndC>(&c)) {
    add_iarg(i->x, out);
    add_iarg(i->v, out);
    add_iarg(i->b, out);
  } else if (auto* l = std::get_if<LabelC>(&c)) {
    if (l->optimize) add_iarg(l->objective, out);
    for (const auto& u : l->vars) add_iarg(u, out);
  }
}

std::set<VarId> Store::vars() const {
  std::set<VarId> out;
  for (const auto& c : cs) collect_constraint_vars(c, out);
  for (const auto& [v, d] : doms) out.insert(v);
  return out;
}

IArg subst_iarg(const Subst& s, const IArg& a, bool* ok) {
  if (!a.is_var) return a;
  const TermPtr* b = s.lookup(a.var);
  if (!b) return a;
  if ((*b)->kind == TermKind::Int) return iarg((*b)->ival);
  if ((*b)->kind == TermKind::Var) return iarg_var((*b)->var);
  *ok = false;  // an FD argument bound to a non-integer can never be solved
  return a;
}

Res subst_res(const Sig& sig, const Subst& s, const Res& r, bool* ok) {
  if (r.k != Res::Var) return r;
  const TermPtr* b = s.lookup(r.var);
  if (!b) return r;
  if ((*b)->kind == TermKind::Var) return res_var((*b)->var);
  if ((*b)->kind == TermKind::App && (*b)->args.empty()) {
    if ((*b)->head == sig.s_true) return res_true();
    if ((*b)->head == sig.s_false) return res_false();
  }
  *ok = false;
  return r;
}

bool subst_store(const Sig& sig, const Subst& s, Store& st) {
  if (s.empty()) return true;
  bool ok = true;
  for (auto& c : st.cs) {
    if (auto* q = std::get_if<SeqC>(&c)) {
      q->l = s.apply(q->l);
      q->r = s.apply(q->r);
      q->res = subst_res(sig, s, q->res, &ok);
      if (q->neg && q->res.k != Res::Var) {
        q->res = q->res.k == Res::True ? res_false() : res_true();
        q->neg = false;
      }
    } else if (auto* m = std::get_if<CmpC>(&c)) {
      m->a = subst_iarg(s, m->a, &ok);
      m->b = subst_iarg(s, m->b, &ok);
      m->res = subst_res(sig, s, m->res, &ok);
    } else if (auto* a = std::get_if<ArithC>(&c)) {
      a->a = subst_iarg(s, a->a, &ok);
      a->b = subst_iarg(s, a->b, &ok);
      a->c = subst_iarg(s, a->c, &ok);
    } else if (auto* d = std::get_if<DomC>(&c)) {
      d->u = subst_iarg(s, d->u, &ok);
      d->list = s.apply(d->list);
      d->res = subst_res(sig, s, d->res, &ok);
    } else if (auto* r = std::get_if<DomRangeC>(&c)) {
      for (auto& u : r->us) u = subst_iarg(s, u, &ok);
      r->lo = subst_iarg(s, r->lo, &ok);
      r->hi = subst_iarg(s, r->hi, &ok);
    } else if (auto* i = std::get_if<IndC>(&c)) {
      i->x = subst_iarg(s, i->x, &ok);
      i->v = subst_iarg(s, i->v, &ok);
      i->b = subst_iarg(s, i->b, &ok);
    } else if (auto* l = std::get_if<LabelC>(&c)) {
      if (l->optimize) l->objective = subst_iarg(s, l->objective, &ok);
      for (auto& u : l->vars) u = subst_iarg(s, u, &ok);
    }
    if (!ok) return false;
  }
  // Domain entries follow the bindings of their variables.
  std::map<VarId, IntDomain> nd;
  for (auto& [v, d] : st.doms) {
    const TermPtr* b = s.lookup(v);
    if (!b) {
      auto [it, fresh] = nd.try_emplace(v, d);
      if (!fresh) it->second.intersect(d);
      if (it->second.empty()) return false;
      continue;
    }
    if ((*b)->kind == TermKind::Int) {
      if (!d.contains((*b)->ival)) return false;
      continue;
    }
    if ((*b)->kind == TermKind::Var) {
      auto [it, fresh] = nd.try_emplace((*b)->var, d);
      if (!fresh) it->second.intersect(d);
      if (it->second.empty()) return false;
      continue;
    }
    return false;  // a ranged variable bound to structured data
  }
  st.doms = std::move(nd);
  return true;
}

// ---------------------------------------------------------------------------
// Primitive semantics.
// ---------------------------------------------------------------------------

TermPtr seq_eval(const Sig& sig, const TermPtr& a, const TermPtr& b) {
  if (term_eq(a, b) && is_total(a)) return tru(sig);
  if (!has_common_upper_bound(a, b)) return fls(sig);
  return mk_bottom();
}

TermPtr leq_eval(const Sig& sig, const TermPtr& a, const TermPtr& b) {
  if (a->kind != TermKind::Int || b->kind != TermKind::Int) return mk_bottom();
  return a->ival <= b->ival ? tru(sig) : fls(sig);
}

TermPtr arith_eval(const Sig&, AOp op, const TermPtr& a, const TermPtr& b) {
  if (a->kind != TermKind::Int || b->kind != TermKind::Int) return mk_bottom();
  long long x = a->ival, y = b->ival;
  switch (op) {
    case AOp::Add: return mk_int(x + y);
    case AOp::Sub: return mk_int(x - y);
    case AOp::Mul: return mk_int(x * y);
    case AOp::Div:
      if (y == 0) return mk_bottom();
      return mk_int(x / y);  // C++ division truncates toward zero
  }
  return mk_bottom();
}

TermPtr domain_eval(const Sig& sig, const TermPtr& u, const TermPtr& list) {
  // Walk the known part of the list spine.
  std::vector<TermPtr> elems;
  TermPtr cur = list;
  bool complete = false;
  while (true) {
    if (cur->kind == TermKind::App && cur->head == sig.s_nil &&
        cur->args.empty()) {
      complete = true;
      break;
    }
    if (cur->kind == TermKind::App && cur->head == sig.s_cons &&
        cur->args.size() == 2) {
      elems.push_back(cur->args[0]);
      cur = cur->args[1];
      continue;
    }
    break;  // Bottom, variable, or ill-typed tail: spine unknown
  }

  // An adjacent out-of-order integer pair refutes sortedness whatever the
  // rest of the list turns out to be.
  for (size_t i = 0; i + 1 < elems.size(); ++i)
    if (elems[i]->kind == TermKind::Int &&
        elems[i + 1]->kind == TermKind::Int &&
        elems[i]->ival >= elems[i + 1]->ival)
      return fls(sig);

  if (!complete) return mk_bottom();
  if (elems.empty()) return fls(sig);

  bool all_int = true;
  for (const auto& e : elems) all_int = all_int && e->kind == TermKind::Int;
  if (!all_int) return mk_bottom();

  if (u->kind == TermKind::Int) {
    for (const auto& e : elems)
      if (e->ival == u->ival) return tru(sig);
    return fls(sig);  // differs from every element
  }
  if (u->kind == TermKind::Bottom) return mk_bottom();
  // u is headed by a non-integer construction and can never refine to an
  // integer, so membership is definitely false.
  return fls(sig);
}

TermPtr indomain_eval(const Sig& sig, const TermPtr& u) {
  if (u->kind == TermKind::Int) return tru(sig);
  return mk_bottom();
}

// ---------------------------------------------------------------------------
// Constraint satisfaction under a valuation.
// ---------------------------------------------------------------------------

namespace {

TermPtr value_of(const Valuation& val, const TermPtr& t) {
  switch (t->kind) {
    case TermKind::Var: {
      auto it = val.find(t->var);
      return it == val.end() ? mk_bottom() : it->second;
    }
    case TermKind::Int:
    case TermKind::Bottom:
      return t;
    case TermKind::FlexApp: {
      auto it = val.find(t->var);
      TermPtr head = it == val.end() ? mk_bottom() : it->second;
      if (head->kind == TermKind::Bottom) return mk_bottom();
      std::vector<TermPtr> args;
      for (const auto& a : t->args) args.push_back(value_of(val, a));
      return mk_applied(head, std::move(args));
    }
    case TermKind::App:
    case TermKind::Tuple: {
      std::vector<TermPtr> args;
      args.reserve(t->args.size());
      for (const auto& a : t->args) args.push_back(value_of(val, a));
      return t->kind == TermKind::App ? mk_app(t->head, std::move(args))
                                      : mk_tuple(std::move(args));
    }
  }
  return mk_bottom();
}

// Integer value of an IArg; false if not an integer under the valuation.
bool int_of(const Valuation& val, const IArg& a, long long* out) {
  if (!a.is_var) {
    *out = a.val;
    return true;
  }
  auto it = val.find(a.var);
  if (it == val.end() || it->second->kind != TermKind::Int) return false;
  *out = it->second->ival;
  return true;
}

// Truth value requested by a result slot; false if it is not a boolean.
bool bool_of(const Sig& sig, const Valuation& val, const Res& r, bool* out) {
  switch (r.k) {
    case Res::True:
      *out = true;
      return true;
    case Res::False:
      *out = false;
      return true;
    case Res::Var: {
      auto it = val.find(r.var);
      if (it == val.end()) return false;
      const TermPtr& t = it->second;
      if (t->kind != TermKind::App || !t->args.empty()) return false;
      if (t->head == sig.s_true) {
        *out = true;
        return true;
      }
      if (t->head == sig.s_false) {
        *out = false;
        return true;
      }
      return false;
    }
  }
  return false;
}

bool rel_holds(Rel rel, long long a, long long b) {
  switch (rel) {
    case Rel::EQ: return a == b;
    case Rel::NE: return a != b;
    case Rel::LT: return a < b;
    case Rel::LE: return a <= b;
    case Rel::GT: return a > b;
    case Rel::GE: return a >= b;
  }
  return false;
}

bool is_true_term(const Sig& sig, const TermPtr& t) {
  return t->kind == TermKind::App && t->head == sig.s_true && t->args.empty();
}

bool is_false_term(const Sig& sig, const TermPtr& t) {
  return t->kind == TermKind::App && t->head == sig.s_false && t->args.empty();
}

}  // namespace

bool constraint_sat(const Sig& sig, const Constraint& c, const Valuation& val) {
  if (auto* q = std::get_if<SeqC>(&c)) {
    TermPtr v = seq_eval(sig, value_of(val, q->l), value_of(val, q->r));
    if (!is_true_term(sig, v) && !is_false_term(sig, v)) return false;
    bool want;
    if (!bool_of(sig, val, q->res, &want)) return false;
    if (q->neg) want = !want;
    return is_true_term(sig, v) == want;
  }
  if (auto* m = std::get_if<CmpC>(&c)) {
    long long a, b;
    bool want;
    if (!int_of(val, m->a, &a) || !int_of(val, m->b, &b)) return false;
    if (!bool_of(sig, val, m->res, &want)) return false;
    return rel_holds(m->rel, a, b) == want;
  }
  if (auto* t = std::get_if<ArithC>(&c)) {
    long long a, b, cc;
    if (!int_of(val, t->a, &a) || !int_of(val, t->b, &b) ||
        !int_of(val, t->c, &cc))
      return false;
    if (t->op == AOp::Div && b == 0) return false;
    long long v = 0;
    switch (t->op) {
      case AOp::Add: v = a + b; break;
      case AOp::Sub: v = a - b; break;
      case AOp::Mul: v = a * b; break;
      case AOp::Div: v = a / b; break;
    }
    return rel_holds(t->rel, v, cc);
  }
  if (auto* d = std::get_if<DomC>(&c)) {
    TermPtr uv = d->u.is_var ? value_of(val, mk_var(d->u.var)) : mk_int(d->u.val);
    TermPtr v = domain_eval(sig, uv, value_of(val, d->list));
    bool want;
    if (!bool_of(sig, val, d->res, &want)) return false;
    if (!is_true_term(sig, v) && !is_false_term(sig, v)) return false;
    return is_true_term(sig, v) == want;
  }
  if (auto* r = std::get_if<DomRangeC>(&c)) {
    long long lo, hi;
    if (!int_of(val, r->lo, &lo) || !int_of(val, r->hi, &hi)) return false;
    for (const auto& ua : r->us) {
      long long u;
      if (!int_of(val, ua, &u)) return false;
      if (u < lo || u > hi) return false;
    }
    return true;
  }
  if (auto* i = std::get_if<IndC>(&c)) {
    long long x, v, b;
    if (!int_of(val, i->x, &x) || !int_of(val, i->v, &v) ||
        !int_of(val, i->b, &b))
      return false;
    return b == (x == v ? 1 : 0);
  }
  if (auto* l = std::get_if<LabelC>(&c)) {
    long long tmp;
    if (l->optimize && !int_of(val, l->objective, &tmp)) return false;
    for (const auto& u : l->vars)
      if (!int_of(val, u, &tmp)) return false;
    return true;
  }
  return false;
}

TermPtr eval_primitive(const Sig& sig, const std::string& prim,
                       const std::vector<TermPtr>& args) {
  if (prim == "seq") return seq_eval(sig, args.at(0), args.at(1));
  if (prim == "leq") return leq_eval(sig, args.at(0), args.at(1));
  if (prim == "+") return arith_eval(sig, AOp::Add, args.at(0), args.at(1));
  if (prim == "-") return arith_eval(sig, AOp::Sub, args.at(0), args.at(1));
  if (prim == "*") return arith_eval(sig, AOp::Mul, args.at(0), args.at(1));
  if (prim == "/") return arith_eval(sig, AOp::Div, args.at(0), args.at(1));
  if (prim == "domain") return domain_eval(sig, args.at(0), args.at(1));
  if (prim == "indomain") return indomain_eval(sig, args.at(0));
  throw std::logic_error("eval_primitive: unknown primitive " + prim);
}

// ---------------------------------------------------------------------------
// Surface-constraint classification and normalization.
// ---------------------------------------------------------------------------

SurfaceClass classify_symbol(const Sig& sig, SymbolId s) {
  if (s < 0) return SurfaceClass::NotConstraint;
  const std::string& n = sig.info(s).name;
  if (sig.info(s).kind != SymKind::Primitive) return SurfaceClass::NotConstraint;
  if (n == "==" || n == "#=") return SurfaceClass::Eq;
  if (n == "/=" || n == "#\\=") return SurfaceClass::Ne;
  if (n == "<" || n == "<=" || n == ">" || n == ">=" || n == "#<" ||
      n == "#<=" || n == "#>" || n == "#>=")
    return SurfaceClass::Cmp;
  if (n == "+" || n == "-" || n == "*" || n == "/" || n == "#+" || n == "#-" ||
      n == "#*" || n == "#/")
    return SurfaceClass::Arith;
  if (n == "domain") return SurfaceClass::Domain3;
  if (n == "labeling") return SurfaceClass::Labeling;
  if (n == "all_different") return SurfaceClass::AllDiff;
  if (n == "sum") return SurfaceClass::Sum;
  if (n == "scalar_product") return SurfaceClass::ScalarProd;
  if (n == "count") return SurfaceClass::Count;
  if (n == "indomain") return SurfaceClass::Indomain;
  return SurfaceClass::NotConstraint;
}

Rel rel_of_symbol(const Sig& sig, SymbolId s) {
  const std::string& n = sig.info(s).name;
  if (n == "==" || n == "#=") return Rel::EQ;
  if (n == "/=" || n == "#\\=") return Rel::NE;
  if (n == "<" || n == "#<") return Rel::LT;
  if (n == "<=" || n == "#<=") return Rel::LE;
  if (n == ">" || n == "#>") return Rel::GT;
  return Rel::GE;
}

AOp aop_of_symbol(const Sig& sig, SymbolId s) {
  const std::string& n = sig.info(s).name;
  if (n == "+" || n == "#+") return AOp::Add;
  if (n == "-" || n == "#-") return AOp::Sub;
  if (n == "*" || n == "#*") return AOp::Mul;
  return AOp::Div;
}

Rel flip_rel(Rel r) {
  switch (r) {
    case Rel::LT: return Rel::GT;
    case Rel::LE: return Rel::GE;
    case Rel::GT: return Rel::LT;
    case Rel::GE: return Rel::LE;
    default: return r;  // EQ and NE are symmetric
  }
}

Rel negate_rel(Rel r) {
  switch (r) {
    case Rel::EQ: return Rel::NE;
    case Rel::NE: return Rel::EQ;
    case Rel::LT: return Rel::GE;
    case Rel::LE: return Rel::GT;
    case Rel::GT: return Rel::LE;
    case Rel::GE: return Rel::LT;
  }
  return r;
}

namespace {

std::optional<IArg> as_iarg(const TermPtr& t) {
  if (t->kind == TermKind::Int) return iarg(t->ival);
  if (t->kind == TermKind::Var) return iarg_var(t->var);
  return std::nullopt;
}

TermPtr iarg_term(const IArg& a) {
  return a.is_var ? mk_var(a.var) : mk_int(a.val);
}

std::optional<Res> as_res(const Sig& sig, const TermPtr& t) {
  if (t->kind == TermKind::Var) return res_var(t->var);
  if (t->kind == TermKind::App && t->args.empty()) {
    if (t->head == sig.s_true) return res_true();
    if (t->head == sig.s_false) return res_false();
  }
  return std::nullopt;
}

struct ArithSide {
  AOp op;
  IArg a, b;
};

std::optional<ArithSide> arith_side(const Sig& sig, const TermPtr& t) {
  if (t->kind != TermKind::App || t->args.size() != 2) return std::nullopt;
  if (classify_symbol(sig, t->head) != SurfaceClass::Arith) return std::nullopt;
  auto a = as_iarg(t->args[0]), b = as_iarg(t->args[1]);
  if (!a || !b) return std::nullopt;
  return ArithSide{aop_of_symbol(sig, t->head), *a, *b};
}

std::optional<std::vector<TermPtr>> spine(const Sig& sig, const TermPtr& list) {
  std::vector<TermPtr> out;
  TermPtr cur = list;
  while (true) {
    if (cur->kind != TermKind::App) return std::nullopt;
    if (cur->head == sig.s_nil && cur->args.empty()) return out;
    if (cur->head == sig.s_cons && cur->args.size() == 2) {
      out.push_back(cur->args[0]);
      cur = cur->args[1];
      continue;
    }
    return std::nullopt;
  }
}

std::optional<std::vector<IArg>> int_spine(const Sig& sig, const TermPtr& list) {
  auto s = spine(sig, list);
  if (!s) return std::nullopt;
  std::vector<IArg> out;
  for (const auto& e : *s) {
    auto a = as_iarg(e);
    if (!a) return std::nullopt;
    out.push_back(*a);
  }
  return out;
}

std::optional<Rel> rel_pattern(const Sig& sig, const TermPtr& t) {
  if (t->kind != TermKind::App || !t->args.empty()) return std::nullopt;
  SurfaceClass c = classify_symbol(sig, t->head);
  if (c != SurfaceClass::Eq && c != SurfaceClass::Ne && c != SurfaceClass::Cmp)
    return std::nullopt;
  return rel_of_symbol(sig, t->head);
}

// u1 rel u2 rel ... un `cmp` t as a chain of fused additions.
void sum_chain(VarTable& vars, const std::vector<IArg>& us, Rel rel,
               const IArg& t, std::vector<Constraint>* out) {
  if (us.empty()) {
    out->push_back(ArithC{AOp::Add, iarg(0), iarg(0), rel, t});
    return;
  }
  if (us.size() == 1) {
    out->push_back(ArithC{AOp::Add, us[0], iarg(0), rel, t});
    return;
  }
  IArg acc = us[0];
  for (size_t i = 1; i + 1 < us.size(); ++i) {
    IArg next = iarg_var(vars.fresh());
    out->push_back(ArithC{AOp::Add, acc, us[i], Rel::EQ, next});
    acc = next;
  }
  out->push_back(ArithC{AOp::Add, acc, us.back(), rel, t});
}

}  // namespace

std::optional<std::vector<Constraint>> normalize_notation(
    const Sig& sig, VarTable& vars, SymbolId head,
    const std::vector<TermPtr>& args, const TermPtr& target) {
  std::vector<Constraint> out;
  SurfaceClass cls = classify_symbol(sig, head);
  auto truthy = [&](const TermPtr& t) -> std::optional<bool> {
    auto r = as_res(sig, t);
    if (!r || r->k == Res::Var) return std::nullopt;
    return r->k == Res::True;
  };

  switch (cls) {
    case SurfaceClass::Eq:
    case SurfaceClass::Ne: {
      if (args.size() != 2) return std::nullopt;
      auto res = as_res(sig, target);
      if (!res) return std::nullopt;
      bool neg = cls == SurfaceClass::Ne;
      if (res->k != Res::Var && neg) {
        *res = res->k == Res::True ? res_false() : res_true();
        neg = false;
      }
      auto la = arith_side(sig, args[0]);
      auto ra = arith_side(sig, args[1]);
      if (res->k != Res::Var) {
        Rel rel = res->k == Res::True ? Rel::EQ : Rel::NE;
        if (la && !ra) {
          auto b = as_iarg(args[1]);
          if (!b) return std::nullopt;
          out.push_back(ArithC{la->op, la->a, la->b, rel, *b});
          return out;
        }
        if (ra && !la) {
          auto a = as_iarg(args[0]);
          if (!a) return std::nullopt;
          out.push_back(ArithC{ra->op, ra->a, ra->b, rel, *a});
          return out;
        }
      }
      if (!is_pattern(sig, args[0]) || !is_pattern(sig, args[1]))
        return std::nullopt;
      out.push_back(SeqC{args[0], args[1], *res, neg});
      return out;
    }

    case SurfaceClass::Cmp: {
      if (args.size() != 2) return std::nullopt;
      auto res = as_res(sig, target);
      if (!res) return std::nullopt;
      Rel rel = rel_of_symbol(sig, head);
      auto la = arith_side(sig, args[0]);
      auto ra = arith_side(sig, args[1]);
      if (res->k != Res::Var) {
        Rel eff = res->k == Res::True ? rel : negate_rel(rel);
        if (la && !ra) {
          auto b = as_iarg(args[1]);
          if (!b) return std::nullopt;
          out.push_back(ArithC{la->op, la->a, la->b, eff, *b});
          return out;
        }
        if (ra && !la) {
          auto a = as_iarg(args[0]);
          if (!a) return std::nullopt;
          out.push_back(ArithC{ra->op, ra->a, ra->b, flip_rel(eff), *a});
          return out;
        }
        auto a = as_iarg(args[0]), b = as_iarg(args[1]);
        if (!a || !b) return std::nullopt;
        out.push_back(CmpC{eff, *a, *b, res_true()});
        return out;
      }
      auto a = as_iarg(args[0]), b = as_iarg(args[1]);
      if (!a || !b) return std::nullopt;
      out.push_back(CmpC{rel, *a, *b, *res});
      return out;
    }

    case SurfaceClass::Arith: {
      if (args.size() != 2) return std::nullopt;
      auto a = as_iarg(args[0]), b = as_iarg(args[1]), c = as_iarg(target);
      if (!a || !b || !c) return std::nullopt;
      out.push_back(ArithC{aop_of_symbol(sig, head), *a, *b, Rel::EQ, *c});
      return out;
    }

    case SurfaceClass::Domain3: {
      if (args.size() != 3) return std::nullopt;
      auto t = truthy(target);
      if (!t || !*t) return std::nullopt;
      auto us = int_spine(sig, args[0]);
      auto lo = as_iarg(args[1]), hi = as_iarg(args[2]);
      if (!us || !lo || !hi) return std::nullopt;
      out.push_back(DomRangeC{*us, *lo, *hi});
      return out;
    }

    case SurfaceClass::Labeling: {
      if (args.size() != 2) return std::nullopt;
      auto t = truthy(target);
      if (!t || !*t) return std::nullopt;
      auto opts = spine(sig, args[0]);
      auto us = int_spine(sig, args[1]);
      if (!opts || !us) return std::nullopt;
      LabelC lc;
      for (const auto& o : *opts) {
        if (o->kind != TermKind::App) return std::nullopt;
        const std::string& n = sig.info(o->head).name;
        if (n == "ff" && o->args.empty()) {
          lc.first_fail = true;
        } else if ((n == "toMinimize" || n == "toMaximize") &&
                   o->args.size() == 1) {
          auto obj = as_iarg(o->args[0]);
          if (!obj) return std::nullopt;
          lc.optimize = n == "toMinimize" ? 1 : 2;
          lc.objective = *obj;
        } else {
          return std::nullopt;
        }
      }
      lc.vars = *us;
      out.push_back(std::move(lc));
      return out;
    }

    case SurfaceClass::AllDiff: {
      if (args.size() != 1) return std::nullopt;
      auto t = truthy(target);
      if (!t || !*t) return std::nullopt;
      auto us = int_spine(sig, args[0]);
      if (!us) return std::nullopt;
      for (size_t i = 0; i < us->size(); ++i)
        for (size_t j = i + 1; j < us->size(); ++j)
          out.push_back(
              SeqC{iarg_term((*us)[i]), iarg_term((*us)[j]), res_false(), false});
      return out;
    }

    case SurfaceClass::Sum: {
      if (args.size() != 3) return std::nullopt;
      auto t = truthy(target);
      if (!t || !*t) return std::nullopt;
      auto us = int_spine(sig, args[0]);
      auto rel = rel_pattern(sig, args[1]);
      auto tt = as_iarg(args[2]);
      if (!us || !rel || !tt) return std::nullopt;
      sum_chain(vars, *us, *rel, *tt, &out);
      return out;
    }

    case SurfaceClass::ScalarProd: {
      if (args.size() != 4) return std::nullopt;
      auto t = truthy(target);
      if (!t || !*t) return std::nullopt;
      auto cs = int_spine(sig, args[0]);
      auto us = int_spine(sig, args[1]);
      auto rel = rel_pattern(sig, args[2]);
      auto tt = as_iarg(args[3]);
      if (!cs || !us || !rel || !tt || cs->size() != us->size())
        return std::nullopt;
      std::vector<IArg> prods;
      for (size_t i = 0; i < us->size(); ++i) {
        const IArg& ci = (*cs)[i];
        if (!ci.is_var && ci.val == 1) {
          prods.push_back((*us)[i]);
          continue;
        }
        IArg p = iarg_var(vars.fresh());
        out.push_back(ArithC{AOp::Mul, ci, (*us)[i], Rel::EQ, p});
        prods.push_back(p);
      }
      sum_chain(vars, prods, *rel, *tt, &out);
      return out;
    }

    case SurfaceClass::Count: {
      if (args.size() != 4) return std::nullopt;
      auto t = truthy(target);
      if (!t || !*t) return std::nullopt;
      auto v = as_iarg(args[0]);
      auto us = int_spine(sig, args[1]);
      auto rel = rel_pattern(sig, args[2]);
      auto tt = as_iarg(args[3]);
      if (!v || !us || !rel || !tt) return std::nullopt;
      std::vector<IArg> bs;
      for (const auto& u : *us) {
        IArg b = iarg_var(vars.fresh());
        out.push_back(IndC{u, *v, b});
        bs.push_back(b);
      }
      if (!bs.empty()) out.push_back(DomRangeC{bs, iarg(0), iarg(1)});
      sum_chain(vars, bs, *rel, *tt, &out);
      return out;
    }

    case SurfaceClass::Indomain: {
      if (args.size() != 1) return std::nullopt;
      auto t = truthy(target);
      if (!t || !*t) return std::nullopt;
      auto u = as_iarg(args[0]);
      if (!u) return std::nullopt;
      LabelC lc;
      lc.vars = {*u};
      out.push_back(std::move(lc));
      return out;
    }

    case SurfaceClass::NotConstraint:
      return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace cflpfd
