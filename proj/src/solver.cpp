#include "cflpfd/solver.hpp"

#include <cassert>
#include <stdexcept>

namespace cflpfd {

namespace {

constexpr long long INF = IntDomain::kMaxInf;
constexpr long long NINF = IntDomain::kMinInf;

long long sat_clamp(long long v) {
  if (v > INF) return INF;
  if (v < NINF) return NINF;
  return v;
}
long long sat_add(long long a, long long b) {
  return sat_clamp((long long)((__int128)a + (__int128)b));
}
long long sat_sub(long long a, long long b) {
  return sat_clamp((long long)((__int128)a - (__int128)b));
}
long long sat_mul(long long a, long long b) {
  __int128 p = (__int128)a * (__int128)b;
  if (p > INF) return INF;
  if (p < NINF) return NINF;
  return (long long)p;
}

struct Iv {
  long long lo = NINF, hi = INF;
  bool empty() const { return lo > hi; }
  bool finite() const { return lo > NINF && hi < INF; }
  bool singleton() const { return lo == hi; }
};

Iv iv_add(Iv a, Iv b) { return {sat_add(a.lo, b.lo), sat_add(a.hi, b.hi)}; }
Iv iv_sub(Iv a, Iv b) { return {sat_sub(a.lo, b.hi), sat_sub(a.hi, b.lo)}; }
Iv iv_mul(Iv a, Iv b) {
  long long c[4] = {sat_mul(a.lo, b.lo), sat_mul(a.lo, b.hi),
                    sat_mul(a.hi, b.lo), sat_mul(a.hi, b.hi)};
  Iv r{c[0], c[0]};
  for (long long v : c) {
    r.lo = std::min(r.lo, v);
    r.hi = std::max(r.hi, v);
  }
  return r;
}

// Truncated division interval (superset of {trunc(a/b) : a in A, b in B\{0}}).
Iv iv_div(Iv a, Iv b) {
  if (!a.finite()) return {};
  std::vector<long long> bs;
  if (b.hi >= 1) {
    bs.push_back(std::max(b.lo, 1LL));
    if (b.hi < INF) bs.push_back(b.hi);
  }
  if (b.lo <= -1) {
    bs.push_back(std::min(b.hi, -1LL));
    if (b.lo > NINF) bs.push_back(b.lo);
  }
  if (bs.empty()) return Iv{1, 0};  // no usable divisor
  Iv r{INF, NINF};
  for (long long bb : bs)
    for (long long aa : {a.lo, a.hi}) {
      long long q = aa / bb;
      r.lo = std::min(r.lo, q);
      r.hi = std::max(r.hi, q);
    }
  if (b.hi >= INF || b.lo <= NINF) {  // |b| unbounded: quotients approach 0
    r.lo = std::min(r.lo, 0LL);
    r.hi = std::max(r.hi, 0LL);
  }
  return r;
}

long long floor_div(long long a, long long b) {
  long long q = a / b, r = a % b;
  return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}
long long ceil_div(long long a, long long b) {
  long long q = a / b, r = a % b;
  return (r != 0 && ((r < 0) == (b < 0))) ? q + 1 : q;
}

// Outward rational division used to invert multiplication: a*b = c, derive a
// from c and b.  Requires 0 outside b.
Iv iv_div_exact(Iv c, Iv b) {
  if (!c.finite() || !b.finite() || (b.lo <= 0 && b.hi >= 0)) return {};
  Iv r{INF, NINF};
  for (long long bb : {b.lo, b.hi})
    for (long long cc : {c.lo, c.hi}) {
      r.lo = std::min(r.lo, floor_div(cc, bb));
      r.hi = std::max(r.hi, ceil_div(cc, bb));
    }
  return r;
}

bool is_true_app(const Sig& sig, const TermPtr& t) {
  return t->kind == TermKind::App && t->head == sig.s_true && t->args.empty();
}
bool is_false_app(const Sig& sig, const TermPtr& t) {
  return t->kind == TermKind::App && t->head == sig.s_false && t->args.empty();
}

std::optional<bool> eff_of(const SeqC& s) {
  if (s.res.k == Res::Var) return std::nullopt;
  return s.res.k == Res::True;  // neg is folded away once res is ground
}

TermPtr bottomize(const TermPtr& t) {
  switch (t->kind) {
    case TermKind::Var:
    case TermKind::FlexApp:
      return mk_bottom();
    case TermKind::Int:
    case TermKind::Bottom:
      return t;
    default: {
      std::vector<TermPtr> args;
      args.reserve(t->args.size());
      for (const auto& a : t->args) args.push_back(bottomize(a));
      return t->kind == TermKind::App ? mk_app(t->head, std::move(args))
                                      : mk_tuple(std::move(args));
    }
  }
}

TermPtr iarg_term(const IArg& a) {
  return a.is_var ? mk_var(a.var) : mk_int(a.val);
}

Iv arg_bounds(const Store& st, const IArg& a) {
  if (!a.is_var) return {a.val, a.val};
  auto it = st.doms.find(a.var);
  if (it == st.doms.end() || it->second.empty()) return {NINF, INF};
  return {it->second.min(), it->second.max()};
}

bool constraint_ground(const Constraint& c) {
  std::set<VarId> vs;
  collect_constraint_vars(c, vs);
  return vs.empty();
}

}  // namespace

// ---------------------------------------------------------------------------
// Step driver.
// ---------------------------------------------------------------------------

Solver::StepResult Solver::step(const Alternative& alt,
                                const std::set<VarId>& chi) {
  return step_inner(alt, chi, /*label_plain=*/false);
}

Solver::StepResult Solver::step_inner(const Alternative& alt,
                                      const std::set<VarId>& chi,
                                      bool label_plain) {
  if (auto r = tier_fail(alt)) return std::move(*r);
  if (auto r = tier_discharge(alt)) return std::move(*r);
  if (auto r = tier_rewrite(alt)) return std::move(*r);
  if (auto r = tier_bind(alt, chi)) return std::move(*r);
  if (auto r = tier_propagate(alt, chi)) return std::move(*r);
  if (auto r = tier_split(alt, chi, label_plain)) return std::move(*r);
  return {};
}

bool Solver::solved(const Store& st, const std::set<VarId>& chi) {
  Alternative a{st, {}};
  return step(a, chi).kind == StepKind::None;
}

Alternative Solver::bound_child(const Alternative& a, const Subst& theta,
                                bool* ok) {
  Alternative child = a;
  *ok = subst_store(sig_, theta, child.store);
  child.sub = child.sub.compose(theta);
  return child;
}

// ---------------------------------------------------------------------------
// Failure rules.
// ---------------------------------------------------------------------------

std::optional<Solver::StepResult> Solver::tier_fail(const Alternative& alt) {
  const Store& st = alt.store;
  auto fail = [&]() -> std::optional<StepResult> {
    ++stats.steps;
    return StepResult{StepKind::Fail, {}, "fail"};
  };

  for (const auto& [v, d] : st.doms)
    if (d.empty()) return fail();

  for (const auto& c : st.cs) {
    if (constraint_ground(c)) {
      if (!constraint_sat(sig_, c, {})) return fail();
      continue;
    }
    if (auto* q = std::get_if<SeqC>(&c)) {
      auto eff = eff_of(*q);
      if (!eff) continue;
      if (*eff) {
        // Occurs check: X == t with X inside t (and t != X) is unsolvable.
        if (q->l->kind == TermKind::Var && !term_eq(q->l, q->r) &&
            occurs(q->l->var, q->r))
          return fail();
        if (q->r->kind == TermKind::Var && !term_eq(q->l, q->r) &&
            occurs(q->r->var, q->l))
          return fail();
      } else {
        // t /= t never holds: every value is a refinement of itself.
        if (term_eq(q->l, q->r)) return fail();
      }
      TermPtr v = seq_eval(sig_, bottomize(q->l), bottomize(q->r));
      if (is_true_app(sig_, v) && !*eff) return fail();
      if (is_false_app(sig_, v) && *eff) return fail();
    } else if (auto* a = std::get_if<ArithC>(&c)) {
      if (a->op == AOp::Div && !a->b.is_var && a->b.val == 0) return fail();
    } else if (auto* d = std::get_if<DomC>(&c)) {
      if (d->res.k == Res::Var) continue;
      TermPtr u = d->u.is_var ? mk_bottom() : mk_int(d->u.val);
      TermPtr v = domain_eval(sig_, u, bottomize(d->list));
      bool eff = d->res.k == Res::True;
      if (is_true_app(sig_, v) && !eff) return fail();
      if (is_false_app(sig_, v) && eff) return fail();
    } else if (auto* r = std::get_if<DomRangeC>(&c)) {
      if (!r->lo.is_var && !r->hi.is_var) {
        if (r->lo.val > r->hi.val && !r->us.empty()) return fail();
        for (const auto& u : r->us)
          if (!u.is_var && (u.val < r->lo.val || u.val > r->hi.val))
            return fail();
      }
    } else if (auto* i = std::get_if<IndC>(&c)) {
      if (!i->b.is_var && i->b.val != 0 && i->b.val != 1) return fail();
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Discharge of definitely satisfied constraints.
// ---------------------------------------------------------------------------

std::optional<Solver::StepResult> Solver::tier_discharge(
    const Alternative& alt) {
  const Store& st = alt.store;
  for (size_t i = 0; i < st.cs.size(); ++i) {
    const Constraint& c = st.cs[i];
    bool drop = false;
    if (constraint_ground(c)) {
      drop = true;  // ground and unsatisfied would have failed above
    } else if (auto* q = std::get_if<SeqC>(&c)) {
      auto eff = eff_of(*q);
      if (eff) {
        TermPtr v = seq_eval(sig_, bottomize(q->l), bottomize(q->r));
        drop = (is_true_app(sig_, v) && *eff) || (is_false_app(sig_, v) && !*eff);
        // x == x is entailed once x ranges over a finite integer domain:
        // every domain value is a total term.
        if (!drop && *eff && q->l->kind == TermKind::Var &&
            term_eq(q->l, q->r) && st.doms.count(q->l->var))
          drop = true;
      }
    } else if (auto* d = std::get_if<DomC>(&c)) {
      if (d->res.k != Res::Var) {
        TermPtr u = d->u.is_var ? mk_bottom() : mk_int(d->u.val);
        TermPtr v = domain_eval(sig_, u, bottomize(d->list));
        bool eff = d->res.k == Res::True;
        drop = (is_true_app(sig_, v) && eff) || (is_false_app(sig_, v) && !eff);
      }
    } else if (auto* l = std::get_if<LabelC>(&c)) {
      drop = true;
      for (const auto& u : l->vars) drop = drop && !u.is_var;
    }
    if (drop) {
      ++stats.steps;
      Alternative child = alt;
      child.store.cs.erase(child.store.cs.begin() + i);
      return StepResult{StepKind::Branch, {std::move(child)}, "discharge"};
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Deterministic rewrites.
// ---------------------------------------------------------------------------

std::optional<Solver::StepResult> Solver::tier_rewrite(const Alternative& alt) {
  const Store& st = alt.store;
  for (size_t i = 0; i < st.cs.size(); ++i) {
    const Constraint& c = st.cs[i];
    if (auto* q = std::get_if<SeqC>(&c)) {
      auto eff = eff_of(*q);
      if (!eff) continue;
      const TermPtr& l = q->l;
      const TermPtr& r = q->r;
      bool both_apps = l->kind == TermKind::App && r->kind == TermKind::App &&
                       l->head == r->head && l->args.size() == r->args.size();
      bool both_tuples = l->kind == TermKind::Tuple &&
                         r->kind == TermKind::Tuple &&
                         l->args.size() == r->args.size();
      if (!(both_apps || both_tuples)) continue;
      size_t n = l->args.size();
      if (*eff || n == 1) {
        // Decompose t == s argument-wise; for /=, only the single-argument
        // case is deterministic (multi-argument goes to the split tier).
        ++stats.steps;
        Alternative child = alt;
        child.store.cs.erase(child.store.cs.begin() + i);
        for (size_t k = 0; k < n; ++k)
          child.store.cs.insert(
              child.store.cs.begin() + i + k,
              SeqC{l->args[k], r->args[k], *eff ? res_true() : res_false(),
                   false});
        return StepResult{StepKind::Branch, {std::move(child)}, "decompose"};
      }
    } else if (auto* m = std::get_if<CmpC>(&c)) {
      if (m->res.k == Res::False) {
        ++stats.steps;
        Alternative child = alt;
        child.store.cs[i] = CmpC{negate_rel(m->rel), m->a, m->b, res_true()};
        return StepResult{StepKind::Branch, {std::move(child)}, "negate"};
      }
    } else if (auto* ind = std::get_if<IndC>(&c)) {
      if (!ind->b.is_var) {
        ++stats.steps;
        Alternative child = alt;
        child.store.cs[i] =
            SeqC{iarg_term(ind->x), iarg_term(ind->v),
                 ind->b.val == 1 ? res_true() : res_false(), false};
        return StepResult{StepKind::Branch, {std::move(child)}, "indicator"};
      }
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Binding rules and domain absorption.
// ---------------------------------------------------------------------------

std::optional<Solver::StepResult> Solver::tier_bind(const Alternative& alt,
                                                    const std::set<VarId>& chi) {
  const Store& st = alt.store;
  auto branch1 = [&](Alternative child, const char* rule) {
    ++stats.steps;
    StepResult r{StepKind::Branch, {}, rule};
    r.alts.push_back(std::move(child));
    return r;
  };
  auto bind_one = [&](size_t i, VarId x, const TermPtr& t,
                      bool keep_reflexive) -> StepResult {
    Alternative child = alt;
    if (keep_reflexive)
      child.store.cs[i] = SeqC{t, t, res_true(), false};
    else
      child.store.cs.erase(child.store.cs.begin() + i);
    Subst theta;
    theta.bind(x, t);
    bool ok = subst_store(sig_, theta, child.store);
    child.sub = child.sub.compose(theta);
    ++stats.steps;
    if (!ok) return {StepKind::Fail, {}, "bind"};
    return {StepKind::Branch, {std::move(child)}, "bind"};
  };

  for (size_t i = 0; i < st.cs.size(); ++i) {
    const Constraint& c = st.cs[i];
    if (auto* q = std::get_if<SeqC>(&c)) {
      auto eff = eff_of(*q);
      if (!eff || !*eff) continue;
      if (term_eq(q->l, q->r)) continue;  // residual t == t
      if (q->l->kind == TermKind::Var && !chi.count(q->l->var) &&
          !occurs(q->l->var, q->r))
        return bind_one(i, q->l->var, q->r, true);
      if (q->r->kind == TermKind::Var && !chi.count(q->r->var) &&
          !occurs(q->r->var, q->l))
        return bind_one(i, q->r->var, q->l, true);
    } else if (auto* a = std::get_if<ArithC>(&c)) {
      if (a->rel != Rel::EQ) continue;
      int nvars = a->a.is_var + a->b.is_var + a->c.is_var;
      if (nvars != 1) continue;
      auto try_bind = [&](const IArg& slot, long long value) -> std::optional<StepResult> {
        if (!slot.is_var || chi.count(slot.var)) return std::nullopt;
        Alternative child = alt;
        child.store.cs.erase(child.store.cs.begin() + i);
        Subst theta;
        theta.bind(slot.var, mk_int(value));
        bool ok = subst_store(sig_, theta, child.store);
        child.sub = child.sub.compose(theta);
        ++stats.steps;
        if (!ok) return StepResult{StepKind::Fail, {}, "arith-bind"};
        return StepResult{StepKind::Branch, {std::move(child)}, "arith-bind"};
      };
      long long x = a->a.val, y = a->b.val, z = a->c.val;
      switch (a->op) {
        case AOp::Add:
          if (a->c.is_var) { if (auto r = try_bind(a->c, x + y)) return r; }
          else if (a->a.is_var) { if (auto r = try_bind(a->a, z - y)) return r; }
          else if (auto r = try_bind(a->b, z - x)) return r;
          break;
        case AOp::Sub:
          if (a->c.is_var) { if (auto r = try_bind(a->c, x - y)) return r; }
          else if (a->a.is_var) { if (auto r = try_bind(a->a, z + y)) return r; }
          else if (auto r = try_bind(a->b, x - z)) return r;
          break;
        case AOp::Mul:
          if (a->c.is_var) { if (auto r = try_bind(a->c, x * y)) return r; }
          else if (a->a.is_var) {
            if (y == 0) {
              if (z != 0) { ++stats.steps; return StepResult{StepKind::Fail, {}, "arith-bind"}; }
              // 0 * a == 0 holds for every integer a: residual.
            } else if (z % y != 0) {
              ++stats.steps;
              return StepResult{StepKind::Fail, {}, "arith-bind"};
            } else if (auto r = try_bind(a->a, z / y)) {
              return r;
            }
          } else {
            if (x == 0) {
              if (z != 0) { ++stats.steps; return StepResult{StepKind::Fail, {}, "arith-bind"}; }
            } else if (z % x != 0) {
              ++stats.steps;
              return StepResult{StepKind::Fail, {}, "arith-bind"};
            } else if (auto r = try_bind(a->b, z / x)) {
              return r;
            }
          }
          break;
        case AOp::Div:
          if (a->c.is_var) {
            if (y == 0) { ++stats.steps; return StepResult{StepKind::Fail, {}, "arith-bind"}; }
            if (auto r = try_bind(a->c, x / y)) return r;
          }
          break;
      }
    } else if (auto* ind = std::get_if<IndC>(&c)) {
      if (ind->b.is_var && !chi.count(ind->b.var) && !ind->x.is_var &&
          !ind->v.is_var) {
        Alternative child = alt;
        child.store.cs.erase(child.store.cs.begin() + i);
        Subst theta;
        theta.bind(ind->b.var, mk_int(ind->x.val == ind->v.val ? 1 : 0));
        bool ok = subst_store(sig_, theta, child.store);
        child.sub = child.sub.compose(theta);
        ++stats.steps;
        if (!ok) return StepResult{StepKind::Fail, {}, "ind-bind"};
        return StepResult{StepKind::Branch, {std::move(child)}, "ind-bind"};
      }
    } else if (auto* m = std::get_if<CmpC>(&c)) {
      // Bounds-entailed comparisons bind their result variable.
      if (m->res.k != Res::Var || chi.count(m->res.var)) continue;
      Iv A = arg_bounds(st, m->a), B = arg_bounds(st, m->b);
      std::optional<bool> ent;
      switch (m->rel) {
        case Rel::LT:
          if (A.hi < B.lo) ent = true;
          else if (A.lo >= B.hi) ent = false;
          break;
        case Rel::LE:
          if (A.hi <= B.lo) ent = true;
          else if (A.lo > B.hi) ent = false;
          break;
        case Rel::GT:
          if (A.lo > B.hi) ent = true;
          else if (A.hi <= B.lo) ent = false;
          break;
        case Rel::GE:
          if (A.lo >= B.hi) ent = true;
          else if (A.hi < B.lo) ent = false;
          break;
        default:
          break;
      }
      if (!ent) continue;
      Subst theta;
      theta.bind(m->res.var, mk_app(*ent ? sig_.s_true : sig_.s_false, {}));
      bool ok;
      Alternative child = bound_child(alt, theta, &ok);
      ++stats.steps;
      if (!ok) return StepResult{StepKind::Fail, {}, "entail"};
      return StepResult{StepKind::Branch, {std::move(child)}, "entail"};
    } else if (auto* d = std::get_if<DomC>(&c)) {
      // Parse the membership list.
      std::vector<long long> vals;
      TermPtr cur = d->list;
      bool complete = false, allint = true;
      while (cur->kind == TermKind::App) {
        if (cur->head == sig_.s_nil && cur->args.empty()) {
          complete = true;
          break;
        }
        if (cur->head != sig_.s_cons || cur->args.size() != 2) break;
        if (cur->args[0]->kind != TermKind::Int) {
          allint = false;
          break;
        }
        vals.push_back(cur->args[0]->ival);
        cur = cur->args[1];
      }
      bool sorted = complete && allint;
      for (size_t k = 0; sorted && k + 1 < vals.size(); ++k)
        sorted = vals[k] < vals[k + 1];

      if (d->res.k == Res::Var) {
        if (chi.count(d->res.var)) continue;
        std::optional<bool> ent;
        if (!d->u.is_var && is_ground(d->list)) {
          TermPtr v = domain_eval(sig_, mk_int(d->u.val), d->list);
          if (is_true_app(sig_, v)) ent = true;
          else if (is_false_app(sig_, v)) ent = false;
        } else if (d->u.is_var && sorted) {
          auto it = st.doms.find(d->u.var);
          if (it != st.doms.end()) {
            IntDomain meet = it->second;
            meet.intersect(IntDomain::from_values(vals));
            if (meet.empty()) ent = false;
            else if (meet == it->second) ent = true;
          }
        }
        if (!ent) continue;
        Subst theta;
        theta.bind(d->res.var, mk_app(*ent ? sig_.s_true : sig_.s_false, {}));
        bool ok;
        Alternative child = bound_child(alt, theta, &ok);
        ++stats.steps;
        if (!ok) return StepResult{StepKind::Fail, {}, "entail"};
        return StepResult{StepKind::Branch, {std::move(child)}, "entail"};
      }

      // Absorb a ground, complete membership list into the domain view.
      if (!d->u.is_var || !sorted) continue;
      if (d->res.k == Res::False && !st.doms.count(d->u.var))
        continue;  // exclusion only applies once the variable is integral
      Alternative child = alt;
      child.store.cs.erase(child.store.cs.begin() + i);
      auto& dom = child.store.doms
                      .try_emplace(d->u.var, IntDomain::full())
                      .first->second;
      if (d->res.k == Res::True)
        dom.intersect(IntDomain::from_values(vals));
      else
        for (long long v : vals) dom.remove_value(v);
      if (dom.empty()) {
        ++stats.steps;
        return StepResult{StepKind::Fail, {}, "absorb"};
      }
      return branch1(std::move(child), "absorb");
    } else if (auto* r = std::get_if<DomRangeC>(&c)) {
      if (r->lo.is_var || r->hi.is_var) continue;
      Alternative child = alt;
      child.store.cs.erase(child.store.cs.begin() + i);
      bool failed = false;
      for (const auto& u : r->us) {
        if (!u.is_var) {
          if (u.val < r->lo.val || u.val > r->hi.val) failed = true;
          continue;
        }
        auto& dom = child.store.doms
                        .try_emplace(u.var, IntDomain::range(r->lo.val, r->hi.val))
                        .first->second;
        dom.intersect_range(r->lo.val, r->hi.val);
        if (dom.empty()) failed = true;
      }
      ++stats.steps;
      if (failed) return StepResult{StepKind::Fail, {}, "absorb"};
      return StepResult{StepKind::Branch, {std::move(child)}, "absorb"};
    }
  }

  // Singleton domains bind their variables (outside chi).
  for (const auto& [v, d] : st.doms) {
    if (!d.is_singleton() || chi.count(v)) continue;
    Alternative child = alt;
    long long val = d.min();
    child.store.doms.erase(v);
    Subst theta;
    theta.bind(v, mk_int(val));
    bool ok = subst_store(sig_, theta, child.store);
    child.sub = child.sub.compose(theta);
    ++stats.steps;
    if (!ok) return StepResult{StepKind::Fail, {}, "singleton"};
    return StepResult{StepKind::Branch, {std::move(child)}, "singleton"};
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Propagation: one bounds-consistency fixpoint counts as a single step.
// ---------------------------------------------------------------------------

std::optional<Solver::StepResult> Solver::tier_propagate(
    const Alternative& alt, const std::set<VarId>& chi) {
  (void)chi;  // propagation never binds, only narrows domains
  Store st = alt.store;
  std::vector<bool> removed(st.cs.size(), false);
  bool any_change = false, failed = false;

  auto prune = [&](const IArg& a, long long lo, long long hi, bool* chg) {
    if (failed) return;
    if (!a.is_var) {
      if (a.val < lo || a.val > hi) failed = true;
      return;
    }
    auto it = st.doms.find(a.var);
    if (it == st.doms.end()) {
      if (lo <= NINF || hi >= INF) return;  // keep domains finite
      st.doms.emplace(a.var, IntDomain::range(lo, hi));
      *chg = true;
      if (lo > hi) failed = true;
      return;
    }
    IntDomain before = it->second;
    it->second.intersect_range(lo, hi);
    if (!(before == it->second)) *chg = true;
    if (it->second.empty()) failed = true;
  };
  auto remove_val = [&](const IArg& a, long long v, bool* chg) {
    if (failed) return;
    if (!a.is_var) {
      if (a.val == v) failed = true;
      return;
    }
    auto it = st.doms.find(a.var);
    if (it == st.doms.end()) return;
    if (it->second.contains(v)) {
      it->second.remove_value(v);
      *chg = true;
      if (it->second.empty()) failed = true;
    }
  };
  auto singleton_of = [&](const IArg& a) -> std::optional<long long> {
    if (!a.is_var) return a.val;
    auto it = st.doms.find(a.var);
    if (it != st.doms.end() && it->second.is_singleton())
      return it->second.min();
    return std::nullopt;
  };

  int rounds = 0;
  bool chg = true;
  while (chg && !failed && ++rounds < 10000) {
    chg = false;
    for (size_t i = 0; i < st.cs.size() && !failed; ++i) {
      if (removed[i]) continue;
      const Constraint& c = st.cs[i];
      if (auto* m = std::get_if<CmpC>(&c)) {
        if (m->res.k == Res::Var) continue;
        Rel rel = m->res.k == Res::True ? m->rel : negate_rel(m->rel);
        Iv A = arg_bounds(st, m->a), B = arg_bounds(st, m->b);
        switch (rel) {
          case Rel::LT:
            prune(m->a, NINF, sat_sub(B.hi, 1), &chg);
            prune(m->b, sat_add(A.lo, 1), INF, &chg);
            break;
          case Rel::LE:
            prune(m->a, NINF, B.hi, &chg);
            prune(m->b, A.lo, INF, &chg);
            break;
          case Rel::GT:
            prune(m->a, sat_add(B.lo, 1), INF, &chg);
            prune(m->b, NINF, sat_sub(A.hi, 1), &chg);
            break;
          case Rel::GE:
            prune(m->a, B.lo, INF, &chg);
            prune(m->b, NINF, A.hi, &chg);
            break;
          default:
            break;
        }
      } else if (auto* a = std::get_if<ArithC>(&c)) {
        Iv A = arg_bounds(st, a->a), B = arg_bounds(st, a->b);
        Iv V;  // value range of (a op b)
        switch (a->op) {
          case AOp::Add: V = iv_add(A, B); break;
          case AOp::Sub: V = iv_sub(A, B); break;
          case AOp::Mul: V = iv_mul(A, B); break;
          case AOp::Div:
            remove_val(a->b, 0, &chg);
            if (!failed) V = iv_div(A, arg_bounds(st, a->b));
            break;
        }
        if (failed) break;
        if (V.empty()) {
          failed = true;
          break;
        }
        bool same_ab = a->a.is_var && a->b.is_var && a->a.var == a->b.var;
        auto backprop = [&](Iv T) {
          if (T.empty()) {
            failed = true;
            return;
          }
          switch (a->op) {
            case AOp::Add:
              prune(a->a, sat_sub(T.lo, B.hi), sat_sub(T.hi, B.lo), &chg);
              prune(a->b, sat_sub(T.lo, A.hi), sat_sub(T.hi, A.lo), &chg);
              break;
            case AOp::Sub:
              prune(a->a, sat_add(T.lo, B.lo), sat_add(T.hi, B.hi), &chg);
              prune(a->b, sat_sub(A.lo, T.hi), sat_sub(A.hi, T.lo), &chg);
              break;
            case AOp::Mul:
              if (same_ab) break;  // squared variable: corners do not invert
              if (B.lo > 0 || B.hi < 0) {
                Iv r = iv_div_exact(T, B);
                if (!r.empty()) prune(a->a, r.lo, r.hi, &chg);
              }
              if (A.lo > 0 || A.hi < 0) {
                Iv r = iv_div_exact(T, A);
                if (!r.empty()) prune(a->b, r.lo, r.hi, &chg);
              }
              break;
            case AOp::Div:
              break;  // conservative
          }
        };
        Iv C0 = arg_bounds(st, a->c);
        switch (a->rel) {
          case Rel::EQ:
            prune(a->c, V.lo, V.hi, &chg);
            if (!failed) backprop(arg_bounds(st, a->c));
            break;
          case Rel::LT:
            prune(a->c, sat_add(V.lo, 1), INF, &chg);
            if (!failed) backprop({NINF, sat_sub(C0.hi, 1)});
            break;
          case Rel::LE:
            prune(a->c, V.lo, INF, &chg);
            if (!failed) backprop({NINF, C0.hi});
            break;
          case Rel::GT:
            prune(a->c, NINF, sat_sub(V.hi, 1), &chg);
            if (!failed) backprop({sat_add(C0.lo, 1), INF});
            break;
          case Rel::GE:
            prune(a->c, NINF, V.hi, &chg);
            if (!failed) backprop({C0.lo, INF});
            break;
          case Rel::NE: {
            auto va = singleton_of(a->a), vb = singleton_of(a->b);
            auto vc = singleton_of(a->c);
            if (va && vb) {
              TermPtr r =
                  arith_eval(sig_, a->op, mk_int(*va), mk_int(*vb));
              if (r->kind == TermKind::Int) remove_val(a->c, r->ival, &chg);
            } else if (vc) {
              // one operand known, the other must avoid the exact inverse
              switch (a->op) {
                case AOp::Add:
                  if (va) remove_val(a->b, *vc - *va, &chg);
                  else if (vb) remove_val(a->a, *vc - *vb, &chg);
                  break;
                case AOp::Sub:
                  if (va) remove_val(a->b, *va - *vc, &chg);
                  else if (vb) remove_val(a->a, *vc + *vb, &chg);
                  break;
                case AOp::Mul: {
                  auto known = va ? va : vb;
                  const IArg& other = va ? a->b : a->a;
                  if (known) {
                    if (*known == 0) {
                      if (*vc == 0) failed = true;  // 0*x /= 0 never holds
                      // else: holds for every integer x; keep the residual,
                      // it still demands x to be integral
                    } else if (*vc % *known == 0) {
                      remove_val(other, *vc / *known, &chg);
                    }
                  }
                  break;
                }
                case AOp::Div:
                  break;
              }
            }
            break;
          }
        }
      } else if (auto* q = std::get_if<SeqC>(&c)) {
        auto eff = eff_of(*q);
        if (!eff) continue;
        const TermPtr& l = q->l;
        const TermPtr& r = q->r;
        bool lv = l->kind == TermKind::Var, rv = r->kind == TermKind::Var;
        if (*eff) {
          if (lv && rv) {
            auto li = st.doms.find(l->var), ri = st.doms.find(r->var);
            if (li == st.doms.end() && ri == st.doms.end()) continue;
            IntDomain meet = li != st.doms.end() ? li->second : IntDomain::full();
            if (ri != st.doms.end()) meet.intersect(ri->second);
            if (meet.empty()) {
              failed = true;
              break;
            }
            if (li == st.doms.end() || !(li->second == meet)) {
              st.doms[l->var] = meet;
              chg = true;
            }
            if (ri == st.doms.end() || !(ri->second == meet)) {
              st.doms[r->var] = meet;
              chg = true;
            }
          } else if (lv && r->kind == TermKind::Int) {
            prune(iarg_var(l->var), r->ival, r->ival, &chg);
          } else if (rv && l->kind == TermKind::Int) {
            prune(iarg_var(r->var), l->ival, l->ival, &chg);
          }
        } else {
          if (lv && r->kind == TermKind::Int) {
            if (st.doms.count(l->var)) {
              remove_val(iarg_var(l->var), r->ival, &chg);
              removed[i] = true;
              chg = true;
            }
          } else if (rv && l->kind == TermKind::Int) {
            if (st.doms.count(r->var)) {
              remove_val(iarg_var(r->var), l->ival, &chg);
              removed[i] = true;
              chg = true;
            }
          } else if (lv && rv) {
            auto li = st.doms.find(l->var), ri = st.doms.find(r->var);
            if (li == st.doms.end() || ri == st.doms.end()) continue;
            if (li->second.is_singleton() && ri->second.is_singleton()) {
              if (li->second.min() == ri->second.min()) failed = true;
              else {
                removed[i] = true;
                chg = true;
              }
            } else if (li->second.is_singleton()) {
              remove_val(iarg_var(r->var), li->second.min(), &chg);
              removed[i] = true;
              chg = true;
            } else if (ri->second.is_singleton()) {
              remove_val(iarg_var(l->var), ri->second.min(), &chg);
              removed[i] = true;
              chg = true;
            }
          }
        }
      } else if (auto* ind = std::get_if<IndC>(&c)) {
        if (ind->b.is_var) prune(ind->b, 0, 1, &chg);
        if (failed) break;
        Iv X = arg_bounds(st, ind->x), V = arg_bounds(st, ind->v);
        auto sx = singleton_of(ind->x), sv = singleton_of(ind->v);
        if (sx && sv) {
          long long want = *sx == *sv ? 1 : 0;
          prune(ind->b, want, want, &chg);
        } else if (std::max(X.lo, V.lo) > std::min(X.hi, V.hi)) {
          prune(ind->b, 0, 0, &chg);
        } else if (sx && ind->v.is_var) {
          auto it = st.doms.find(ind->v.var);
          if (it != st.doms.end() && !it->second.contains(*sx))
            prune(ind->b, 0, 0, &chg);
        } else if (sv && ind->x.is_var) {
          auto it = st.doms.find(ind->x.var);
          if (it != st.doms.end() && !it->second.contains(*sv))
            prune(ind->b, 0, 0, &chg);
        }
        // b fixed to 1/0 is handled by the singleton-binding rule, which
        // turns this constraint into a plain (dis)equality.
      } else if (auto* dr = std::get_if<DomRangeC>(&c)) {
        if (dr->us.empty()) continue;  // residual; lo/hi stay demanded
        if (!dr->lo.is_var && !dr->hi.is_var) continue;  // bind tier absorbs
        Iv L = arg_bounds(st, dr->lo), H = arg_bounds(st, dr->hi);
        long long min_uhi = INF, max_ulo = NINF;
        for (const auto& u : dr->us) {
          prune(u, L.lo, H.hi, &chg);
          Iv U = arg_bounds(st, u);
          min_uhi = std::min(min_uhi, U.hi);
          max_ulo = std::max(max_ulo, U.lo);
        }
        prune(dr->lo, NINF, min_uhi, &chg);
        prune(dr->hi, max_ulo, INF, &chg);
      }
    }
    any_change = any_change || chg;
  }

  if (failed) {
    ++stats.steps;
    return StepResult{StepKind::Fail, {}, "propagate"};
  }
  if (!any_change) return std::nullopt;
  ++stats.steps;
  Alternative child;
  child.sub = alt.sub;
  child.store.doms = std::move(st.doms);
  for (size_t i = 0; i < st.cs.size(); ++i)
    if (!removed[i]) child.store.cs.push_back(std::move(st.cs[i]));
  return StepResult{StepKind::Branch, {std::move(child)}, "propagate"};
}

// ---------------------------------------------------------------------------
// Splitting rules (the only sources of disjunction).
// ---------------------------------------------------------------------------

std::optional<Solver::StepResult> Solver::tier_split(const Alternative& alt,
                                                     const std::set<VarId>& chi,
                                                     bool label_plain) {
  const Store& st = alt.store;

  auto res_split = [&](VarId rv) -> StepResult {
    StepResult out{StepKind::Branch, {}, "split-res"};
    for (bool val : {true, false}) {
      Subst theta;
      theta.bind(rv, mk_app(val ? sig_.s_true : sig_.s_false, {}));
      bool ok;
      Alternative child = bound_child(alt, theta, &ok);
      if (ok) out.alts.push_back(std::move(child));
    }
    ++stats.steps;
    if (out.alts.empty()) return {StepKind::Fail, {}, "split-res"};
    return out;
  };

  // Pass 1: unknown result variables of reifiable constraints.
  for (const auto& c : st.cs) {
    const Res* r = nullptr;
    if (auto* q = std::get_if<SeqC>(&c)) r = &q->res;
    else if (auto* m = std::get_if<CmpC>(&c)) r = &m->res;
    else if (auto* d = std::get_if<DomC>(&c)) r = &d->res;
    if (r && r->k == Res::Var && !chi.count(r->var)) return res_split(r->var);
  }

  // Pass 2: disequality against a rigid constructor pattern.
  for (size_t i = 0; i < st.cs.size(); ++i) {
    auto* q = std::get_if<SeqC>(&st.cs[i]);
    if (!q) continue;
    auto eff = eff_of(*q);
    if (!eff || *eff) continue;
    if (q->l->kind != TermKind::Var || chi.count(q->l->var)) continue;
    const TermPtr& t = q->r;
    VarId x = q->l->var;
    bool ctor_app = t->kind == TermKind::App &&
                    sig_.info(t->head).kind == SymKind::Constructor &&
                    (int)t->args.size() == sig_.info(t->head).arity;
    bool tuple = t->kind == TermKind::Tuple;
    if (!ctor_app && !tuple) continue;

    StepResult out{StepKind::Branch, {}, "split-neq"};
    auto arm = [&](const Subst& theta, std::optional<Constraint> repl) {
      Alternative child = alt;
      if (repl)
        child.store.cs[i] = std::move(*repl);
      else
        child.store.cs.erase(child.store.cs.begin() + i);
      bool ok = subst_store(sig_, theta, child.store);
      child.sub = child.sub.compose(theta);
      if (ok) out.alts.push_back(std::move(child));
    };
    if (ctor_app) {
      int fam = sig_.info(t->head).family;
      for (SymbolId sib : sig_.family_members(fam)) {
        if (sib == t->head) continue;
        std::vector<TermPtr> fresh;
        for (int k = 0; k < sig_.info(sib).arity; ++k)
          fresh.push_back(mk_var(vars_.fresh()));
        Subst theta;
        theta.bind(x, mk_app(sib, std::move(fresh)));
        arm(theta, std::nullopt);
      }
    }
    {
      // One arm per argument position: same shape, that argument differs.
      std::vector<TermPtr> fresh;
      for (size_t k = 0; k < t->args.size(); ++k)
        fresh.push_back(mk_var(vars_.fresh()));
      for (size_t k = 0; k < t->args.size(); ++k) {
        Subst theta;
        theta.bind(x, ctor_app ? mk_app(t->head, fresh) : mk_tuple(fresh));
        arm(theta, Constraint{SeqC{fresh[k], t->args[k], res_false(), false}});
      }
    }
    ++stats.steps;
    if (out.alts.empty()) return StepResult{StepKind::Fail, {}, "split-neq"};
    return out;
  }

  // Pass 3: labeling.
  for (size_t i = 0; i < st.cs.size(); ++i) {
    auto* lc = std::get_if<LabelC>(&st.cs[i]);
    if (!lc) continue;
    std::vector<IArg> cands;
    bool blocked = false;
    for (const auto& u : lc->vars) {
      if (!u.is_var) continue;
      if (chi.count(u.var)) {
        blocked = true;
        continue;
      }
      auto it = st.doms.find(u.var);
      if (it == st.doms.end())
        throw std::runtime_error(
            "labeling variable has no finite domain; add a domain "
            "constraint first");
      if (!it->second.is_singleton()) cands.push_back(u);
    }
    (void)blocked;
    if (cands.empty()) continue;  // fixed (discharge drops it) or protected
    if (lc->optimize != 0 && !label_plain) {
      auto best = solve_optimize(alt, chi, i);
      ++stats.steps;
      if (!best) return StepResult{StepKind::Fail, {}, "label-opt"};
      return StepResult{StepKind::Branch, {std::move(*best)}, "label-opt"};
    }
    IArg pick = cands.front();
    if (lc->first_fail) {
      long long sz = st.doms.at(pick.var).size();
      for (const auto& u : cands) {
        long long s = st.doms.at(u.var).size();
        if (s < sz) {
          sz = s;
          pick = u;
        }
      }
    }
    StepResult out{StepKind::Branch, {}, "label"};
    for (long long v : st.doms.at(pick.var).values()) {
      Subst theta;
      theta.bind(pick.var, mk_int(v));
      bool ok;
      Alternative child = bound_child(alt, theta, &ok);
      if (ok) out.alts.push_back(std::move(child));
    }
    ++stats.steps;
    ++stats.label_nodes;
    if (out.alts.empty()) return StepResult{StepKind::Fail, {}, "label"};
    return out;
  }

  // Pass 4: undetermined equality indicators (from count combinators).
  for (const auto& c : st.cs) {
    auto* ind = std::get_if<IndC>(&c);
    if (!ind || !ind->b.is_var || chi.count(ind->b.var)) continue;
    return res_split_int(alt, ind->b.var);
  }

  return std::nullopt;
}

Solver::StepResult Solver::res_split_int(const Alternative& alt, VarId b) {
  StepResult out{StepKind::Branch, {}, "split-ind"};
  for (long long val : {1LL, 0LL}) {
    Subst theta;
    theta.bind(b, mk_int(val));
    bool ok;
    Alternative child = bound_child(alt, theta, &ok);
    if (ok) out.alts.push_back(std::move(child));
  }
  ++stats.steps;
  if (out.alts.empty()) return {StepKind::Fail, {}, "split-ind"};
  return out;
}

// ---------------------------------------------------------------------------
// Search drivers.
// ---------------------------------------------------------------------------

std::vector<Alternative> Solver::solve(const Store& st,
                                       const std::set<VarId>& chi,
                                       long long fuel) {
  std::vector<Alternative> out;
  std::vector<Alternative> stack;
  stack.push_back({st, {}});
  long long used = 0;
  while (!stack.empty()) {
    Alternative a = std::move(stack.back());
    stack.pop_back();
    if (++used > fuel) throw std::runtime_error("solver budget exceeded");
    StepResult r = step_inner(a, chi, false);
    switch (r.kind) {
      case StepKind::None:
        out.push_back(std::move(a));
        break;
      case StepKind::Fail:
        break;
      case StepKind::Branch:
        for (auto it = r.alts.rbegin(); it != r.alts.rend(); ++it)
          stack.push_back(std::move(*it));
        break;
    }
  }
  return out;
}

std::optional<Alternative> Solver::solve_optimize(const Alternative& alt,
                                                  const std::set<VarId>& chi,
                                                  size_t label_idx) {
  const LabelC lc = std::get<LabelC>(alt.store.cs[label_idx]);
  const bool minimize = lc.optimize == 1;

  auto obj_val = [&](const Alternative& a) -> std::optional<long long> {
    if (!lc.objective.is_var) return lc.objective.val;
    if (const TermPtr* t = a.sub.lookup(lc.objective.var))
      if ((*t)->kind == TermKind::Int) return (*t)->ival;
    auto it = a.store.doms.find(lc.objective.var);
    if (it != a.store.doms.end() && !it->second.empty() &&
        it->second.is_singleton())
      return it->second.min();
    return std::nullopt;
  };

  struct Node {
    Alternative a;
    std::optional<long long> bound;  // best value already injected
  };
  std::optional<Alternative> best;
  std::optional<long long> best_val;
  std::vector<Node> stack;
  stack.push_back({alt, std::nullopt});
  long long guard = 0;

  while (!stack.empty()) {
    Node n = std::move(stack.back());
    stack.pop_back();
    if (++guard > 4000000)
      throw std::runtime_error("optimization budget exceeded");
    if (best_val) {
      if (auto v = obj_val(n.a)) {
        bool better = minimize ? *v < *best_val : *v > *best_val;
        if (!better) continue;
      } else if (lc.objective.is_var && n.bound != best_val) {
        n.a.store.add(CmpC{minimize ? Rel::LT : Rel::GT,
                           iarg_var(lc.objective.var), iarg(*best_val),
                           res_true()});
        n.bound = best_val;
      }
    }
    StepResult r = step_inner(n.a, chi, /*label_plain=*/true);
    switch (r.kind) {
      case StepKind::None: {
        auto v = obj_val(n.a);
        if (!v)
          throw std::runtime_error(
              "optimization objective not fixed by labeling");
        if (!best_val || (minimize ? *v < *best_val : *v > *best_val)) {
          best_val = v;
          best = std::move(n.a);
        }
        break;
      }
      case StepKind::Fail:
        break;
      case StepKind::Branch:
        for (auto it = r.alts.rbegin(); it != r.alts.rend(); ++it)
          stack.push_back(Node{std::move(*it), n.bound});
        break;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Refutability and demanded variables.
// ---------------------------------------------------------------------------

bool Solver::refutable(const Store& st) {
  Alternative a{st, {}};
  if (auto r = tier_fail(a)) return r->kind == StepKind::Fail;
  auto p = tier_propagate(a, {});
  return p && p->kind == StepKind::Fail;
}

std::set<VarId> Solver::demanded(const Store& st) const {
  std::set<VarId> out;
  auto add_iarg = [&](const IArg& a) {
    if (a.is_var) out.insert(a.var);
  };
  auto add_res = [&](const Res& r) {
    if (r.k == Res::Var) out.insert(r.var);
  };
  auto add_top_var = [&](const TermPtr& t) {
    if (t->kind == TermKind::Var) out.insert(t->var);
  };
  for (const auto& [v, d] : st.doms) {
    (void)d;
    out.insert(v);
  }
  for (const auto& c : st.cs) {
    if (auto* q = std::get_if<SeqC>(&c)) {
      add_res(q->res);
      if (q->res.k == Res::Var || q->res.k == Res::False) {
        add_top_var(q->l);
        add_top_var(q->r);
      } else {
        collect_vars(q->l, out);
        collect_vars(q->r, out);
      }
    } else if (auto* m = std::get_if<CmpC>(&c)) {
      add_iarg(m->a);
      add_iarg(m->b);
      add_res(m->res);
    } else if (auto* a = std::get_if<ArithC>(&c)) {
      add_iarg(a->a);
      add_iarg(a->b);
      add_iarg(a->c);
    } else if (auto* d = std::get_if<DomC>(&c)) {
      add_res(d->res);
      if (d->res.k == Res::True) {
        add_iarg(d->u);
        collect_vars(d->list, out);
      } else {
        // u is demanded only when the list pins membership down exactly:
        // a ground, complete, strictly ascending integer list.
        std::vector<long long> vals;
        TermPtr cur = d->list;
        bool complete = false, allint = true;
        while (cur->kind == TermKind::App) {
          if (cur->head == sig_.s_nil && cur->args.empty()) {
            complete = true;
            break;
          }
          if (cur->head != sig_.s_cons || cur->args.size() != 2) break;
          if (cur->args[0]->kind != TermKind::Int) {
            allint = false;
            break;
          }
          vals.push_back(cur->args[0]->ival);
          cur = cur->args[1];
        }
        bool sorted = complete && allint;
        for (size_t k = 0; sorted && k + 1 < vals.size(); ++k)
          sorted = vals[k] < vals[k + 1];
        if (sorted) add_iarg(d->u);
      }
    } else if (auto* dr = std::get_if<DomRangeC>(&c)) {
      for (const auto& u : dr->us) add_iarg(u);
      add_iarg(dr->lo);
      add_iarg(dr->hi);
    } else if (auto* ind = std::get_if<IndC>(&c)) {
      add_iarg(ind->x);
      add_iarg(ind->v);
      add_iarg(ind->b);
    } else if (auto* lb = std::get_if<LabelC>(&c)) {
      for (const auto& u : lb->vars) add_iarg(u);
      if (lb->optimize != 0) add_iarg(lb->objective);
    }
  }
  return out;
}

}  // namespace cflpfd
