#include "cflpfd/typecheck.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <set>

namespace cflpfd {

namespace {

void count_var_occurrences(const TermPtr& t, std::map<VarId, int>& counts) {
  if (t->kind == TermKind::Var || t->kind == TermKind::FlexApp)
    counts[t->var]++;
  for (const auto& a : t->args) count_var_occurrences(a, counts);
}

std::string var_display(const VarTable& vars, VarId v) {
  const std::string& n = vars.name(v);
  return n.empty() ? "_v" + std::to_string(v) : n;
}

// Conditions are constraint expressions; they must type as bool (relational
// and membership constraints) or success (enumeration constraints).
bool type_as_condition(const TypeTable& tt, TypeInference& inf,
                       const TypePtr& tc, std::string& why) {
  std::string e;
  TypeSubst attempt = inf.sub();
  if (unify_types(tt, tc, tt.bool_type(), attempt, e)) {
    inf.sub() = attempt;
    return true;
  }
  attempt = inf.sub();
  e.clear();
  if (unify_types(tt, tc, tt.success_type(), attempt, e)) {
    inf.sub() = attempt;
    return true;
  }
  why = "condition must be of type bool or success, found " +
        type_str(tt, inf.sub().apply(tc));
  return false;
}

void all_subterms(const TermPtr& t, std::vector<TermPtr>& out) {
  out.push_back(t);
  for (const auto& a : t->args) all_subterms(a, out);
}

// References to defined functions, used to order inference by dependency.
void defined_refs(const Sig& sig, const TermPtr& t, std::set<SymbolId>& out) {
  if (t->kind == TermKind::App && sig.info(t->head).kind == SymKind::Defined)
    out.insert(t->head);
  for (const auto& a : t->args) defined_refs(sig, a, out);
}

struct SccFinder {
  const std::vector<std::vector<int>>& adj;
  std::vector<int> index, low, stk;
  std::vector<bool> onstack;
  int counter = 0;
  std::vector<std::vector<int>> sccs;  // dependency order: callees first

  explicit SccFinder(const std::vector<std::vector<int>>& a)
      : adj(a),
        index(a.size(), -1),
        low(a.size(), 0),
        onstack(a.size(), false) {}

  void run() {
    for (size_t v = 0; v < adj.size(); ++v)
      if (index[v] < 0) dfs(static_cast<int>(v));
  }

  void dfs(int v) {
    index[v] = low[v] = counter++;
    stk.push_back(v);
    onstack[v] = true;
    for (int w : adj[v]) {
      if (index[w] < 0) {
        dfs(w);
        low[v] = std::min(low[v], low[w]);
      } else if (onstack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      sccs.emplace_back();
      while (true) {
        int w = stk.back();
        stk.pop_back();
        onstack[w] = false;
        sccs.back().push_back(w);
        if (w == v) break;
      }
    }
  }
};

}  // namespace

std::vector<TypeError> check_program_rule(const Sig& sig, const TypeTable& tt,
                                          const VarTable& vars,
                                          const ProgramRule& rule) {
  std::vector<TypeError> errs;
  auto fail = [&](std::string m) { errs.push_back({rule.loc, std::move(m)}); };
  const std::string& fname = sig.info(rule.fn).name;
  const int n = static_cast<int>(rule.lhs.size());

  if (n != sig.info(rule.fn).arity)
    fail("rule for '" + fname + "' takes " + std::to_string(n) +
         " arguments, other rules take " +
         std::to_string(sig.info(rule.fn).arity));

  for (int i = 0; i < n; ++i)
    if (!is_pattern(sig, rule.lhs[i]))
      fail("argument " + std::to_string(i + 1) + " of '" + fname +
           "' is not a pattern: " + raw_str(sig, rule.lhs[i]));

  std::map<VarId, int> counts;
  for (const auto& t : rule.lhs) count_var_occurrences(t, counts);
  for (const auto& [v, c] : counts)
    if (c > 1)
      fail("left-hand side of '" + fname + "' is non-linear: variable " +
           var_display(vars, v) + " occurs " + std::to_string(c) + " times");

  if (!is_total(rule.rhs))
    fail("right-hand side of '" + fname + "' is not a total expression");
  for (const auto& c : rule.conds)
    if (!is_total(c))
      fail("condition of '" + fname + "' is not a total expression");

  if (!tt.has_scheme(rule.fn)) {
    fail("no type known for function '" + fname + "'");
    return errs;
  }
  if (!errs.empty()) return errs;

  TypeInference inf(sig, tt);
  TypeEnv env;

  // The function's type variables are rigid here: a defining rule must work
  // at the declared generality, not at some specialisation of it.
  TypePtr fty = inf.instantiate_rigid(tt.scheme(rule.fn));
  std::vector<TypePtr> params;
  TypePtr res = fty;
  for (int i = 0; i < n; ++i) {
    if (res->kind != TypeKind::Arrow) {
      fail("type of '" + fname + "' (" + scheme_str(tt, tt.scheme(rule.fn)) +
           ") accepts fewer than " + std::to_string(n) + " arguments");
      return errs;
    }
    params.push_back(res->args[0]);
    res = res->args[1];
  }

  for (int i = 0; i < n; ++i) {
    TypePtr ti = inf.visit(rule.lhs[i], env);
    if (!ti) {
      fail("in rule for '" + fname + "': " + inf.error());
      return errs;
    }
    if (!inf.unify(ti, params[i])) {
      fail("argument " + std::to_string(i + 1) + " of '" + fname +
           "': " + inf.error());
      return errs;
    }
  }

  TypePtr tr = inf.visit(rule.rhs, env);
  if (!tr) {
    fail("in rule for '" + fname + "': " + inf.error());
    return errs;
  }
  if (!inf.unify(tr, res)) {
    fail("right-hand side of '" + fname + "': " + inf.error());
    return errs;
  }

  for (const auto& c : rule.conds) {
    TypePtr tc = inf.visit(c, env);
    if (!tc) {
      fail("in a condition of '" + fname + "': " + inf.error());
      return errs;
    }
    std::string why;
    if (!type_as_condition(tt, inf, tc, why)) {
      fail("in a condition of '" + fname + "': " + why);
      return errs;
    }
  }

  // Transparency: within each left-hand pattern, a subpattern's type may
  // only use type variables that are visible in the whole pattern's type.
  // Otherwise the pattern hides type information (opaque constructors) and
  // pattern matching would not be type-sound.
  for (int i = 0; i < n; ++i) {
    TypePtr pat_ty = inf.sub().apply(inf.noted().at(rule.lhs[i].get()));
    std::set<TypeVarId> visible;
    collect_type_vars(pat_ty, visible);
    std::vector<TermPtr> subs;
    all_subterms(rule.lhs[i], subs);
    for (const auto& sp : subs) {
      TypePtr sp_ty = inf.sub().apply(inf.noted().at(sp.get()));
      std::set<TypeVarId> used;
      collect_type_vars(sp_ty, used);
      if (!std::includes(visible.begin(), visible.end(), used.begin(),
                         used.end())) {
        fail("argument " + std::to_string(i + 1) + " of '" + fname +
             "' is not transparent: subpattern " + raw_str(sig, sp) +
             " has type " + type_str(tt, sp_ty) +
             ", not determined by the pattern type " + type_str(tt, pat_ty));
        break;
      }
    }
  }

  return errs;
}

bool typecheck_program(const Sig& sig, TypeTable& tt, const VarTable& vars,
                       const Program& prog, std::vector<TypeError>& errs) {
  const size_t err_mark = errs.size();

  // Functions lacking a declared type get one inferred, in dependency
  // order so callees are generalised before callers use them.
  std::vector<SymbolId> infer_fns;
  std::map<SymbolId, int> node_of;
  for (const auto& [f, idxs] : prog.rules_of) {
    (void)idxs;
    if (!tt.has_scheme(f)) {
      node_of[f] = static_cast<int>(infer_fns.size());
      infer_fns.push_back(f);
    }
  }

  std::vector<std::vector<int>> adj(infer_fns.size());
  for (size_t v = 0; v < infer_fns.size(); ++v) {
    std::set<SymbolId> refs;
    for (int idx : prog.rules_of.at(infer_fns[v])) {
      const ProgramRule& r = prog.rules[idx];
      for (const auto& t : r.lhs) defined_refs(sig, t, refs);
      defined_refs(sig, r.rhs, refs);
      for (const auto& c : r.conds) defined_refs(sig, c, refs);
    }
    for (SymbolId g : refs) {
      auto it = node_of.find(g);
      if (it != node_of.end() && it->second != static_cast<int>(v))
        adj[v].push_back(it->second);
    }
  }

  SccFinder scc(adj);
  scc.run();

  std::set<SymbolId> inference_failed;
  for (const auto& group : scc.sccs) {
    TypeInference inf(sig, tt);
    for (int v : group) inf.assume[infer_fns[v]] = inf.fresh();

    bool group_ok = true;
    for (int v : group) {
      SymbolId f = infer_fns[v];
      const std::string& fname = sig.info(f).name;
      for (int idx : prog.rules_of.at(f)) {
        const ProgramRule& r = prog.rules[idx];
        TypeEnv env;  // variable scopes are per rule
        std::vector<TypePtr> ptys;
        TypePtr rty;
        bool rule_ok = true;
        for (const auto& t : r.lhs) {
          TypePtr ty = inf.visit(t, env);
          if (!ty) {
            rule_ok = false;
            break;
          }
          ptys.push_back(ty);
        }
        if (rule_ok) rty = inf.visit(r.rhs, env);
        if (rule_ok && rty &&
            !inf.unify(inf.sub().apply(inf.assume[f]), t_fun(ptys, rty)))
          rule_ok = false;
        if (rule_ok && rty) {
          for (const auto& c : r.conds) {
            TypePtr tc = inf.visit(c, env);
            std::string why;
            if (!tc) {
              rule_ok = false;
              break;
            }
            if (!type_as_condition(tt, inf, tc, why)) {
              errs.push_back({r.loc, "in a condition of '" + fname + "': " + why});
              rule_ok = false;
              break;
            }
          }
        }
        if (!rule_ok) {
          if (inf.failed())
            errs.push_back(
                {r.loc, "in rule for '" + fname + "': " + inf.error()});
          group_ok = false;
          break;
        }
      }
      if (!group_ok) break;
    }

    for (int v : group) {
      SymbolId f = infer_fns[v];
      if (!group_ok) {
        inference_failed.insert(f);
        continue;
      }
      TypeScheme sch;
      sch.body = inf.sub().apply(inf.assume[f]);
      sch.quant = type_vars_in_order(sch.body);
      tt.set_scheme(f, std::move(sch));
    }
  }

  // Item-level checks for every rule, now that all types are known.
  for (const ProgramRule& r : prog.rules) {
    if (inference_failed.count(r.fn)) continue;  // already reported
    auto es = check_program_rule(sig, tt, vars, r);
    errs.insert(errs.end(), es.begin(), es.end());
  }

  return errs.size() == err_mark;
}

bool check_goal_types(const Sig& sig, const TypeTable& tt,
                      const std::vector<TermPtr>& conjuncts,
                      std::vector<TypeError>& errs, TypeEnv* env_out) {
  TypeInference inf(sig, tt);
  TypeEnv env;
  for (const auto& c : conjuncts) {
    TypePtr tc = inf.visit(c, env);
    if (!tc) {
      errs.push_back({{}, "in goal: " + inf.error()});
      return false;
    }
    std::string why;
    if (!type_as_condition(tt, inf, tc, why)) {
      errs.push_back({{}, "in goal: " + why});
      return false;
    }
  }
  if (env_out) {
    env_out->clear();
    for (const auto& [v, ty] : env) (*env_out)[v] = inf.sub().apply(ty);
  }
  return true;
}

}  // namespace cflpfd
