#include "cflpfd/narrowing.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <stdexcept>
#include <utility>

#include "cflpfd/typecheck.hpp"

namespace cflpfd {

namespace {

TermPtr true_term(const Sig& sig) { return mk_app(sig.s_true); }

bool is_true_app(const Sig& sig, const TermPtr& t) {
  return t->kind == TermKind::App && t->head == sig.s_true && t->args.empty();
}

std::set<VarId> produced_vars(const Goal& g) {
  std::set<VarId> out;
  for (const auto& p : g.prods) collect_vars(p.rhs, out);
  return out;
}

std::set<VarId> goal_var_set(const Goal& g) {
  std::set<VarId> out;
  for (const auto& p : g.prods) {
    collect_vars(p.lhs, out);
    collect_vars(p.rhs, out);
  }
  for (const auto& c : g.pending) collect_vars(c, out);
  for (VarId v : g.store.vars()) out.insert(v);
  return out;
}

// Rigid outermost shape: integers, tuples, constructor applications at or
// below arity, and partial applications of defined/primitive symbols.  Such
// a term can be decomposed against (or imitated by) a pattern.
bool rigid_shell(const Sig& sig, const TermPtr& t) {
  switch (t->kind) {
    case TermKind::Int:
    case TermKind::Tuple:
      return true;
    case TermKind::App: {
      const SymbolInfo& inf = sig.info(t->head);
      int n = static_cast<int>(t->args.size());
      if (inf.kind == SymKind::Constructor) return n <= inf.arity;
      return n < inf.arity;
    }
    default:
      return false;
  }
}

// Applies a binding substitution through productions, pending constraints,
// store and answer.  Bound existential variables leave the goal silently;
// bindings of free variables are recorded in the answer substitution.
// Returns false when the store refutes a binding or the substitution would
// apply a non-applicable value to arguments.
bool goal_apply(const Sig& sig, const Subst& s, Goal& g) {
  if (s.empty()) return true;
  try {
    for (auto& p : g.prods) {
      p.lhs = s.apply(p.lhs);
      p.rhs = s.apply(p.rhs);
    }
    for (auto& c : g.pending) c = s.apply(c);
    if (!subst_store(sig, s, g.store)) return false;
    g.sf_dirty = true;
    Subst na;
    for (const auto& [v, t] : g.answer.map()) na.bind(v, s.apply(t));
    for (const auto& [v, t] : s.map()) {
      if (g.existential.count(v)) {
        g.existential.erase(v);
        continue;
      }
      if (!na.binds(v)) na.bind(v, t);
    }
    g.answer = std::move(na);
    return true;
  } catch (const std::logic_error&) {
    return false;  // e.g. a flexible head bound to a non-applicable value
  }
}

// True when x occurs anywhere in the goal outside production `skip`
// (the producer's own left-hand side counts as an occurrence, to stay on
// the safe side of elimination).
bool occurs_elsewhere(const Goal& g, size_t skip, VarId x) {
  for (size_t i = 0; i < g.prods.size(); ++i) {
    if (i != skip && (occurs(x, g.prods[i].lhs) || occurs(x, g.prods[i].rhs)))
      return true;
  }
  if (occurs(x, g.prods[skip].lhs)) return true;
  for (const auto& c : g.pending)
    if (occurs(x, c)) return true;
  if (g.store.vars().count(x)) return true;
  for (const auto& [v, t] : g.answer.map()) {
    (void)v;
    if (occurs(x, t)) return true;
  }
  return false;
}

void count_var_occurrences(const TermPtr& t, std::map<VarId, int>& out) {
  switch (t->kind) {
    case TermKind::Var:
      out[t->var]++;
      return;
    case TermKind::FlexApp:
      out[t->var]++;
      break;
    default:
      break;
  }
  for (const auto& a : t->args) count_var_occurrences(a, out);
}

bool reifiable_class(SurfaceClass cl) {
  return cl == SurfaceClass::Eq || cl == SurfaceClass::Ne ||
         cl == SurfaceClass::Cmp || cl == SurfaceClass::Arith;
}

// ---------------------------------------------------------------------------
// Compact renderers for the debug trace.
// ---------------------------------------------------------------------------

std::string iarg_s(const IArg& a) {
  return a.is_var ? "_v" + std::to_string(a.var) : std::to_string(a.val);
}

std::string res_s(const Res& r) {
  switch (r.k) {
    case Res::True:
      return "true";
    case Res::False:
      return "false";
    default:
      return "_v" + std::to_string(r.var);
  }
}

const char* rel_s(Rel r) {
  switch (r) {
    case Rel::EQ:
      return "==";
    case Rel::NE:
      return "/=";
    case Rel::LT:
      return "<";
    case Rel::LE:
      return "<=";
    case Rel::GT:
      return ">";
    default:
      return ">=";
  }
}

const char* aop_s(AOp op) {
  switch (op) {
    case AOp::Add:
      return "+";
    case AOp::Sub:
      return "-";
    case AOp::Mul:
      return "*";
    default:
      return "/";
  }
}

std::string con_s(const Sig& sig, const Constraint& c) {
  if (auto* s = std::get_if<SeqC>(&c)) {
    const char* op = s->neg ? " /= " : " == ";
    return raw_str(sig, s->l) + op + raw_str(sig, s->r) + " is " +
           res_s(s->res);
  }
  if (auto* s = std::get_if<CmpC>(&c))
    return iarg_s(s->a) + " " + rel_s(s->rel) + " " + iarg_s(s->b) + " is " +
           res_s(s->res);
  if (auto* s = std::get_if<ArithC>(&c))
    return iarg_s(s->a) + " " + aop_s(s->op) + " " + iarg_s(s->b) + " " +
           rel_s(s->rel) + " " + iarg_s(s->c);
  if (auto* s = std::get_if<DomC>(&c))
    return iarg_s(s->u) + " in " + raw_str(sig, s->list) + " is " +
           res_s(s->res);
  if (auto* s = std::get_if<DomRangeC>(&c)) {
    std::string out = "domain [";
    for (size_t i = 0; i < s->us.size(); ++i)
      out += (i ? "," : "") + iarg_s(s->us[i]);
    return out + "] " + iarg_s(s->lo) + " " + iarg_s(s->hi);
  }
  if (auto* s = std::get_if<IndC>(&c))
    return "ind(" + iarg_s(s->x) + "," + iarg_s(s->v) + "," + iarg_s(s->b) +
           ")";
  const auto& l = std::get<LabelC>(c);
  std::string out = std::string("labeling[") + (l.first_fail ? "ff" : "naive");
  if (l.optimize == 1) out += ",min " + iarg_s(l.objective);
  if (l.optimize == 2) out += ",max " + iarg_s(l.objective);
  out += "](";
  for (size_t i = 0; i < l.vars.size(); ++i)
    out += (i ? "," : "") + iarg_s(l.vars[i]);
  return out + ")";
}

std::string store_s(const Sig& sig, const Store& st) {
  std::string out = "{";
  bool first = true;
  for (const auto& c : st.cs) {
    if (!first) out += ", ";
    out += con_s(sig, c);
    first = false;
  }
  for (const auto& [v, d] : st.doms) {
    if (!first) out += ", ";
    out += "_v" + std::to_string(v) + " in " + d.str();
    first = false;
  }
  return out + "}";
}

std::string goal_s(const Sig& sig, const Goal& g) {
  std::string out = "P:{";
  for (size_t i = 0; i < g.prods.size(); ++i) {
    if (i) out += "; ";
    out += raw_str(sig, g.prods[i].lhs) + " -> " + raw_str(sig, g.prods[i].rhs);
  }
  out += "} C:{";
  for (size_t i = 0; i < g.pending.size(); ++i) {
    if (i) out += ", ";
    out += raw_str(sig, g.pending[i]);
  }
  out += "} S:" + store_s(sig, g.store) + " ans:{";
  bool first = true;
  for (const auto& [v, t] : g.answer.map()) {
    if (!first) out += ", ";
    out += "_v" + std::to_string(v) + " -> " + raw_str(sig, t);
    first = false;
  }
  return out + "}";
}

std::string describe_stuck(const Sig& sig, const Goal& g) {
  if (!g.prods.empty())
    return "no rule applies to production " + raw_str(sig, g.prods[0].lhs) +
           " -> " + raw_str(sig, g.prods[0].rhs);
  if (!g.pending.empty())
    return "pending constraint never became ready: " +
           raw_str(sig, g.pending[0]);
  return "goal is stuck";
}

}  // namespace

Goal goal_from_conjuncts(const std::vector<TermPtr>& conjuncts) {
  Goal g;
  g.pending = conjuncts;
  return g;
}

std::vector<std::string> check_admissible(const Module& m, const Goal& g) {
  std::vector<std::string> bad;
  const Sig& sig = m.sig;

  // (1) every produced variable is produced exactly once, and right-hand
  // sides are patterns
  std::map<VarId, int> occ;
  std::map<VarId, size_t> producer;
  for (size_t i = 0; i < g.prods.size(); ++i) {
    const auto& p = g.prods[i];
    if (!is_pattern(sig, p.rhs))
      bad.push_back("production rhs is not a pattern: " + raw_str(sig, p.rhs));
    std::map<VarId, int> local;
    count_var_occurrences(p.rhs, local);
    for (const auto& [v, n] : local) {
      occ[v] += n;
      producer[v] = i;
    }
  }
  for (const auto& [v, n] : occ) {
    if (n > 1)
      bad.push_back("variable produced more than once: _v" + std::to_string(v));
    // (2) produced variables are existential
    if (!g.existential.count(v))
      bad.push_back("produced variable is not existential: _v" +
                    std::to_string(v));
  }

  // (3) the production relation is irreflexive and acyclic
  std::vector<int> color(g.prods.size(), 0);
  std::function<bool(size_t)> dfs = [&](size_t i) -> bool {
    color[i] = 1;
    std::set<VarId> used;
    collect_vars(g.prods[i].lhs, used);
    for (VarId u : used) {
      auto it = producer.find(u);
      if (it == producer.end()) continue;
      size_t j = it->second;
      if (color[j] == 1) return false;
      if (color[j] == 0 && !dfs(j)) return false;
    }
    color[i] = 2;
    return true;
  };
  for (size_t i = 0; i < g.prods.size(); ++i) {
    if (color[i] == 0 && !dfs(i)) {
      bad.push_back("production relation has a cycle");
      break;
    }
  }

  // (4) the answer substitution avoids the goal's variables, so in
  // particular it never binds a produced variable
  std::set<VarId> gv = goal_var_set(g);
  for (const auto& [v, t] : g.answer.map()) {
    (void)t;
    if (gv.count(v))
      bad.push_back("answer binds a goal variable: _v" + std::to_string(v));
    if (occ.count(v))
      bad.push_back("answer binds a produced variable: _v" + std::to_string(v));
  }

  // pending surface constraints must still be well-typed
  if (!g.pending.empty()) {
    std::vector<TypeError> errs;
    if (!check_goal_types(sig, m.tt, g.pending, errs)) {
      for (const auto& e : errs)
        bad.push_back("pending constraint ill-typed: " + e.str());
    }
  }
  return bad;
}

// ---------------------------------------------------------------------------
// Search
// ---------------------------------------------------------------------------

Search::Search(Module& m, Goal g, SearchOptions opts)
    : m_(m), opts_(std::move(opts)), solver_(m.sig, m.vars) {
  for (VarId v : goal_var_set(g))
    if (!g.existential.count(v)) init_free_.insert(v);
  Frame f;
  f.goals.push_back(std::move(g));
  f.labels.push_back("");
  frames_.push_back(std::move(f));
}

void Search::emit(const std::string& line) {
  if (opts_.trace) opts_.trace(line);
}

bool Search::over_budget() const {
  return stats_.steps + stats_.solver_steps > opts_.step_budget;
}

std::optional<Answer> Search::next() {
  auto g = next_solved();
  if (!g) return std::nullopt;
  return Answer{std::move(g->store), g->answer.restricted_to(init_free_)};
}

std::optional<Goal> Search::next_solved() {
  if (end_ != End::Running) return std::nullopt;
  const Sig& sig = m_.sig;
  while (true) {
    if (over_budget()) {
      end_ = End::Budget;
      return std::nullopt;
    }
    if (frames_.empty()) {
      end_ = End::Exhausted;
      return std::nullopt;
    }
    Frame& f = frames_.back();
    Goal g;
    if (f.is_cs) {
      if (f.alts.empty()) {
        frames_.pop_back();
        continue;
      }
      Alternative alt = std::move(f.alts.back());
      f.alts.pop_back();
      ++stats_.solver_steps;
      Solver::StepResult r = solver_.step(alt, f.chi);
      if (r.kind == Solver::StepKind::Fail) continue;
      if (r.kind == Solver::StepKind::Branch) {
        for (auto it = r.alts.rbegin(); it != r.alts.rend(); ++it)
          f.alts.push_back(std::move(*it));
        continue;
      }
      // no solver rule fires: this alternative is solved w.r.t. chi
      g = f.base;
      g.store = std::move(alt.store);
      g.sf_dirty = !f.chi.empty();
      if (!alt.sub.empty() && !goal_apply(sig, alt.sub, g)) continue;
      ++stats_.steps;
      emit("CS  >>" + store_s(sig, g.store) + "<<  " + goal_s(sig, g));
    } else {
      if (f.goals.empty()) {
        frames_.pop_back();
        continue;
      }
      g = std::move(f.goals.back());
      f.goals.pop_back();
      std::string label = std::move(f.labels.back());
      f.labels.pop_back();
      if (!label.empty()) {
        ++stats_.steps;
        emit(label);
      }
    }
    // drive this goal deterministically until it ends or branches
    while (true) {
      if (over_budget()) {
        end_ = End::Budget;
        return std::nullopt;
      }
      if (opts_.check_invariants && watch_ < 0) {
        for (auto& b : check_admissible(m_, g))
          violations_.push_back(std::move(b));
      }
      StepOut out = step_goal(g);
      if (out.k == K::Progress) {
        ++stats_.steps;
        emit(out.line);
        continue;
      }
      if (out.k == K::Solved) return g;
      if (out.k == K::Fail) {
        ++stats_.steps;
        emit(out.line);
        break;
      }
      if (out.k == K::Choice) {
        Frame nf;
        for (size_t j = out.children.size(); j-- > 0;) {
          nf.goals.push_back(std::move(out.children[j]));
          nf.labels.push_back(std::move(out.labels[j]));
        }
        frames_.push_back(std::move(nf));
        break;
      }
      if (out.k == K::Cs) {
        Frame nf;
        nf.is_cs = true;
        nf.chi = std::move(out.chi);
        Store st = std::move(g.store);
        g.store = Store{};
        nf.base = std::move(g);
        nf.alts.push_back(Alternative{std::move(st), Subst{}});
        ++stats_.solver_calls;
        frames_.push_back(std::move(nf));
        break;
      }
      // flounder: drop the branch but remember why
      ++stats_.floundered;
      flounder_note_ = std::move(out.note);
      emit("flounder: " + flounder_note_);
      break;
    }
  }
}

Search::StepOut Search::step_goal(Goal& g) {
  const Sig& sig = m_.sig;
  StepOut out;

  // --- classify the pending surface constraints ---------------------------
  // 0 = has a non-pattern argument (flattening will make progress)
  // 1 = ready (normalized constraints cached below)
  // 2 = suspended (pattern arguments, but the spine is not ready yet)
  // 3 = bare boolean condition (desugars to `c == true`)
  struct Probe {
    int kind = 3;
    std::optional<std::vector<Constraint>> cs;
  };
  std::vector<Probe> probe(g.pending.size());
  for (size_t i = 0; i < g.pending.size(); ++i) {
    const TermPtr& c = g.pending[i];
    if (c->kind != TermKind::App) continue;
    SurfaceClass cl = classify_symbol(sig, c->head);
    if (cl == SurfaceClass::NotConstraint ||
        static_cast<int>(c->args.size()) != sig.info(c->head).arity)
      continue;
    bool allpat = true;
    for (const auto& a : c->args) allpat = allpat && is_pattern(sig, a);
    if (!allpat) {
      probe[i].kind = 0;
      continue;
    }
    auto r = normalize_notation(sig, m_.vars, c->head, c->args, true_term(sig));
    if (r) {
      probe[i].kind = 1;
      probe[i].cs = std::move(r);
    } else {
      probe[i].kind = 2;
    }
  }

  // --- demanded variables ---------------------------------------------------
  std::set<VarId> demand = solver_.demanded(g.store);
  for (size_t i = 0; i < g.pending.size(); ++i)
    if (probe[i].kind == 2) collect_vars(g.pending[i], demand);
  for (const auto& p : g.prods) {
    // a primitive-headed production that cannot be posted yet blocks on the
    // variables of its argument spine
    if (p.lhs->kind != TermKind::App) continue;
    const SymbolInfo& inf = sig.info(p.lhs->head);
    if (inf.kind != SymKind::Primitive ||
        static_cast<int>(p.lhs->args.size()) != inf.arity)
      continue;
    SurfaceClass cl = classify_symbol(sig, p.lhs->head);
    if (cl == SurfaceClass::NotConstraint) continue;
    bool allpat = true;
    for (const auto& a : p.lhs->args) allpat = allpat && is_pattern(sig, a);
    if (!allpat) continue;
    TermPtr target = reifiable_class(cl) ? p.rhs : true_term(sig);
    auto r = normalize_notation(sig, m_.vars, p.lhs->head, p.lhs->args, target);
    if (!r) collect_vars(p.lhs, demand);
  }
  if (watch_ >= 0) demand.insert(watch_);
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& p : g.prods) {
      if (p.lhs->kind != TermKind::FlexApp || demand.count(p.lhs->var))
        continue;
      if (p.rhs->kind != TermKind::Var || demand.count(p.rhs->var)) {
        demand.insert(p.lhs->var);
        changed = true;
      }
    }
  }

  // --- solved? ----------------------------------------------------------------
  static const std::set<VarId> kNone;
  if (watch_ < 0) {
    if (g.prods.empty() && g.pending.empty() &&
        solver_.solved(g.store, kNone)) {
      out.k = K::Solved;
      return out;
    }
  } else if (hnf_ready(g, demand)) {
    out.k = K::Solved;
    return out;
  }

  // --- 1. deterministic production rules --------------------------------------
  for (size_t i = 0; i < g.prods.size(); ++i) {
    int r = det_production(g, i, demand, &out);
    if (r != 0) return out;
  }

  // --- 2. move a pending constraint into the store ----------------------------
  for (size_t i = 0; i < g.pending.size(); ++i) {
    if (probe[i].kind == 2) continue;
    TermPtr c = g.pending[i];
    std::string sel = raw_str(sig, c);
    if (probe[i].kind == 1) {
      g.pending.erase(g.pending.begin() + i);
      for (auto& k : *probe[i].cs) g.store.add(std::move(k));
      g.sf_dirty = true;
    } else if (probe[i].kind == 0) {
      std::vector<TermPtr> pargs = c->args;
      for (auto& a : pargs) {
        if (is_pattern(sig, a)) continue;
        VarId nv = m_.vars.fresh();
        g.existential.insert(nv);
        g.prods.push_back({a, mk_var(nv)});
        a = mk_var(nv);
      }
      g.pending.erase(g.pending.begin() + i);
      auto r2 = normalize_notation(sig, m_.vars, c->head, pargs,
                                   true_term(sig));
      if (r2) {
        for (auto& k : *r2) g.store.add(std::move(k));
        g.sf_dirty = true;
      } else {
        g.pending.insert(g.pending.begin() + i,
                         mk_app(c->head, std::move(pargs)));
      }
    } else {
      // bare boolean condition: it must narrow to true
      g.pending.erase(g.pending.begin() + i);
      if (is_pattern(sig, c)) {
        g.store.add(SeqC{c, true_term(sig), res_true(), false});
      } else {
        VarId nv = m_.vars.fresh();
        g.existential.insert(nv);
        g.prods.push_back({c, mk_var(nv)});
        g.store.add(SeqC{mk_var(nv), true_term(sig), res_true(), false});
      }
      g.sf_dirty = true;
    }
    out.k = K::Progress;
    out.line = "AC  >>" + sel + "<<  " + goal_s(sig, g);
    return out;
  }

  // --- 3. refutability probe ----------------------------------------------------
  if (g.sf_dirty && !(g.store.cs.empty() && g.store.doms.empty())) {
    g.sf_dirty = false;
    ++stats_.solver_calls;
    if (solver_.refutable(g.store)) {
      out.k = K::Fail;
      out.line = "SF  >>" + store_s(sig, g.store) + "<<  fail";
      return out;
    }
  }

  // --- 4. solve the store once no produced variable needs protection -------------
  std::set<VarId> produced = produced_vars(g);
  if (produced.empty() && !solver_.solved(g.store, kNone)) {
    out.k = K::Cs;
    return out;
  }

  // --- 5. unfold a demanded defined-function application -------------------------
  for (size_t i = 0; i < g.prods.size(); ++i) {
    const Production& p = g.prods[i];
    if (p.lhs->kind != TermKind::App) continue;
    const SymbolInfo& inf = sig.info(p.lhs->head);
    if (inf.kind != SymKind::Defined ||
        static_cast<int>(p.lhs->args.size()) < inf.arity)
      continue;
    if (p.rhs->kind == TermKind::Var && !demand.count(p.rhs->var)) continue;
    const std::vector<int>* rs = m_.prog.rules_for(p.lhs->head);
    std::string sel = raw_str(sig, p.lhs) + " -> " + raw_str(sig, p.rhs);
    if (rs) {
      for (int ri : *rs) {
        const ProgramRule& rule = m_.prog.rules[ri];
        Goal child;
        if (!df_child(g, i, rule, &child)) continue;
        out.labels.push_back("DF  >>" + sel + "<<  rule at " +
                             rule.loc.str() + "  " + goal_s(sig, child));
        out.children.push_back(std::move(child));
      }
    }
    if (out.children.empty()) {
      out.k = K::Fail;
      out.line = "DF  >>" + sel + "<<  fail (no applicable rule)";
      return out;
    }
    out.k = K::Choice;
    return out;
  }

  // --- 6. enumerate bindings for a demanded flexible head ------------------------
  for (size_t i = 0; i < g.prods.size(); ++i) {
    const Production& p = g.prods[i];
    if (p.lhs->kind != TermKind::FlexApp || !demand.count(p.lhs->var))
      continue;
    VarId fv = p.lhs->var;
    int nargs = static_cast<int>(p.lhs->args.size());
    std::string sel = raw_str(sig, p.lhs) + " -> " + raw_str(sig, p.rhs);
    for (int k = 0; k <= opts_.ho_depth; ++k) {
      for (SymbolId sy = 0; sy < sig.num_symbols(); ++sy) {
        const SymbolInfo& inf = sig.info(sy);
        if (inf.arity < nargs + k) continue;
        Goal child = g;
        std::vector<TermPtr> ys;
        for (int j = 0; j < k; ++j) {
          VarId nv = m_.vars.fresh();
          child.existential.insert(nv);
          ys.push_back(mk_var(nv));
        }
        TermPtr bt = mk_app(sy, std::move(ys));
        Subst b;
        b.bind(fv, bt);
        if (!goal_apply(sig, b, child)) continue;
        out.labels.push_back("HO  >>" + sel + "<<  _v" + std::to_string(fv) +
                             " -> " + raw_str(sig, bt) + "  " +
                             goal_s(sig, child));
        out.children.push_back(std::move(child));
      }
    }
    if (out.children.empty()) {
      out.k = K::Fail;
      out.line = "HO  >>" + sel + "<<  fail (no candidate binding)";
      return out;
    }
    out.k = K::Choice;
    return out;
  }

  // --- 7. last resort: solve while protecting the produced variables -------------
  if (!solver_.solved(g.store, produced)) {
    out.k = K::Cs;
    out.chi = std::move(produced);
    return out;
  }

  // --- 8. nothing applies ---------------------------------------------------------
  out.k = K::Flounder;
  out.note = describe_stuck(sig, g);
  return out;
}

int Search::det_production(Goal& g, size_t i, const std::set<VarId>& demand,
                           StepOut* out) {
  const Sig& sig = m_.sig;
  const Production pr = g.prods[i];  // by value: the slot may be erased
  const TermPtr& l = pr.lhs;
  const TermPtr& r = pr.rhs;
  std::string sel = raw_str(sig, l) + " -> " + raw_str(sig, r);
  const bool lpat = is_pattern(sig, l);

  auto progress = [&](const char* tag) {
    out->k = K::Progress;
    out->line = std::string(tag) + "  >>" + sel + "<<  " + goal_s(sig, g);
    return 1;
  };
  auto fail = [&](const char* tag, const char* why) {
    out->k = K::Fail;
    out->line = std::string(tag) + "  >>" + sel + "<<  " + why;
    return -1;
  };

  // SP: pattern -> variable binds the produced variable at once
  if (lpat && r->kind == TermKind::Var) {
    VarId x = r->var;
    if (occurs(x, l)) return fail("CF", "fail (cyclic binding)");
    g.prods.erase(g.prods.begin() + i);
    Subst s;
    s.bind(x, l);
    if (!goal_apply(sig, s, g)) return fail("SF", "fail (store)");
    return progress("SP");
  }

  // Binding: variable -> non-variable pattern instantiates the variable
  if (l->kind == TermKind::Var && r->kind != TermKind::Var) {
    VarId y = l->var;
    if (occurs(y, r)) return fail("CF", "fail (cyclic binding)");
    g.prods.erase(g.prods.begin() + i);
    Subst s;
    s.bind(y, r);
    if (!goal_apply(sig, s, g)) return fail("SF", "fail (store)");
    return progress("BD");
  }

  // Decomposition or clash between rigid shells
  if (r->kind != TermKind::Var && rigid_shell(sig, l)) {
    bool same = false;
    if (l->kind == TermKind::Int && r->kind == TermKind::Int)
      same = l->ival == r->ival;
    else if (l->kind == TermKind::Tuple && r->kind == TermKind::Tuple)
      same = l->args.size() == r->args.size();
    else if (l->kind == TermKind::App && r->kind == TermKind::App)
      same = l->head == r->head && l->args.size() == r->args.size();
    if (!same) return fail("CF", "fail (clash)");
    std::vector<Production> sub;
    for (size_t j = 0; j < l->args.size(); ++j)
      sub.push_back({l->args[j], r->args[j]});
    g.prods.erase(g.prods.begin() + i);
    g.prods.insert(g.prods.begin() + i, sub.begin(), sub.end());
    return progress("DC");
  }

  // Imitation: a rigid shell feeds a demanded variable one layer at a time
  if (r->kind == TermKind::Var && rigid_shell(sig, l) &&
      demand.count(r->var)) {
    std::vector<TermPtr> ys;
    std::vector<Production> sub;
    for (const auto& a : l->args) {
      VarId nv = m_.vars.fresh();
      g.existential.insert(nv);
      ys.push_back(mk_var(nv));
      sub.push_back({a, mk_var(nv)});
    }
    TermPtr shell = l->kind == TermKind::Tuple
                        ? mk_tuple(std::move(ys))
                        : mk_app(l->head, std::move(ys));
    g.prods.erase(g.prods.begin() + i);
    g.prods.insert(g.prods.begin() + i, sub.begin(), sub.end());
    Subst s;
    s.bind(r->var, shell);
    if (!goal_apply(sig, s, g)) return fail("SF", "fail (store)");
    return progress("IM");
  }

  // Elimination: nothing demands or uses the produced variable, so the
  // whole (possibly undefined) computation is discarded unevaluated
  if (r->kind == TermKind::Var && !demand.count(r->var) &&
      !occurs_elsewhere(g, i, r->var)) {
    g.prods.erase(g.prods.begin() + i);
    return progress("EL");
  }

  // Posting: a fully applied primitive-constraint head moves to the store
  if (l->kind == TermKind::App) {
    const SymbolInfo& inf = sig.info(l->head);
    if (inf.kind == SymKind::Primitive &&
        static_cast<int>(l->args.size()) == inf.arity) {
      SurfaceClass cl = classify_symbol(sig, l->head);
      if (cl != SurfaceClass::NotConstraint) {
        bool reif = reifiable_class(cl);
        if (!reif && r->kind != TermKind::Var && !is_true_app(sig, r))
          return fail("CF", "fail (constraint result can only be true)");
        std::vector<TermPtr> pargs = l->args;
        std::vector<Production> sub;
        for (auto& a : pargs) {
          if (is_pattern(sig, a)) continue;
          VarId nv = m_.vars.fresh();
          g.existential.insert(nv);
          sub.push_back({a, mk_var(nv)});
          a = mk_var(nv);
        }
        TermPtr target = reif ? r : true_term(sig);
        auto cs = normalize_notation(sig, m_.vars, l->head, pargs, target);
        if (!cs && sub.empty()) return 0;  // spine not ready: suspend
        g.prods.erase(g.prods.begin() + i);
        g.prods.insert(g.prods.begin() + i, sub.begin(), sub.end());
        if (cs) {
          for (auto& k : *cs) g.store.add(std::move(k));
          g.sf_dirty = true;
          if (!reif && r->kind == TermKind::Var) {
            Subst s;
            s.bind(r->var, true_term(sig));
            if (!goal_apply(sig, s, g)) return fail("SF", "fail (store)");
          }
        } else {
          g.prods.insert(g.prods.begin() + i + sub.size(),
                         Production{mk_app(l->head, std::move(pargs)), r});
        }
        return progress("AC");
      }
    }
  }
  return 0;
}

bool Search::df_child(const Goal& g, size_t i, const ProgramRule& rule,
                      Goal* childp) {
  const Sig& sig = m_.sig;
  Goal child = g;
  Production pr = child.prods[i];
  child.prods.erase(child.prods.begin() + i);
  int ar = static_cast<int>(rule.lhs.size());
  Subst ren;
  std::vector<Production> sub;
  try {
    for (int j = 0; j < ar; ++j) {
      const TermPtr& param = rule.lhs[j];
      const TermPtr& arg = pr.lhs->args[j];
      if (param->kind == TermKind::Var) {
        if (ren.binds(param->var)) {
          // non-linear pattern: match against the fused copy
          sub.push_back({arg, *ren.lookup(param->var)});
        } else if (is_pattern(sig, arg)) {
          ren.bind(param->var, arg);
        } else {
          VarId nv = m_.vars.fresh();
          child.existential.insert(nv);
          ren.bind(param->var, mk_var(nv));
          sub.push_back({arg, mk_var(nv)});
        }
      } else {
        for (VarId v : vars_of(param)) {
          if (ren.binds(v)) continue;
          VarId nv = m_.vars.fresh();
          child.existential.insert(nv);
          ren.bind(v, mk_var(nv));
        }
        sub.push_back({arg, ren.apply(param)});
      }
    }
    std::set<VarId> rest;
    collect_vars(rule.rhs, rest);
    for (const auto& c : rule.conds) collect_vars(c, rest);
    for (VarId v : rest) {
      if (ren.binds(v)) continue;
      VarId nv = m_.vars.fresh();
      child.existential.insert(nv);
      ren.bind(v, mk_var(nv));
    }
    TermPtr rhs2 = ren.apply(rule.rhs);
    if (static_cast<int>(pr.lhs->args.size()) > ar) {
      if (rhs2->kind != TermKind::Var && rhs2->kind != TermKind::App &&
          rhs2->kind != TermKind::FlexApp)
        return false;  // extra arguments applied to a non-function
      std::vector<TermPtr> extra(pr.lhs->args.begin() + ar,
                                 pr.lhs->args.end());
      rhs2 = mk_applied(rhs2, std::move(extra));
    }
    sub.push_back({rhs2, pr.rhs});
    child.prods.insert(child.prods.begin() + i, sub.begin(), sub.end());
    for (const auto& c : rule.conds) child.pending.push_back(ren.apply(c));
  } catch (const std::logic_error&) {
    return false;
  }
  *childp = std::move(child);
  return true;
}

bool Search::hnf_ready(Goal& g, const std::set<VarId>& demand) {
  if (!g.pending.empty()) return false;
  for (const auto& p : g.prods) {
    if (p.rhs->kind != TermKind::Var) return false;
    if (demand.count(p.rhs->var)) return false;
  }
  const TermPtr* b = g.answer.lookup(watch_);
  if (!b || (*b)->kind == TermKind::Var) {
    // either unbound or bound to a bare variable: head-normal only when no
    // production could still refine it
    if (!g.prods.empty()) return false;
  }
  return solver_.solved(g.store, produced_vars(g));
}

std::vector<Answer> solve_goal(Module& m, const Goal& g, int max_answers,
                               SearchOptions opts) {
  Search s(m, g, std::move(opts));
  std::vector<Answer> out;
  while (max_answers < 0 || static_cast<int>(out.size()) < max_answers) {
    auto a = s.next();
    if (!a) break;
    out.push_back(std::move(*a));
  }
  return out;
}

std::vector<HnfResult> hnf(Module& m, const TermPtr& e, int max_results,
                           SearchOptions opts) {
  Goal g;
  VarId x = m.vars.fresh();
  g.prods.push_back({e, mk_var(x)});
  std::set<VarId> evars = vars_of(e);
  Search s(m, std::move(g), std::move(opts));
  s.watch_ = x;
  std::vector<HnfResult> out;
  while (max_results < 0 || static_cast<int>(out.size()) < max_results) {
    auto og = s.next_solved();
    if (!og) break;
    std::map<VarId, TermPtr> producers;
    for (const auto& p : og->prods) producers[p.rhs->var] = p.lhs;
    // Read the watched binding back, splicing each producer's left-hand
    // side in place of the variable it produces.
    std::function<TermPtr(const TermPtr&)> expand =
        [&](const TermPtr& t) -> TermPtr {
      switch (t->kind) {
        case TermKind::Var: {
          auto it = producers.find(t->var);
          return it == producers.end() ? t : expand(it->second);
        }
        case TermKind::App: {
          std::vector<TermPtr> as;
          for (const auto& a : t->args) as.push_back(expand(a));
          return mk_app(t->head, std::move(as));
        }
        case TermKind::Tuple: {
          std::vector<TermPtr> as;
          for (const auto& a : t->args) as.push_back(expand(a));
          return mk_tuple(std::move(as));
        }
        case TermKind::FlexApp: {
          std::vector<TermPtr> as;
          for (const auto& a : t->args) as.push_back(expand(a));
          auto it = producers.find(t->var);
          if (it == producers.end()) return mk_flex(t->var, std::move(as));
          return mk_applied(expand(it->second), std::move(as));
        }
        default:
          return t;
      }
    };
    const TermPtr* b = og->answer.lookup(x);
    TermPtr t0 = b ? *b : mk_var(x);
    HnfResult hr;
    hr.term = expand(t0);
    hr.sub = og->answer.restricted_to(evars);
    hr.store = std::move(og->store);
    out.push_back(std::move(hr));
  }
  return out;
}

}  // namespace cflpfd
