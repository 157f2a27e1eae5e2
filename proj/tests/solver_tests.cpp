#include "doctest.h"

#include <algorithm>

#include "cflpfd/solver.hpp"
#include "exactness.hpp"
#include "support.hpp"

using namespace cflpfd;
using testsup::NatSig;

namespace {

// Runs the solver to quiescence and renders each alternative's answer
// substitution restricted to `show`, e.g. "X=s(K) R=true".
std::vector<std::string> answers(NatSig& F, const Store& st,
                                 const std::set<VarId>& chi,
                                 const std::vector<std::pair<std::string, VarId>>& show) {
  Solver solver(F.sig, F.vars);
  std::vector<std::string> out;
  for (const auto& alt : solver.solve(st, chi)) {
    std::string line;
    for (const auto& [name, v] : show) {
      const TermPtr* t = alt.sub.lookup(v);
      if (!t) continue;
      if (!line.empty()) line += ' ';
      line += name + "=" + raw_str(F.sig, *t);
    }
    out.push_back(line);
  }
  return out;
}

IntDomain dom_of(const std::vector<Alternative>& alts, size_t i, VarId v) {
  REQUIRE(i < alts.size());
  auto it = alts[i].store.doms.find(v);
  REQUIRE(it != alts[i].store.doms.end());
  return it->second;
}

}  // namespace

TEST_CASE("reified disequation splits into the three classic alternatives") {
  NatSig F;
  VarId A = F.vars.fresh("A"), B = F.vars.fresh("B"), Z = F.vars.fresh("Z");
  VarId X = F.vars.fresh("X"), K = F.vars.fresh("K"), R = F.vars.fresh("R");

  Store st;
  st.add(ArithC{AOp::Add, iarg_var(A), iarg_var(B), Rel::LT, iarg_var(Z)});
  st.add(SeqC{mk_var(X), F.s(mk_var(K)), res_var(R), false});  // (X == s K) == R

  Solver solver(F.sig, F.vars);
  auto alts = solver.solve(st, {});
  REQUIRE(alts.size() == 3);

  // First alternative: R=true via the equality branch, X bound to s K,
  // leaving the reflexive residue K == K.
  {
    const auto& a = alts[0];
    const TermPtr* r = a.sub.lookup(R);
    REQUIRE(r);
    CHECK(raw_str(F.sig, *r) == "true");
    const TermPtr* x = a.sub.lookup(X);
    REQUIRE(x);
    CHECK(term_eq(*x, F.s(mk_var(K))));
    REQUIRE(a.store.cs.size() == 2);  // arithmetic residual + K == K
    auto* q = std::get_if<SeqC>(&a.store.cs[1]);
    REQUIRE(q);
    CHECK(term_eq(q->l, q->r));
    CHECK(q->l->kind == TermKind::Var);
    CHECK(q->l->var == K);
    CHECK(q->res.k == Res::True);
  }
  // Second: R=false with X bound to the sibling constructor z.
  {
    const auto& a = alts[1];
    CHECK(raw_str(F.sig, *a.sub.lookup(R)) == "false");
    CHECK(term_eq(*a.sub.lookup(X), F.z()));
    CHECK(a.store.cs.size() == 1);  // only the arithmetic residual
  }
  // Third: R=false with X = s M and the residual disequation M /= K.
  {
    const auto& a = alts[2];
    CHECK(raw_str(F.sig, *a.sub.lookup(R)) == "false");
    const TermPtr* x = a.sub.lookup(X);
    REQUIRE(x);
    REQUIRE((*x)->kind == TermKind::App);
    CHECK((*x)->head == F.s_s);
    REQUIRE((*x)->args.size() == 1);
    REQUIRE((*x)->args[0]->kind == TermKind::Var);
    VarId M = (*x)->args[0]->var;
    CHECK(M != K);
    REQUIRE(a.store.cs.size() == 2);
    auto* q = std::get_if<SeqC>(&a.store.cs[1]);
    REQUIRE(q);
    CHECK(q->res.k == Res::False);
    CHECK(q->l->kind == TermKind::Var);
    CHECK(q->l->var == M);
    CHECK(q->r->kind == TermKind::Var);
    CHECK(q->r->var == K);
  }
  // The untouched arithmetic constraint survives in every alternative.
  for (const auto& a : alts) CHECK(std::get_if<ArithC>(&a.store.cs[0]));
}

TEST_CASE("reified comparison explores both truth values with pruning") {
  NatSig F;
  VarId X = F.vars.fresh("X"), Y = F.vars.fresh("Y"), L = F.vars.fresh("L");
  Store st;
  st.doms[X] = IntDomain::range(10, 20);
  st.doms[Y] = IntDomain::range(10, 20);
  st.add(CmpC{Rel::LE, iarg_var(X), iarg_var(Y), res_var(L)});

  Solver solver(F.sig, F.vars);
  auto alts = solver.solve(st, {});
  REQUIRE(alts.size() == 2);

  CHECK(raw_str(F.sig, *alts[0].sub.lookup(L)) == "true");
  CHECK(dom_of(alts, 0, X).str() == "10..20");
  CHECK(dom_of(alts, 0, Y).str() == "10..20");

  CHECK(raw_str(F.sig, *alts[1].sub.lookup(L)) == "false");
  CHECK(dom_of(alts, 1, X).str() == "11..20");  // X > Y
  CHECK(dom_of(alts, 1, Y).str() == "10..19");
}

TEST_CASE("comparison propagation tightens interval bounds") {
  NatSig F;
  VarId X = F.vars.fresh("X"), Y = F.vars.fresh("Y");
  Store st;
  st.doms[X] = IntDomain::range(0, 10);
  st.doms[Y] = IntDomain::range(0, 5);
  st.add(CmpC{Rel::LT, iarg_var(X), iarg_var(Y), res_true()});

  Solver solver(F.sig, F.vars);
  auto alts = solver.solve(st, {});
  REQUIRE(alts.size() == 1);
  CHECK(dom_of(alts, 0, X).str() == "0..4");
  CHECK(dom_of(alts, 0, Y).str() == "1..5");
  CHECK(alts[0].store.cs.size() == 1);  // the comparison stays as a residual
}

TEST_CASE("addition intervals propagate in both directions") {
  NatSig F;
  VarId X = F.vars.fresh("X"), Y = F.vars.fresh("Y"), Z = F.vars.fresh("Z");
  Store st;
  st.doms[X] = IntDomain::range(1, 3);
  st.doms[Y] = IntDomain::range(2, 5);
  st.doms[Z] = IntDomain::range(0, 4);
  st.add(ArithC{AOp::Add, iarg_var(X), iarg_var(Y), Rel::EQ, iarg_var(Z)});

  Solver solver(F.sig, F.vars);
  auto alts = solver.solve(st, {});
  REQUIRE(alts.size() == 1);
  CHECK(dom_of(alts, 0, X).str() == "1..2");
  CHECK(dom_of(alts, 0, Y).str() == "2..3");
  CHECK(dom_of(alts, 0, Z).str() == "3..4");
}

TEST_CASE("multiplication back-propagation stays sound") {
  NatSig F;
  VarId X = F.vars.fresh("X"), Z = F.vars.fresh("Z");
  Store st;
  st.doms[X] = IntDomain::range(-100, 100);
  st.doms[Z] = IntDomain::range(1, 10);
  st.add(ArithC{AOp::Mul, iarg_var(X), iarg(3), Rel::EQ, iarg_var(Z)});

  Solver solver(F.sig, F.vars);
  auto alts = solver.solve(st, {});
  REQUIRE(alts.size() == 1);
  IntDomain dx = dom_of(alts, 0, X);
  // Sound: keeps every real solution {1, 2, 3}; allowed to be a bit loose.
  for (long long v : {1, 2, 3}) CHECK(dx.contains(v));
  CHECK(dx.min() >= 0);
  CHECK(dx.max() <= 4);
}

TEST_CASE("naive labeling enumerates ascending, leftmost first") {
  NatSig F;
  VarId X = F.vars.fresh("X"), Y = F.vars.fresh("Y");
  Store st;
  st.doms[X] = IntDomain::range(1, 3);
  st.doms[Y] = IntDomain::range(1, 3);
  st.add(CmpC{Rel::GT, iarg_var(X), iarg_var(Y), res_true()});
  LabelC lc;
  lc.vars = {iarg_var(X), iarg_var(Y)};
  st.add(lc);

  auto got = answers(F, st, {}, {{"X", X}, {"Y", Y}});
  std::vector<std::string> want = {"X=2 Y=1", "X=3 Y=1", "X=3 Y=2"};
  CHECK(got == want);
}

TEST_CASE("first-fail labeling picks the smallest domain first") {
  NatSig F;
  VarId X = F.vars.fresh("X"), Y = F.vars.fresh("Y");
  Store st;
  st.doms[X] = IntDomain::range(1, 9);
  st.doms[Y] = IntDomain::range(1, 2);
  LabelC lc;
  lc.first_fail = true;
  lc.vars = {iarg_var(X), iarg_var(Y)};
  st.add(lc);

  Solver solver(F.sig, F.vars);
  Alternative a{st, {}};
  auto r = solver.step(a, {});
  REQUIRE(r.kind == Solver::StepKind::Branch);
  CHECK(std::string(r.rule) == "label");
  REQUIRE(r.alts.size() == 2);  // Y (two values), not X (nine)
  CHECK(raw_str(F.sig, *r.alts[0].sub.lookup(Y)) == "1");
  CHECK(raw_str(F.sig, *r.alts[1].sub.lookup(Y)) == "2");
}

TEST_CASE("optimizing labeling returns only the best alternative") {
  NatSig F;
  VarId X = F.vars.fresh("X"), Y = F.vars.fresh("Y"), C = F.vars.fresh("C");

  auto make = [&](int optimize) {
    Store st;
    st.doms[X] = IntDomain::range(1, 5);
    st.doms[Y] = IntDomain::range(1, 5);
    st.add(ArithC{AOp::Add, iarg_var(X), iarg_var(Y), Rel::EQ, iarg_var(C)});
    st.add(CmpC{Rel::GE, iarg_var(X), iarg_var(Y), res_true()});  // symmetry break
    LabelC lc;
    lc.optimize = optimize;
    lc.objective = iarg_var(C);
    lc.vars = {iarg_var(X), iarg_var(Y)};
    st.add(lc);
    return st;
  };

  Solver smin(F.sig, F.vars);
  auto mins = smin.solve(make(1), {});
  REQUIRE(mins.size() == 1);
  CHECK(raw_str(F.sig, *mins[0].sub.lookup(X)) == "1");
  CHECK(raw_str(F.sig, *mins[0].sub.lookup(Y)) == "1");
  CHECK(raw_str(F.sig, *mins[0].sub.lookup(C)) == "2");

  Solver smax(F.sig, F.vars);
  auto maxs = smax.solve(make(2), {});
  REQUIRE(maxs.size() == 1);
  CHECK(raw_str(F.sig, *maxs[0].sub.lookup(C)) == "10");
  CHECK(raw_str(F.sig, *maxs[0].sub.lookup(X)) == "5");
  CHECK(raw_str(F.sig, *maxs[0].sub.lookup(Y)) == "5");
}

TEST_CASE("singleton domains bind their variables") {
  NatSig F;
  VarId X = F.vars.fresh("X"), Y = F.vars.fresh("Y");
  Store st;
  st.doms[X] = IntDomain::range(7, 7);
  st.doms[Y] = IntDomain::range(1, 2);
  st.add(CmpC{Rel::LT, iarg_var(X), iarg(10), res_true()});

  Solver solver(F.sig, F.vars);
  auto alts = solver.solve(st, {});
  REQUIRE(alts.size() == 1);
  CHECK(raw_str(F.sig, *alts[0].sub.lookup(X)) == "7");
  CHECK(!alts[0].sub.lookup(Y));  // non-singleton: stays a domain
  CHECK(dom_of(alts, 0, Y).str() == "1..2");
  CHECK(alts[0].store.cs.empty());  // 7 < 10 was discharged
}

TEST_CASE("membership lists are absorbed into domains") {
  NatSig F;
  VarId X = F.vars.fresh("X");

  SUBCASE("positive membership becomes the exact value set") {
    Store st;
    st.add(DomC{iarg_var(X), testsup::mklist(F.sig, {mk_int(2), mk_int(5), mk_int(6)}),
                res_true()});
    Solver solver(F.sig, F.vars);
    auto alts = solver.solve(st, {});
    REQUIRE(alts.size() == 1);
    CHECK(dom_of(alts, 0, X).str() == "2\\/5..6");
    CHECK(alts[0].store.cs.empty());
  }
  SUBCASE("negative membership punches holes in an existing domain") {
    Store st;
    st.doms[X] = IntDomain::range(1, 6);
    st.add(DomC{iarg_var(X), testsup::mklist(F.sig, {mk_int(2), mk_int(5)}),
                res_false()});
    Solver solver(F.sig, F.vars);
    auto alts = solver.solve(st, {});
    REQUIRE(alts.size() == 1);
    CHECK(dom_of(alts, 0, X).str() == "1\\/3..4\\/6");
  }
  SUBCASE("negative membership without a domain is kept as a residual") {
    Store st;
    st.add(DomC{iarg_var(X), testsup::mklist(F.sig, {mk_int(2)}), res_false()});
    Solver solver(F.sig, F.vars);
    auto alts = solver.solve(st, {});
    REQUIRE(alts.size() == 1);
    CHECK(alts[0].store.cs.size() == 1);
  }
  SUBCASE("membership result is entailed from the domain") {
    Store st;
    st.doms[X] = IntDomain::range(5, 6);
    VarId R = F.vars.fresh("R");
    st.add(DomC{iarg_var(X), testsup::mklist(F.sig, {mk_int(4), mk_int(5), mk_int(6)}),
                res_var(R)});
    Solver solver(F.sig, F.vars);
    auto alts = solver.solve(st, {});
    REQUIRE(alts.size() == 1);
    CHECK(raw_str(F.sig, *alts[0].sub.lookup(R)) == "true");
  }
  SUBCASE("an unsorted ground list can only answer false") {
    Store st;
    VarId R = F.vars.fresh("R");
    st.add(DomC{iarg(1), testsup::mklist(F.sig, {mk_int(3), mk_int(1)}),
                res_var(R)});
    Solver solver(F.sig, F.vars);
    auto alts = solver.solve(st, {});
    REQUIRE(alts.size() == 1);
    CHECK(raw_str(F.sig, *alts[0].sub.lookup(R)) == "false");
  }
}

TEST_CASE("arithmetic with one unknown binds it exactly") {
  NatSig F;
  VarId X = F.vars.fresh("X");
  Solver solver(F.sig, F.vars);

  auto one = [&](Constraint c) {
    Store st;
    st.add(std::move(c));
    return solver.solve(st, {});
  };

  auto a1 = one(ArithC{AOp::Add, iarg(3), iarg_var(X), Rel::EQ, iarg(10)});
  REQUIRE(a1.size() == 1);
  CHECK(raw_str(F.sig, *a1[0].sub.lookup(X)) == "7");

  auto a2 = one(ArithC{AOp::Sub, iarg_var(X), iarg(4), Rel::EQ, iarg(-1)});
  REQUIRE(a2.size() == 1);
  CHECK(raw_str(F.sig, *a2[0].sub.lookup(X)) == "3");

  auto a3 = one(ArithC{AOp::Mul, iarg(3), iarg_var(X), Rel::EQ, iarg(12)});
  REQUIRE(a3.size() == 1);
  CHECK(raw_str(F.sig, *a3[0].sub.lookup(X)) == "4");

  // 3 * X == 10 has no integer solution.
  CHECK(one(ArithC{AOp::Mul, iarg(3), iarg_var(X), Rel::EQ, iarg(10)}).empty());
  // Division by zero never succeeds.
  CHECK(one(ArithC{AOp::Div, iarg(5), iarg(0), Rel::EQ, iarg_var(X)}).empty());
  // Truncating division: -7 / 2 == -3.
  auto a4 = one(ArithC{AOp::Div, iarg(-7), iarg(2), Rel::EQ, iarg_var(X)});
  REQUIRE(a4.size() == 1);
  CHECK(raw_str(F.sig, *a4[0].sub.lookup(X)) == "-3");
}

TEST_CASE("equality indicators: rewrite, entailment and deferred split") {
  NatSig F;
  Solver solver(F.sig, F.vars);

  SUBCASE("ground sides fix the indicator") {
    VarId B = F.vars.fresh("B");
    Store st;
    st.add(IndC{iarg(4), iarg(4), iarg_var(B)});
    auto alts = solver.solve(st, {});
    REQUIRE(alts.size() == 1);
    CHECK(raw_str(F.sig, *alts[0].sub.lookup(B)) == "1");
  }
  SUBCASE("disjoint domains force the indicator to zero") {
    VarId X = F.vars.fresh("X"), B = F.vars.fresh("B");
    Store st;
    st.doms[X] = IntDomain::range(1, 3);
    st.add(IndC{iarg_var(X), iarg(9), iarg_var(B)});
    auto alts = solver.solve(st, {});
    REQUIRE(alts.size() == 1);
    CHECK(raw_str(F.sig, *alts[0].sub.lookup(B)) == "0");
  }
  SUBCASE("a known indicator becomes a (dis)equality") {
    VarId X = F.vars.fresh("X");
    Store st;
    st.doms[X] = IntDomain::range(1, 3);
    st.add(IndC{iarg_var(X), iarg(2), iarg(0)});
    auto alts = solver.solve(st, {});
    REQUIRE(alts.size() == 1);
    CHECK(dom_of(alts, 0, X).str() == "1\\/3");
  }
  SUBCASE("otherwise the indicator splits, ones first") {
    VarId X = F.vars.fresh("X"), B = F.vars.fresh("B");
    Store st;
    st.doms[X] = IntDomain::range(1, 2);
    st.add(IndC{iarg_var(X), iarg(2), iarg_var(B)});
    auto alts = solver.solve(st, {});
    REQUIRE(alts.size() == 2);
    CHECK(raw_str(F.sig, *alts[0].sub.lookup(B)) == "1");
    CHECK(raw_str(F.sig, *alts[0].sub.lookup(X)) == "2");
    CHECK(raw_str(F.sig, *alts[1].sub.lookup(B)) == "0");
    CHECK(raw_str(F.sig, *alts[1].sub.lookup(X)) == "1");
  }
}

TEST_CASE("definite failures are recognized") {
  NatSig F;
  Solver solver(F.sig, F.vars);
  VarId X = F.vars.fresh("X"), K = F.vars.fresh("K");

  auto fails = [&](Store st) { return solver.solve(st, {}).empty(); };

  Store occ;
  occ.add(SeqC{mk_var(X), F.s(mk_var(X)), res_true(), false});
  CHECK(fails(std::move(occ)));

  Store refl;
  refl.add(SeqC{mk_var(X), mk_var(X), res_false(), false});
  CHECK(fails(std::move(refl)));

  Store listrefl;
  listrefl.add(SeqC{testsup::mklist(F.sig, {mk_var(X)}),
                    testsup::mklist(F.sig, {mk_var(X)}), res_false(), false});
  CHECK(fails(std::move(listrefl)));

  Store clash;
  clash.add(SeqC{F.z(), F.s(mk_var(K)), res_true(), false});
  CHECK(fails(std::move(clash)));

  Store cmp;
  cmp.add(CmpC{Rel::LT, iarg(4), iarg(3), res_true()});
  CHECK(fails(std::move(cmp)));

  Store emptyrange;
  emptyrange.add(DomRangeC{{iarg_var(X)}, iarg(5), iarg(3)});
  CHECK(fails(std::move(emptyrange)));

  Store badind;
  badind.add(IndC{iarg_var(X), iarg(1), iarg(7)});
  CHECK(fails(std::move(badind)));
}

TEST_CASE("refutability scan spots inconsistent stores without search") {
  NatSig F;
  Solver solver(F.sig, F.vars);
  VarId V = F.vars.fresh("V");

  Store chain;  // 0 + 1 == V and V == 15 cannot both hold
  chain.add(ArithC{AOp::Add, iarg(0), iarg(1), Rel::EQ, iarg_var(V)});
  chain.add(SeqC{mk_var(V), mk_int(15), res_true(), false});
  CHECK(solver.refutable(chain));

  Store fine;
  fine.add(ArithC{AOp::Add, iarg(0), iarg(1), Rel::EQ, iarg_var(V)});
  fine.add(SeqC{mk_var(V), mk_int(1), res_true(), false});
  CHECK(!solver.refutable(fine));

  Store ground;
  ground.add(CmpC{Rel::LT, iarg(4), iarg(3), res_true()});
  CHECK(solver.refutable(ground));
}

TEST_CASE("protected variables are left to the narrowing engine") {
  NatSig F;
  Solver solver(F.sig, F.vars);
  VarId X = F.vars.fresh("X"), K = F.vars.fresh("K");

  // X == z with X protected: no rule may fire.
  Store st;
  st.add(SeqC{mk_var(X), F.z(), res_true(), false});
  CHECK(solver.solved(st, {X}));
  CHECK(!solver.solved(st, {}));

  // The unprotected side is bound instead when available.
  Store st2;
  st2.add(SeqC{mk_var(X), mk_var(K), res_true(), false});
  auto alts = solver.solve(st2, {X});
  REQUIRE(alts.size() == 1);
  REQUIRE(alts[0].sub.lookup(K));
  CHECK(term_eq(*alts[0].sub.lookup(K), mk_var(X)));
  CHECK(!alts[0].sub.lookup(X));
}

TEST_CASE("solved forms keep informative residuals only") {
  NatSig F;
  Solver solver(F.sig, F.vars);
  VarId X = F.vars.fresh("X"), Y = F.vars.fresh("Y");

  // A diseq between two unconstrained variables is a solved form.
  Store st;
  st.add(SeqC{mk_var(X), mk_var(Y), res_false(), false});
  CHECK(solver.solved(st, {}));

  // The reflexive residue left by binding is solved as well.
  Store refl;
  refl.add(SeqC{mk_var(X), mk_var(X), res_true(), false});
  CHECK(solver.solved(refl, {}));

  // t == t over ground totals is discharged, not kept.
  Store ground;
  ground.add(SeqC{F.s(F.z()), F.s(F.z()), res_true(), false});
  auto alts = solver.solve(ground, {});
  REQUIRE(alts.size() == 1);
  CHECK(alts[0].store.cs.empty());
}

TEST_CASE("demanded variables are computed per constraint shape") {
  NatSig F;
  Solver solver(F.sig, F.vars);
  VarId X = F.vars.fresh("X"), K = F.vars.fresh("K"), R = F.vars.fresh("R");

  auto dem = [&](Store st) { return solver.demanded(st); };

  {
    Store st;  // X /= s K demands X but not K
    st.add(SeqC{mk_var(X), F.s(mk_var(K)), res_false(), false});
    auto d = dem(std::move(st));
    CHECK(d.count(X));
    CHECK(!d.count(K));
  }
  {
    Store st;  // X == s K (true) demands everything
    st.add(SeqC{mk_var(X), F.s(mk_var(K)), res_true(), false});
    auto d = dem(std::move(st));
    CHECK(d.count(X));
    CHECK(d.count(K));
  }
  {
    Store st;  // reified: result and top-level sides
    st.add(SeqC{mk_var(X), F.s(mk_var(K)), res_var(R), false});
    auto d = dem(std::move(st));
    CHECK(d.count(X));
    CHECK(d.count(R));
    CHECK(!d.count(K));
  }
  {
    Store st;  // domain entries demand their variable
    st.doms[X] = IntDomain::range(1, 2);
    auto d = dem(std::move(st));
    CHECK(d.count(X));
  }
  {
    Store st;  // membership with a sorted ground list demands u even when
               // the result is false
    st.add(DomC{iarg_var(X), testsup::mklist(F.sig, {mk_int(1), mk_int(2)}),
                res_false()});
    CHECK(dem(std::move(st)).count(X));
  }
  {
    Store st;  // ... but an unsorted list does not (it is false anyway)
    st.add(DomC{iarg_var(X), testsup::mklist(F.sig, {mk_int(2), mk_int(1)}),
                res_false()});
    CHECK(!dem(std::move(st)).count(X));
  }
  {
    Store st;
    st.add(ArithC{AOp::Add, iarg_var(X), iarg(1), Rel::EQ, iarg_var(K)});
    auto d = dem(std::move(st));
    CHECK(d.count(X));
    CHECK(d.count(K));
  }
}

TEST_CASE("every solver step preserves the brute-force solution set") {
  NatSig F;
  testsup::ExactnessSuite suite(F, /*seed=*/20260816);
  auto stats = suite.run(/*n_stores=*/10000);
  CAPTURE(stats.stores);
  CAPTURE(stats.steps_checked);
  CAPTURE(stats.skipped);
  CHECK(stats.mismatches == 0);
  CHECK(stats.chi_violations == 0);
  CHECK(stats.demanded_violations == 0);
  CHECK(stats.stores >= 10000);
  CHECK(stats.steps_checked > 20000);  // the suite actually exercised steps
}
