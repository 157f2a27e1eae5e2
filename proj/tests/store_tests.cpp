#include "doctest.h"

#include "support.hpp"

using namespace cflpfd;
using testsup::NatSig;
using testsup::mklist;

namespace {

bool is_true_t(const Sig& sig, const TermPtr& t) {
  return t->kind == TermKind::App && t->head == sig.s_true;
}
bool is_false_t(const Sig& sig, const TermPtr& t) {
  return t->kind == TermKind::App && t->head == sig.s_false;
}

}  // namespace

TEST_CASE("strict equality evaluation") {
  NatSig f;
  const Sig& sig = f.sig;
  CHECK(is_true_t(sig, seq_eval(sig, f.s(f.z()), f.s(f.z()))));
  CHECK(is_false_t(sig, seq_eval(sig, mk_int(0), f.s(mk_bottom()))));
  // Identical but partial: no definite answer yet.
  CHECK(is_bottom(seq_eval(sig, f.s(mk_bottom()), f.s(mk_bottom()))));
  // Common refinements exist: undefined rather than false.
  CHECK(is_bottom(seq_eval(sig, f.s(mk_bottom()), f.s(f.z()))));
  CHECK(is_false_t(sig, seq_eval(sig, mk_int(1), mk_int(2))));
  CHECK(is_true_t(sig, seq_eval(sig, mk_int(2), mk_int(2))));
}

TEST_CASE("integer comparison and arithmetic evaluation") {
  NatSig f;
  const Sig& sig = f.sig;
  CHECK(is_bottom(leq_eval(sig, mk_bottom(), mk_int(3))));
  CHECK(is_true_t(sig, leq_eval(sig, mk_int(2), mk_int(3))));
  CHECK(is_false_t(sig, leq_eval(sig, mk_int(4), mk_int(3))));
  CHECK(is_bottom(leq_eval(sig, f.z(), mk_int(3))));

  CHECK(arith_eval(sig, AOp::Add, mk_int(2), mk_int(3))->ival == 5);
  CHECK(arith_eval(sig, AOp::Mul, mk_int(-2), mk_int(3))->ival == -6);
  // Division truncates toward zero and is undefined on divisor 0.
  CHECK(arith_eval(sig, AOp::Div, mk_int(-7), mk_int(2))->ival == -3);
  CHECK(arith_eval(sig, AOp::Div, mk_int(7), mk_int(-2))->ival == -3);
  CHECK(is_bottom(arith_eval(sig, AOp::Div, mk_int(7), mk_int(0))));
  CHECK(is_bottom(arith_eval(sig, AOp::Add, mk_bottom(), mk_int(1))));
}

TEST_CASE("membership evaluation") {
  NatSig f;
  const Sig& sig = f.sig;
  auto L = [&](std::vector<long long> ns, bool open = false) {
    std::vector<TermPtr> es;
    for (long long n : ns) es.push_back(mk_int(n));
    return mklist(sig, es, open ? mk_bottom() : nullptr);
  };
  CHECK(is_true_t(sig, domain_eval(sig, mk_int(2), L({1, 2, 3}))));
  CHECK(is_false_t(sig, domain_eval(sig, mk_int(5), L({1, 2, 3}))));
  CHECK(is_false_t(sig, domain_eval(sig, mk_int(2), L({}))));
  CHECK(is_false_t(sig, domain_eval(sig, mk_bottom(), L({}))));
  // An out-of-order adjacent pair refutes the list whatever follows.
  CHECK(is_false_t(sig, domain_eval(sig, mk_bottom(), L({2, 1}, true))));
  CHECK(is_false_t(sig, domain_eval(sig, mk_int(1), L({3, 3}))));
  // Open tail: membership may still become true later.
  CHECK(is_bottom(domain_eval(sig, mk_int(1), L({1, 2}, true))));
  CHECK(is_bottom(domain_eval(sig, mk_bottom(), L({1, 2}))));
  // Structurally non-integer element values can never be members.
  CHECK(is_false_t(sig, domain_eval(sig, f.z(), L({1, 2}))));

  CHECK(is_true_t(sig, indomain_eval(sig, mk_int(0))));
  CHECK(is_bottom(indomain_eval(sig, mk_bottom())));
  CHECK(is_bottom(indomain_eval(sig, f.z())));
}

TEST_CASE("primitive semantics: monotonicity and radicality") {
  NatSig f;
  auto U = testsup::table1_universe(f);
  auto rep = testsup::check_primitive_properties(f.sig, U);
  CHECK(rep.mono_violations == 0);
  CHECK(rep.radical_violations == 0);
  CHECK(rep.mono_checked > 100000);
}

TEST_CASE("constraint satisfaction under valuations") {
  NatSig f;
  const Sig& sig = f.sig;
  VarId x = f.vars.fresh("X"), r = f.vars.fresh("R"), k = f.vars.fresh("K");

  SeqC eq{mk_var(x), f.s(mk_var(k)), res_var(r), false};
  Valuation v;
  v[x] = f.s(f.z());
  v[k] = f.z();
  v[r] = mk_app(sig.s_true);
  CHECK(constraint_sat(sig, eq, v));
  v[r] = mk_app(sig.s_false);
  CHECK_FALSE(constraint_sat(sig, eq, v));
  // Definitely distinct values satisfy the false result.
  v[x] = mk_int(0);
  CHECK(constraint_sat(sig, eq, v));
  // An undefined side never satisfies either result.
  v[x] = mk_bottom();
  CHECK_FALSE(constraint_sat(sig, eq, v));
  v[r] = mk_app(sig.s_true);
  CHECK_FALSE(constraint_sat(sig, eq, v));

  ArithC a{AOp::Add, iarg_var(x), iarg(1), Rel::LT, iarg(5)};
  Valuation w;
  w[x] = mk_int(3);
  CHECK(constraint_sat(sig, a, w));
  w[x] = mk_int(4);
  CHECK_FALSE(constraint_sat(sig, a, w));

  IndC ind{iarg_var(x), iarg(2), iarg_var(r)};
  Valuation u;
  u[x] = mk_int(2);
  u[r] = mk_int(1);
  CHECK(constraint_sat(sig, ind, u));
  u[r] = mk_int(0);
  CHECK_FALSE(constraint_sat(sig, ind, u));
  u[x] = mk_int(3);
  CHECK(constraint_sat(sig, ind, u));
}

TEST_CASE("brute-force solutions") {
  NatSig f;
  const Sig& sig = f.sig;
  VarId x = f.vars.fresh("X");

  // X in [1..2] over the integers 0..3.
  Store st;
  st.add(DomC{iarg_var(x), mklist(sig, {mk_int(1), mk_int(2)}), res_true()});
  std::vector<TermPtr> ints;
  for (long long n = 0; n <= 3; ++n) ints.push_back(mk_int(n));
  auto sols = solutions_bruteforce(sig, st, ints);
  REQUIRE(sols.size() == 2);
  CHECK(sols[0].at(x)->ival == 1);
  CHECK(sols[1].at(x)->ival == 2);

  // A ground-false comparison has no solutions at all.
  Store bad;
  bad.add(CmpC{Rel::LT, iarg(4), iarg(3), res_true()});
  CHECK(solutions_bruteforce(sig, bad, ints).empty());

  // Every solution of seq X (s K) ->! R forces R total and X non-bottom.
  Store sq;
  VarId k = f.vars.fresh("K"), r = f.vars.fresh("R");
  sq.add(SeqC{mk_var(x), f.s(mk_var(k)), res_var(r), false});
  VarUniverse vu;
  vu[x] = {mk_int(0), f.s(mk_bottom()), f.s(f.z()), mk_bottom()};
  vu[k] = {mk_bottom(), f.z()};
  vu[r] = {mk_app(sig.s_true), mk_app(sig.s_false), mk_bottom()};
  auto sols2 = solutions_bruteforce(sig, sq, vu);
  CHECK(!sols2.empty());
  for (const auto& s : sols2) {
    CHECK(is_total(s.at(r)));
    CHECK_FALSE(is_bottom(s.at(x)));
  }
}

TEST_CASE("notation normalization produces the pinned shapes") {
  NatSig f;
  Sig& sig = f.sig;
  VarId x = f.vars.fresh("X"), y = f.vars.fresh("Y"), k = f.vars.fresh("K"),
        a = f.vars.fresh("A"), b = f.vars.fresh("B"), z2 = f.vars.fresh("Z");
  TermPtr tru = mk_app(sig.s_true);

  // X == s K  ~>  one strict equation with result true.
  auto n1 = normalize_notation(sig, f.vars, sig.lookup("=="),
                               {mk_var(x), f.s(mk_var(k))}, tru);
  REQUIRE(n1.has_value());
  REQUIRE(n1->size() == 1);
  auto* s1 = std::get_if<SeqC>(&(*n1)[0]);
  REQUIRE(s1);
  CHECK(s1->res.k == Res::True);
  CHECK_FALSE(s1->neg);

  // domain [X,Y] 1 3  ~>  one range constraint.
  auto n2 = normalize_notation(
      sig, f.vars, sig.lookup("domain"),
      {mklist(sig, {mk_var(x), mk_var(y)}), mk_int(1), mk_int(3)}, tru);
  REQUIRE(n2.has_value());
  REQUIRE(n2->size() == 1);
  auto* r2 = std::get_if<DomRangeC>(&(*n2)[0]);
  REQUIRE(r2);
  CHECK(r2->us.size() == 2);
  CHECK(r2->lo.val == 1);
  CHECK(r2->hi.val == 3);

  // A #+ B #< Z  ~>  one fused arithmetic comparison.
  SymbolId plus = sig.lookup("#+");
  auto n3 = normalize_notation(
      sig, f.vars, sig.lookup("#<"),
      {mk_app(plus, {mk_var(a), mk_var(b)}), mk_var(z2)}, tru);
  REQUIRE(n3.has_value());
  REQUIRE(n3->size() == 1);
  auto* a3 = std::get_if<ArithC>(&(*n3)[0]);
  REQUIRE(a3);
  CHECK(a3->op == AOp::Add);
  CHECK(a3->rel == Rel::LT);

  // Not yet flattened: both sides arithmetic.
  auto n4 = normalize_notation(
      sig, f.vars, sig.lookup("#<"),
      {mk_app(plus, {mk_var(a), mk_var(b)}), mk_app(plus, {mk_var(x), mk_var(y)})},
      tru);
  CHECK_FALSE(n4.has_value());
}

TEST_CASE("normalization preserves brute-force solutions") {
  NatSig f;
  Sig& sig = f.sig;
  std::vector<TermPtr> small;
  for (long long n = 0; n <= 3; ++n) small.push_back(mk_int(n));
  std::vector<TermPtr> wide;
  for (long long n = -10; n <= 12; ++n) wide.push_back(mk_int(n));

  auto run = [&](SymbolId head, std::vector<TermPtr> args,
                 std::function<bool(const Valuation&)> meaning,
                 const std::vector<VarId>& orig) {
    auto norm =
        normalize_notation(sig, f.vars, head, args, mk_app(sig.s_true));
    REQUIRE(norm.has_value());
    Store st;
    for (auto& c : *norm) st.add(std::move(c));
    VarUniverse vu;
    std::set<VarId> origset(orig.begin(), orig.end());
    for (VarId v : st.vars()) vu[v] = origset.count(v) ? small : wide;
    auto sols = solutions_bruteforce(sig, st, vu, 100000000);
    auto got = solution_keys(sig, sols, origset);

    // Direct enumeration of the declared meaning over the original vars.
    std::set<std::string> want;
    std::vector<size_t> idx(orig.size(), 0);
    while (true) {
      Valuation val;
      for (size_t i = 0; i < orig.size(); ++i) val[orig[i]] = small[idx[i]];
      if (meaning(val)) want.insert(valuation_key(sig, val, origset));
      size_t i = orig.size();
      while (i > 0 && ++idx[i - 1] == small.size()) idx[--i] = 0;
      if (i == 0) break;
    }
    CHECK(got == want);
  };

  VarId x = f.vars.fresh("X"), y = f.vars.fresh("Y"), z = f.vars.fresh("Z"),
        t = f.vars.fresh("T");
  auto iv = [&](const Valuation& v, VarId w) { return v.at(w)->ival; };

  run(sig.lookup("all_different"),
      {mklist(sig, {mk_var(x), mk_var(y), mk_var(z)})},
      [&](const Valuation& v) {
        return iv(v, x) != iv(v, y) && iv(v, x) != iv(v, z) &&
               iv(v, y) != iv(v, z);
      },
      {x, y, z});

  run(sig.lookup("sum"),
      {mklist(sig, {mk_var(x), mk_var(y), mk_var(z)}),
       mk_app(sig.lookup("#=")), mk_var(t)},
      [&](const Valuation& v) {
        return iv(v, x) + iv(v, y) + iv(v, z) == iv(v, t);
      },
      {x, y, z, t});

  run(sig.lookup("sum"),
      {mklist(sig, {mk_var(x), mk_var(y)}), mk_app(sig.lookup("#>")),
       mk_var(t)},
      [&](const Valuation& v) { return iv(v, x) + iv(v, y) > iv(v, t); },
      {x, y, t});

  run(sig.lookup("scalar_product"),
      {mklist(sig, {mk_int(2), mk_int(1)}), mklist(sig, {mk_var(x), mk_var(y)}),
       mk_app(sig.lookup("#=")), mk_var(t)},
      [&](const Valuation& v) { return 2 * iv(v, x) + iv(v, y) == iv(v, t); },
      {x, y, t});

  run(sig.lookup("count"),
      {mk_var(x), mklist(sig, {mk_var(y), mk_var(z), mk_int(1)}),
       mk_app(sig.lookup("#=")), mk_var(t)},
      [&](const Valuation& v) {
        long long c = 0;
        c += iv(v, y) == iv(v, x);
        c += iv(v, z) == iv(v, x);
        c += 1 == iv(v, x);
        return c == iv(v, t);
      },
      {x, y, z, t});
}

TEST_CASE("substituting into a store respects domains") {
  NatSig f;
  Sig& sig = f.sig;
  VarId x = f.vars.fresh("X"), y = f.vars.fresh("Y");

  Store st;
  st.doms[x] = IntDomain::range(1, 3);
  Subst bad;
  bad.bind(x, mk_int(5));
  Store copy = st;
  CHECK_FALSE(subst_store(sig, bad, copy));

  Subst good;
  good.bind(x, mk_int(2));
  copy = st;
  CHECK(subst_store(sig, good, copy));
  CHECK(copy.doms.empty());

  // Aliasing merges domains.
  Store st2;
  st2.doms[x] = IntDomain::range(1, 5);
  st2.doms[y] = IntDomain::range(4, 9);
  Subst alias;
  alias.bind(x, mk_var(y));
  CHECK(subst_store(sig, alias, st2));
  REQUIRE(st2.doms.count(y));
  CHECK(st2.doms.at(y).min() == 4);
  CHECK(st2.doms.at(y).max() == 5);

  // Binding a ranged variable to structured data is inconsistent.
  Store st3;
  st3.doms[x] = IntDomain::range(1, 5);
  Subst weird;
  weird.bind(x, f.z());
  CHECK_FALSE(subst_store(sig, weird, st3));
}

TEST_CASE("interval domains") {
  IntDomain d = IntDomain::range(1, 10);
  d.remove_value(5);
  CHECK(d.size() == 9);
  CHECK_FALSE(d.contains(5));
  CHECK(d.contains(4));
  CHECK(d.str() == "1..4\\/6..10");
  d.intersect_range(4, 7);
  CHECK(d.values() == std::vector<long long>{4, 6, 7});
  IntDomain e = IntDomain::range(6, 20);
  d.intersect(e);
  CHECK(d.values() == std::vector<long long>{6, 7});
  d.intersect_range(8, 9);
  CHECK(d.empty());
  CHECK(IntDomain::singleton(3).is_singleton());
  CHECK(IntDomain::range(3, 2).empty());
}
