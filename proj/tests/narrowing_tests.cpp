// Tests for the goal-solving engine: the demand-driven production rules,
// constraint posting, store interaction, head-normal-form evaluation,
// admissibility checking and higher-order enumeration.

#include <doctest.h>

#include <map>
#include <set>
#include <string>
#include <vector>

#include "cflpfd/narrowing.hpp"
#include "cflpfd/parser.hpp"

using namespace cflpfd;

namespace {

std::string all_msgs(const std::vector<Diagnostic>& ds) {
  std::string s;
  for (const auto& d : ds) s += d.str() + "\n";
  return s;
}

bool load_lib(Module& m, const std::string& fname) {
  ModuleLoader loader{CFLPFD_TOY_DIR};
  std::vector<Diagnostic> diags;
  bool ok =
      loader.load_file(m, std::string(CFLPFD_TOY_DIR) + "/" + fname, diags);
  if (!ok)
    for (const auto& d : diags) MESSAGE(d.str());
  return ok;
}

struct Outcome {
  std::vector<Answer> answers;
  std::vector<std::string> trace;
  std::vector<std::string> tags;
  Search::End end = Search::End::Running;
  long long floundered = 0;
  std::vector<std::string> violations;
  std::map<std::string, VarId> names;
};

Outcome run(Module& m, const std::string& goal_text, int max_answers = -1,
            SearchOptions opts = {}) {
  ParsedGoal pg;
  std::vector<Diagnostic> diags;
  bool ok = parse_goal(m, goal_text, pg, diags);
  REQUIRE_MESSAGE(ok, (all_msgs(diags)));
  Outcome out;
  for (const auto& [n, v] : pg.display_vars) out.names[n] = v;
  std::vector<std::string> tr;
  opts.trace = [&tr](const std::string& l) { tr.push_back(l); };
  Search s(m, goal_from_conjuncts(pg.conjuncts), std::move(opts));
  while (max_answers < 0 ||
         static_cast<int>(out.answers.size()) < max_answers) {
    auto a = s.next();
    if (!a) break;
    out.answers.push_back(std::move(*a));
  }
  out.end = s.end_state();
  out.floundered = s.stats().floundered;
  out.violations = s.invariant_violations();
  out.trace = std::move(tr);
  for (const auto& l : out.trace)
    out.tags.push_back(l.substr(0, l.find(' ')));
  return out;
}

// Builds a term from surface syntax by parsing `Zq9 == (text)` and taking
// the right-hand side of the equation.
TermPtr term_of(Module& m, const std::string& text) {
  ParsedGoal pg;
  std::vector<Diagnostic> diags;
  bool ok = parse_goal(m, "Zq9 == (" + text + ")", pg, diags);
  REQUIRE_MESSAGE(ok, (all_msgs(diags)));
  REQUIRE(pg.conjuncts.size() == 1);
  REQUIRE(pg.conjuncts[0]->kind == TermKind::App);
  REQUIRE(pg.conjuncts[0]->args.size() == 2);
  return pg.conjuncts[0]->args[1];
}

// Flattens a closed cons-list term into its element terms.
std::vector<TermPtr> list_elems(const Sig& sig, TermPtr t) {
  std::vector<TermPtr> out;
  while (t->kind == TermKind::App && t->head == sig.s_cons) {
    out.push_back(t->args[0]);
    t = t->args[1];
  }
  REQUIRE(t->kind == TermKind::App);
  REQUIRE(t->head == sig.s_nil);
  return out;
}

std::string joined(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += x + " ";
  return s;
}

}  // namespace

TEST_CASE("ranged goal over an infinite list: full derivation") {
  Module m;
  REQUIRE(load_lib(m, "lazy.toy"));
  Outcome o = run(m, "check_list (from M) < 3");

  // One answer per rule whose result satisfies the bound, explored in rule
  // order; the 5..7 rule is refuted by the store without labeling.
  REQUIRE_MESSAGE(o.answers.size() == 2, (joined(o.trace)));
  VarId mv = o.names.at("M");
  CHECK(o.answers[0].subst.empty());
  CHECK(o.answers[0].store.cs.empty());
  REQUIRE(o.answers[0].store.doms.count(mv) == 1);
  CHECK(o.answers[0].store.doms.at(mv) == IntDomain::range(1, 2));
  CHECK(o.answers[1].subst.empty());
  REQUIRE(o.answers[1].store.doms.count(mv) == 1);
  CHECK(o.answers[1].store.doms.at(mv) == IntDomain::range(3, 4));
  CHECK(o.end == Search::End::Exhausted);
  CHECK(o.floundered == 0);

  // The exact sequence of rule applications, linearised depth-first.
  std::vector<std::string> expect = {
      "AC",                                            // post R < 3
      "DF", "SP", "CS", "DF", "CF",                    // nil rule: clash
      "DF", "SP", "AC", "DF", "DC", "SP", "EL", "CS",  // 1..2 answer
      "DF", "SP", "AC", "DF", "DC", "SP", "EL", "CS",  // 3..4 answer
      "DF", "SP", "AC", "SF",                          // 5..7 refuted
  };
  CHECK_MESSAGE(o.tags == expect, (joined(o.trace)));
}

TEST_CASE("only the demanded prefix of an infinite generator is built") {
  Module m;
  REQUIRE(load_lib(m, "lazy.toy"));
  Outcome o = run(m, "take 3 (generateFD 10) == List");

  REQUIRE(o.answers.size() == 1);
  CHECK(o.end == Search::End::Exhausted);
  const Answer& a = o.answers[0];
  const TermPtr* bound = a.subst.lookup(o.names.at("List"));
  REQUIRE(bound != nullptr);
  std::vector<TermPtr> elems = list_elems(m.sig, *bound);
  REQUIRE(elems.size() == 3);
  std::set<VarId> distinct;
  for (const auto& e : elems) {
    REQUIRE(e->kind == TermKind::Var);
    distinct.insert(e->var);
    REQUIRE(a.store.doms.count(e->var) == 1);
    CHECK(a.store.doms.at(e->var) == IntDomain::range(0, 9));
  }
  CHECK(distinct.size() == 3);
  CHECK(a.store.cs.empty());
  // exactly the three demanded variables ever received a domain
  CHECK(a.store.doms.size() == 3);
}

TEST_CASE("head normal form evaluation") {
  Module m;
  REQUIRE(load_lib(m, "lazy.toy"));

  SUBCASE("an integer is its own head normal form") {
    auto rs = hnf(m, term_of(m, "3"));
    REQUIRE(rs.size() == 1);
    CHECK(term_eq(rs[0].term, mk_int(3)));
    CHECK(rs[0].sub.empty());
    CHECK(rs[0].store.cs.empty());
    CHECK(rs[0].store.doms.empty());
  }

  SUBCASE("a variable is its own head normal form") {
    ParsedGoal pg;
    std::vector<Diagnostic> diags;
    REQUIRE(parse_goal(m, "W == W", pg, diags));
    auto rs = hnf(m, pg.conjuncts[0]->args[0]);
    REQUIRE(rs.size() == 1);
    CHECK(rs[0].term->kind == TermKind::Var);
  }

  SUBCASE("one cons cell of an infinite list, tail unevaluated") {
    auto rs = hnf(m, term_of(m, "from 1"));
    REQUIRE(rs.size() == 1);
    CHECK(term_eq(rs[0].term, term_of(m, "[1|from (1 + 1)]")));
    CHECK(rs[0].store.cs.empty());
  }

  SUBCASE("constrained generator: head is a domain variable") {
    auto rs = hnf(m, term_of(m, "take 3 (generateFD 10)"));
    REQUIRE(rs.size() == 1);
    const TermPtr& t = rs[0].term;
    REQUIRE(t->kind == TermKind::App);
    REQUIRE(t->head == m.sig.s_cons);
    REQUIRE(t->args[0]->kind == TermKind::Var);
    CHECK(term_eq(t->args[1], term_of(m, "take (3 - 1) (generateFD 10)")));
    REQUIRE(rs[0].store.doms.count(t->args[0]->var) == 1);
    CHECK(rs[0].store.doms.at(t->args[0]->var) == IntDomain::range(0, 9));
  }
}

TEST_CASE("goal admissibility checks") {
  Module m;
  REQUIRE(load_lib(m, "misc.toy"));

  SUBCASE("a freshly parsed goal is admissible") {
    ParsedGoal pg;
    std::vector<Diagnostic> diags;
    REQUIRE(parse_goal(m, "take 2 (from 0) == L", pg, diags));
    CHECK(check_admissible(m, goal_from_conjuncts(pg.conjuncts)).empty());
  }

  SUBCASE("non-pattern production right-hand side") {
    Goal g;
    VarId x = m.vars.fresh();
    g.existential.insert(x);
    SymbolId take = m.sig.lookup("take");
    g.prods.push_back(
        {mk_var(x), mk_app(take, {mk_int(0), mk_app(m.sig.s_nil)})});
    auto bad = check_admissible(m, g);
    REQUIRE(bad.size() >= 1);
    CHECK(bad[0].find("not a pattern") != std::string::npos);
  }

  SUBCASE("variable produced twice") {
    Goal g;
    VarId x = m.vars.fresh();
    g.existential.insert(x);
    g.prods.push_back({mk_int(1), mk_var(x)});
    g.prods.push_back({mk_int(2), mk_var(x)});
    auto bad = check_admissible(m, g);
    REQUIRE(bad.size() >= 1);
    CHECK(bad[0].find("more than once") != std::string::npos);
  }

  SUBCASE("produced variable must be existential") {
    Goal g;
    VarId x = m.vars.fresh();
    g.prods.push_back({mk_int(1), mk_var(x)});
    auto bad = check_admissible(m, g);
    REQUIRE(bad.size() >= 1);
    CHECK(bad[0].find("not existential") != std::string::npos);
  }

  SUBCASE("cyclic production relation") {
    Goal g;
    VarId x = m.vars.fresh(), y = m.vars.fresh();
    g.existential.insert(x);
    g.existential.insert(y);
    g.prods.push_back({mk_var(x), mk_var(y)});
    g.prods.push_back({mk_var(y), mk_var(x)});
    auto bad = check_admissible(m, g);
    bool cyc = false;
    for (const auto& b : bad) cyc = cyc || b.find("cycle") != std::string::npos;
    CHECK(cyc);
  }

  SUBCASE("answer substitution must avoid goal variables") {
    Goal g;
    VarId x = m.vars.fresh();
    g.pending.push_back(
        mk_app(m.sig.lookup("=="), {mk_var(x), mk_int(1)}));
    g.answer.bind(x, mk_int(2));
    auto bad = check_admissible(m, g);
    bool hit = false;
    for (const auto& b : bad)
      hit = hit || b.find("goal variable") != std::string::npos;
    CHECK(hit);
  }

  SUBCASE("ill-typed pending constraint") {
    Goal g;
    g.pending.push_back(mk_app(m.sig.lookup("domain"),
                               {mk_int(3), mk_int(1), mk_int(2)}));
    auto bad = check_admissible(m, g);
    bool hit = false;
    for (const auto& b : bad)
      hit = hit || b.find("ill-typed") != std::string::npos;
    CHECK(hit);
  }
}

TEST_CASE("every intermediate goal satisfies the invariants") {
  Module m;
  REQUIRE(load_lib(m, "lazy.toy"));
  SearchOptions opts;
  opts.check_invariants = true;
  Outcome o = run(m, "check_list (from M) < 3", -1, std::move(opts));
  CHECK(o.answers.size() == 2);
  CHECK_MESSAGE(o.violations.empty(),
                (o.violations.empty() ? std::string() : o.violations[0]));
}

TEST_CASE("lazy generate-and-test permutation sort") {
  Module m;
  REQUIRE(load_lib(m, "sort.toy"));

  SUBCASE("sorting binds the result list") {
    Outcome o = run(m, "sort [4,2,5,1,3] == L");
    REQUIRE(o.answers.size() == 1);
    const TermPtr* l = o.answers[0].subst.lookup(o.names.at("L"));
    REQUIRE(l != nullptr);
    CHECK(term_eq(*l, term_of(m, "[1,2,3,4,5]")));
    CHECK(o.answers[0].store.cs.empty());
    CHECK(o.end == Search::End::Exhausted);
  }

  SUBCASE("disequality stays as an answer constraint") {
    Outcome o = run(m, "sort [3,2,1] /= L");
    REQUIRE(o.answers.size() == 1);
    const Answer& a = o.answers[0];
    CHECK(a.subst.empty());
    REQUIRE(a.store.cs.size() == 1);
    const SeqC* q = std::get_if<SeqC>(&a.store.cs[0]);
    REQUIRE(q != nullptr);
    CHECK(q->res.k == Res::False);
    CHECK(!q->neg);
    CHECK(term_eq(q->l, term_of(m, "[1,2,3]")));
    REQUIRE(q->r->kind == TermKind::Var);
    CHECK(q->r->var == o.names.at("L"));
    CHECK(o.end == Search::End::Exhausted);
  }

  SUBCASE("a function variable is enumerated against the program") {
    Outcome o = run(m, "F [3,2,1] == [1,2,3]", 2);
    REQUIRE(o.answers.size() == 2);
    const TermPtr* f0 = o.answers[0].subst.lookup(o.names.at("F"));
    REQUIRE(f0 != nullptr);
    REQUIRE((*f0)->kind == TermKind::App);
    CHECK((*f0)->head == m.sig.lookup("permut"));
    CHECK((*f0)->args.empty());
    const TermPtr* f1 = o.answers[1].subst.lookup(o.names.at("F"));
    REQUIRE(f1 != nullptr);
    REQUIRE((*f1)->kind == TermKind::App);
    CHECK((*f1)->head == m.sig.lookup("sort"));
  }
}

TEST_CASE("ground constraint goals") {
  Module m;

  SUBCASE("a true comparison succeeds with an empty answer") {
    Outcome o = run(m, "3 < 5");
    REQUIRE(o.answers.size() == 1);
    CHECK(o.answers[0].subst.empty());
    CHECK(o.answers[0].store.cs.empty());
    CHECK(o.answers[0].store.doms.empty());
    CHECK(o.end == Search::End::Exhausted);
  }

  SUBCASE("a false comparison is refuted, not floundered") {
    Outcome o = run(m, "3 > 5");
    CHECK(o.answers.empty());
    CHECK(o.end == Search::End::Exhausted);
    CHECK(o.floundered == 0);
  }
}

TEST_CASE("a constraint over an unknown list spine flounders") {
  Module m;
  Outcome o = run(m, "domain L 1 2");
  CHECK(o.answers.empty());
  CHECK(o.end == Search::End::Exhausted);
  CHECK(o.floundered == 1);
}

TEST_CASE("runaway computations stop at the step budget") {
  Module m;
  REQUIRE(load_lib(m, "misc.toy"));
  SearchOptions opts;
  opts.step_budget = 500;
  Outcome o = run(m, "from 0 == L", -1, std::move(opts));
  CHECK(o.answers.empty());
  CHECK(o.end == Search::End::Budget);
}
