#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "prolite/vm.hpp"
#include "support/fd_oracle.hpp"

using namespace prolite;
namespace pfd = prolite::fd;

TEST_CASE("fd language: the four reference definitions parse") {
  const char* x_plus_c_eq_y =
      "x_plus_c_eq_y (fdv X, int C, fdv Y) {\n"
      "  start X in min(Y) - C .. max(Y) - C        /* X = Y - C */\n"
      "  start Y in min(X) + C .. max(X) + C        /* Y = X + C */\n"
      "}\n";
  auto defs = pfd::parse_fd(x_plus_c_eq_y);
  REQUIRE(defs.size() == 1);
  CHECK(defs[0].name == "x_plus_c_eq_y");
  REQUIRE(defs[0].params.size() == 3);
  CHECK(defs[0].items.size() == 2);
  CHECK_FALSE(defs[0].items[0].is_switch);
  CHECK(defs[0].items[0].prim.cname.empty());

  const char* min_x_a_eq_z =
      "min_x_a_eq_z (fdv X, int A, fdv Z) {\n"
      "  start (c1) Z in Min(min(X),A)..max_integer\n"
      "  start (c2) Z in 0 .. max(X)\n"
      "  start (c3) X in min(Z) .. max_integer\n"
      "  start      Z in 0 .. A\n"
      "  wait_switch\n"
      "     case A>max(Z)\n"
      "        stop c1\n"
      "        stop c2\n"
      "        stop c3\n"
      "        start Z in min(X) .. max(X)\n"
      "        start X in min(Z) .. max(Z)\n"
      "}\n";
  defs = pfd::parse_fd(min_x_a_eq_z);
  REQUIRE(defs.size() == 1);
  int named = 0, unnamed = 0, switches = 0, stops = 0, starts = 0;
  for (auto& item : defs[0].items) {
    if (item.is_switch) {
      switches++;
      REQUIRE(item.cases.size() == 1);
      for (auto& a : item.cases[0].actions) (a.is_stop ? stops : starts)++;
    } else {
      (item.prim.cname.empty() ? unnamed : named)++;
    }
  }
  CHECK(named == 3);
  CHECK(unnamed == 1);
  CHECK(switches == 1);
  CHECK(stops == 3);
  CHECK(starts == 2);

  const char* truth =
      "truth_x_eq_c (fdv X,int C,fdv B) {\n"
      "  wait_switch\n"
      "     case max(B) == 0\n"
      "         start X in ~{ C }\n"
      "     case min(B) == 1\n"
      "          start X in { C }\n"
      "     case min(X) > C || max(X) < C\n"
      "          start B in { 0 }\n"
      "     case min(X) == C && max(X) == C\n"
      "         start B in { 1 }\n"
      "}\n";
  defs = pfd::parse_fd(truth);
  REQUIRE(defs.size() == 1);
  REQUIRE(defs[0].items.size() == 1);
  CHECK(defs[0].items[0].cases.size() == 4);
}

TEST_CASE("fd language: element definition with external range functions") {
  const char* src =
      "pl_fd_element (fdv I, l_int L, fdv V) {\n"
      " start I in Pl_Fd_Element_I(L)\n"
      " start V in Pl_Fd_Element_I_To_V(dom(I), L)\n"
      " start I in Pl_Fd_Element_V_To_I(dom(V), L)\n"
      "}\n";
  auto defs = pfd::parse_fd(src);
  REQUIRE(defs.size() == 1);
  pfd::ExternalRegistry ext;
  // compiling without the externals registered is an error
  CHECK_THROWS_AS(pfd::compile_def(defs[0], ext), pfd::FdLangError);
  ext.register_external("Pl_Fd_Element_I", 1,
                        [](const std::vector<pfd::FnArgVal>&) {
                          return pfd::FdDomain::interval(1, 1);
                        });
  ext.register_external("Pl_Fd_Element_I_To_V", 2,
                        [](const std::vector<pfd::FnArgVal>&) {
                          return pfd::FdDomain::interval(0, 0);
                        });
  ext.register_external("Pl_Fd_Element_V_To_I", 2,
                        [](const std::vector<pfd::FnArgVal>&) {
                          return pfd::FdDomain::interval(0, 0);
                        });
  auto compiled = pfd::compile_def(defs[0], ext);
  CHECK(compiled.prims.size() == 3);
  // duplicate registration is rejected
  CHECK_THROWS_AS(ext.register_external("Pl_Fd_Element_I", 1,
                                        [](const std::vector<pfd::FnArgVal>&) {
                                          return pfd::FdDomain::interval(0, 0);
                                        }),
                  pfd::FdLangError);
}

TEST_CASE("compile_def derives trigger sets from the indexicals") {
  pfd::ExternalRegistry ext;
  auto defs = pfd::parse_fd(
      "x_plus_c_eq_y (fdv X, int C, fdv Y) {\n"
      "  start X in min(Y) - C .. max(Y) - C\n"
      "  start Y in min(X) + C .. max(X) + C\n"
      "}\n");
  auto d = pfd::compile_def(defs[0], ext);
  REQUIRE(d.prims.size() == 2);
  using T = pfd::Trigger;
  CHECK(d.prims[0].triggers ==
        std::vector<T>{{2, pfd::TrigKind::Min}, {2, pfd::TrigKind::Max}});
  CHECK(d.prims[1].triggers ==
        std::vector<T>{{0, pfd::TrigKind::Min}, {0, pfd::TrigKind::Max}});
  CHECK_FALSE(d.prims[0].run_once);

  // val() delays the primitive and run-once primitives have no triggers
  auto defs2 = pfd::parse_fd(
      "v (fdv X, fdv Y) { start X in ~{ val(Y) } }\n"
      "once_c (fdv X, int C) { start X in 0 .. C }\n");
  auto dv = pfd::compile_def(defs2[0], ext);
  CHECK(dv.prims[0].val_params == std::vector<int>{1});
  auto dc = pfd::compile_def(defs2[1], ext);
  CHECK(dc.prims[0].run_once);
  CHECK(dc.prims[0].triggers.empty());
}

TEST_CASE("fd language parse errors") {
  CHECK_THROWS_AS(pfd::parse_fd("c (fdv X) { start X in 0 .. }"),
                  pfd::FdLangError);
  CHECK_THROWS_AS(pfd::parse_fd("c (bogus X) { start X in 0 .. 1 }"),
                  pfd::FdLangError);
  CHECK_THROWS_AS(pfd::parse_fd("c (fdv X) { wait_switch case max(X) == 0 stop q }"),
                  pfd::FdLangError);
  // fdv where int is required
  CHECK_THROWS_AS(pfd::parse_fd("c (fdv X, fdv Y) { start X in 0 .. Y }"),
                  pfd::FdLangError);
}

// ---------------------------------------------------------------------------
// Engine behaviour (through a machine, which owns trail & choice points)
// ---------------------------------------------------------------------------

TEST_CASE("new_fdvar examples") {
  Machine m;
  auto& eng = m.fd();
  int h = eng.new_var(0, 9);
  CHECK(eng.var(h).dom.size() == 10);
  int s = eng.new_var(5, 5);
  CHECK(eng.var(s).dom.singleton());
  CHECK_THROWS_AS(eng.new_var(3, 2), pfd::FdLangError);
  CHECK_THROWS_AS(eng.new_var(-1, 2), pfd::FdLangError);
}

TEST_CASE("tell examples: change, no-op, failure") {
  Machine m;
  auto& eng = m.fd();
  int x = eng.new_var(0, 9);
  CHECK(eng.tell_interval(x, 3, 5));
  CHECK(eng.var(x).dom.lo == 3);
  CHECK(eng.var(x).dom.hi == 5);
  uint64_t entries = eng.stats.domain_trail_entries;
  CHECK(eng.tell_interval(x, 0, 9));  // no change
  CHECK(eng.stats.domain_trail_entries == entries);  // no trail either
  CHECK_FALSE(eng.tell_interval(x, 6, 8));
}

TEST_CASE("install x_lte_y narrows the upper bound") {
  Machine m;
  auto& eng = m.fd();
  int x = eng.new_var(0, 10);
  int y = eng.new_var(0, 5);
  const pfd::CompiledDef* def = eng.find_def("x_lte_y", 2);
  REQUIRE(def);
  CHECK(eng.install(*def, {pfd::InstallArg::mkvar(x), pfd::InstallArg::mkvar(y)}));
  CHECK(eng.var(x).dom.hi == 5);
  CHECK(eng.var(y).dom.lo == 0);
  CHECK(eng.var(y).dom.hi == 5);
}

TEST_CASE("x #=< y installs the two reference primitives") {
  Machine m;
  Reader r("fd_domain([X,Y],0,9), X #=< Y.", &m.op_table);
  auto rr = r.read();
  std::map<std::string, TermPtr> vars(rr->variables.begin(),
                                      rr->variables.end());
  auto q = m.query_start(rr->term, vars);
  REQUIRE(m.query_next(q));
  auto& frames = m.fd().frames();
  REQUIRE(frames.size() == 2);
  CHECK(m.fd().def_name(frames[0].def_id) == "x_lte_y");
  CHECK(m.fd().frame_range_string(frames[0]) == "0..max(Y)");
  CHECK(m.fd().frame_range_string(frames[1]) == "min(X)..max_integer");
  // trigger sets: primitive 1 on (Y,max), primitive 2 on (X,min)
  REQUIRE(frames[0].prim->triggers.size() == 1);
  CHECK(frames[0].prim->triggers[0].kind == pfd::TrigKind::Max);
  CHECK(frames[0].prim->triggers[0].param == 1);
  REQUIRE(frames[1].prim->triggers.size() == 1);
  CHECK(frames[1].prim->triggers[0].kind == pfd::TrigKind::Min);
  CHECK(frames[1].prim->triggers[0].param == 0);
  m.query_finish(q);
}

TEST_CASE("truth_x_eq_c fires the right case at install") {
  Machine m;
  auto& eng = m.fd();
  int x = eng.new_var(1, 3);
  int b = eng.new_var(0, 1);
  const pfd::CompiledDef* def = eng.find_def("truth_x_eq_c", 3);
  REQUIRE(def);
  CHECK(eng.install(*def, {pfd::InstallArg::mkvar(x), pfd::InstallArg::mkint(5),
                           pfd::InstallArg::mkvar(b)}));
  CHECK(eng.var(b).dom.singleton());
  CHECK(eng.var(b).dom.lo == 0);
}

TEST_CASE("min_x_a_eq_z propagates to the derived fixpoint") {
  Machine m;
  auto& eng = m.fd();
  int x = eng.new_var(3, 7);
  int z = eng.new_var(0, pfd::kMaxInteger);
  const pfd::CompiledDef* def = eng.find_def("min_x_a_eq_z", 3);
  REQUIRE(def);
  CHECK(eng.install(*def, {pfd::InstallArg::mkvar(x), pfd::InstallArg::mkint(5),
                           pfd::InstallArg::mkvar(z)}));
  CHECK(eng.var(z).dom.lo == 3);
  CHECK(eng.var(z).dom.hi == 5);

  // cross-check with the oracle over the same definition
  fdtest::FdOracle o;
  int ox = o.new_var(3, 7);
  int oz = o.new_var(0, 200);  // a large enough stand-in for max_integer
  auto defs = pfd::parse_fd(
      "min_x_a_eq_z (fdv X, int A, fdv Z) {\n"
      "  start (c1) Z in Min(min(X),A)..max_integer\n"
      "  start (c2) Z in 0 .. max(X)\n"
      "  start (c3) X in min(Z) .. max_integer\n"
      "  start      Z in 0 .. A\n"
      "  wait_switch\n"
      "     case A>max(Z)\n"
      "        stop c1\n        stop c2\n        stop c3\n"
      "        start Z in min(X) .. max(X)\n"
      "        start X in min(Z) .. max(Z)\n"
      "}\n");
  o.post(&defs[0], {fdtest::OArg{fdtest::OArg::K::Var, ox, 0, {}},
                    fdtest::OArg{fdtest::OArg::K::Int, -1, 5, {}},
                    fdtest::OArg{fdtest::OArg::K::Var, oz, 0, {}}});
  REQUIRE(o.fixpoint());
  CHECK(*o.dom(oz).begin() == 3);
  CHECK(*o.dom(oz).rbegin() == 5);
}

TEST_CASE("propagation runs chains to the fixpoint") {
  Machine m;
  auto& eng = m.fd();
  int x = eng.new_var(0, 9);
  int y = eng.new_var(0, 9);
  int z = eng.new_var(0, 9);
  const pfd::CompiledDef* lte = eng.find_def("x_lte_y", 2);
  CHECK(eng.install(*lte, {pfd::InstallArg::mkvar(x), pfd::InstallArg::mkvar(y)}));
  CHECK(eng.install(*lte, {pfd::InstallArg::mkvar(y), pfd::InstallArg::mkvar(z)}));
  CHECK(eng.tell_interval(z, 0, 5));
  CHECK(eng.var(y).dom.hi == 5);
  CHECK(eng.var(x).dom.hi == 5);

  // equality network terminates and propagates both ways
  int a = eng.new_var(0, 9);
  int b = eng.new_var(0, 9);
  const pfd::CompiledDef* eq = eng.find_def("x_eq_y", 2);
  CHECK(eng.install(*eq, {pfd::InstallArg::mkvar(a), pfd::InstallArg::mkvar(b)}));
  CHECK(eng.install(*eq, {pfd::InstallArg::mkvar(b), pfd::InstallArg::mkvar(a)}));
  CHECK(eng.assign(a, 3));
  CHECK(eng.var(b).dom.singleton());
  CHECK(eng.var(b).dom.lo == 3);
}

TEST_CASE("fixpoint soundness: re-evaluating installed primitives changes nothing") {
  Machine m;
  auto& eng = m.fd();
  int x = eng.new_var(0, 9);
  int y = eng.new_var(2, 7);
  const pfd::CompiledDef* lte = eng.find_def("x_lte_y", 2);
  const pfd::CompiledDef* plus = eng.find_def("x_plus_c_eq_y", 3);
  CHECK(eng.install(*lte, {pfd::InstallArg::mkvar(x), pfd::InstallArg::mkvar(y)}));
  CHECK(eng.install(*plus, {pfd::InstallArg::mkvar(x), pfd::InstallArg::mkint(2),
                            pfd::InstallArg::mkvar(y)}));
  auto snap_x = eng.var(x).dom;
  auto snap_y = eng.var(y).dom;
  // a fresh no-op tell re-triggers evaluation of every chain
  CHECK(eng.tell_interval(x, 0, pfd::kMaxInteger));
  CHECK(eng.var(x).dom.equals(snap_x));
  CHECK(eng.var(y).dom.equals(snap_y));
}

TEST_CASE("element range functions (derived values)") {
  Machine m;
  auto sols = m.solve(
      "element(I, [3,5,3], V), fd_dom(V, DV), fd_dom(I, DI).");
  REQUIRE(sols.size() == 1);
  CHECK(sols[0].at("DV") == "[3,5]");
  CHECK(sols[0].at("DI") == "[1,2,3]");
  // element_v_to_i: dom(V)={5} -> I={2}
  auto s2 = m.solve("element(I, [3,5,3], V), V #= 5, fd_dom(I, DI).");
  REQUIRE(s2.size() == 1);
  CHECK(s2[0].at("DI") == "[2]");
  // element_i over a one-element list
  auto s3 = m.solve("element(I, [7], V), fd_min(I, L), fd_max(I, H).");
  REQUIRE(s3.size() == 1);
  CHECK(s3[0].at("L") == "1");
  CHECK(s3[0].at("H") == "1");
}

TEST_CASE("backtracking restores domains, frames and flags") {
  Machine m;
  CHECK(m.once("fd_domain([X],0,9), ((X #= 3, fail) ; true), fd_size(X, 10)."));
  // labeling failure restores the pre-labeling domain exactly
  CHECK(m.once(
      "fd_domain([X,Y],0,3), X #\\= Y, ((fd_labeling([X,Y]), X = 99) ; true), "
      "fd_size(X, 4), fd_size(Y, 4)."));
  // frames installed after a choice point are gone after backtracking
  Machine m2;
  auto& eng = m2.fd();
  auto sols = m2.solve("fd_domain([X],0,9), ((X #=< 5, fail) ; true).");
  CHECK(sols.size() == 1);
  CHECK(eng.frames().empty());
}

TEST_CASE("labeling: 4-queens has exactly the two reference solutions") {
  Machine m;
  m.consult_text(
      "queens(N, Qs) :- mklist(N, Qs), fd_domain(Qs, 1, N), safe(Qs), "
      "fd_labeling(Qs).\n"
      "mklist(0, []) :- !.\n"
      "mklist(N, [_|T]) :- N1 is N - 1, mklist(N1, T).\n"
      "safe([]).\n"
      "safe([Q|Qs]) :- noatt(Q, Qs, 1), safe(Qs).\n"
      "noatt(_, [], _).\n"
      "noatt(Q, [Q2|Qs], D) :- Q #\\= Q2, Q #\\= Q2 + D, Q2 #\\= Q + D, "
      "D1 is D + 1, noatt(Q, Qs, D1).\n",
      "/tmp/q.pl");
  auto sols = m.solve("queens(4, Qs).");
  REQUIRE(sols.size() == 2);
  CHECK(sols[0].at("Qs") == "[2,4,1,3]");
  CHECK(sols[1].at("Qs") == "[3,1,4,2]");
}

TEST_CASE("labeling an instantiated list succeeds immediately") {
  Machine m;
  CHECK(m.once("fd_labeling([1,2,3])."));
  CHECK(m.once("fd_domain([X],4,4), fd_labeling([X]), X == 4."));
}

TEST_CASE("prolog surface basics") {
  Machine m;
  auto sols = m.solve("fd_domain([X],0,5), X #= 3.");
  REQUIRE(sols.size() == 1);
  CHECK(sols[0].at("X") == "3");
  // forward checking through val: X=3 removes 3 from Y
  auto s2 = m.solve("fd_domain([X,Y],0,9), X #\\= Y, X #= 3, fd_dom(Y, D).");
  REQUIRE(s2.size() == 1);
  CHECK(s2[0].at("D") == "[0,1,2,4,5,6,7,8,9]");
  CHECK_THROWS_AS(m.once("fd_tell(unregistered_cstr(1))."), PrologError);
  // unifying an FD variable with an integer tells + propagates
  auto s3 = m.solve("fd_domain([X,Y],0,9), X #=< Y, Y = 4, fd_max(X, MX).");
  REQUIRE(s3.size() == 1);
  CHECK(s3[0].at("MX") == "4");
  // unifying two FD variables installs mutual equality
  auto s4 = m.solve("fd_domain([X],0,5), fd_domain([Y],3,9), X = Y, "
                    "fd_min(X,A), fd_max(X,B).");
  REQUIRE(s4.size() == 1);
  CHECK(s4[0].at("A") == "3");
  CHECK(s4[0].at("B") == "5");
}

TEST_CASE("structural invariants: trail parsimony and queue dedup") {
  Machine m;
  m.fd().stats.instrument = true;
  m.consult_text(
      "go :- mk(6, Qs), fd_domain(Qs, 1, 6), safe(Qs), fd_labeling(Qs).\n"
      "mk(0, []) :- !.\n"
      "mk(N, [_|T]) :- N1 is N - 1, mk(N1, T).\n"
      "safe([]).\n"
      "safe([Q|Qs]) :- na(Q, Qs, 1), safe(Qs).\n"
      "na(_, [], _).\n"
      "na(Q, [Q2|Qs], D) :- Q #\\= Q2, Q #\\= Q2 + D, Q2 #\\= Q + D, "
      "D1 is D + 1, na(Q, Qs, D1).\n",
      "/tmp/q6.pl");
  auto sols = m.solve("go.");
  CHECK(sols.size() == 4);  // 6-queens has 4 solutions
  CHECK(m.fd().stats.trail_dup_violations == 0);
  CHECK(m.fd().stats.walk_violations == 0);
  CHECK(m.fd().stats.domain_trail_entries > 0);
}

TEST_CASE("differential: compiled range programs match direct AST evaluation") {
  // the oracle interprets the AST; the engine runs the compiled program
  std::mt19937 rng(77);
  for (int round = 0; round < 50; round++) {
    Machine m;
    auto& eng = m.fd();
    fdtest::FdOracle o;
    int64_t lo1 = rng() % 5, hi1 = lo1 + rng() % 6;
    int64_t lo2 = rng() % 5, hi2 = lo2 + rng() % 6;
    int64_t c = rng() % 4;
    int x = eng.new_var(lo1, hi1);
    int y = eng.new_var(lo2, hi2);
    int ox = o.new_var(lo1, hi1);
    int oy = o.new_var(lo2, hi2);
    static const char* names[] = {"x_plus_c_eq_y", "x_lte_y", "x_eq_y",
                                  "x_plus_c_neq_y"};
    const char* name = names[rng() % 4];
    const pfd::CompiledDef* def =
        eng.find_def(name, std::string(name).find("_c_") != std::string::npos
                               ? 3
                               : 2);
    REQUIRE(def);
    std::vector<pfd::InstallArg> ia;
    std::vector<fdtest::OArg> oa;
    if (def->params.size() == 3) {
      ia = {pfd::InstallArg::mkvar(x), pfd::InstallArg::mkint(c),
            pfd::InstallArg::mkvar(y)};
      oa = {fdtest::OArg{fdtest::OArg::K::Var, ox, 0, {}},
            fdtest::OArg{fdtest::OArg::K::Int, -1, c, {}},
            fdtest::OArg{fdtest::OArg::K::Var, oy, 0, {}}};
    } else {
      ia = {pfd::InstallArg::mkvar(x), pfd::InstallArg::mkvar(y)};
      oa = {fdtest::OArg{fdtest::OArg::K::Var, ox, 0, {}},
            fdtest::OArg{fdtest::OArg::K::Var, oy, 0, {}}};
    }
    // post to the oracle the parsed AST of the same definition
    static auto src_defs = pfd::parse_fd(
        "x_plus_c_eq_y (fdv X, int C, fdv Y) {\n"
        "  start X in min(Y) - C .. max(Y) - C\n"
        "  start Y in min(X) + C .. max(X) + C\n"
        "}\n"
        "x_lte_y (fdv X, fdv Y) { start X in 0 .. max(Y)  "
        "start Y in min(X) .. max_integer }\n"
        "x_eq_y (fdv X, fdv Y) { start X in min(Y) .. max(Y)  "
        "start Y in min(X) .. max(X) }\n"
        "x_plus_c_neq_y (fdv X, int C, fdv Y) { start X in ~{ val(Y) - C }  "
        "start Y in ~{ val(X) + C } }\n");
    const pfd::ConstraintDef* srcdef = nullptr;
    for (auto& d : src_defs)
      if (d.name == name) srcdef = &d;
    REQUIRE(srcdef);
    bool eok = eng.install(*def, ia);
    o.post(srcdef, oa);
    bool ook = o.fixpoint();
    CAPTURE(name);
    CHECK(eok == ook);
    if (eok && ook) {
      auto ex = eng.var(x).dom.values();
      auto ey = eng.var(y).dom.values();
      std::vector<int64_t> wx(o.dom(ox).begin(), o.dom(ox).end());
      std::vector<int64_t> wy(o.dom(oy).begin(), o.dom(oy).end());
      CHECK(ex == wx);
      CHECK(ey == wy);
    }
  }
}

TEST_CASE("sparse and interval representations propagate identically") {
  Machine m;
  auto& eng = m.fd();
  // interval route
  int a = eng.new_var(0, 9);
  // sparse route: force a hole first
  int b = eng.new_var(0, 9);
  CHECK(eng.exclude(b, 20 <= 9 ? 20 : 4));  // remove interior value 4
  CHECK(eng.var(b).dom.sparse());
  int ya = eng.new_var(0, 6);
  int yb = eng.new_var(0, 6);
  const pfd::CompiledDef* lte = eng.find_def("x_lte_y", 2);
  CHECK(eng.install(*lte, {pfd::InstallArg::mkvar(a), pfd::InstallArg::mkvar(ya)}));
  CHECK(eng.install(*lte, {pfd::InstallArg::mkvar(b), pfd::InstallArg::mkvar(yb)}));
  CHECK(eng.var(a).dom.hi == 6);
  CHECK(eng.var(b).dom.hi == 6);
  CHECK(eng.var(b).dom.sparse());
  // identical maxima; b additionally carries its hole
  CHECK(eng.var(b).dom.size() == eng.var(a).dom.size() - 1);
}

TEST_CASE("monotonicity: tell never enlarges a domain") {
  Machine m;
  auto& eng = m.fd();
  int x = eng.new_var(2, 6);
  CHECK(eng.tell_interval(x, 0, 9));  // superset: no change
  CHECK(eng.var(x).dom.lo == 2);
  CHECK(eng.var(x).dom.hi == 6);
}
