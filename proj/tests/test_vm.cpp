#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "support/harness.hpp"

using namespace prolite;
using harness::machine_solutions;

static Machine& shared_machine() {
  static Machine m;
  return m;
}

TEST_CASE("corpus programs match the reference interpreter") {
  for (auto& path : harness::corpus_paths()) {
    auto f = harness::load_corpus_file(path);
    CAPTURE(f.path);
    Machine m;
    std::ostringstream sink;
    m.out = &sink;
    m.err = &sink;
    m.consult_text(f.source, f.path);
    oracle::Oracle o(&m.op_table);
    o.load(f.source);
    for (auto& q : f.queries) {
      CAPTURE(q);
      auto got = machine_solutions(m, q);
      auto want = harness::oracle_solutions(o, m.op_table, q);
      CHECK(got == want);
    }
  }
}

TEST_CASE("meta-call errors") {
  Machine& m = shared_machine();
  CHECK_THROWS_AS(m.once("call(X)."), PrologError);
  CHECK_THROWS_AS(m.once("call(undefined_pred_xyz)."), PrologError);
  try {
    m.once("call(undefined_pred_xyz).");
  } catch (const PrologError& e) {
    CHECK(e.kind == "existence_error");
    CHECK(std::string(e.what()).find("undefined_pred_xyz/0") != std::string::npos);
  }
  CHECK_THROWS_AS(m.once("call(42)."), PrologError);
}

TEST_CASE("call resolves via the predicate table") {
  Machine m;
  m.consult_text("conc([], L, L).\nconc([X|A], B, [X|C]) :- conc(A, B, C).\n",
                 "/tmp/conc.pl");
  auto sols = m.solve("call(conc([1],[2],L)).");
  REQUIRE(sols.size() == 1);
  CHECK(sols[0].at("L") == "[1,2]");
}

TEST_CASE("assert/retract and the logical update view") {
  Machine m;
  CHECK(m.once("assertz(p(1)), assertz(p(2))."));
  auto sols = m.solve("findall(X, p(X), L).");
  REQUIRE(sols.size() == 1);
  CHECK(sols[0].at("L") == "[1,2]");
  CHECK(m.once("retract(p(1))."));
  sols = m.solve("clause(p(X), true).");
  REQUIRE(sols.size() == 1);
  CHECK(sols[0].at("X") == "2");
  // asserta puts clauses at the front
  CHECK(m.once("asserta(p(0))."));
  sols = m.solve("findall(X, p(X), L).");
  CHECK(sols[0].at("L") == "[0,2]");
  // permission error on a static predicate
  m.consult_text("stat(1).\n", "/tmp/stat.pl");
  CHECK_THROWS_AS(m.once("asserta(stat(2))."), PrologError);
}

TEST_CASE("logical update view: iteration sees the clause list at call time") {
  Machine m;
  CHECK(m.once("assertz(q(1)), assertz(q(2))."));
  // clauses asserted during iteration are invisible to the open enumeration
  auto sols = m.solve("findall(X, (q(X), assertz(q(99))), L).");
  REQUIRE(sols.size() == 1);
  CHECK(sols[0].at("L") == "[1,2]");
  // and the first matching clause is the one retract removes
  CHECK(m.once("retract(q(99))."));
  auto s2 = m.solve("findall(X, q(X), L).");
  CHECK(s2[0].at("L") == "[1,2,99]");
}

TEST_CASE("consult replaces definitions (reconsult)") {
  Machine m;
  m.consult_text("f(1).\n", "/tmp/v1.pl");
  auto s1 = m.solve("f(X).");
  REQUIRE(s1.size() == 1);
  CHECK(s1[0].at("X") == "1");
  m.consult_text("f(2).\nf(3).\n", "/tmp/v1.pl");
  auto s2 = m.solve("f(X).");
  REQUIRE(s2.size() == 2);
  CHECK(s2[0].at("X") == "2");
}

TEST_CASE("consulted op directive affects the session reader") {
  Machine m;
  m.consult_text(":- op(700, xfx, ===).\nsame(A === B) :- A = B.\n",
                 "/tmp/ops.pl");
  CHECK(m.once("same(3 === 3)."));
  CHECK_FALSE(m.once("same(3 === 4)."));
}

TEST_CASE("dynamic predicates from source files") {
  Machine m;
  m.consult_text(
      ":- dynamic(counter/1).\n"
      "counter(0).\n"
      "bump :- retract(counter(N)), N1 is N + 1, assertz(counter(N1)).\n",
      "/tmp/dyn.pl");
  CHECK(m.once("bump, bump, bump."));
  auto sols = m.solve("counter(X).");
  REQUIRE(sols.size() == 1);
  CHECK(sols[0].at("X") == "3");
}

TEST_CASE("initialization goals of a consulted file run after load") {
  Machine m;
  std::ostringstream out;
  m.out = &out;
  m.consult_text(
      "greet :- write(hi), nl.\n"
      ":- initialization(greet).\n",
      "/tmp/ini.pl");
  CHECK(out.str() == "hi\n");
}

TEST_CASE("query state restored after enumeration") {
  Machine m;
  m.consult_text("mem(X,[X|_]).\nmem(X,[_|T]) :- mem(X,T).\n", "/tmp/m.pl");
  uint64_t h0 = m.heap_top();
  size_t t0 = m.trail_mark();
  auto sols = m.solve("mem(X, [a,b,c]).");
  CHECK(sols.size() == 3);
  CHECK(m.heap_top() == h0);
  CHECK(m.trail_mark() == t0);
}

TEST_CASE("cut discards younger choice points exactly") {
  Machine m;
  m.consult_text(
      "c(1). c(2). c(3).\n"
      "firstc(X) :- c(X), !.\n",
      "/tmp/cut.pl");
  auto sols = m.solve("firstc(X).");
  REQUIRE(sols.size() == 1);
  CHECK(sols[0].at("X") == "1");
}

TEST_CASE("floats flow through unification and arithmetic") {
  Machine m;
  auto sols = m.solve("X is 1.5 + 2.25, Y = X, Y > 3.");
  REQUIRE(sols.size() == 1);
  CHECK(sols[0].at("X") == "3.75");
  // float constants in compiled clauses
  m.consult_text("fval(3.25).\n", "/tmp/f.pl");
  auto s2 = m.solve("fval(V), W is V * 2.");
  REQUIRE(s2.size() == 1);
  CHECK(s2[0].at("W") == "6.5");
}

TEST_CASE("term inspection builtins") {
  Machine m;
  CHECK(m.once("functor(foo(a,b), foo, 2)."));
  CHECK(m.once("functor(T, bar, 3), arg(1, T, A), var(A)."));
  auto s = m.solve("foo(1,2) =.. L.");
  CHECK(s[0].at("L") == "[foo,1,2]");
  CHECK(m.once("atom_codes(abc, [97,98,99])."));
  CHECK(m.once("atom_length(hello, 5)."));
  CHECK(m.once("copy_term(f(X,X,Y), f(A,B,_)), A == B."));
  CHECK(m.once("sort([b,a,c,a], [a,b,c])."));
  CHECK(m.once("msort([b,a,c,a], [a,a,b,c])."));
}

TEST_CASE("optimization flags preserve semantics end to end") {
  auto paths = harness::corpus_paths();
  // a few representative programs under -no-opt
  for (const char* base :
       {"01_append.pl", "03_qsort.pl", "21_bool.pl", "24_cut.pl"}) {
    auto f = harness::load_corpus_file(std::string(PROLITE_CORPUS_DIR) + "/" +
                                       base);
    Machine def_m, noopt_m;
    noopt_m.compile_opts.reg_opt = false;
    noopt_m.compile_opts.reorder = false;
    noopt_m.compile_opts.inline_builtins = false;
    noopt_m.compile_opts.lco = false;
    def_m.consult_text(f.source, f.path);
    noopt_m.consult_text(f.source, f.path);
    for (auto& q : f.queries) {
      CAPTURE(base);
      CAPTURE(q);
      CHECK(machine_solutions(def_m, q) == machine_solutions(noopt_m, q));
    }
  }
}

TEST_CASE("linker: reference closure pulls only needed members") {
  auto compile_ma = [](const std::string& src, const std::string& path) {
    CompilerSession cs;
    return translate_wam(cs.compile_source(path, src));
  };
  std::vector<MaObject> lib;
  lib.push_back(compile_ma("libp1(1).\n", "/lib/p1.pl"));
  lib.push_back(compile_ma("libp2(2) :- libp1(_).\n", "/lib/p2.pl"));
  lib.push_back(compile_ma("unused(9).\n", "/lib/unused.pl"));
  auto main_obj = compile_ma("go(X) :- libp2(X).\n", "/app/main.pl");
  LinkedImage img =
      link_image({main_obj}, lib, builtin_symbol_set(), false);
  // main + p2 + p1 (transitively), unused excluded
  REQUIRE(img.objects.size() == 3);
  for (auto& o : img.objects) CHECK(o.name != "/lib/unused.pl");
}

TEST_CASE("linker: ensure_linked forces inclusion; duplicates rejected") {
  auto compile_ma = [](const std::string& src, const std::string& path) {
    CompilerSession cs;
    return translate_wam(cs.compile_source(path, src));
  };
  std::vector<MaObject> lib;
  lib.push_back(compile_ma("foo(1).\n", "/lib/foo.pl"));
  auto with_el =
      compile_ma(":- ensure_linked([foo/1]).\ngo :- true.\n", "/app/m.pl");
  LinkedImage img = link_image({with_el}, lib, builtin_symbol_set(), false);
  CHECK(img.objects.size() == 2);

  auto without =
      compile_ma("go :- true.\n", "/app/m2.pl");
  LinkedImage img2 = link_image({without}, lib, builtin_symbol_set(), false);
  CHECK(img2.objects.size() == 1);

  auto dup = compile_ma("go :- fail.\n", "/app/dup.pl");
  CHECK_THROWS_AS(
      link_image({with_el, dup}, lib, builtin_symbol_set(), false), LinkError);
}

TEST_CASE("linker: undefined symbols are reported with decoded names") {
  CompilerSession cs;
  auto obj = translate_wam(
      cs.compile_source("/app/u.pl", "go :- missing_pred(1).\n"));
  try {
    link_image({obj}, {}, builtin_symbol_set(), false);
    FAIL("expected a link error");
  } catch (const LinkError& e) {
    std::string msg = e.what();
    CHECK(msg.find("missing_pred/1") != std::string::npos);
    CHECK(msg.find("X6D") == std::string::npos);  // not the hex form
  }
}

TEST_CASE("meta-call-only use fails at call time, not link time") {
  Machine m;
  m.consult_text("go(G) :- call(G).\n", "/tmp/meta.pl");
  CHECK_THROWS_AS(m.once("go(not_linked_pred)."), PrologError);
}

TEST_CASE("start: exit codes and reverse initialization order") {
  CompilerSession cs1, cs2;
  auto a = translate_wam(cs1.compile_source(
      "/tmp/a.pl", "go_a :- write(a), nl.\n:- initialization(go_a).\n"));
  auto b = translate_wam(cs2.compile_source(
      "/tmp/b.pl", "go_b :- write(b), nl.\n:- initialization(go_b).\n"));
  LinkedImage img = link_image({a, b}, {}, builtin_symbol_set(), false);
  Machine m;
  std::ostringstream out, err;
  m.out = &out;
  m.err = &err;
  m.load_image(img);
  int rc = m.start({});
  CHECK(rc == 0);
  CHECK(out.str() == "b\na\n");  // reverse link order

  // no top level, no user directive: warning + exit 1
  CompilerSession cs3;
  auto c = translate_wam(cs3.compile_source("/tmp/c.pl", "quiet(1).\n"));
  LinkedImage img2 = link_image({c}, {}, builtin_symbol_set(), false);
  Machine m2;
  std::ostringstream out2, err2;
  m2.out = &out2;
  m2.err = &err2;
  m2.load_image(img2);
  CHECK(m2.start({}) == 1);
  CHECK(err2.str().find("warning") != std::string::npos);
}

TEST_CASE("image serialization round-trips") {
  CompilerSession cs;
  auto obj = translate_wam(cs.compile_source(
      "/tmp/i.pl", "hello :- write(img), nl.\n:- initialization(hello).\n"));
  LinkedImage img = link_image({obj}, {}, builtin_symbol_set(), false);
  std::string text = serialize_image(img);
  LinkedImage back = parse_image(text);
  CHECK(back.top_level == img.top_level);
  REQUIRE(back.objects.size() == 1);
  Machine m;
  std::ostringstream out;
  m.out = &out;
  m.err = &out;
  m.load_image(back);
  CHECK(m.start({}) == 0);
  CHECK(out.str() == "img\n");
}

TEST_CASE("ma object round-trip through the vm parser") {
  CompilerSession cs;
  auto f = harness::load_corpus_file(std::string(PROLITE_CORPUS_DIR) +
                                     "/21_bool.pl");
  auto obj = translate_wam(cs.compile_source(f.path, f.source));
  std::string t1 = emit_ma(obj);
  MaObject back = parse_ma(t1, obj.name);
  CHECK(emit_ma(back) == t1);
  // the reparsed object loads and runs
  Machine m;
  m.dynamic_load(back);
  CHECK(m.once("is_true(and(true, not(not(true))))."));
  CHECK_FALSE(m.once("is_true(not(true))."));
}

TEST_CASE("trace flag reports the four ports of interpreted code") {
  Machine m;
  m.trace = true;
  std::ostringstream err;
  m.err = &err;
  CHECK(m.once("assertz(tp(1)), assertz(tp(2))."));
  auto sols = m.solve("tp(X), X > 1.");
  CHECK(sols.size() == 1);
  std::string log = err.str();
  CHECK(log.find("call: tp(") != std::string::npos);
  CHECK(log.find("exit: tp(1)") != std::string::npos);
  CHECK(log.find("redo: tp(") != std::string::npos);
}
