#include <fstream>
#include <sstream>

#include "prolite/wam2ma.hpp"
#include "prolite/writer.hpp"
#include "vm_internal.hpp"

namespace prolite {

using namespace rt;

// ---------------------------------------------------------------------------
// Prelude: control constructs and library predicates compiled at startup
// ---------------------------------------------------------------------------

const char* prelude_source() {
  return R"PL(
call(G) :- '$barrier'(B), '$mcall'(G, B).
call(G, A) :- '$add_args'(G, [A], G2), call(G2).
call(G, A, B) :- '$add_args'(G, [A, B], G2), call(G2).
call(G, A, B, C) :- '$add_args'(G, [A, B, C], G2), call(G2).
call(G, A, B, C, D) :- '$add_args'(G, [A, B, C, D], G2), call(G2).
call(G, A, B, C, D, E) :- '$add_args'(G, [A, B, C, D, E], G2), call(G2).

'$mcall'(G, B) :- '$is_control'(G), !, '$mctl'(G, B).
'$mcall'(G, _) :- '$dispatch'(G).

'$mctl'(true, _).
'$mctl'((A, Bb), B) :- '$mcall'(A, B), '$mcall'(Bb, B).
'$mctl'((C -> T ; E), B) :- !, '$ite'(C, T, E, B).
'$mctl'((A ; Bb), B) :- '$or'(A, Bb, B).
'$mctl'((C -> T), B) :- '$ite'(C, T, fail, B).
'$mctl'(!, B) :- '$cut_to'(B).
'$mctl'(\+(G), _) :- '$naf'(G).
'$mctl'(not(G), _) :- '$naf'(G).
'$mctl'(fail, _) :- fail.
'$mctl'(false, _) :- fail.

'$or'(A, _, B) :- '$mcall'(A, B).
'$or'(_, Bb, B) :- '$mcall'(Bb, B).
'$ite'(C, T, _, B) :- '$barrier'(CB), '$mcall'(C, CB), !, '$mcall'(T, B).
'$ite'(_, _, E, B) :- '$mcall'(E, B).
'$naf'(G) :- '$barrier'(B), '$mcall'(G, B), !, fail.
'$naf'(_).

';'(A, B) :- '$barrier'(Bar), '$sc'(A, B, Bar).
'$sc'((C -> T), E, Bar) :- !, '$ite'(C, T, E, Bar).
'$sc'(A, B, Bar) :- '$or'(A, B, Bar).
'->'(C, T) :- '$barrier'(B), '$ite'(C, T, fail, B).
\+(G) :- '$naf'(G).
not(G) :- '$naf'(G).

findall(T, G, L) :- '$fa_begin', '$fa_loop'(T, G), '$fa_end'(L).
'$fa_loop'(T, G) :- call(G), '$fa_add'(T), fail.
'$fa_loop'(_, _).

between(L, H, X) :- integer(X), !, L =< X, X =< H.
between(L, H, L) :- L =< H.
between(L, H, X) :- L < H, L1 is L + 1, between(L1, H, X).

length(L, N) :- integer(N), !, N >= 0, '$len_make'(L, N).
length(L, N) :- '$len_count'(L, 0, N).
'$len_make'(L, 0) :- !, L = [].
'$len_make'([_|T], N) :- N > 0, N1 is N - 1, '$len_make'(T, N1).
'$len_count'([], N, N).
'$len_count'([_|T], A, N) :- A1 is A + 1, '$len_count'(T, A1, N).

clause(H, B) :- '$clause_list'(H, L), '$cl_member'(L, H, B).
'$cl_member'([C|_], H, B) :- '$cl_split'(C, H, B).
'$cl_member'([_|T], H, B) :- '$cl_member'(T, H, B).
'$cl_split'((H0 :- B0), H, B) :- !, H = H0, B = B0.
'$cl_split'(H0, H, B) :- H = H0, B = true.

retract(C) :- '$retract_split'(C, H, B), '$clause_refs'(H, Refs),
              '$retract_try'(Refs, H, B).
'$retract_split'((H :- B), H, B) :- !.
'$retract_split'(H, H, true).
'$retract_try'([R|_], H, B) :- '$clause_ref_match'(R, H, B), '$erase'(R).
'$retract_try'([_|T], H, B) :- '$retract_try'(T, H, B).

retractall(H) :- '$clause_refs'(H, Rs), '$erase_all'(Rs).
'$erase_all'([]).
'$erase_all'([R|T]) :- '$erase'(R), '$erase_all'(T).

halt :- '$halt'(0).
halt(C) :- '$halt'(C).
listing :- '$listing'.
consult(F) :- '$consult'(F).

'$traced'(G) :- '$tr_port'(call, G), '$tr_run'(G).
'$tr_run'(G) :- '$dyn_run'(G), '$tr_exit'(G).
'$tr_run'(G) :- '$tr_port'(fail, G), fail.
'$tr_exit'(G) :- '$tr_port'(exit, G).
'$tr_exit'(G) :- '$tr_port'(redo, G), fail.
)PL";
}

// ---------------------------------------------------------------------------
// Native built-in predicates
// ---------------------------------------------------------------------------

namespace {

Word A(Machine& m, int i) { return m.deref(m.x[i]); }

BuiltinResult b_unify(Machine& m, bool ok) {
  return ok ? BuiltinResult::ok() : BuiltinResult::fail();
}

std::string atom_arg(Machine& m, int i, const char* who) {
  Word w = A(m, i);
  if (tag_of(w) == REF)
    throw PrologError("instantiation_error", std::string(who));
  if (tag_of(w) != ATM)
    throw PrologError("type_error", std::string("atom expected in ") + who);
  return m.atom_name((int)payload_of(w));
}

int64_t int_arg(Machine& m, int i, const char* who) {
  Word w = A(m, i);
  if (tag_of(w) == REF)
    throw PrologError("instantiation_error", std::string(who));
  if (tag_of(w) != INT)
    throw PrologError("type_error", std::string("integer expected in ") + who);
  return int_value(w);
}

// head name/arity of a callable term
std::pair<std::string, int> goal_indicator(Machine& m, Word w, const char* who) {
  w = m.deref(w);
  if (tag_of(w) == ATM) return {m.atom_name((int)payload_of(w)), 0};
  if (tag_of(w) == STC) {
    Word fn = m.heap_value(payload_of(w));
    return {m.atom_name((int)ftr_atom(fn)), (int)ftr_arity(fn)};
  }
  if (tag_of(w) == LST) return {".", 2};
  if (tag_of(w) == REF)
    throw PrologError("instantiation_error", std::string(who));
  throw PrologError("type_error", std::string("callable expected in ") + who);
}

BuiltinResult bi_dispatch(Machine& m) { return m.dispatch_goal(m.x[0]); }

BuiltinResult bi_dyn_run(Machine& m) { return m.dispatch_goal(m.x[0], false); }

BuiltinResult bi_is_control(Machine& m) {
  Word g = A(m, 0);
  if (tag_of(g) == ATM) {
    const std::string& n = m.atom_name((int)payload_of(g));
    return b_unify(m, n == "true" || n == "fail" || n == "false" || n == "!");
  }
  if (tag_of(g) == STC) {
    Word fn = m.heap_value(payload_of(g));
    const std::string& n = m.atom_name((int)ftr_atom(fn));
    uint64_t a = ftr_arity(fn);
    return b_unify(m, (a == 2 && (n == "," || n == ";" || n == "->")) ||
                          (a == 1 && (n == "\\+" || n == "not")));
  }
  return BuiltinResult::fail();
}

BuiltinResult bi_barrier(Machine& m) {
  return b_unify(m, m.unify(m.x[0], make_int((int64_t)m.current_b())));
}

BuiltinResult bi_cut_to(Machine& m) {
  Word w = A(m, 0);
  m.cut_to((uint64_t)int_value(w));
  return BuiltinResult::ok();
}

BuiltinResult bi_add_args(Machine& m) {
  Word g = A(m, 0);
  auto [name, arity] = goal_indicator(m, g, "call/N");
  std::vector<Word> args;
  if (tag_of(g) == STC) {
    uint64_t p = payload_of(g);
    for (int i = 0; i < arity; i++) args.push_back(m.heap_value(p + 1 + i));
  }
  Word cur = A(m, 1);
  while (tag_of(cur) == LST) {
    args.push_back(m.heap_value(payload_of(cur)));
    cur = m.deref(m.heap_value(payload_of(cur) + 1));
  }
  Word out;
  if (args.empty()) {
    out = m.atom_word(name);
  } else {
    uint64_t a = m.push_heap(make_ftr((uint64_t)m.intern(name), args.size()));
    for (Word w : args) m.push_heap(w);
    out = make_word(STC, a);
  }
  return b_unify(m, m.unify(m.x[2], out));
}

BuiltinResult bi_halt(Machine& m) {
  throw HaltException{(int)int_arg(m, 0, "halt/1")};
}

BuiltinResult bi_true(Machine&) { return BuiltinResult::ok(); }
BuiltinResult bi_fail(Machine&) { return BuiltinResult::fail(); }

BuiltinResult bi_eq(Machine& m) { return b_unify(m, m.unify(m.x[0], m.x[1])); }

BuiltinResult bi_neq(Machine& m) {
  return b_unify(m, !m.unify_test_undo(m.x[0], m.x[1]));
}

BuiltinResult bi_var(Machine& m) {
  return b_unify(m, tag_of(A(m, 0)) == REF);
}
BuiltinResult bi_nonvar(Machine& m) {
  return b_unify(m, tag_of(A(m, 0)) != REF);
}
BuiltinResult bi_atom(Machine& m) { return b_unify(m, tag_of(A(m, 0)) == ATM); }

bool int_like(Machine& m, Word w) {
  if (tag_of(w) == INT) return true;
  if (tag_of(w) == FDV)
    return m.fd().var((int)payload_of(w)).dom.singleton();
  return false;
}

BuiltinResult bi_integer(Machine& m) {
  return b_unify(m, int_like(m, A(m, 0)));
}
BuiltinResult bi_float(Machine& m) { return b_unify(m, tag_of(A(m, 0)) == FLT); }
BuiltinResult bi_number(Machine& m) {
  Word w = A(m, 0);
  return b_unify(m, tag_of(w) == FLT || int_like(m, w));
}
BuiltinResult bi_atomic(Machine& m) {
  Word w = A(m, 0);
  return b_unify(m, tag_of(w) == ATM || tag_of(w) == FLT || int_like(m, w));
}
BuiltinResult bi_compound(Machine& m) {
  Tag t = tag_of(A(m, 0));
  return b_unify(m, t == STC || t == LST);
}
BuiltinResult bi_callable(Machine& m) {
  Tag t = tag_of(A(m, 0));
  return b_unify(m, t == ATM || t == STC || t == LST);
}
BuiltinResult bi_is_list(Machine& m) {
  Word w = A(m, 0);
  while (tag_of(w) == LST) w = m.deref(m.heap_value(payload_of(w) + 1));
  return b_unify(m, tag_of(w) == ATM &&
                        m.atom_name((int)payload_of(w)) == "[]");
}

BuiltinResult bi_is(Machine& m) {
  Machine::Num n = m.eval_arith(m.x[1]);
  Word w = n.is_float ? m.make_float(n.f) : make_int(n.i);
  return b_unify(m, m.unify(m.x[0], w));
}

template <int OP>
BuiltinResult bi_arith_cmp(Machine& m) {
  Machine::Num a = m.eval_arith(m.x[0]);
  Machine::Num b = m.eval_arith(m.x[1]);
  bool r;
  if (!a.is_float && !b.is_float) {
    int64_t x = a.i, y = b.i;
    r = OP == 0   ? x == y
        : OP == 1 ? x != y
        : OP == 2 ? x < y
        : OP == 3 ? x > y
        : OP == 4 ? x <= y
                  : x >= y;
  } else {
    double x = a.as_double(), y = b.as_double();
    r = OP == 0   ? x == y
        : OP == 1 ? x != y
        : OP == 2 ? x < y
        : OP == 3 ? x > y
        : OP == 4 ? x <= y
                  : x >= y;
  }
  return b_unify(m, r);
}

template <int OP>
BuiltinResult bi_term_cmp(Machine& m) {
  int c = m.compare_words(m.x[0], m.x[1]);
  bool r = OP == 0   ? c == 0
           : OP == 1 ? c != 0
           : OP == 2 ? c < 0
           : OP == 3 ? c > 0
           : OP == 4 ? c <= 0
                     : c >= 0;
  return b_unify(m, r);
}

BuiltinResult bi_compare(Machine& m) {
  int c = m.compare_words(m.x[1], m.x[2]);
  Word o = m.atom_word(c < 0 ? "<" : c > 0 ? ">" : "=");
  return b_unify(m, m.unify(m.x[0], o));
}

BuiltinResult bi_functor(Machine& m) {
  Word t = A(m, 0);
  if (tag_of(t) != REF) {
    Word name;
    int64_t arity = 0;
    switch (tag_of(t)) {
      case ATM: name = t; break;
      case INT:
      case FLT: name = t; break;
      case FDV: name = t; break;
      case LST:
        name = m.atom_word(".");
        arity = 2;
        break;
      case STC: {
        Word fn = m.heap_value(payload_of(t));
        name = m.atom_word(m.atom_name((int)ftr_atom(fn)));
        arity = (int64_t)ftr_arity(fn);
        break;
      }
      default: return BuiltinResult::fail();
    }
    return b_unify(m, m.unify(m.x[1], name) && m.unify(m.x[2], make_int(arity)));
  }
  Word name = A(m, 1);
  int64_t arity = int_arg(m, 2, "functor/3");
  if (arity == 0) return b_unify(m, m.unify(m.x[0], name));
  if (tag_of(name) != ATM)
    throw PrologError("type_error", "atom expected in functor/3");
  std::vector<Word> args;
  for (int64_t i = 0; i < arity; i++) args.push_back(m.new_unbound());
  Word out;
  if (m.atom_name((int)payload_of(name)) == "." && arity == 2) {
    uint64_t a = m.push_heap(args[0]);
    m.push_heap(args[1]);
    out = make_word(LST, a);
  } else {
    uint64_t a = m.push_heap(make_ftr(payload_of(name), (uint64_t)arity));
    for (Word w : args) m.push_heap(w);
    out = make_word(STC, a);
  }
  return b_unify(m, m.unify(m.x[0], out));
}

BuiltinResult bi_arg(Machine& m) {
  int64_t n = int_arg(m, 0, "arg/3");
  Word t = A(m, 1);
  uint64_t arity, base;
  if (tag_of(t) == STC) {
    arity = ftr_arity(m.heap_value(payload_of(t)));
    base = payload_of(t);
  } else if (tag_of(t) == LST) {
    arity = 2;
    base = payload_of(t) - 1;
  } else {
    throw PrologError("type_error", "compound expected in arg/3");
  }
  if (n < 1 || (uint64_t)n > arity) return BuiltinResult::fail();
  return b_unify(m, m.unify(m.x[2], m.heap_value(base + n)));
}

BuiltinResult bi_univ(Machine& m) {
  Word t = A(m, 0);
  if (tag_of(t) != REF) {
    std::vector<Word> items;
    switch (tag_of(t)) {
      case ATM:
      case INT:
      case FLT:
      case FDV: items.push_back(t); break;
      case LST:
        items.push_back(m.atom_word("."));
        items.push_back(m.heap_value(payload_of(t)));
        items.push_back(m.heap_value(payload_of(t) + 1));
        break;
      case STC: {
        uint64_t p = payload_of(t);
        Word fn = m.heap_value(p);
        items.push_back(m.atom_word(m.atom_name((int)ftr_atom(fn))));
        for (uint64_t i = 1; i <= ftr_arity(fn); i++)
          items.push_back(m.heap_value(p + i));
        break;
      }
      default: return BuiltinResult::fail();
    }
    Word l = m.atom_word("[]");
    for (auto it = items.rbegin(); it != items.rend(); ++it) {
      uint64_t a = m.push_heap(*it);
      m.push_heap(l);
      l = make_word(LST, a);
    }
    return b_unify(m, m.unify(m.x[1], l));
  }
  // construct
  Word cur = A(m, 1);
  std::vector<Word> items;
  while (tag_of(cur) == LST) {
    items.push_back(m.deref(m.heap_value(payload_of(cur))));
    cur = m.deref(m.heap_value(payload_of(cur) + 1));
  }
  if (items.empty())
    throw PrologError("domain_error", "non_empty_list expected in =../2");
  Word head = items[0];
  if (items.size() == 1) return b_unify(m, m.unify(m.x[0], head));
  if (tag_of(head) != ATM)
    throw PrologError("type_error", "atom expected in =../2");
  Word out;
  if (m.atom_name((int)payload_of(head)) == "." && items.size() == 3) {
    uint64_t a = m.push_heap(items[1]);
    m.push_heap(items[2]);
    out = make_word(LST, a);
  } else {
    uint64_t a =
        m.push_heap(make_ftr(payload_of(head), (uint64_t)items.size() - 1));
    for (size_t i = 1; i < items.size(); i++) m.push_heap(items[i]);
    out = make_word(STC, a);
  }
  return b_unify(m, m.unify(m.x[0], out));
}

BuiltinResult bi_copy_term(Machine& m) {
  TermPtr t = m.heap_to_term(m.x[0], false);
  std::map<uint64_t, Word> varmap;
  Word w = m.term_to_heap(t, &varmap);
  return b_unify(m, m.unify(m.x[1], w));
}

// ---- atoms & numbers ----

std::vector<Word> text_codes(Machine& m, const std::string& s) {
  std::vector<Word> out;
  for (unsigned char c : s) out.push_back(make_int(c));
  return out;
}

Word mk_heap_list(Machine& m, const std::vector<Word>& items) {
  Word l = m.atom_word("[]");
  for (auto it = items.rbegin(); it != items.rend(); ++it) {
    uint64_t a = m.push_heap(*it);
    m.push_heap(l);
    l = make_word(LST, a);
  }
  return l;
}

std::string list_text(Machine& m, Word w, bool chars, const char* who) {
  std::string s;
  Word cur = m.deref(w);
  while (tag_of(cur) == LST) {
    Word h = m.deref(m.heap_value(payload_of(cur)));
    if (chars) {
      if (tag_of(h) != ATM)
        throw PrologError("type_error", std::string("character expected in ") + who);
      s += m.atom_name((int)payload_of(h));
    } else {
      if (tag_of(h) != INT)
        throw PrologError("type_error",
                          std::string("character code expected in ") + who);
      s.push_back((char)int_value(h));
    }
    cur = m.deref(m.heap_value(payload_of(cur) + 1));
  }
  if (!(tag_of(cur) == ATM && m.atom_name((int)payload_of(cur)) == "[]"))
    throw PrologError("instantiation_error", who);
  return s;
}

std::string term_text(Machine& m, Word w, const char* who) {
  w = m.deref(w);
  switch (tag_of(w)) {
    case ATM: return m.atom_name((int)payload_of(w));
    case INT: return std::to_string(int_value(w));
    case FLT: return format_float(m.float_value(w));
    default: throw PrologError("type_error", std::string("atom expected in ") + who);
  }
}

template <bool CHARS>
BuiltinResult bi_atom_codes(Machine& m) {
  Word a = A(m, 0);
  if (tag_of(a) != REF) {
    std::string s = term_text(m, a, "atom_codes/2");
    std::vector<Word> items;
    for (unsigned char c : s)
      items.push_back(CHARS ? m.atom_word(std::string(1, c)) : make_int(c));
    return b_unify(m, m.unify(m.x[1], mk_heap_list(m, items)));
  }
  std::string s = list_text(m, m.x[1], CHARS, "atom_codes/2");
  return b_unify(m, m.unify(m.x[0], m.atom_word(s)));
}

BuiltinResult bi_number_codes(Machine& m) {
  Word a = A(m, 0);
  if (tag_of(a) == INT || tag_of(a) == FLT) {
    std::string s = term_text(m, a, "number_codes/2");
    return b_unify(m, m.unify(m.x[1], mk_heap_list(m, text_codes(m, s))));
  }
  std::string s = list_text(m, m.x[1], false, "number_codes/2");
  try {
    TermPtr t = parse_term(s + " .", m.op_table);
    if (t->is_int()) return b_unify(m, m.unify(m.x[0], make_int(t->ival)));
    if (t->is_float())
      return b_unify(m, m.unify(m.x[0], m.make_float(t->fval)));
  } catch (const SyntaxError&) {
  }
  throw PrologError("syntax_error", "number expected: " + s);
}

BuiltinResult bi_atom_length(Machine& m) {
  std::string s = atom_arg(m, 0, "atom_length/2");
  return b_unify(m, m.unify(m.x[1], make_int((int64_t)s.size())));
}

BuiltinResult bi_char_code(Machine& m) {
  Word a = A(m, 0);
  if (tag_of(a) == ATM) {
    const std::string& s = m.atom_name((int)payload_of(a));
    if (s.size() != 1)
      throw PrologError("type_error", "character expected in char_code/2");
    return b_unify(m, m.unify(m.x[1], make_int((unsigned char)s[0])));
  }
  int64_t c = int_arg(m, 1, "char_code/2");
  return b_unify(m, m.unify(m.x[0], m.atom_word(std::string(1, (char)c))));
}

BuiltinResult bi_atom_concat(Machine& m) {
  Word a = A(m, 0), b = A(m, 1), c = A(m, 2);
  if (tag_of(a) != REF && tag_of(b) != REF) {
    std::string s = term_text(m, a, "atom_concat/3") + term_text(m, b, "atom_concat/3");
    return b_unify(m, m.unify(m.x[2], m.atom_word(s)));
  }
  if (tag_of(c) == REF)
    throw PrologError("instantiation_error", "atom_concat/3");
  std::string s = term_text(m, c, "atom_concat/3");
  if (tag_of(a) != REF) {
    std::string pa = term_text(m, a, "atom_concat/3");
    if (s.rfind(pa, 0) != 0) return BuiltinResult::fail();
    return b_unify(m, m.unify(m.x[1], m.atom_word(s.substr(pa.size()))));
  }
  if (tag_of(b) != REF) {
    std::string pb = term_text(m, b, "atom_concat/3");
    if (s.size() < pb.size() || s.compare(s.size() - pb.size(), pb.size(), pb) != 0)
      return BuiltinResult::fail();
    return b_unify(m, m.unify(m.x[0], m.atom_word(s.substr(0, s.size() - pb.size()))));
  }
  throw PrologError("instantiation_error", "atom_concat/3");
}

template <bool DEDUP>
BuiltinResult bi_sort(Machine& m) {
  std::vector<Word> items;
  Word cur = A(m, 0);
  while (tag_of(cur) == LST) {
    items.push_back(m.heap_value(payload_of(cur)));
    cur = m.deref(m.heap_value(payload_of(cur) + 1));
  }
  if (tag_of(cur) == REF)
    throw PrologError("instantiation_error", "sort/2");
  std::stable_sort(items.begin(), items.end(), [&](Word a, Word b) {
    return m.compare_words(a, b) < 0;
  });
  if (DEDUP) {
    std::vector<Word> u;
    for (Word w : items)
      if (u.empty() || m.compare_words(u.back(), w) != 0) u.push_back(w);
    items = std::move(u);
  }
  return b_unify(m, m.unify(m.x[1], mk_heap_list(m, items)));
}

// ---- I/O ----

BuiltinResult bi_write(Machine& m) {
  *m.out << m.write_word(m.x[0], false);
  return BuiltinResult::ok();
}
BuiltinResult bi_writeq(Machine& m) {
  *m.out << m.write_word(m.x[0], true);
  return BuiltinResult::ok();
}
BuiltinResult bi_nl(Machine& m) {
  *m.out << "\n";
  return BuiltinResult::ok();
}
BuiltinResult bi_tab(Machine& m) {
  for (int64_t i = int_arg(m, 0, "tab/1"); i > 0; i--) *m.out << ' ';
  return BuiltinResult::ok();
}

BuiltinResult bi_read(Machine& m) {
  std::string buf;
  std::string line;
  while (std::getline(*m.in, line)) {
    buf += line + "\n";
    try {
      Reader r(buf, &m.op_table);
      auto rr = r.read();
      if (!rr) continue;
      Word w = m.term_to_heap(rr->term, nullptr);
      return b_unify(m, m.unify(m.x[0], w));
    } catch (const SyntaxError&) {
      // incomplete or bad: wait for more input unless the stream is done
      if (!m.in->good()) throw;
    }
  }
  return b_unify(m, m.unify(m.x[0], m.atom_word("end_of_file")));
}

// ---- database ----

TermPtr clause_of(Machine& m, Word w, const char* who) {
  TermPtr t = m.heap_to_term(w, false);
  TermPtr head = t->is_functor(":-", 2) ? t->args[0] : t;
  if (!head->is_callable())
    throw PrologError("type_error", std::string("callable expected in ") + who);
  return t;
}

BuiltinResult bi_assertz(Machine& m) {
  m.add_clause(clause_of(m, m.x[0], "assertz/1"), false);
  return BuiltinResult::ok();
}
BuiltinResult bi_asserta(Machine& m) {
  m.add_clause(clause_of(m, m.x[0], "asserta/1"), true);
  return BuiltinResult::ok();
}

BuiltinResult bi_clause_list(Machine& m) {
  auto [name, arity] = goal_indicator(m, m.x[0], "clause/2");
  PredEntry* p = m.find_pred(name, arity);
  if (!p) return b_unify(m, m.unify(m.x[1], m.atom_word("[]")));
  if (p->kind != PredEntry::Kind::Dynamic)
    throw PrologError("permission_error",
                      "access private_procedure " + name + "/" +
                          std::to_string(arity));
  uint64_t gen = p->generation;
  std::vector<Word> items;
  for (auto& c : p->clauses) {
    if (!(c.birth <= gen && gen < c.death)) continue;
    std::map<uint64_t, Word> fresh;
    items.push_back(m.term_to_heap(c.clause, &fresh));
  }
  return b_unify(m, m.unify(m.x[1], mk_heap_list(m, items)));
}

BuiltinResult bi_clause_refs(Machine& m) {
  auto [name, arity] = goal_indicator(m, m.x[0], "retract/1");
  PredEntry* p = m.find_pred(name, arity);
  if (!p) return b_unify(m, m.unify(m.x[1], m.atom_word("[]")));
  if (p->kind != PredEntry::Kind::Dynamic)
    throw PrologError("permission_error",
                      "modify static_procedure " + name + "/" +
                          std::to_string(arity));
  uint64_t gen = p->generation;
  std::vector<Word> refs;
  for (size_t i = 0; i < p->clauses.size(); i++) {
    auto& c = p->clauses[i];
    if (!(c.birth <= gen && gen < c.death)) continue;
    uint64_t a = m.push_heap(make_ftr((uint64_t)m.intern("$ref"), 3));
    m.push_heap(m.atom_word(name));
    m.push_heap(make_int(arity));
    m.push_heap(make_int((int64_t)i));
    refs.push_back(make_word(STC, a));
  }
  return b_unify(m, m.unify(m.x[1], mk_heap_list(m, refs)));
}

PredEntry* ref_pred(Machine& m, Word ref, size_t& idx) {
  ref = m.deref(ref);
  if (tag_of(ref) != STC) throw PrologError("type_error", "bad clause reference");
  uint64_t p = payload_of(ref);
  std::string name = m.atom_name((int)payload_of(m.deref(m.heap_value(p + 1))));
  int arity = (int)int_value(m.deref(m.heap_value(p + 2)));
  idx = (size_t)int_value(m.deref(m.heap_value(p + 3)));
  return m.find_pred(name, arity);
}

BuiltinResult bi_clause_ref_match(Machine& m) {
  size_t idx;
  PredEntry* p = ref_pred(m, m.x[0], idx);
  if (!p || idx >= p->clauses.size()) return BuiltinResult::fail();
  auto& c = p->clauses[idx];
  if (c.death != ~0ull && c.death <= p->generation) return BuiltinResult::fail();
  Word w = m.term_to_heap(c.clause, nullptr);
  Word head = w, body = m.atom_word("true");
  Word d = m.deref(w);
  if (tag_of(d) == STC) {
    Word fn = m.heap_value(payload_of(d));
    if (m.atom_name((int)ftr_atom(fn)) == ":-" && ftr_arity(fn) == 2) {
      head = m.heap_value(payload_of(d) + 1);
      body = m.heap_value(payload_of(d) + 2);
    }
  }
  return b_unify(m, m.unify(m.x[1], head) && m.unify(m.x[2], body));
}

BuiltinResult bi_erase(Machine& m) {
  size_t idx;
  PredEntry* p = ref_pred(m, m.x[0], idx);
  if (!p || idx >= p->clauses.size()) return BuiltinResult::fail();
  p->clauses[idx].death = ++p->generation;
  return BuiltinResult::ok();
}

// ---- findall ----

BuiltinResult bi_fa_begin(Machine& m) {
  m.findall_stack.emplace_back();
  return BuiltinResult::ok();
}
BuiltinResult bi_fa_add(Machine& m) {
  if (m.findall_stack.empty()) throw RuntimeFault("findall buffer underflow");
  m.findall_stack.back().push_back(m.heap_to_term(m.x[0], false));
  return BuiltinResult::ok();
}
BuiltinResult bi_fa_end(Machine& m) {
  if (m.findall_stack.empty()) throw RuntimeFault("findall buffer underflow");
  std::vector<TermPtr> items = std::move(m.findall_stack.back());
  m.findall_stack.pop_back();
  std::vector<Word> ws;
  for (auto& t : items) ws.push_back(m.term_to_heap(t, nullptr));
  // fresh variables per solution
  std::vector<Word> ws2;
  for (size_t i = 0; i < ws.size(); i++) ws2.push_back(ws[i]);
  return b_unify(m, m.unify(m.x[0], mk_heap_list(m, ws2)));
}

// ---- misc ----

BuiltinResult bi_op(Machine& m) {
  int64_t prio = int_arg(m, 0, "op/3");
  std::string type = atom_arg(m, 1, "op/3");
  auto ty = op_type_from_name(type);
  if (!ty) throw PrologError("domain_error", "operator_specifier: " + type);
  Word names = A(m, 2);
  std::vector<std::string> ns;
  if (tag_of(names) == ATM) {
    ns.push_back(m.atom_name((int)payload_of(names)));
  } else {
    Word cur = names;
    while (tag_of(cur) == LST) {
      Word h = m.deref(m.heap_value(payload_of(cur)));
      if (tag_of(h) != ATM)
        throw PrologError("type_error", "atom expected in op/3");
      ns.push_back(m.atom_name((int)payload_of(h)));
      cur = m.deref(m.heap_value(payload_of(cur) + 1));
    }
  }
  for (auto& n : ns) {
    try {
      m.op_table.update(n, (int)prio, *ty);
    } catch (const TableError& e) {
      throw PrologError("domain_error", e.what());
    }
  }
  return BuiltinResult::ok();
}

BuiltinResult bi_listing(Machine& m) {
  for (auto& [key, p] : m.preds()) {
    if (!key.first.empty() && key.first[0] == '$') continue;
    if (p.mask & (4 | 8)) continue;  // built-ins are not listed
    if (p.kind == PredEntry::Kind::Dynamic) {
      uint64_t gen = p.generation;
      for (auto& c : p.clauses) {
        if (!(c.birth <= gen && gen < c.death)) continue;
        *m.out << write_term(c.clause, m.op_table, {.quoted = true}) << ".\n";
      }
      *m.out << "\n";
    } else if (p.kind == PredEntry::Kind::Static) {
      *m.out << "% " << key.first << "/" << key.second << " (static)\n";
    }
  }
  return BuiltinResult::ok();
}

BuiltinResult bi_consult(Machine& m) {
  std::string path = atom_arg(m, 0, "consult/1");
  try {
    m.consult_file(path);
    return BuiltinResult::ok();
  } catch (const CompileError& e) {
    *m.err << "consult: " << e.what() << std::endl;
  } catch (const SyntaxError& e) {
    *m.err << "consult: " << e.what() << std::endl;
  } catch (const LinkError& e) {
    *m.err << "consult: " << e.what() << std::endl;
  } catch (const std::ios_base::failure&) {
    *m.err << "consult: cannot read " << path << std::endl;
  } catch (const RuntimeFault& e) {
    *m.err << "consult: " << e.what() << std::endl;
  }
  return BuiltinResult::fail();
}

BuiltinResult bi_tr_port(Machine& m) {
  std::string port = atom_arg(m, 0, "$tr_port");
  *m.err << port << ": " << m.write_word(m.x[1], true) << "\n";
  return BuiltinResult::ok();
}

}  // namespace

// ---------------------------------------------------------------------------
// Builtin registry
// ---------------------------------------------------------------------------

const std::vector<BuiltinSpec>& all_builtin_specs() {
  static std::vector<BuiltinSpec> specs = [] {
    std::vector<BuiltinSpec> v = {
        {"$dispatch", 1, false, bi_dispatch},
        {"$dyn_run", 1, false, bi_dyn_run},
        {"$is_control", 1, false, bi_is_control},
        {"$barrier", 1, false, bi_barrier},
        {"$cut_to", 1, false, bi_cut_to},
        {"$add_args", 3, false, bi_add_args},
        {"$halt", 1, false, bi_halt},
        {"true", 0, false, bi_true},
        {"fail", 0, false, bi_fail},
        {"false", 0, false, bi_fail},
        {"=", 2, false, bi_eq},
        {"\\=", 2, false, bi_neq},
        {"var", 1, false, bi_var},
        {"nonvar", 1, false, bi_nonvar},
        {"atom", 1, false, bi_atom},
        {"integer", 1, false, bi_integer},
        {"float", 1, false, bi_float},
        {"number", 1, false, bi_number},
        {"atomic", 1, false, bi_atomic},
        {"compound", 1, false, bi_compound},
        {"callable", 1, false, bi_callable},
        {"is_list", 1, false, bi_is_list},
        {"is", 2, false, bi_is},
        {"=:=", 2, false, bi_arith_cmp<0>},
        {"=\\=", 2, false, bi_arith_cmp<1>},
        {"<", 2, false, bi_arith_cmp<2>},
        {">", 2, false, bi_arith_cmp<3>},
        {"=<", 2, false, bi_arith_cmp<4>},
        {">=", 2, false, bi_arith_cmp<5>},
        {"==", 2, false, bi_term_cmp<0>},
        {"\\==", 2, false, bi_term_cmp<1>},
        {"@<", 2, false, bi_term_cmp<2>},
        {"@>", 2, false, bi_term_cmp<3>},
        {"@=<", 2, false, bi_term_cmp<4>},
        {"@>=", 2, false, bi_term_cmp<5>},
        {"compare", 3, false, bi_compare},
        {"functor", 3, false, bi_functor},
        {"arg", 3, false, bi_arg},
        {"=..", 2, false, bi_univ},
        {"copy_term", 2, false, bi_copy_term},
        {"atom_codes", 2, false, bi_atom_codes<false>},
        {"atom_chars", 2, false, bi_atom_codes<true>},
        {"number_codes", 2, false, bi_number_codes},
        {"atom_length", 2, false, bi_atom_length},
        {"char_code", 2, false, bi_char_code},
        {"atom_concat", 3, false, bi_atom_concat},
        {"sort", 2, false, bi_sort<true>},
        {"msort", 2, false, bi_sort<false>},
        {"write", 1, false, bi_write},
        {"print", 1, false, bi_write},
        {"writeq", 1, false, bi_writeq},
        {"write_canonical", 1, false, bi_writeq},
        {"nl", 0, false, bi_nl},
        {"tab", 1, false, bi_tab},
        {"read", 1, false, bi_read},
        {"assert", 1, false, bi_assertz},
        {"assertz", 1, false, bi_assertz},
        {"asserta", 1, false, bi_asserta},
        {"$assertz", 1, false, bi_assertz},
        {"$clause_list", 2, false, bi_clause_list},
        {"$clause_refs", 2, false, bi_clause_refs},
        {"$clause_ref_match", 3, false, bi_clause_ref_match},
        {"$erase", 1, false, bi_erase},
        {"$fa_begin", 0, false, bi_fa_begin},
        {"$fa_add", 1, false, bi_fa_add},
        {"$fa_end", 1, false, bi_fa_end},
        {"op", 3, false, bi_op},
        {"$listing", 0, false, bi_listing},
        {"$consult", 1, false, bi_consult},
        {"$tr_port", 2, false, bi_tr_port},
    };
    add_fd_builtin_specs(v);
    return v;
  }();
  return specs;
}

const std::set<std::string>& builtin_symbol_set() {
  static std::set<std::string> syms = [] {
    std::set<std::string> s;
    for (auto& b : all_builtin_specs()) s.insert(encode_symbol(b.name, b.arity));
    // the prelude provides additional predicates at startup
    CompilerSession cs;
    cs.opts.origin = "built_in";
    WamFile wf = cs.compile_source(
        "prolite:prelude",
        std::string(prelude_source()) + fd_prelude_source());
    for (auto& p : wf.preds) s.insert(encode_symbol(p.name, p.arity));
    return s;
  }();
  return syms;
}

// ---------------------------------------------------------------------------
// Machine: bootstrap, dynamic predicates, consult
// ---------------------------------------------------------------------------

void Machine::bootstrap() {
  // reserved control addresses
  code_.push_back(Instr{Instr::K::StopSuccess});
  code_.push_back(Instr{Instr::K::StopFail});
  code_.push_back(Instr{Instr::K::PlFail});
  heap_[0] = make_int(0);

  fd_ = std::make_unique<fd::FdEngine>(
      &trail_, [this]() -> uint64_t { return b_ ? cp_serial(b_) : 0; });

  for (auto& spec : all_builtin_specs()) {
    uint32_t id = (uint32_t)builtins_.size();
    builtins_.push_back(spec);
    uint64_t addr = code_.size();
    Instr bi;
    bi.k = Instr::K::Builtin;
    bi.a = id;
    code_.push_back(bi);
    code_.push_back(Instr{Instr::K::PlRet});
    uint32_t sid = slot_id(encode_symbol(spec.name, spec.arity));
    slots_[sid] = addr;
    PredEntry e;
    e.kind = PredEntry::Kind::Builtin;
    e.name = spec.name;
    e.arity = spec.arity;
    e.addr = addr;
    e.mask = spec.fd ? 8 : 4;
    preds_[{e.name, e.arity}] = std::move(e);
  }

  register_default_fd(*this);

  CompilerSession cs;
  cs.opts.origin = "built_in";
  WamFile wf = cs.compile_source(
      "prolite:prelude", std::string(prelude_source()) + fd_prelude_source());
  dynamic_load(translate_wam(wf));
}

uint64_t Machine::make_dyn_stub(const std::string& name, int arity) {
  uint32_t id = (uint32_t)dyn_keys.size();
  dyn_keys.push_back({name, arity});
  uint64_t addr = code_.size();
  Instr en;
  en.k = Instr::K::DynEnter;
  en.a = id;
  code_.push_back(en);
  Instr re;
  re.k = Instr::K::DynRetry;
  re.a = id;
  code_.push_back(re);
  return addr;
}

PredEntry& Machine::ensure_dynamic(const std::string& name, int arity) {
  auto it = preds_.find({name, arity});
  if (it != preds_.end()) {
    if (it->second.kind != PredEntry::Kind::Dynamic)
      throw PrologError("permission_error", "modify static_procedure " + name +
                                                "/" + std::to_string(arity));
    return it->second;
  }
  PredEntry e;
  e.kind = PredEntry::Kind::Dynamic;
  e.name = name;
  e.arity = arity;
  e.mask = 1;
  e.addr = make_dyn_stub(name, arity);
  // runtime-defined dynamic predicates are reachable from static calls too
  uint32_t sid = slot_id(encode_symbol(name, arity));
  if (!slots_[sid]) slots_[sid] = e.addr;
  auto [pos, ok] = preds_.insert({{name, arity}, std::move(e)});
  (void)ok;
  return pos->second;
}

void Machine::add_clause(const TermPtr& clause, bool front) {
  TermPtr head = clause->is_functor(":-", 2) ? clause->args[0] : clause;
  PredEntry& p = ensure_dynamic(head->name, (int)head->arity());
  DynClause c;
  c.clause = term_rename(clause);
  c.birth = ++p.generation;
  if (front)
    p.clauses.insert(p.clauses.begin(), std::move(c));
  else
    p.clauses.push_back(std::move(c));
}

void Machine::dyn_step(const Instr& I) {
  auto& key = dyn_keys[I.a];
  PredEntry* p = find_pred(key.first, key.second);
  if (!p || p->kind != PredEntry::Kind::Dynamic) {
    do_fail();
    return;
  }
  int arity = p->arity;
  uint64_t entry = p->addr;

  auto alive_at = [&](size_t i, uint64_t gen) {
    auto& c = p->clauses[i];
    return c.birth <= gen && gen < c.death;
  };
  auto next_alive = [&](size_t from, uint64_t gen) -> int64_t {
    for (size_t i = from; i < p->clauses.size(); i++)
      if (alive_at(i, gen)) return (int64_t)i;
    return -1;
  };

  uint64_t gen;
  int64_t idx;
  if (I.k == Instr::K::DynEnter) {
    gen = p->generation;
    idx = next_alive(0, gen);
    if (idx < 0) {
      do_fail();
      return;
    }
    int64_t following = next_alive((size_t)idx + 1, gen);
    if (following >= 0) {
      x[arity] = make_int((int64_t)I.a);
      x[arity + 1] = make_int((int64_t)gen);
      x[arity + 2] = make_int(following);
      create_cp(arity + 3, entry + 1);  // resume at the DynRetry instruction
    }
  } else {
    uint64_t b = b_;
    restore_cp_state(b, -1);
    gen = (uint64_t)int_value(x[arity + 1]);
    idx = int_value(x[arity + 2]);
    int64_t following = next_alive((size_t)idx + 1, gen);
    if (following < 0) {
      b_ = cp_prevb(b);
    } else {
      uint64_t k = cp_k(b);
      lcl_[b - 9 - k + arity + 2] = make_int(following);
    }
  }

  // try the selected clause
  std::map<uint64_t, Word> varmap;
  Word w = term_to_heap(p->clauses[idx].clause, &varmap);
  Word d = deref(w);
  Word head = w, body = atom_word("true");
  if (tag_of(d) == STC) {
    Word fn = heap_[payload_of(d)];
    if (atom_name((int)ftr_atom(fn)) == ":-" && ftr_arity(fn) == 2) {
      head = heap_[payload_of(d) + 1];
      body = heap_[payload_of(d) + 2];
    }
  }
  bool ok = true;
  Word hd = deref(head);
  if (arity > 0) {
    uint64_t hp = payload_of(hd);
    for (int i = 0; i < arity && ok; i++) ok = unify(heap_[hp + 1 + i], x[i]);
  }
  if (!ok) {
    do_fail();
    return;
  }
  Word bd = deref(body);
  if (tag_of(bd) == ATM && atom_name((int)payload_of(bd)) == "true") {
    pc_ = cp_;
    return;
  }
  x[0] = body;
  pc_ = pred_entry_addr("call", 1);
}

void Machine::consult_text(const std::string& text, const std::string& path) {
  CompilerSession cs;
  cs.opts = compile_opts;
  cs.opts.origin = "user";
  WamFile wf = cs.compile_source(path, text);
  for (auto& w : cs.warnings) *err << "warning: " << w << std::endl;
  MaObject obj = translate_wam(wf);
  dynamic_load(obj);
}

void Machine::consult_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CompileError(0, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  consult_text(ss.str(), path);
}

void Machine::load_fd_library_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeFault("cannot open fd library " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  fd_->register_source(ss.str());
}

}  // namespace prolite
