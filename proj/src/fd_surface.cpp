#include <algorithm>

#include "vm_internal.hpp"

namespace prolite {

using namespace rt;
namespace fd = prolite::fd;

// ---------------------------------------------------------------------------
// Default constraint definitions
// ---------------------------------------------------------------------------

static const char* kDefaultFdDefs = R"FD(
/* arithmetic primitives used by the #-operator expansion */

x_eq_c (fdv X, int C) { start X in { C } }
x_neq_c (fdv X, int C) { start X in ~{ C } }
x_lte_c (fdv X, int C) { start X in 0 .. C }
x_gte_c (fdv X, int C) { start X in C .. max_integer }

x_eq_y (fdv X, fdv Y) {
  start X in min(Y) .. max(Y)
  start Y in min(X) .. max(X)
}

x_neq_y (fdv X, fdv Y) {
  start X in ~{ val(Y) }
  start Y in ~{ val(X) }
}

x_lte_y (fdv X, fdv Y) {
  start X in 0 .. max(Y)
  start Y in min(X) .. max_integer
}

x_lt_y (fdv X, fdv Y) {
  start X in 0 .. max(Y) - 1
  start Y in min(X) + 1 .. max_integer
}

x_plus_c_eq_y (fdv X, int C, fdv Y) {
  start X in min(Y) - C .. max(Y) - C        /* X = Y - C */
  start Y in min(X) + C .. max(X) + C        /* Y = X + C */
}

x_plus_c_neq_y (fdv X, int C, fdv Y) {
  start X in ~{ val(Y) - C }
  start Y in ~{ val(X) + C }
}

x_plus_y_eq_z (fdv X, fdv Y, fdv Z) {
  start X in min(Z) - max(Y) .. max(Z) - min(Y)
  start Y in min(Z) - max(X) .. max(Z) - min(X)
  start Z in min(X) + min(Y) .. max(X) + max(Y)
}

ax_eq_y (int A, fdv X, fdv Y) {                /* A*X = Y */
  start X in min(Y) /> A .. max(Y) /< A
  start Y in A * min(X) .. A * max(X)
}

min_x_a_eq_z (fdv X, int A, fdv Z) {
  start (c1) Z in Min(min(X),A) .. max_integer /* Z >= min(X,A) */
  start (c2) Z in 0 .. max(X)                  /* Z <= X */
  start (c3) X in min(Z) .. max_integer
  start      Z in 0 .. A                       /* Z <= A */

  wait_switch
     case A > max(Z)                           /* case A != Z */
        stop c1
        stop c2
        stop c3
        start Z in min(X) .. max(X)            /* Z = X */
        start X in min(Z) .. max(Z)
}

truth_x_eq_c (fdv X, int C, fdv B) {
  wait_switch
     case max(B) == 0                  /* B = 0 */
         start X in ~{ C }
     case min(B) == 1                  /* B = 1 */
         start X in { C }
     case min(X) > C || max(X) < C     /* X != C */
         start B in { 0 }
     case min(X) == C && max(X) == C   /* X = C */
         start B in { 1 }
}

pl_fd_element (fdv I, l_int L, fdv V) {
  start I in Pl_Fd_Element_I(L)
  start V in Pl_Fd_Element_I_To_V(dom(I), L)
  start I in Pl_Fd_Element_V_To_I(dom(V), L)
}
)FD";

namespace {

fd::FdDomain domain_from_values(std::vector<int64_t> vals) {
  std::sort(vals.begin(), vals.end());
  vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
  while (!vals.empty() && vals.front() < 0) vals.erase(vals.begin());
  while (!vals.empty() && vals.back() > fd::kSparseLimit) vals.pop_back();
  if (vals.empty()) return fd::FdDomain::empty();
  fd::FdDomain d = fd::FdDomain::interval(vals.back(), vals.back());
  d.make_sparse();
  d.clear_bit(vals.back());
  for (int64_t v : vals) d.set_bit(v);
  d.recompute_extrema();
  return d;
}

}  // namespace

void register_default_fd(Machine& m) {
  auto& eng = m.fd();
  eng.register_external("Pl_Fd_Element_I", 1,
                        [](const std::vector<fd::FnArgVal>& a) {
                          return fd::FdDomain::interval(
                              1, (int64_t)a[0].ints.size());
                        });
  eng.register_external(
      "Pl_Fd_Element_I_To_V", 2, [](const std::vector<fd::FnArgVal>& a) {
        const fd::FdDomain& di = a[0].dom;
        const std::vector<int64_t>& l = a[1].ints;
        std::vector<int64_t> vals;
        for (int64_t j = di.next_value(1); j >= 1; j = di.next_value(j + 1)) {
          if (j <= (int64_t)l.size()) vals.push_back(l[j - 1]);
          if (j >= di.hi) break;
        }
        return domain_from_values(std::move(vals));
      });
  eng.register_external(
      "Pl_Fd_Element_V_To_I", 2, [](const std::vector<fd::FnArgVal>& a) {
        const fd::FdDomain& dv = a[0].dom;
        const std::vector<int64_t>& l = a[1].ints;
        std::vector<int64_t> idx;
        for (size_t j = 0; j < l.size(); j++)
          if (l[j] >= 0 && dv.contains(l[j])) idx.push_back((int64_t)j + 1);
        return domain_from_values(std::move(idx));
      });
  eng.register_source(kDefaultFdDefs);
}

// ---------------------------------------------------------------------------
// FD built-in predicates
// ---------------------------------------------------------------------------

namespace {

int fdize(Machine& m, Word w) {
  w = m.deref(w);
  switch (tag_of(w)) {
    case FDV: return (int)payload_of(w);
    case REF: {
      int h = m.fd().new_var(0, fd::kMaxInteger);
      m.bind(payload_of(w), make_word(FDV, (uint64_t)h));
      return h;
    }
    case INT: {
      int64_t v = int_value(w);
      if (v < 0 || v > fd::kMaxInteger)
        throw PrologError("domain_error",
                          "fd value out of range: " + std::to_string(v));
      return m.fd().new_var(v, v);
    }
    default:
      throw PrologError("type_error", "fd variable expected");
  }
}

bool inst(Machine& m, const std::string& name,
          std::vector<fd::InstallArg> args) {
  const fd::CompiledDef* def = m.fd().find_def(name, args.size());
  if (!def)
    throw PrologError("existence_error", "fd constraint " + name + "/" +
                                             std::to_string(args.size()));
  return m.fd().install(*def, args);
}

BuiltinResult bres(bool ok) {
  return ok ? BuiltinResult::ok() : BuiltinResult::fail();
}

// ---- fd_domain ----

bool fd_domain_one(Machine& m, Word w, int64_t lo, int64_t hi) {
  w = m.deref(w);
  switch (tag_of(w)) {
    case REF: {
      int h = m.fd().new_var(lo, hi);
      m.bind(payload_of(w), make_word(FDV, (uint64_t)h));
      return true;
    }
    case FDV: return m.fd().tell_interval((int)payload_of(w), lo, hi);
    case INT: {
      int64_t v = int_value(w);
      return v >= lo && v <= hi;
    }
    default:
      throw PrologError("type_error", "fd variable expected in fd_domain/3");
  }
}

BuiltinResult bi_fd_domain(Machine& m) {
  Word lo_w = m.deref(m.x[1]), hi_w = m.deref(m.x[2]);
  if (tag_of(lo_w) != INT || tag_of(hi_w) != INT)
    throw PrologError("type_error", "integer bounds expected in fd_domain/3");
  int64_t lo = int_value(lo_w), hi = int_value(hi_w);
  if (lo < 0 || hi > fd::kMaxInteger || lo > hi)
    throw PrologError("domain_error", "invalid fd_domain interval");
  Word v = m.deref(m.x[0]);
  if (tag_of(v) == LST) {
    Word cur = v;
    while (tag_of(cur) == LST) {
      if (!fd_domain_one(m, m.heap_value(payload_of(cur)), lo, hi))
        return BuiltinResult::fail();
      cur = m.deref(m.heap_value(payload_of(cur) + 1));
    }
    return BuiltinResult::ok();
  }
  return bres(fd_domain_one(m, v, lo, hi));
}

// ---- linear normalization for the #-operators ----

struct LinForm {
  std::map<int, int64_t> coef;  // fd var handle -> coefficient
  int64_t cst = 0;
};

void lin_walk(Machine& m, Word w, int64_t sign, LinForm& out) {
  w = m.deref(w);
  switch (tag_of(w)) {
    case INT:
      out.cst += sign * int_value(w);
      return;
    case REF:
    case FDV: {
      int h = fdize(m, w);
      out.coef[h] += sign;
      return;
    }
    case STC: {
      uint64_t p = payload_of(w);
      Word fn = m.heap_value(p);
      const std::string& name = m.atom_name((int)ftr_atom(fn));
      uint64_t n = ftr_arity(fn);
      if (name == "+" && n == 2) {
        lin_walk(m, m.heap_value(p + 1), sign, out);
        lin_walk(m, m.heap_value(p + 2), sign, out);
        return;
      }
      if (name == "-" && n == 2) {
        lin_walk(m, m.heap_value(p + 1), sign, out);
        lin_walk(m, m.heap_value(p + 2), -sign, out);
        return;
      }
      if (name == "-" && n == 1) {
        lin_walk(m, m.heap_value(p + 1), -sign, out);
        return;
      }
      if (name == "+" && n == 1) {
        lin_walk(m, m.heap_value(p + 1), sign, out);
        return;
      }
      if (name == "*" && n == 2) {
        Word a = m.deref(m.heap_value(p + 1));
        Word b = m.deref(m.heap_value(p + 2));
        if (tag_of(a) == INT && tag_of(b) == INT) {
          out.cst += sign * int_value(a) * int_value(b);
          return;
        }
        if (tag_of(a) == INT || tag_of(b) == INT) {
          Word c = tag_of(a) == INT ? a : b;
          Word v = tag_of(a) == INT ? b : a;
          LinForm sub;
          lin_walk(m, v, sign * int_value(c), sub);
          for (auto& [h, k] : sub.coef) out.coef[h] += k;
          out.cst += sub.cst;
          return;
        }
        throw PrologError("type_error", "non-linear fd expression");
      }
      throw PrologError("type_error", "bad fd expression: " + name + "/" +
                                          std::to_string(n));
    }
    default:
      throw PrologError("type_error", "bad fd expression");
  }
}

// a side reduced to: constant, a variable or a variable plus a constant
struct Side {
  enum class K { Const, Var, VarPlusC } k = K::Const;
  int64_t c = 0;
  int var = -1;
};

// builds Sum(terms)+cst as a single variable (fresh auxiliaries as needed)
Side build_side(Machine& m, const std::vector<std::pair<int, int64_t>>& terms,
                int64_t cst, bool& ok) {
  ok = true;
  if (terms.empty()) return Side{Side::K::Const, cst, -1};
  std::vector<int> vars;
  for (auto& [h, k] : terms) {
    if (k == 1) {
      vars.push_back(h);
    } else {
      int t = m.fd().new_var(0, fd::kMaxInteger);
      if (!inst(m, "ax_eq_y",
                {fd::InstallArg::mkint(k), fd::InstallArg::mkvar(h),
                 fd::InstallArg::mkvar(t)})) {
        ok = false;
        return {};
      }
      vars.push_back(t);
    }
  }
  int sum = vars[0];
  for (size_t i = 1; i < vars.size(); i++) {
    int s2 = m.fd().new_var(0, fd::kMaxInteger);
    if (!inst(m, "x_plus_y_eq_z",
              {fd::InstallArg::mkvar(sum), fd::InstallArg::mkvar(vars[i]),
               fd::InstallArg::mkvar(s2)})) {
      ok = false;
      return {};
    }
    sum = s2;
  }
  if (cst == 0) return Side{Side::K::Var, 0, sum};
  return Side{Side::K::VarPlusC, cst, sum};
}

enum class Rel { Eq, Neq, Lte, Lt };

bool relate(Machine& m, Rel rel, Side a, Side b) {
  using K = Side::K;
  // X+c REL Y+d  ==  X+(c-d) REL Y; keep the surplus on one side only
  if (a.k != K::Const && b.k != K::Const) {
    int64_t diff = a.c - b.c;
    a.c = diff > 0 ? diff : 0;
    b.c = diff < 0 ? -diff : 0;
    a.k = a.c ? K::VarPlusC : K::Var;
    b.k = b.c ? K::VarPlusC : K::Var;
  }
  auto as_var = [&](Side s) -> int {
    if (s.k == K::Var) return s.var;
    // materialize V+c as an auxiliary variable
    int t = m.fd().new_var(0, fd::kMaxInteger);
    if (!inst(m, "x_plus_c_eq_y",
              {fd::InstallArg::mkvar(s.var), fd::InstallArg::mkint(s.c),
               fd::InstallArg::mkvar(t)}))
      return -1;
    return t;
  };
  switch (rel) {
    case Rel::Eq: {
      if (a.k == K::Const && b.k == K::Const) return a.c == b.c;
      if (a.k == K::Const || b.k == K::Const) {
        Side v = a.k == K::Const ? b : a;
        int64_t c = a.k == K::Const ? a.c : b.c;
        c -= v.c;
        if (c < 0) return false;
        return inst(m, "x_eq_c",
                    {fd::InstallArg::mkvar(v.var), fd::InstallArg::mkint(c)});
      }
      if (a.k == K::Var && b.k == K::Var)
        return inst(m, "x_eq_y",
                    {fd::InstallArg::mkvar(a.var), fd::InstallArg::mkvar(b.var)});
      // one side carries a constant: X = Y + c
      Side x = a.k == K::Var ? a : b;
      Side yc = a.k == K::Var ? b : a;
      return inst(m, "x_plus_c_eq_y",
                  {fd::InstallArg::mkvar(yc.var), fd::InstallArg::mkint(yc.c),
                   fd::InstallArg::mkvar(x.var)});
    }
    case Rel::Neq: {
      if (a.k == K::Const && b.k == K::Const) return a.c != b.c;
      if (a.k == K::Const || b.k == K::Const) {
        Side v = a.k == K::Const ? b : a;
        int64_t c = a.k == K::Const ? a.c : b.c;
        c -= v.c;
        if (c < 0) return true;  // values are non-negative
        return inst(m, "x_neq_c",
                    {fd::InstallArg::mkvar(v.var), fd::InstallArg::mkint(c)});
      }
      if (a.k == K::Var && b.k == K::Var)
        return inst(m, "x_neq_y",
                    {fd::InstallArg::mkvar(a.var), fd::InstallArg::mkvar(b.var)});
      Side x = a.k == K::Var ? a : b;
      Side yc = a.k == K::Var ? b : a;
      // X != Y + c  ==  x_plus_c_neq_y(Y, c, X)  (Y+c != X)
      return inst(m, "x_plus_c_neq_y",
                  {fd::InstallArg::mkvar(yc.var), fd::InstallArg::mkint(yc.c),
                   fd::InstallArg::mkvar(x.var)});
    }
    case Rel::Lte:
    case Rel::Lt: {
      bool strict = rel == Rel::Lt;
      if (a.k == K::Const && b.k == K::Const)
        return strict ? a.c < b.c : a.c <= b.c;
      if (a.k == K::Const) {
        // c <= Y(+d)
        int64_t c = a.c - b.c + (strict ? 1 : 0);
        if (c <= 0) return true;
        return inst(m, "x_gte_c",
                    {fd::InstallArg::mkvar(b.var), fd::InstallArg::mkint(c)});
      }
      if (b.k == K::Const) {
        int64_t c = b.c - a.c - (strict ? 1 : 0);
        if (c < 0) return false;
        return inst(m, "x_lte_c",
                    {fd::InstallArg::mkvar(a.var), fd::InstallArg::mkint(c)});
      }
      int va = as_var(a);
      int vb = as_var(b);
      if (va < 0 || vb < 0) return false;
      return inst(m, strict ? "x_lt_y" : "x_lte_y",
                  {fd::InstallArg::mkvar(va), fd::InstallArg::mkvar(vb)});
    }
  }
  return false;
}

BuiltinResult fd_rel(Machine& m, Rel rel, bool swap) {
  LinForm l, r;
  lin_walk(m, m.x[swap ? 1 : 0], 1, l);
  lin_walk(m, m.x[swap ? 0 : 1], 1, r);
  // move everything var-wise to one canonical difference
  std::map<int, int64_t> diff = l.coef;
  for (auto& [h, k] : r.coef) diff[h] -= k;
  int64_t c = l.cst - r.cst;
  std::vector<std::pair<int, int64_t>> pos, neg;
  for (auto& [h, k] : diff) {
    if (k > 0) pos.push_back({h, k});
    if (k < 0) neg.push_back({h, -k});
  }
  bool ok = true;
  Side left = build_side(m, pos, c > 0 ? c : 0, ok);
  if (!ok) return BuiltinResult::fail();
  Side right = build_side(m, neg, c < 0 ? -c : 0, ok);
  if (!ok) return BuiltinResult::fail();
  return bres(relate(m, rel, left, right));
}

BuiltinResult bi_hash_eq(Machine& m) { return fd_rel(m, Rel::Eq, false); }
BuiltinResult bi_hash_neq(Machine& m) { return fd_rel(m, Rel::Neq, false); }
BuiltinResult bi_hash_lt(Machine& m) { return fd_rel(m, Rel::Lt, false); }
BuiltinResult bi_hash_lte(Machine& m) { return fd_rel(m, Rel::Lte, false); }
BuiltinResult bi_hash_gt(Machine& m) { return fd_rel(m, Rel::Lt, true); }
BuiltinResult bi_hash_gte(Machine& m) { return fd_rel(m, Rel::Lte, true); }

// ---- fd_tell ----

BuiltinResult bi_fd_tell(Machine& m) {
  Word g = m.deref(m.x[0]);
  if (tag_of(g) == REF)
    throw PrologError("instantiation_error", "fd_tell/1");
  if (tag_of(g) != STC && tag_of(g) != ATM)
    throw PrologError("type_error", "callable expected in fd_tell/1");
  std::string name;
  std::vector<Word> args;
  if (tag_of(g) == ATM) {
    name = m.atom_name((int)payload_of(g));
  } else {
    uint64_t p = payload_of(g);
    Word fn = m.heap_value(p);
    name = m.atom_name((int)ftr_atom(fn));
    for (uint64_t i = 1; i <= ftr_arity(fn); i++)
      args.push_back(m.heap_value(p + i));
  }
  const fd::CompiledDef* def = m.fd().find_def(name, args.size());
  if (!def)
    throw PrologError("existence_error", "fd constraint " + name + "/" +
                                             std::to_string(args.size()));
  std::vector<fd::InstallArg> ia;
  for (size_t i = 0; i < args.size(); i++) {
    Word w = m.deref(args[i]);
    switch (def->params[i].type) {
      case fd::FdParam::Type::Fdv:
        ia.push_back(fd::InstallArg::mkvar(fdize(m, w)));
        break;
      case fd::FdParam::Type::Int:
        if (tag_of(w) != INT)
          throw PrologError("type_error", "integer expected in fd_tell/1");
        ia.push_back(fd::InstallArg::mkint(int_value(w)));
        break;
      case fd::FdParam::Type::LInt: {
        std::vector<int64_t> vals;
        Word cur = w;
        while (tag_of(cur) == LST) {
          Word h = m.deref(m.heap_value(payload_of(cur)));
          if (tag_of(h) != INT)
            throw PrologError("type_error", "integer list expected in fd_tell/1");
          vals.push_back(int_value(h));
          cur = m.deref(m.heap_value(payload_of(cur) + 1));
        }
        ia.push_back(fd::InstallArg::mkints(std::move(vals)));
        break;
      }
      case fd::FdParam::Type::LFdv: {
        std::vector<int> hs;
        Word cur = w;
        while (tag_of(cur) == LST) {
          hs.push_back(fdize(m, m.heap_value(payload_of(cur))));
          cur = m.deref(m.heap_value(payload_of(cur) + 1));
        }
        ia.push_back(fd::InstallArg::mkvars(std::move(hs)));
        break;
      }
    }
  }
  return bres(m.fd().install(*def, ia));
}

// ---- element/3 ----

BuiltinResult bi_element(Machine& m) {
  std::vector<int64_t> list;
  Word cur = m.deref(m.x[1]);
  while (tag_of(cur) == LST) {
    Word h = m.deref(m.heap_value(payload_of(cur)));
    if (tag_of(h) != INT)
      throw PrologError("type_error", "integer list expected in element/3");
    list.push_back(int_value(h));
    cur = m.deref(m.heap_value(payload_of(cur) + 1));
  }
  if (tag_of(cur) == REF)
    throw PrologError("instantiation_error", "element/3");
  int i = fdize(m, m.x[0]);
  int v = fdize(m, m.x[2]);
  return bres(inst(m, "pl_fd_element",
                   {fd::InstallArg::mkvar(i), fd::InstallArg::mkints(list),
                    fd::InstallArg::mkvar(v)}));
}

// ---- labeling support & accessors ----

bool fd_is_bound(Machine& m, Word w) {
  w = m.deref(w);
  if (tag_of(w) == INT) return true;
  if (tag_of(w) == FDV) return m.fd().var((int)payload_of(w)).dom.singleton();
  return false;
}

BuiltinResult bi_fd_select(Machine& m) {
  Word cur = m.deref(m.x[0]);
  bool first_fail = false;
  Word o = m.deref(m.x[1]);
  while (tag_of(o) == LST) {
    Word h = m.deref(m.heap_value(payload_of(o)));
    if (tag_of(h) == ATM) {
      const std::string& n = m.atom_name((int)payload_of(h));
      if (n == "first_fail" || n == "ff") first_fail = true;
    } else if (tag_of(h) == STC) {
      Word fn = m.heap_value(payload_of(h));
      if (m.atom_name((int)ftr_atom(fn)) == "variable_method") {
        Word v = m.deref(m.heap_value(payload_of(h) + 1));
        if (tag_of(v) == ATM &&
            m.atom_name((int)payload_of(v)) == "ff")
          first_fail = true;
      }
    }
    o = m.deref(m.heap_value(payload_of(o) + 1));
  }
  Word best = 0;
  int64_t best_size = -1;
  while (tag_of(cur) == LST) {
    Word h = m.deref(m.heap_value(payload_of(cur)));
    if (!fd_is_bound(m, h)) {
      if (tag_of(h) == REF) {
        fdize(m, h);
        h = m.deref(h);
      }
      if (!first_fail) {
        return bres(m.unify(m.x[2], h));
      }
      int64_t sz = m.fd().var((int)payload_of(h)).dom.size();
      if (best_size < 0 || sz < best_size) {
        best_size = sz;
        best = h;
      }
    }
    cur = m.deref(m.heap_value(payload_of(cur) + 1));
  }
  if (best_size < 0) return BuiltinResult::fail();
  return bres(m.unify(m.x[2], best));
}

BuiltinResult bi_fd_bound(Machine& m) { return bres(fd_is_bound(m, m.x[0])); }

BuiltinResult bi_fd_assign(Machine& m) {
  Word w = m.deref(m.x[0]);
  int64_t v = int_value(m.deref(m.x[1]));
  if (tag_of(w) == INT) return bres(int_value(w) == v);
  return bres(m.fd().assign((int)payload_of(w), v));
}

BuiltinResult bi_fd_exclude(Machine& m) {
  Word w = m.deref(m.x[0]);
  int64_t v = int_value(m.deref(m.x[1]));
  if (tag_of(w) == INT) return bres(int_value(w) != v);
  return bres(m.fd().exclude((int)payload_of(w), v));
}

const fd::FdDomain* dom_of(Machine& m, Word w) {
  static fd::FdDomain tmp;
  w = m.deref(w);
  if (tag_of(w) == INT) {
    tmp = fd::FdDomain::interval(int_value(w), int_value(w));
    return &tmp;
  }
  if (tag_of(w) == FDV) return &m.fd().var((int)payload_of(w)).dom;
  throw PrologError("type_error", "fd variable expected");
}

BuiltinResult bi_fd_min(Machine& m) {
  return bres(m.unify(m.x[1], make_int(dom_of(m, m.x[0])->lo)));
}
BuiltinResult bi_fd_max(Machine& m) {
  return bres(m.unify(m.x[1], make_int(dom_of(m, m.x[0])->hi)));
}
BuiltinResult bi_fd_size(Machine& m) {
  return bres(m.unify(m.x[1], make_int(dom_of(m, m.x[0])->size())));
}
BuiltinResult bi_fd_dom(Machine& m) {
  const fd::FdDomain* d = dom_of(m, m.x[0]);
  if (d->size() > 1000000)
    throw PrologError("representation_error", "fd domain too large for fd_dom/2");
  std::vector<Word> items;
  for (int64_t v : d->values()) items.push_back(make_int(v));
  Word l = m.atom_word("[]");
  for (auto it = items.rbegin(); it != items.rend(); ++it) {
    uint64_t a = m.push_heap(*it);
    m.push_heap(l);
    l = make_word(LST, a);
  }
  return bres(m.unify(m.x[1], l));
}
BuiltinResult bi_fd_max_integer(Machine& m) {
  return bres(m.unify(m.x[0], make_int(fd::kMaxInteger)));
}
BuiltinResult bi_fd_var(Machine& m) {
  return bres(tag_of(m.deref(m.x[0])) == FDV);
}

}  // namespace

void add_fd_builtin_specs(std::vector<BuiltinSpec>& out) {
  auto add = [&](const char* n, int a, BuiltinResult (*fn)(Machine&)) {
    out.push_back(BuiltinSpec{n, a, true, fn});
  };
  add("fd_domain", 3, bi_fd_domain);
  add("#=", 2, bi_hash_eq);
  add("#\\=", 2, bi_hash_neq);
  add("#<", 2, bi_hash_lt);
  add("#=<", 2, bi_hash_lte);
  add("#>", 2, bi_hash_gt);
  add("#>=", 2, bi_hash_gte);
  add("fd_tell", 1, bi_fd_tell);
  add("element", 3, bi_element);
  add("$fd_select", 3, bi_fd_select);
  add("$fd_bound", 1, bi_fd_bound);
  add("$fd_assign", 2, bi_fd_assign);
  add("$fd_exclude", 2, bi_fd_exclude);
  add("fd_min", 2, bi_fd_min);
  add("fd_max", 2, bi_fd_max);
  add("fd_size", 2, bi_fd_size);
  add("fd_dom", 2, bi_fd_dom);
  add("fd_max_integer", 1, bi_fd_max_integer);
  add("fd_var", 1, bi_fd_var);
}

const char* fd_prelude_source() {
  return R"PL(
fd_labeling(Vars) :- fd_labeling(Vars, []).
fd_labeling(Vars, Opts) :- '$fd_label_all'(Vars, Opts).
'$fd_label_all'(Vars, Opts) :-
        '$fd_select'(Vars, Opts, V), !,
        '$fd_enum'(V),
        '$fd_label_all'(Vars, Opts).
'$fd_label_all'(_, _).
'$fd_enum'(V) :- '$fd_bound'(V), !.
'$fd_enum'(V) :- fd_min(V, M), '$fd_branch'(V, M).
'$fd_branch'(V, M) :- '$fd_assign'(V, M).
'$fd_branch'(V, M) :- '$fd_exclude'(V, M), '$fd_enum'(V).
fd_domain_bool(V) :- fd_domain(V, 0, 1).
)PL";
}

}  // namespace prolite
