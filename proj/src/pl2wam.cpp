#include "prolite/pl2wam.hpp"

#include <algorithm>
#include <map>

#include "prolite/writer.hpp"

namespace prolite {

namespace {

std::string pred_key(const std::string& n, int a) {
  return n + "/" + std::to_string(a);
}

bool is_const_term(const TermPtr& t) {
  return t->is_atom() || t->is_int() || t->is_float();
}

// Inline tests keep their goal inside the current chunk.
bool is_inline_test(const TermPtr& g) {
  return g->is_functor("var", 1) || g->is_functor("nonvar", 1) ||
         g->is_functor("atom", 1) || g->is_functor("integer", 1);
}

void flatten_conj(const TermPtr& b, std::vector<TermPtr>& out) {
  if (b->is_functor(",", 2)) {
    flatten_conj(b->args[0], out);
    flatten_conj(b->args[1], out);
  } else {
    out.push_back(b);
  }
}

// ---------------------------------------------------------------------------
// Clause compiler
// ---------------------------------------------------------------------------

struct ClauseCompiler {
  const CompileOptions& opts;
  int arity = 0;
  bool pred_has_cut_level = false;
  bool clause_has_cut = false;

  struct VarInfo {
    bool perm = false;
    int y_slot = -1;
    int home = -1;       // current x register holding the value (temps)
    bool seen = false;   // emitted a binding occurrence yet
    int uses = 0;        // total occurrences (head+body)
    int pref = -1;       // preferred x register (first-chunk goal argument)
  };
  std::map<uint64_t, VarInfo> vars;
  uint64_t cutvar_serial = 0;

  std::vector<bool> reg_busy;  // x registers currently holding live values
  int fresh_base = 0;
  std::vector<WamInstr> code;

  void emit(WamInstr i) { code.push_back(std::move(i)); }

  int alloc_fresh(int base) {
    int r = std::max(base, fresh_base);
    while (r < (int)reg_busy.size() && reg_busy[r]) r++;
    if (r >= (int)reg_busy.size()) reg_busy.resize(r + 1, false);
    reg_busy[r] = true;
    return r;
  }

  void free_reg(int r) {
    if (r >= 0 && r < (int)reg_busy.size()) reg_busy[r] = false;
  }

  void use_var(VarInfo& v) {
    v.uses--;
    if (v.uses == 0 && !v.perm && v.home >= 0) free_reg(v.home);
  }

  WamReg var_reg(const VarInfo& v) {
    if (v.perm) return WamReg{true, v.y_slot};
    return WamReg{false, v.home};
  }

  // ---- analysis ------------------------------------------------------------

  void count_occurrences(const TermPtr& t, int chunk,
                         std::map<uint64_t, std::set<int>>& chunks,
                         std::vector<uint64_t>& order) {
    if (t->is_var()) {
      if (!chunks.count(t->serial)) order.push_back(t->serial);
      chunks[t->serial].insert(chunk);
      vars[t->serial].uses++;
    } else if (t->is_compound()) {
      for (auto& a : t->args) count_occurrences(a, chunk, chunks, order);
    }
  }

  // ---- head compilation ----------------------------------------------------

  // Matches variable V against argument register x(i).
  void head_var(const TermPtr& v, int i) {
    auto& info = vars[v->serial];
    if (!info.seen && info.uses == 1 && !info.perm) {
      // single-occurrence variable: nothing to match
      use_var(info);
      free_reg(i);
      return;
    }
    if (!info.seen) {
      info.seen = true;
      if (info.perm) {
        emit(WamInstr{.op = WOp::GetVariable, .reg = {true, info.y_slot}, .a = i});
        free_reg(i);
      } else {
        info.home = i;  // claims x(i), already marked busy as an argument
      }
      use_var(info);
    } else {
      emit(WamInstr{.op = WOp::GetValue, .reg = var_reg(info), .a = i});
      use_var(info);
      free_reg(i);
    }
  }

  void head_const(const TermPtr& t, int i) {
    if (t->is_nil())
      emit(WamInstr{.op = WOp::GetNil, .a = i});
    else if (t->is_atom())
      emit(WamInstr{.op = WOp::GetAtom, .a = i, .atom = t->name});
    else if (t->is_int())
      emit(WamInstr{.op = WOp::GetInteger, .a = i, .ival = t->ival});
    else
      emit(WamInstr{.op = WOp::GetFloat, .a = i, .fval = t->fval});
    free_reg(i);
  }

  // Emits the unify_* sequence for a compound already matched by
  // get_structure/get_list at some register; nested compounds are queued and
  // matched afterwards, in order.
  void unify_args(const std::vector<TermPtr>& args,
                  std::vector<std::pair<int, TermPtr>>& pending) {
    int void_run = 0;
    auto flush_void = [&]() {
      if (void_run) {
        emit(WamInstr{.op = WOp::UnifyVoid, .a = void_run});
        void_run = 0;
      }
    };
    for (auto& a : args) {
      if (a->is_var()) {
        auto& info = vars[a->serial];
        if (!info.seen && info.uses == 1 && !info.perm) {
          void_run++;
          use_var(info);
          continue;
        }
        flush_void();
        if (!info.seen) {
          info.seen = true;
          if (info.perm) {
            emit(WamInstr{.op = WOp::UnifyVariable, .reg = {true, info.y_slot}});
          } else {
            int r;
            if (opts.reg_opt && info.pref >= 0 && info.pref < (int)reg_busy.size() &&
                !reg_busy[info.pref]) {
              r = info.pref;
              reg_busy[r] = true;
            } else if (opts.reg_opt && info.pref >= 0 &&
                       info.pref >= (int)reg_busy.size()) {
              reg_busy.resize(info.pref + 1, false);
              r = info.pref;
              reg_busy[r] = true;
            } else {
              r = alloc_fresh(fresh_base);
            }
            info.home = r;
            emit(WamInstr{.op = WOp::UnifyVariable, .reg = {false, r}});
          }
          use_var(info);
        } else {
          emit(WamInstr{.op = WOp::UnifyValue, .reg = var_reg(info)});
          use_var(info);
        }
      } else if (a->is_nil()) {
        flush_void();
        emit(WamInstr::simple(WOp::UnifyNil));
      } else if (a->is_atom()) {
        flush_void();
        emit(WamInstr{.op = WOp::UnifyAtom, .atom = a->name});
      } else if (a->is_int()) {
        flush_void();
        emit(WamInstr{.op = WOp::UnifyInteger, .ival = a->ival});
      } else if (a->is_float()) {
        flush_void();
        emit(WamInstr{.op = WOp::UnifyFloat, .fval = a->fval});
      } else {
        flush_void();
        int t = alloc_fresh(fresh_base);
        emit(WamInstr{.op = WOp::UnifyVariable, .reg = {false, t}});
        pending.emplace_back(t, a);
      }
    }
    flush_void();
  }

  void head_compound(const TermPtr& t, int i) {
    std::vector<std::pair<int, TermPtr>> pending;
    pending.emplace_back(i, t);
    size_t k = 0;
    while (k < pending.size()) {
      auto [r, term] = pending[k++];
      if (term->is_cons())
        emit(WamInstr{.op = WOp::GetList, .a = r});
      else
        emit(WamInstr{.op = WOp::GetStructure,
                      .a = r,
                      .atom = term->name,
                      .arity = (int)term->args.size()});
      free_reg(r);  // consumed by the get; reusable from here on
      unify_args(term->args, pending);
    }
  }

  // ---- body goal argument loading -------------------------------------------

  // Builds constant/compound term placement into x register r.
  void put_const(const TermPtr& t, int r) {
    if (t->is_nil())
      emit(WamInstr{.op = WOp::PutNil, .a = r});
    else if (t->is_atom())
      emit(WamInstr{.op = WOp::PutAtom, .a = r, .atom = t->name});
    else if (t->is_int())
      emit(WamInstr{.op = WOp::PutInteger, .a = r, .ival = t->ival});
    else
      emit(WamInstr{.op = WOp::PutFloat, .a = r, .fval = t->fval});
  }

  // Writes the unify sequence of a compound being built (write mode).
  void build_args(const std::vector<TermPtr>& args,
                  const std::map<const Term*, int>& built) {
    int void_run = 0;
    auto flush_void = [&]() {
      if (void_run) {
        emit(WamInstr{.op = WOp::UnifyVoid, .a = void_run});
        void_run = 0;
      }
    };
    for (auto& a : args) {
      if (a->is_var()) {
        auto& info = vars[a->serial];
        if (!info.seen && info.uses == 1 && !info.perm) {
          void_run++;
          use_var(info);
          continue;
        }
        flush_void();
        if (!info.seen) {
          info.seen = true;
          if (info.perm) {
            emit(WamInstr{.op = WOp::UnifyVariable, .reg = {true, info.y_slot}});
          } else {
            int r = alloc_fresh(fresh_base);
            info.home = r;
            emit(WamInstr{.op = WOp::UnifyVariable, .reg = {false, r}});
          }
          use_var(info);
        } else {
          emit(WamInstr{.op = WOp::UnifyValue, .reg = var_reg(info)});
          use_var(info);
        }
      } else if (a->is_nil()) {
        flush_void();
        emit(WamInstr::simple(WOp::UnifyNil));
      } else if (a->is_atom()) {
        flush_void();
        emit(WamInstr{.op = WOp::UnifyAtom, .atom = a->name});
      } else if (a->is_int()) {
        flush_void();
        emit(WamInstr{.op = WOp::UnifyInteger, .ival = a->ival});
      } else if (a->is_float()) {
        flush_void();
        emit(WamInstr{.op = WOp::UnifyFloat, .fval = a->fval});
      } else {
        flush_void();
        int r = built.at(a.get());
        emit(WamInstr{.op = WOp::UnifyValue, .reg = {false, r}});
        free_reg(r);
      }
    }
    flush_void();
  }

  // Builds compound term t into register r (children first).
  void build_compound(const TermPtr& t, int r, int base) {
    std::map<const Term*, int> built;
    for (auto& a : t->args) {
      if (a->is_compound()) {
        int cr = alloc_fresh(base);
        build_compound(a, cr, base);
        built[a.get()] = cr;
      }
    }
    if (t->is_cons())
      emit(WamInstr{.op = WOp::PutList, .a = r});
    else
      emit(WamInstr{.op = WOp::PutStructure,
                    .a = r,
                    .atom = t->name,
                    .arity = (int)t->args.size()});
    build_args(t->args, built);
  }

  // Relocates a live temporary out of register j.
  void evict(int j, int base) {
    for (auto& [s, info] : vars) {
      if (!info.perm && info.seen && info.uses > 0 && info.home == j) {
        int r = alloc_fresh(base);
        emit(WamInstr{.op = WOp::PutValue, .reg = {false, j}, .a = r});
        info.home = r;
        return;
      }
    }
  }

  // Loads the arguments of a body goal into x(0..k-1).
  void load_goal_args(const std::vector<TermPtr>& args) {
    int k = (int)args.size();
    int base = std::max(fresh_base, k);
    for (int j = 0; j < k; j++) {
      const TermPtr& a = args[j];
      if (a->is_var()) {
        auto& info = vars[a->serial];
        bool already = !info.perm && info.seen && info.home == j && info.uses > 0;
        if (already) {
          use_var(info);
          if (j < (int)reg_busy.size()) reg_busy[j] = true;
          continue;
        }
      }
      evict(j, base);
      if (a->is_var()) {
        auto& info = vars[a->serial];
        if (!info.seen) {
          info.seen = true;
          if (info.perm) {
            emit(WamInstr{.op = WOp::PutVariable, .reg = {true, info.y_slot}, .a = j});
          } else {
            info.home = j;
            emit(WamInstr{.op = WOp::PutVariable, .reg = {false, j}, .a = j});
          }
          use_var(info);
        } else {
          emit(WamInstr{.op = WOp::PutValue, .reg = var_reg(info), .a = j});
          use_var(info);
        }
      } else if (is_const_term(a) || a->is_nil()) {
        put_const(a, j);
      } else {
        // compound: children into temps, then the spine into x(j)
        std::map<const Term*, int> built;
        for (auto& c : a->args) {
          if (c->is_compound()) {
            int cr = alloc_fresh(base);
            build_compound(c, cr, base);
            built[c.get()] = cr;
          }
        }
        if (a->is_cons())
          emit(WamInstr{.op = WOp::PutList, .a = j});
        else
          emit(WamInstr{.op = WOp::PutStructure,
                        .a = j,
                        .atom = a->name,
                        .arity = (int)a->args.size()});
        build_args(a->args, built);
      }
      if (j >= (int)reg_busy.size()) reg_busy.resize(j + 1, false);
      reg_busy[j] = true;
    }
  }

  // ---- inline unification ('='/2) -------------------------------------------

  // Places term t's value into some x register. owned = caller may free the
  // register after use (it is not a live variable's home).
  int value_into_reg(const TermPtr& t, bool& owned) {
    if (t->is_var()) {
      auto& info = vars[t->serial];
      if (info.seen && !info.perm) {
        owned = false;
        if (info.home >= (int)reg_busy.size()) reg_busy.resize(info.home + 1, false);
        reg_busy[info.home] = true;
        return info.home;
      }
      int r = alloc_fresh(fresh_base);
      owned = true;
      if (!info.seen) {
        info.seen = true;
        if (info.perm) {
          emit(WamInstr{.op = WOp::PutVariable, .reg = {true, info.y_slot}, .a = r});
        } else {
          info.home = r;
          owned = false;
        }
        use_var(info);
        if (!owned) emit(WamInstr{.op = WOp::PutVariable, .reg = {false, r}, .a = r});
        return r;
      }
      emit(WamInstr{.op = WOp::PutValue, .reg = var_reg(info), .a = r});
      use_var(info);
      return r;
    }
    int r = alloc_fresh(fresh_base);
    owned = true;
    if (is_const_term(t) || t->is_nil())
      put_const(t, r);
    else
      build_compound(t, r, std::max(fresh_base, r + 1));
    return r;
  }

  void compile_unify(const TermPtr& lhs, const TermPtr& rhs) {
    // orient: match the more structured side against a register holding the
    // other side's value
    const TermPtr* build = &rhs;
    const TermPtr* match = &lhs;
    if (!lhs->is_var() && rhs->is_var()) {
      build = &lhs;
      match = &rhs;
    }
    if ((*match)->is_var()) {
      auto& minfo = vars[(*match)->serial];
      if (!minfo.seen && !minfo.perm) {
        // alias: the variable simply names the built value
        bool owned;
        int r = value_into_reg(*build, owned);
        minfo.seen = true;
        minfo.home = r;
        use_var(minfo);
        if (minfo.uses > 0) reg_busy[r] = true;
        return;
      }
      bool owned;
      int r = value_into_reg(*build, owned);
      auto& info = vars[(*match)->serial];
      if (!info.seen) {
        info.seen = true;
        emit(WamInstr{.op = WOp::GetVariable, .reg = {true, info.y_slot}, .a = r});
      } else {
        emit(WamInstr{.op = WOp::GetValue, .reg = var_reg(info), .a = r});
      }
      use_var(info);
      if (owned) free_reg(r);
      return;
    }
    // match side is non-var
    bool owned;
    int r = value_into_reg(*build, owned);
    const TermPtr& m = *match;
    if (is_const_term(m) || m->is_nil()) {
      head_const(m, r);
    } else {
      head_compound(m, r);
    }
    if (!owned) {
      // the build side was a live variable's home; keep it reserved
      auto& binfo = vars[(*build)->serial];
      if (binfo.uses > 0 && binfo.home == r) reg_busy[r] = true;
    }
  }

  bool reg_holds_live_var(int j) {
    for (auto& [s, info] : vars)
      if (!info.perm && info.seen && info.uses > 0 && info.home == j) return true;
    return false;
  }
};

}  // namespace

bool CompilerSession::term_has_cut(const TermPtr& body) {
  std::vector<TermPtr> goals;
  flatten_conj(body, goals);
  for (auto& g : goals)
    if (g->is_atom("!")) return true;
  return false;
}

std::vector<WamInstr> CompilerSession::compile_clause(const TermPtr& clause,
                                                      int arity,
                                                      bool pred_has_cut_level) {
  TermPtr head, body;
  if (clause->is_functor(":-", 2)) {
    head = clause->args[0];
    body = clause->args[1];
  } else {
    head = clause;
    body = Term::atom("true");
  }
  if (!head->is_callable()) throw CompileError(0, "malformed clause head");

  ClauseCompiler cc{.opts = opts};
  cc.arity = arity;
  cc.pred_has_cut_level = pred_has_cut_level;

  // flatten, normalize goals
  std::vector<TermPtr> goals;
  flatten_conj(body, goals);
  std::vector<TermPtr> body_goals;
  for (auto& g : goals) {
    if (g->is_atom("true")) continue;
    if (g->is_var()) {
      body_goals.push_back(Term::compound("call", {g}));
      continue;
    }
    if (!g->is_callable() && !g->is_atom())
      throw CompileError(0, "non-callable body goal: " +
                                write_term(g, table, {.quoted = true}));
    body_goals.push_back(g);
  }

  enum class GKind { Regular, Cut, Fail, InlineUnify, InlineTest };
  struct G {
    TermPtr goal;
    GKind kind;
    int chunk;
  };
  std::vector<G> gs;
  int chunk = 0;
  cc.clause_has_cut = false;
  for (auto& g : body_goals) {
    GKind k = GKind::Regular;
    if (g->is_atom("!")) {
      k = GKind::Cut;
      cc.clause_has_cut = true;
    } else if (g->is_atom("fail") || g->is_atom("false")) {
      k = GKind::Fail;
    } else if (opts.inline_builtins && g->is_functor("=", 2)) {
      k = GKind::InlineUnify;
    } else if (opts.inline_builtins && is_inline_test(g)) {
      k = GKind::InlineTest;
    }
    gs.push_back({g, k, chunk});
    if (k == GKind::Regular) chunk++;
    if (k == GKind::Fail) break;  // rest unreachable
  }

  // occurrence analysis
  std::map<uint64_t, std::set<int>> chunk_occ;
  std::vector<uint64_t> order;
  if (head->is_compound())
    for (auto& a : head->args) cc.count_occurrences(a, 0, chunk_occ, order);
  // the cut pseudo-variable occupies x(arity) on entry (chunk 0)
  if (cc.clause_has_cut) {
    cc.cutvar_serial = 0;  // reserved serial 0 never collides with real vars
    chunk_occ[0].insert(0);
    if (std::find(order.begin(), order.end(), 0) == order.end())
      order.push_back(0);
    cc.vars[0].uses = 0;
  }
  for (auto& g : gs) {
    if (g.kind == GKind::Cut) {
      chunk_occ[0].insert(g.chunk);
      cc.vars[0].uses++;
    } else if (g.kind != GKind::Fail) {
      cc.count_occurrences(g.goal, g.chunk, chunk_occ, order);
    }
  }

  // permanents, numbered by first occurrence
  int nperm = 0;
  for (uint64_t s : order) {
    auto& occ = chunk_occ[s];
    if (occ.size() > 1) {
      cc.vars[s].perm = true;
      cc.vars[s].y_slot = nperm++;
    }
  }

  // goal-argument register preferences for first-chunk temporaries
  if (opts.reg_opt) {
    for (auto& g : gs) {
      if (g.kind != GKind::Regular) continue;
      if (g.goal->is_compound()) {
        for (size_t j = 0; j < g.goal->args.size(); j++) {
          auto& a = g.goal->args[j];
          if (a->is_var()) {
            auto& info = cc.vars[a->serial];
            if (!info.perm && info.pref < 0) info.pref = (int)j;
          }
        }
      }
      break;  // first regular goal only
    }
  }

  int n_regular = 0;
  for (auto& g : gs)
    if (g.kind == GKind::Regular) n_regular++;
  bool last_is_regular = !gs.empty() && gs.back().kind == GKind::Regular;
  bool lco_applies = opts.lco && last_is_regular;
  bool needs_env = nperm > 0 || (n_regular - (lco_applies ? 1 : 0)) > 0;

  cc.fresh_base = arity + (pred_has_cut_level ? 1 : 0);
  cc.reg_busy.assign(std::max(cc.fresh_base, 1), false);
  for (int i = 0; i < arity; i++) cc.reg_busy[i] = true;
  if (pred_has_cut_level && cc.clause_has_cut) cc.reg_busy[arity] = true;

  if (needs_env) cc.emit(WamInstr{.op = WOp::Allocate, .a = nperm});

  // head arguments: constants first when reordering
  std::vector<int> head_order;
  if (head->is_compound())
    for (int i = 0; i < (int)head->args.size(); i++) head_order.push_back(i);
  if (opts.reorder) {
    std::stable_sort(head_order.begin(), head_order.end(), [&](int a, int b) {
      bool ca = is_const_term(head->args[a]);
      bool cb = is_const_term(head->args[b]);
      return ca && !cb;
    });
  }
  for (int i : head_order) {
    const TermPtr& a = head->args[i];
    if (a->is_var())
      cc.head_var(a, i);
    else if (is_const_term(a) || a->is_nil())
      cc.head_const(a, i);
    else
      cc.head_compound(a, i);
  }
  // the cut level behaves like a trailing head argument in x(arity)
  if (cc.clause_has_cut) {
    auto& info = cc.vars[0];
    info.seen = true;
    if (info.perm) {
      cc.emit(WamInstr{.op = WOp::GetVariable, .reg = {true, info.y_slot},
                       .a = arity});
      cc.free_reg(arity);
    } else {
      info.home = arity;
    }
  }

  // body
  for (size_t gi = 0; gi < gs.size(); gi++) {
    auto& g = gs[gi];
    bool last = gi + 1 == gs.size();
    switch (g.kind) {
      case GKind::Cut: {
        auto& info = cc.vars[0];
        cc.emit(WamInstr{.op = WOp::Cut, .reg = cc.var_reg(info)});
        break;
      }
      case GKind::Fail:
        cc.emit(WamInstr::simple(WOp::Fail));
        return cc.code;  // nothing reachable afterwards
      case GKind::InlineUnify:
        cc.compile_unify(g.goal->args[0], g.goal->args[1]);
        break;
      case GKind::InlineTest: {
        cc.load_goal_args(g.goal->args);
        cc.emit(WamInstr{.op = WOp::Call,
                         .atom = g.goal->name,
                         .arity = (int)g.goal->args.size()});
        // the test preserves registers; free argument slots not owned by a
        // still-live temporary
        for (size_t j = 0; j < g.goal->args.size(); j++)
          if (!cc.reg_holds_live_var((int)j)) cc.free_reg((int)j);
        break;
      }
      case GKind::Regular: {
        std::vector<TermPtr> args =
            g.goal->is_compound() ? g.goal->args : std::vector<TermPtr>{};
        cc.load_goal_args(args);
        if (last && lco_applies) {
          if (needs_env) cc.emit(WamInstr::simple(WOp::Deallocate));
          cc.emit(WamInstr{.op = WOp::Execute,
                           .atom = g.goal->name,
                           .arity = (int)args.size()});
          return cc.code;
        }
        cc.emit(WamInstr{.op = WOp::Call,
                         .atom = g.goal->name,
                         .arity = (int)args.size()});
        // chunk boundary: temporaries die
        cc.reg_busy.assign(std::max(cc.fresh_base, 1), false);
        for (auto& [s, info] : cc.vars)
          if (!info.perm) info.home = -1;
        break;
      }
    }
  }
  if (needs_env) cc.emit(WamInstr::simple(WOp::Deallocate));
  cc.emit(WamInstr::simple(WOp::Proceed));
  return cc.code;
}

std::vector<WamInstr> CompilerSession::compile_directive_body(const TermPtr& goal) {
  bool cut = term_has_cut(goal);
  auto code = compile_clause(
      Term::compound(":-", {Term::atom("$directive"), goal}), 0, cut);
  if (cut)
    code.insert(code.begin(), WamInstr{.op = WOp::LoadCutLevel, .a = 0});
  return code;
}

// ---------------------------------------------------------------------------
// Indexing
// ---------------------------------------------------------------------------

namespace {

enum class KeyKind { Var, Atm, Int, Lst, Stc };

struct ClauseKey {
  KeyKind kind = KeyKind::Var;
  std::string name;
  int64_t ival = 0;
  int arity = 0;
};

ClauseKey key_of(const TermPtr& head) {
  ClauseKey k;
  if (!head->is_compound() || head->args.empty()) return k;  // var-like
  const TermPtr& a = head->args[0];
  if (a->is_var() || a->is_float()) {
    k.kind = KeyKind::Var;
  } else if (a->is_int()) {
    k.kind = KeyKind::Int;
    k.ival = a->ival;
  } else if (a->is_cons()) {
    k.kind = KeyKind::Lst;
  } else if (a->is_atom()) {
    k.kind = KeyKind::Atm;
    k.name = a->name;
  } else {
    k.kind = KeyKind::Stc;
    k.name = a->name;
    k.arity = (int)a->args.size();
  }
  return k;
}

}  // namespace

std::vector<WamInstr> CompilerSession::build_indexing(
    const std::vector<TermPtr>& heads,
    const std::vector<std::vector<WamInstr>>& clause_code, bool load_cut,
    int arity) {
  std::vector<WamInstr> out;
  if (load_cut) out.push_back(WamInstr{.op = WOp::LoadCutLevel, .a = arity});
  size_t n = clause_code.size();
  if (n == 1) {
    for (auto& i : clause_code[0]) out.push_back(i);
    return out;
  }

  std::vector<ClauseKey> keys;
  keys.reserve(n);
  bool has_var = false;
  for (auto& h : heads) {
    keys.push_back(key_of(h));
    if (keys.back().kind == KeyKind::Var) has_var = true;
  }

  // buckets in first-occurrence order
  struct Bucket {
    std::vector<int> clauses;
  };
  std::vector<std::pair<std::string, Bucket>> atm_buckets;
  std::vector<std::pair<int64_t, Bucket>> int_buckets;
  std::vector<std::pair<std::pair<std::string, int>, Bucket>> stc_buckets;
  Bucket lst_bucket;
  if (!has_var) {
    for (int ci = 0; ci < (int)n; ci++) {
      auto& k = keys[ci];
      switch (k.kind) {
        case KeyKind::Atm: {
          auto it = std::find_if(atm_buckets.begin(), atm_buckets.end(),
                                 [&](auto& p) { return p.first == k.name; });
          if (it == atm_buckets.end()) {
            atm_buckets.push_back({k.name, {}});
            it = atm_buckets.end() - 1;
          }
          it->second.clauses.push_back(ci);
          break;
        }
        case KeyKind::Int: {
          auto it = std::find_if(int_buckets.begin(), int_buckets.end(),
                                 [&](auto& p) { return p.first == k.ival; });
          if (it == int_buckets.end()) {
            int_buckets.push_back({k.ival, {}});
            it = int_buckets.end() - 1;
          }
          it->second.clauses.push_back(ci);
          break;
        }
        case KeyKind::Stc: {
          auto kk = std::make_pair(k.name, k.arity);
          auto it = std::find_if(stc_buckets.begin(), stc_buckets.end(),
                                 [&](auto& p) { return p.first == kk; });
          if (it == stc_buckets.end()) {
            stc_buckets.push_back({kk, {}});
            it = stc_buckets.end() - 1;
          }
          it->second.clauses.push_back(ci);
          break;
        }
        case KeyKind::Lst:
          lst_bucket.clauses.push_back(ci);
          break;
        case KeyKind::Var:
          break;
      }
    }
  }

  // label plan: blocks first, then the try_me_else chain
  int next_label = 1;
  int atm_switch_lbl = 0, int_switch_lbl = 0, stc_switch_lbl = 0;
  bool atm_switch = !has_var && atm_buckets.size() >= 2;
  bool int_switch = !has_var && int_buckets.size() >= 2;
  bool stc_switch = !has_var && stc_buckets.size() >= 2;
  if (atm_switch) atm_switch_lbl = next_label++;
  if (int_switch) int_switch_lbl = next_label++;
  if (stc_switch) stc_switch_lbl = next_label++;

  struct ChainBlock {
    std::vector<int> clauses;
    int label;
  };
  std::vector<ChainBlock> chain_blocks;
  std::map<std::string, int> atm_target;  // key -> label
  std::map<int64_t, int> int_target;
  std::map<std::pair<std::string, int>, int> stc_target;
  int lst_target = 0;

  auto chain_label_base = [&]() { return next_label; };
  (void)chain_label_base;
  auto clause_label = [&](int blocks, int ci) { return blocks + 2 * (ci + 1); };

  // number of block labels is known only after assigning chains; do chains now
  auto plan_bucket = [&](Bucket& b) -> int {
    if (b.clauses.size() == 1) return -1;  // direct to clause label (later)
    chain_blocks.push_back({b.clauses, next_label});
    return next_label++;
  };
  for (auto& [key, b] : atm_buckets) {
    int lbl = plan_bucket(b);
    atm_target[key] = lbl;  // -1 patched below
  }
  for (auto& [key, b] : int_buckets) int_target[key] = plan_bucket(b);
  if (!has_var && lst_bucket.clauses.size() >= 2) {
    lst_target = plan_bucket(lst_bucket);
  } else {
    lst_target = -1;
  }
  for (auto& [key, b] : stc_buckets) stc_target[key] = plan_bucket(b);

  int blocks = next_label - 1;
  // patch single-clause targets now that clause labels are known
  for (auto& [key, b] : atm_buckets)
    if (atm_target[key] < 0) atm_target[key] = clause_label(blocks, b.clauses[0]);
  for (auto& [key, b] : int_buckets)
    if (int_target[key] < 0) int_target[key] = clause_label(blocks, b.clauses[0]);
  for (auto& [key, b] : stc_buckets)
    if (stc_target[key] < 0) stc_target[key] = clause_label(blocks, b.clauses[0]);
  if (!has_var && lst_bucket.clauses.size() == 1)
    lst_target = clause_label(blocks, lst_bucket.clauses[0]);
  else if (lst_target < 0)
    lst_target = 0;

  int var_lbl = blocks + 1;

  if (!has_var) {
    WamInstr sw{.op = WOp::SwitchOnTerm};
    sw.lbl[0] = var_lbl;
    sw.lbl[1] = atm_switch          ? atm_switch_lbl
                : atm_buckets.size() == 1 ? atm_target[atm_buckets[0].first]
                                          : 0;
    sw.lbl[2] = int_switch          ? int_switch_lbl
                : int_buckets.size() == 1 ? int_target[int_buckets[0].first]
                                          : 0;
    sw.lbl[3] = lst_bucket.clauses.empty() ? 0 : lst_target;
    sw.lbl[4] = stc_switch          ? stc_switch_lbl
                : stc_buckets.size() == 1 ? stc_target[stc_buckets[0].first]
                                          : 0;
    out.push_back(sw);

    auto label = [&](int l) { out.push_back(WamInstr{.op = WOp::Label, .a = l}); };
    if (atm_switch) {
      label(atm_switch_lbl);
      WamInstr s{.op = WOp::SwitchOnAtom};
      for (auto& [key, b] : atm_buckets)
        s.table.push_back(SwitchEntry{SwitchEntry::Kind::Atom, key, 0, 0,
                                      atm_target[key]});
      out.push_back(s);
    }
    if (int_switch) {
      label(int_switch_lbl);
      WamInstr s{.op = WOp::SwitchOnInteger};
      for (auto& [key, b] : int_buckets)
        s.table.push_back(SwitchEntry{SwitchEntry::Kind::Int, "", key, 0,
                                      int_target[key]});
      out.push_back(s);
    }
    if (stc_switch) {
      label(stc_switch_lbl);
      WamInstr s{.op = WOp::SwitchOnStructure};
      for (auto& [key, b] : stc_buckets)
        s.table.push_back(SwitchEntry{SwitchEntry::Kind::Struct, key.first, 0,
                                      key.second, stc_target[key]});
      out.push_back(s);
    }
    for (auto& cb : chain_blocks) {
      label(cb.label);
      for (size_t k = 0; k < cb.clauses.size(); k++) {
        WOp op = k == 0                      ? WOp::Try
                 : k + 1 == cb.clauses.size() ? WOp::Trust
                                              : WOp::Retry;
        out.push_back(WamInstr{.op = op, .a = clause_label(blocks, cb.clauses[k])});
      }
    }
  }

  // main chain over all clauses
  for (int ci = 0; ci < (int)n; ci++) {
    int a_lbl = blocks + 2 * ci + 1;
    int c_lbl = blocks + 2 * ci + 2;
    out.push_back(WamInstr{.op = WOp::Label, .a = a_lbl});
    if (ci == 0)
      out.push_back(WamInstr{.op = WOp::TryMeElse, .a = a_lbl + 2});
    else if (ci + 1 < (int)n)
      out.push_back(WamInstr{.op = WOp::RetryMeElse, .a = a_lbl + 2});
    else
      out.push_back(WamInstr::simple(WOp::TrustMeElseFail));
    out.push_back(WamInstr{.op = WOp::Label, .a = c_lbl});
    for (auto& i : clause_code[ci]) out.push_back(i);
  }
  return out;
}

// ---------------------------------------------------------------------------
// File compilation
// ---------------------------------------------------------------------------

WamFile CompilerSession::compile_source(const std::string& path,
                                        const std::string& text) {
  Reader r(text, &table);
  std::vector<ReadResult> results;
  // read incrementally so op/3 directives can take effect mid-file
  WamFile f;
  f.path = path;

  struct Group {
    std::string name;
    int arity;
    int line;
    std::vector<TermPtr> clauses;
    bool has_cut = false;
    bool dynamic_decl = false;
  };
  std::vector<Group> groups;
  auto find_group = [&](const std::string& nm, int ar) -> Group* {
    for (auto& g : groups)
      if (g.name == nm && g.arity == ar) return &g;
    return nullptr;
  };

  while (true) {
    std::optional<ReadResult> rr;
    rr = r.read();
    if (!rr) break;
    TermPtr t = rr->term;
    int line = rr->line;
    if (t->is_functor(":-", 1)) {
      TermPtr d = t->args[0];
      // normalize prefix-operator directives: dynamic p/1, etc.
      if (d->is_functor("op", 3)) {
        auto& a = d->args;
        if (!a[0]->is_int() || !a[1]->is_atom())
          throw CompileError(line, "bad op/3 directive");
        auto ty = op_type_from_name(a[1]->name);
        if (!ty) throw CompileError(line, "bad operator type in op/3");
        std::vector<TermPtr> names;
        if (a[2]->is_atom())
          names.push_back(a[2]);
        else if (auto items = list_items(a[2]))
          names = *items;
        else
          throw CompileError(line, "bad operator name in op/3");
        for (auto& nm : names) {
          if (!nm->is_atom()) throw CompileError(line, "bad operator name in op/3");
          try {
            table.update(nm->name, (int)a[0]->ival, *ty);
          } catch (const TableError& e) {
            throw CompileError(line, e.what());
          }
        }
        f.directives.push_back(
            WamDirective{line, false, compile_directive_body(d)});
      } else if (d->is_functor("dynamic", 1) || d->is_functor("discontiguous", 1)) {
        bool dyn = d->name == "dynamic";
        std::vector<TermPtr> specs;
        std::vector<TermPtr> stack{d->args[0]};
        while (!stack.empty()) {
          TermPtr s = stack.back();
          stack.pop_back();
          if (s->is_functor(",", 2)) {
            stack.push_back(s->args[1]);
            stack.push_back(s->args[0]);
          } else if (auto items = list_items(s)) {
            for (auto& it : *items) specs.push_back(it);
          } else {
            specs.push_back(s);
          }
        }
        for (auto& s : specs) {
          if (!s->is_functor("/", 2) || !s->args[0]->is_atom() || !s->args[1]->is_int())
            throw CompileError(line, "bad predicate indicator in " + d->name);
          std::string key = pred_key(s->args[0]->name, (int)s->args[1]->ival);
          if (dyn) {
            if (find_group(s->args[0]->name, (int)s->args[1]->ival))
              throw CompileError(line, "predicate already compiled static: " + key);
            if (dynamic_preds_.insert(key).second) {
              Group g;
              g.name = s->args[0]->name;
              g.arity = (int)s->args[1]->ival;
              g.line = line;
              g.dynamic_decl = true;
              groups.push_back(std::move(g));
            }
          } else {
            discontiguous_preds_.insert(key);
          }
        }
      } else if (d->is_functor("ensure_linked", 1)) {
        std::vector<TermPtr> specs;
        if (auto items = list_items(d->args[0]))
          specs = *items;
        else
          specs.push_back(d->args[0]);
        for (auto& s : specs) {
          if (!s->is_functor("/", 2))
            throw CompileError(line, "bad predicate indicator in ensure_linked");
          f.ensure_linked.push_back(
              PredSpec{s->args[0]->name, (int)s->args[1]->ival});
        }
      } else if (d->is_functor("initialization", 1)) {
        f.directives.push_back(
            WamDirective{line, true, compile_directive_body(d->args[0])});
      } else {
        f.directives.push_back(WamDirective{line, false, compile_directive_body(d)});
      }
      continue;
    }
    // clause
    TermPtr head = t->is_functor(":-", 2) ? t->args[0] : t;
    if (!head->is_callable()) throw CompileError(line, "malformed clause head");
    std::string nm = head->name;
    int ar = (int)head->arity();
    std::string key = pred_key(nm, ar);
    if (dynamic_preds_.count(key)) {
      f.directives.push_back(WamDirective{
          line, false, compile_directive_body(Term::compound("$assertz", {t}))});
      continue;
    }
    Group* g = find_group(nm, ar);
    if (g) {
      if (&groups.back() != g && !discontiguous_preds_.count(key))
        warnings.push_back("line " + std::to_string(line) +
                           ": discontiguous clauses for " + key);
      g->clauses.push_back(t);
      if (t->is_functor(":-", 2) && term_has_cut(t->args[1])) g->has_cut = true;
    } else {
      groups.push_back(Group{nm, ar, line, {t}, false});
      if (t->is_functor(":-", 2) && term_has_cut(t->args[1]))
        groups.back().has_cut = true;
    }
  }

  for (auto& g : groups) {
    WamPredicate p;
    p.name = g.name;
    p.arity = g.arity;
    p.line = g.line;
    p.origin = opts.origin;
    if (g.dynamic_decl) {
      p.is_dynamic = true;  // clauses are recorded via system directives
      f.preds.push_back(std::move(p));
      continue;
    }
    std::vector<TermPtr> heads;
    std::vector<std::vector<WamInstr>> codes;
    for (auto& c : g.clauses) {
      heads.push_back(c->is_functor(":-", 2) ? c->args[0] : c);
      codes.push_back(compile_clause(c, g.arity, g.has_cut));
    }
    p.code = build_indexing(heads, codes, g.has_cut, g.arity);
    f.preds.push_back(std::move(p));
  }
  return f;
}

WamFile CompilerSession::compile_results(const std::string& path,
                                         const std::vector<ReadResult>& results) {
  // convenience path used by tests: re-emit through text
  std::string text;
  for (auto& r : results)
    text += write_term(r.term, table, {.quoted = true}) + ".\n";
  return compile_source(path, text);
}

}  // namespace prolite
