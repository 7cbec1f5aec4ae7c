#include "fd_oracle.hpp"

#include <algorithm>
#include <stdexcept>

namespace prolite::fdtest {

using namespace prolite::fd;

int FdOracle::new_var(int64_t lo, int64_t hi) {
  std::set<int64_t> s;
  for (int64_t v = lo; v <= hi; v++) s.insert(v);
  doms_.push_back(s);
  original_.push_back(s);
  return (int)doms_.size() - 1;
}

void FdOracle::post(const ConstraintDef* def, std::vector<OArg> args) {
  Install ins;
  ins.def = def;
  ins.args = std::move(args);
  int iid = (int)installs_.size();
  for (auto& item : def->items) {
    if (!item.is_switch) {
      if (!item.prim.cname.empty())
        ins.named[item.prim.cname] = (int)prims_.size();
      prims_.push_back(Prim{&item.prim, def, iid, false});
    } else {
      switches_.push_back(Switch{&item, def, iid, false});
    }
  }
  installs_.push_back(std::move(ins));
}

FdOracle::SVal FdOracle::scalar(const SExpr& e, const Install& ins) const {
  auto arg_var = [&](int p) { return ins.args[p].var; };
  switch (e->k) {
    case ScalarExpr::K::Int: return {true, e->ival};
    case ScalarExpr::K::Param: return {true, ins.args[e->param].i};
    case ScalarExpr::K::MaxInt: return {true, kMaxInteger};
    case ScalarExpr::K::Min: {
      const auto& d = doms_[arg_var(e->param)];
      if (d.empty()) return {false, 0};
      return {true, *d.begin()};
    }
    case ScalarExpr::K::Max: {
      const auto& d = doms_[arg_var(e->param)];
      if (d.empty()) return {false, 0};
      return {true, *d.rbegin()};
    }
    case ScalarExpr::K::Val: {
      const auto& d = doms_[arg_var(e->param)];
      if (d.size() != 1) return {false, 0};
      return {true, *d.begin()};
    }
    default: break;
  }
  SVal a = scalar(e->a, ins);
  SVal b = e->b ? scalar(e->b, ins) : SVal{true, 0};
  if (!a.ready || !b.ready) return {false, 0};
  switch (e->k) {
    case ScalarExpr::K::Add: return {true, a.v + b.v};
    case ScalarExpr::K::Sub: return {true, a.v - b.v};
    case ScalarExpr::K::Mul: return {true, a.v * b.v};
    case ScalarExpr::K::DivUp: {
      if (b.v == 0) throw std::runtime_error("fd oracle: division by zero");
      int64_t q = a.v / b.v, r = a.v % b.v;
      if (r != 0 && ((a.v > 0) == (b.v > 0))) q++;
      return {true, q};
    }
    case ScalarExpr::K::DivDown: {
      if (b.v == 0) throw std::runtime_error("fd oracle: division by zero");
      int64_t q = a.v / b.v, r = a.v % b.v;
      if (r != 0 && ((a.v > 0) != (b.v > 0))) q--;
      return {true, q};
    }
    case ScalarExpr::K::FMin: return {true, std::min(a.v, b.v)};
    case ScalarExpr::K::FMax: return {true, std::max(a.v, b.v)};
    default: throw std::runtime_error("fd oracle: bad scalar");
  }
}

bool FdOracle::cond(const CExpr& c, const Install& ins) const {
  if (c->k == CondExpr::K::Or) return cond(c->a, ins) || cond(c->b, ins);
  if (c->k == CondExpr::K::And) return cond(c->a, ins) && cond(c->b, ins);
  SVal x = scalar(c->x, ins), y = scalar(c->y, ins);
  if (!x.ready || !y.ready) return false;
  switch (c->k) {
    case CondExpr::K::Eq: return x.v == y.v;
    case CondExpr::K::Ne: return x.v != y.v;
    case CondExpr::K::Gt: return x.v > y.v;
    case CondExpr::K::Lt: return x.v < y.v;
    case CondExpr::K::Ge: return x.v >= y.v;
    case CondExpr::K::Le: return x.v <= y.v;
    default: return false;
  }
}

// element range functions, reimplemented independently
std::set<int64_t> FdOracle::fn_range(const std::string& name,
                                     const Install& ins,
                                     const std::vector<RangeArg>& args) const {
  auto list_of = [&](int p) { return ins.args[p].ints; };
  auto dom_of = [&](int p) { return doms_[ins.args[p].var]; };
  std::set<int64_t> out;
  if (name == "Pl_Fd_Element_I") {
    auto l = list_of(args[0].param);
    for (int64_t j = 1; j <= (int64_t)l.size(); j++) out.insert(j);
    return out;
  }
  if (name == "Pl_Fd_Element_I_To_V") {
    auto di = dom_of(args[0].param);
    auto l = list_of(args[1].param);
    for (int64_t j : di)
      if (j >= 1 && j <= (int64_t)l.size()) out.insert(l[j - 1]);
    return out;
  }
  if (name == "Pl_Fd_Element_V_To_I") {
    auto dv = dom_of(args[0].param);
    auto l = list_of(args[1].param);
    for (size_t j = 0; j < l.size(); j++)
      if (dv.count(l[j])) out.insert((int64_t)j + 1);
    return out;
  }
  throw std::runtime_error("fd oracle: unknown range function " + name);
}

bool FdOracle::in_range(const RangeSpec& r, const Install& ins, int64_t v,
                        bool& ready) const {
  ready = true;
  switch (r.k) {
    case RangeSpec::K::Interval: {
      SVal lo = scalar(r.lo, ins), hi = scalar(r.hi, ins);
      if (!lo.ready || !hi.ready) {
        ready = false;
        return true;
      }
      int64_t l = std::max<int64_t>(lo.v, 0);
      int64_t h = std::min<int64_t>(hi.v, kMaxInteger);
      return v >= l && v <= h;
    }
    case RangeSpec::K::Singleton: {
      SVal e = scalar(r.e, ins);
      if (!e.ready) {
        ready = false;
        return true;
      }
      return v == e.v && e.v >= 0 && e.v <= kMaxInteger;
    }
    case RangeSpec::K::Complement: {
      SVal e = scalar(r.e, ins);
      if (!e.ready) {
        ready = false;
        return true;
      }
      if (e.v < 0 || e.v > kMaxInteger) return true;
      return v != e.v;
    }
    case RangeSpec::K::Dom:
      return doms_[ins.args[r.param].var].count(v) != 0;
    case RangeSpec::K::FnCall: {
      // mirror the engine's sparse clamp: values above the limit are dropped
      auto s = fn_range(r.fname, ins, r.args);
      return v <= kSparseLimit && s.count(v) != 0;
    }
  }
  return false;
}

void FdOracle::apply(Prim& p, bool& changed, bool& failed) {
  const Install& ins = installs_[p.install];
  int target = ins.args[p.prim->target_param].var;
  std::set<int64_t>& d = doms_[target];
  std::set<int64_t> nd;
  bool ready = true;
  for (int64_t v : d) {
    if (in_range(p.prim->range, ins, v, ready)) nd.insert(v);
    if (!ready) return;  // delayed: val() not determined yet
  }
  if (ready && d.empty()) return;
  if (nd.size() != d.size()) {
    changed = true;
    d = std::move(nd);
    if (d.empty()) failed = true;
  }
}

bool FdOracle::fixpoint() {
  bool changed = true;
  bool failed = false;
  while (changed && !failed) {
    changed = false;
    for (auto& p : prims_) {
      if (p.stopped) continue;
      apply(p, changed, failed);
      if (failed) return false;
    }
    for (auto& sw : switches_) {
      if (sw.fired) continue;
      const Install& ins = installs_[sw.install];
      for (auto& cs : sw.item->cases) {
        if (!cond(cs.cond, ins)) continue;
        sw.fired = true;
        changed = true;
        for (auto& a : cs.actions) {
          if (a.is_stop) {
            prims_[ins.named.at(a.stop_name)].stopped = true;
          } else {
            prims_.push_back(Prim{&a.start, sw.def, sw.install, false});
          }
        }
        break;  // at most one case fires, permanently
      }
    }
  }
  return !failed;
}

bool FdOracle::sem_check(const Install& ins,
                         const std::vector<int64_t>& assign) const {
  auto V = [&](int p) { return assign[ins.args[p].var]; };
  auto C = [&](int p) { return ins.args[p].i; };
  const std::string& n = ins.def->name;
  if (n == "x_eq_c") return V(0) == C(1);
  if (n == "x_neq_c") return V(0) != C(1);
  if (n == "x_lte_c") return V(0) <= C(1);
  if (n == "x_gte_c") return V(0) >= C(1);
  if (n == "x_eq_y") return V(0) == V(1);
  if (n == "x_neq_y") return V(0) != V(1);
  if (n == "x_lte_y") return V(0) <= V(1);
  if (n == "x_lt_y") return V(0) < V(1);
  if (n == "x_plus_c_eq_y") return V(0) + C(1) == V(2);
  if (n == "x_plus_c_neq_y") return V(0) + C(1) != V(2);
  if (n == "x_plus_y_eq_z") return V(0) + V(1) == V(2);
  if (n == "ax_eq_y") return C(0) * V(1) == V(2);
  if (n == "min_x_a_eq_z") return std::min(V(0), C(1)) == V(2);
  if (n == "truth_x_eq_c") return (V(0) == C(1)) == (V(2) == 1);
  if (n == "pl_fd_element") {
    int64_t i = V(0), v = V(2);
    const auto& l = ins.args[1].ints;
    return i >= 1 && i <= (int64_t)l.size() && l[i - 1] == v;
  }
  throw std::runtime_error("fd oracle: no semantics for " + n);
}

std::vector<std::vector<int64_t>> FdOracle::all_solutions() const {
  std::vector<std::vector<int64_t>> out;
  std::vector<int64_t> assign(original_.size(), 0);
  std::function<void(size_t)> rec = [&](size_t i) {
    if (i == original_.size()) {
      for (auto& ins : installs_)
        if (!sem_check(ins, assign)) return;
      out.push_back(assign);
      return;
    }
    for (int64_t v : original_[i]) {
      assign[i] = v;
      rec(i + 1);
    }
  };
  rec(0);
  return out;
}

}  // namespace prolite::fdtest
