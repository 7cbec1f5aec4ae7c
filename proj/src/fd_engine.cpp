#include "prolite/fd_engine.hpp"

#include <algorithm>
#include <cassert>

namespace prolite::fd {

// ---------------------------------------------------------------------------
// FdDomain
// ---------------------------------------------------------------------------

FdDomain FdDomain::interval(int64_t lo, int64_t hi) {
  FdDomain d;
  d.lo = std::max<int64_t>(lo, 0);
  d.hi = std::min<int64_t>(hi, kMaxInteger);
  return d;
}

int64_t FdDomain::size() const {
  if (is_empty()) return 0;
  if (!sparse()) return hi - lo + 1;
  int64_t n = 0;
  for (uint64_t w : bits) n += __builtin_popcountll(w);
  return n;
}

bool FdDomain::contains(int64_t v) const {
  if (v < lo || v > hi) return false;
  if (!sparse()) return true;
  return (bits[v >> 6] >> (v & 63)) & 1;
}

int64_t FdDomain::next_value(int64_t v) const {
  if (is_empty()) return -1;
  if (v < lo) v = lo;
  if (v > hi) return -1;
  if (!sparse()) return v;
  for (int64_t i = v; i <= hi; i++)
    if (contains(i)) return i;
  return -1;
}

void FdDomain::make_sparse() {
  if (sparse()) return;
  int64_t new_hi = std::min(hi, kSparseLimit);
  int64_t new_lo = lo;
  if (new_lo > new_hi) {
    // the whole interval sits above the sparse limit
    lo = 0;
    hi = -1;
    bits.clear();
    return;
  }
  bits.assign((size_t)((new_hi >> 6) + 1), 0);
  for (int64_t v = new_lo; v <= new_hi; v++) bits[v >> 6] |= 1ull << (v & 63);
  lo = new_lo;
  hi = new_hi;
}

void FdDomain::set_bit(int64_t v) { bits[v >> 6] |= 1ull << (v & 63); }
void FdDomain::clear_bit(int64_t v) { bits[v >> 6] &= ~(1ull << (v & 63)); }

void FdDomain::recompute_extrema() {
  lo = 0;
  hi = -1;
  for (size_t w = 0; w < bits.size(); w++) {
    if (bits[w]) {
      lo = (int64_t)w * 64 + __builtin_ctzll(bits[w]);
      break;
    }
  }
  for (size_t w = bits.size(); w-- > 0;) {
    if (bits[w]) {
      hi = (int64_t)w * 64 + 63 - __builtin_clzll(bits[w]);
      return;
    }
  }
  if (lo == 0 && hi == -1) bits.clear();
}

FdDomain FdDomain::intersect_interval(int64_t a, int64_t b) const {
  FdDomain r = *this;
  a = std::max<int64_t>(a, 0);
  b = std::min<int64_t>(b, kMaxInteger);
  if (is_empty() || a > b || b < lo || a > hi) return FdDomain::empty();
  if (!r.sparse()) {
    r.lo = std::max(lo, a);
    r.hi = std::min(hi, b);
    return r;
  }
  for (int64_t v = r.lo; v < a && v <= r.hi; v++)
    if (v <= kSparseLimit) r.clear_bit(v);
  for (int64_t v = std::max<int64_t>(b + 1, 0); v <= r.hi; v++) r.clear_bit(v);
  r.recompute_extrema();
  return r;
}

FdDomain FdDomain::intersect_set(const FdDomain& set) const {
  if (is_empty() || set.is_empty()) return FdDomain::empty();
  if (!set.sparse())
    return intersect_interval(set.lo, set.hi);
  if (!sparse()) return set.intersect_interval(lo, hi);
  FdDomain r = *this;
  for (size_t w = 0; w < r.bits.size(); w++) {
    uint64_t other = w < set.bits.size() ? set.bits[w] : 0;
    r.bits[w] &= other;
  }
  r.recompute_extrema();
  return r;
}

FdDomain FdDomain::remove_value(int64_t v) const {
  if (!contains(v)) return *this;
  FdDomain r = *this;
  if (!r.sparse()) {
    if (v == r.lo) {
      r.lo++;
      if (r.lo > r.hi) return FdDomain::empty();
      return r;
    }
    if (v == r.hi) {
      r.hi--;
      return r;
    }
    r.make_sparse();  // interior hole forces the bit-vector form
    if (r.is_empty()) return r;
    if (v > kSparseLimit) return r;  // value dropped by the clamp already
  }
  r.clear_bit(v);
  r.recompute_extrema();
  return r;
}

bool FdDomain::equals(const FdDomain& o) const {
  if (lo != o.lo || hi != o.hi) return false;
  int64_t sa = size(), sb = o.size();
  if (sa != sb) return false;
  if (sparse() && o.sparse()) {
    for (int64_t v = lo; v <= hi; v++)
      if (contains(v) != o.contains(v)) return false;
    return true;
  }
  if (sparse() != o.sparse()) {
    // one side contiguous: equal iff the sparse side is contiguous too
    return sa == hi - lo + 1;
  }
  return true;
}

std::vector<int64_t> FdDomain::values() const {
  std::vector<int64_t> out;
  for (int64_t v = next_value(lo); v >= 0; v = next_value(v + 1)) out.push_back(v);
  return out;
}

std::string FdDomain::to_string() const {
  if (is_empty()) return "{}";
  if (!sparse())
    return lo == hi ? std::to_string(lo)
                    : std::to_string(lo) + ".." + std::to_string(hi);
  std::string s;
  int64_t run_start = -1, prev = -2;
  auto flush = [&](int64_t end) {
    if (run_start < 0) return;
    if (!s.empty()) s += ":";
    if (end == run_start)
      s += std::to_string(run_start);
    else
      s += std::to_string(run_start) + ".." + std::to_string(end);
  };
  for (int64_t v = next_value(0); v >= 0; v = next_value(v + 1)) {
    if (v != prev + 1) {
      flush(prev);
      run_start = v;
    }
    prev = v;
  }
  flush(prev);
  return s;
}

// ---------------------------------------------------------------------------
// Range evaluation
// ---------------------------------------------------------------------------

namespace {

struct EvalRange {
  enum class K { Interval, SetDom, ComplVal, Empty };
  K k = K::Empty;
  int64_t lo = 0, hi = 0, v = 0;
  FdDomain set;
};

constexpr int64_t kSat = 1ll << 62;

int64_t sat(int64_t v) { return std::clamp(v, -kSat, kSat); }

int64_t sat_add(int64_t a, int64_t b) {
  long long r;
  if (__builtin_add_overflow(a, b, &r)) return a > 0 ? kSat : -kSat;
  return sat(r);
}
int64_t sat_sub(int64_t a, int64_t b) {
  long long r;
  if (__builtin_sub_overflow(a, b, &r)) return a > 0 ? kSat : -kSat;
  return sat(r);
}
int64_t sat_mul(int64_t a, int64_t b) {
  long long r;
  if (__builtin_mul_overflow(a, b, &r)) return (a > 0) == (b > 0) ? kSat : -kSat;
  return sat(r);
}

}  // namespace

struct EngineEval {
  const FdEngine& eng;
  const std::vector<FdVar>& vars;
  const std::vector<int64_t>& env;
  bool not_ready = false;  // val() of an undetermined variable
  bool bad = false;        // division by zero etc.

  int64_t scalar(const SExpr& e) {
    switch (e->k) {
      case ScalarExpr::K::Int: return e->ival;
      case ScalarExpr::K::Param: return env[e->param];
      case ScalarExpr::K::MaxInt: return kMaxInteger;
      case ScalarExpr::K::Min: return vars[env[e->param]].dom.lo;
      case ScalarExpr::K::Max: return vars[env[e->param]].dom.hi;
      case ScalarExpr::K::Val: {
        const FdVar& v = vars[env[e->param]];
        if (!v.dom.singleton()) {
          not_ready = true;
          return 0;
        }
        return v.dom.lo;
      }
      case ScalarExpr::K::Add: return sat_add(scalar(e->a), scalar(e->b));
      case ScalarExpr::K::Sub: return sat_sub(scalar(e->a), scalar(e->b));
      case ScalarExpr::K::Mul: return sat_mul(scalar(e->a), scalar(e->b));
      case ScalarExpr::K::DivUp:
      case ScalarExpr::K::DivDown: {
        int64_t a = scalar(e->a), b = scalar(e->b);
        if (b == 0) {
          bad = true;
          return 0;
        }
        int64_t q = a / b, r = a % b;
        if (e->k == ScalarExpr::K::DivUp && r != 0 && ((a > 0) == (b > 0))) q++;
        if (e->k == ScalarExpr::K::DivDown && r != 0 && ((a > 0) != (b > 0))) q--;
        return q;
      }
      case ScalarExpr::K::FMin: return std::min(scalar(e->a), scalar(e->b));
      case ScalarExpr::K::FMax: return std::max(scalar(e->a), scalar(e->b));
    }
    bad = true;
    return 0;
  }

  bool cond(const CExpr& c) {
    switch (c->k) {
      case CondExpr::K::Or: return cond(c->a) || cond(c->b);
      case CondExpr::K::And: return cond(c->a) && cond(c->b);
      default: break;
    }
    int64_t x = scalar(c->x), y = scalar(c->y);
    if (not_ready || bad) return false;
    switch (c->k) {
      case CondExpr::K::Eq: return x == y;
      case CondExpr::K::Ne: return x != y;
      case CondExpr::K::Gt: return x > y;
      case CondExpr::K::Lt: return x < y;
      case CondExpr::K::Ge: return x >= y;
      case CondExpr::K::Le: return x <= y;
      default: return false;
    }
  }

  EvalRange program(const std::vector<RangeOp>& ops) {
    std::vector<int64_t> st;
    EvalRange out;
    for (auto& op : ops) {
      switch (op.k) {
        case RangeOp::K::PushInt: st.push_back(op.ival); break;
        case RangeOp::K::PushParam: st.push_back(env[op.param]); break;
        case RangeOp::K::PushMaxInt: st.push_back(kMaxInteger); break;
        case RangeOp::K::PushMin: st.push_back(vars[env[op.param]].dom.lo); break;
        case RangeOp::K::PushMax: st.push_back(vars[env[op.param]].dom.hi); break;
        case RangeOp::K::PushVal: {
          const FdVar& v = vars[env[op.param]];
          if (!v.dom.singleton()) {
            not_ready = true;
            return out;
          }
          st.push_back(v.dom.lo);
          break;
        }
        case RangeOp::K::Add:
        case RangeOp::K::Sub:
        case RangeOp::K::Mul:
        case RangeOp::K::DivUp:
        case RangeOp::K::DivDown:
        case RangeOp::K::Min2:
        case RangeOp::K::Max2: {
          int64_t b = st.back();
          st.pop_back();
          int64_t a = st.back();
          st.pop_back();
          int64_t r = 0;
          switch (op.k) {
            case RangeOp::K::Add: r = sat_add(a, b); break;
            case RangeOp::K::Sub: r = sat_sub(a, b); break;
            case RangeOp::K::Mul: r = sat_mul(a, b); break;
            case RangeOp::K::Min2: r = std::min(a, b); break;
            case RangeOp::K::Max2: r = std::max(a, b); break;
            case RangeOp::K::DivUp:
            case RangeOp::K::DivDown: {
              if (b == 0) {
                out.k = EvalRange::K::Empty;
                bad = true;
                return out;
              }
              int64_t q = a / b, rem = a % b;
              if (op.k == RangeOp::K::DivUp && rem != 0 && ((a > 0) == (b > 0)))
                q++;
              if (op.k == RangeOp::K::DivDown && rem != 0 && ((a > 0) != (b > 0)))
                q--;
              r = q;
              break;
            }
            default: break;
          }
          st.push_back(r);
          break;
        }
        case RangeOp::K::MkInterval: {
          int64_t hi = st.back();
          st.pop_back();
          int64_t lo = st.back();
          st.pop_back();
          lo = std::max<int64_t>(lo, 0);
          hi = std::min<int64_t>(hi, kMaxInteger);
          if (lo > hi) {
            out.k = EvalRange::K::Empty;
          } else {
            out.k = EvalRange::K::Interval;
            out.lo = lo;
            out.hi = hi;
          }
          return out;
        }
        case RangeOp::K::MkSingleton: {
          int64_t e = st.back();
          if (e < 0 || e > kMaxInteger) {
            out.k = EvalRange::K::Empty;
          } else {
            out.k = EvalRange::K::Interval;
            out.lo = out.hi = e;
          }
          return out;
        }
        case RangeOp::K::MkComplement: {
          int64_t e = st.back();
          if (e < 0 || e > kMaxInteger) {
            out.k = EvalRange::K::Interval;  // nothing to exclude
            out.lo = 0;
            out.hi = kMaxInteger;
          } else {
            out.k = EvalRange::K::ComplVal;
            out.v = e;
          }
          return out;
        }
        case RangeOp::K::MkDom: {
          out.k = EvalRange::K::SetDom;
          out.set = vars[env[op.param]].dom;
          return out;
        }
        case RangeOp::K::MkFnCall: {
          auto* f = eng.externals().find(op.fname);
          if (!f) {
            bad = true;
            return out;
          }
          std::vector<FnArgVal> argv;
          for (auto& a : op.args) {
            FnArgVal v;
            if (a.is_dom) {
              v.is_dom = true;
              v.dom = vars[env[a.param]].dom;
            } else {
              v.ints = eng.fn_arg_values(env[a.param], a.is_list);
            }
            argv.push_back(std::move(v));
          }
          out.k = EvalRange::K::SetDom;
          out.set = f->second(argv);
          return out;
        }
      }
    }
    bad = true;
    return out;
  }
};

// ---------------------------------------------------------------------------
// FdEngine
// ---------------------------------------------------------------------------

FdEngine::FdEngine(std::vector<TrailEntry>* trail,
                   std::function<uint64_t()> cur_serial)
    : trail_(trail), cur_serial_(std::move(cur_serial)) {}

void FdEngine::register_def(const ConstraintDef& def) {
  if (def_ids_.count(def.name))
    throw FdLangError("constraint already defined: " + def.name);
  auto compiled = std::make_unique<CompiledDef>(compile_def(def, ext_));
  def_ids_[def.name] = (int)defs_.size();
  defs_.push_back(std::move(compiled));
}

void FdEngine::register_source(const std::string& fd_text) {
  for (auto& d : parse_fd(fd_text)) register_def(d);
}

void FdEngine::register_external(const std::string& name, int arity,
                                 ExternalFn fn) {
  ext_.register_external(name, arity, std::move(fn));
}

const CompiledDef* FdEngine::find_def(const std::string& name,
                                      size_t nargs) const {
  auto it = def_ids_.find(name);
  if (it == def_ids_.end()) return nullptr;
  const CompiledDef* d = defs_[it->second].get();
  if (d->params.size() != nargs) return nullptr;
  return d;
}

int FdEngine::new_var(int64_t lo, int64_t hi) {
  if (lo < 0 || hi > kMaxInteger || lo > hi)
    throw FdLangError("invalid domain " + std::to_string(lo) + ".." +
                      std::to_string(hi));
  FdVar v;
  v.dom = FdDomain::interval(lo, hi);
  if (v.dom.singleton()) v.inst_wave = wave_;
  vars_.push_back(std::move(v));
  return (int)vars_.size() - 1;
}

void FdEngine::trail_domain(int h) {
  uint64_t serial = cur_serial();
  FdVar& v = vars_[h];
  if (v.dom_trail_stamp == serial) return;  // at most one trailing per cp
  trail_->push_back(
      TrailEntry{TrailEntry::K::FdDom, (uint64_t)h, dom_saves_.size()});
  dom_saves_.push_back(DomSave{v.dom, v.dom_trail_stamp, v.inst_wave});
  v.dom_trail_stamp = serial;
  stats.domain_trail_entries++;
  if (stats.instrument) {
    auto key = std::make_pair(h, serial);
    if (!trail_seen_.insert(key).second) stats.trail_dup_violations++;
  }
}

void FdEngine::trail_chains(int h) {
  uint64_t serial = cur_serial();
  FdVar& v = vars_[h];
  if (v.dep_trail_stamp == serial) return;
  ChainSave s;
  for (int i = 0; i < 5; i++) s.lens[i] = (uint32_t)v.chains[i].size();
  s.dep_stamp = v.dep_trail_stamp;
  trail_->push_back(
      TrailEntry{TrailEntry::K::FdChains, (uint64_t)h, chain_saves_.size()});
  chain_saves_.push_back(s);
  v.dep_trail_stamp = serial;
}

void FdEngine::trail_flags(int frame) {
  uint64_t packed = (frames_[frame].stopped ? 1 : 0) |
                    (frames_[frame].fired ? 2 : 0);
  trail_->push_back(
      TrailEntry{TrailEntry::K::FdFlags, (uint64_t)frame, packed});
}

void FdEngine::set_stopped(int frame, bool v) {
  if (frames_[frame].stopped == v) return;
  trail_flags(frame);
  frames_[frame].stopped = v;
}

void FdEngine::set_fired(int frame, bool v) {
  if (frames_[frame].fired == v) return;
  trail_flags(frame);
  frames_[frame].fired = v;
}

void FdEngine::restore_trail_entry(const TrailEntry& e) {
  switch (e.k) {
    case TrailEntry::K::FdDom: {
      assert(e.b + 1 == dom_saves_.size());
      FdVar& v = vars_[e.a];
      DomSave& s = dom_saves_.back();
      v.dom = std::move(s.dom);
      v.dom_trail_stamp = s.stamp;
      v.inst_wave = s.inst;
      dom_saves_.pop_back();
      break;
    }
    case TrailEntry::K::FdChains: {
      assert(e.b + 1 == chain_saves_.size());
      FdVar& v = vars_[e.a];
      ChainSave& s = chain_saves_.back();
      for (int i = 0; i < 5; i++) v.chains[i].resize(s.lens[i]);
      v.dep_trail_stamp = s.dep_stamp;
      chain_saves_.pop_back();
      break;
    }
    case TrailEntry::K::FdFlags: {
      if (e.a < frames_.size()) {
        frames_[e.a].stopped = e.b & 1;
        frames_[e.a].fired = (e.b & 2) != 0;
      }
      break;
    }
    default: break;
  }
}

void FdEngine::on_backtrack(size_t cs_mark) {
  if (frames_.size() > cs_mark) frames_.resize(cs_mark);
  qhead_ = qtail_ = -1;
}

void FdEngine::enqueue(int h, uint32_t mask) {
  FdVar& v = vars_[h];
  if (stats.instrument) {
    auto chg = [&](int chain) { wave_counts_[{h, chain}].second++; };
    if (mask & kChMin) {
      chg((int)ChainKind::Min);
      chg((int)ChainKind::MinOrMax);
    }
    if (mask & kChMax) {
      chg((int)ChainKind::Max);
      if (!(mask & kChMin)) chg((int)ChainKind::MinOrMax);
    }
    if (mask & kChDom) chg((int)ChainKind::Dom);
    if (mask & kChVal) chg((int)ChainKind::Val);
  }
  if (v.queue_stamp == wave_) {
    v.queue_mask |= mask;
    stats.enqueue_merges++;
    return;
  }
  v.queue_stamp = wave_;
  v.queue_mask = mask;
  v.queue_next = -1;
  if (qtail_ == -1) {
    qhead_ = qtail_ = h;
  } else {
    vars_[qtail_].queue_next = h;
    qtail_ = h;
  }
}

bool FdEngine::tell_result(int h, const FdDomain& nd) {
  FdVar& v = vars_[h];
  if (nd.is_empty()) return false;
  if (nd.equals(v.dom)) return true;  // no change: no trail, no enqueue
  uint32_t mask = kChDom;
  if (nd.lo != v.dom.lo) mask |= kChMin;
  if (nd.hi != v.dom.hi) mask |= kChMax;
  bool was_single = v.dom.singleton();
  trail_domain(h);
  v.dom = nd;
  if (!was_single && nd.singleton()) {
    mask |= kChVal;
    v.inst_wave = wave_;
  }
  enqueue(h, mask);
  return true;
}

bool FdEngine::eval_and_tell(int frame_idx) {
  ConstraintFrame& f = frames_[frame_idx];
  const CompiledPrim& p = *f.prim;
  // delayed until every val() variable is determined
  for (int vp : p.val_params)
    if (!vars_[(*f.env)[vp]].dom.singleton()) return true;
  stats.frame_evals++;
  EngineEval ev{*this, vars_, *f.env};
  EvalRange r = ev.program(p.program);
  if (ev.not_ready) return true;
  if (ev.bad) return false;
  int owner = f.owner;
  FdVar& v = vars_[owner];
  switch (r.k) {
    case EvalRange::K::Empty: return false;
    case EvalRange::K::Interval:
      return tell_result(owner, v.dom.intersect_interval(r.lo, r.hi));
    case EvalRange::K::SetDom:
      return tell_result(owner, v.dom.intersect_set(r.set));
    case EvalRange::K::ComplVal:
      return tell_result(owner, v.dom.remove_value(r.v));
  }
  return false;
}

int FdEngine::push_prim_frame(int def_id, const CompiledPrim* p,
                              std::shared_ptr<std::vector<int64_t>> env,
                              int base) {
  ConstraintFrame f;
  f.def_id = def_id;
  f.prim = p;
  f.owner = (int)(*env)[p->target_param];
  f.env = std::move(env);
  f.install_base = base;
  frames_.push_back(std::move(f));
  return (int)frames_.size() - 1;
}

void FdEngine::register_frame_triggers(int frame_idx, const CompiledPrim& p) {
  const auto& env = *frames_[frame_idx].env;
  // group trigger kinds per variable and pick the cheapest covering chains
  std::map<int, uint32_t> per_var;
  for (auto& t : p.triggers) {
    int h = (int)env[t.param];
    uint32_t bit = t.kind == TrigKind::Min   ? kChMin
                   : t.kind == TrigKind::Max ? kChMax
                   : t.kind == TrigKind::Dom ? kChDom
                                             : kChVal;
    per_var[h] |= bit;
  }
  // implicit wake-up for l_fdv list parameters used by range functions
  if (p.range.k == RangeSpec::K::FnCall) {
    for (auto& a : p.range.args) {
      if (!a.is_dom &&
          defs_[frames_[frame_idx].def_id]->params[a.param].type ==
              FdParam::Type::LFdv) {
        for (int64_t h : arrays_[env[a.param]]) per_var[(int)h] |= kChDom;
      }
    }
  }
  for (auto& [h, bits] : per_var) {
    trail_chains(h);
    FdVar& v = vars_[h];
    if (bits & kChDom) {
      v.chains[(int)ChainKind::Dom].push_back(frame_idx);
      continue;  // dom wakes on every change; other chains are redundant
    }
    if ((bits & kChMin) && (bits & kChMax))
      v.chains[(int)ChainKind::MinOrMax].push_back(frame_idx);
    else if (bits & kChMin)
      v.chains[(int)ChainKind::Min].push_back(frame_idx);
    else if (bits & kChMax)
      v.chains[(int)ChainKind::Max].push_back(frame_idx);
    if (bits & kChVal) v.chains[(int)ChainKind::Val].push_back(frame_idx);
  }
}

bool FdEngine::run_actions(int frame_idx, const std::vector<CompiledAction>& acts) {
  int base = frames_[frame_idx].install_base;
  int def_id = frames_[frame_idx].def_id;
  auto env = frames_[frame_idx].env;
  for (auto& a : acts) {
    if (a.is_stop) {
      set_stopped(base + a.stop_prim, true);
    } else {
      int fi = push_prim_frame(def_id, &a.start, env, base);
      register_frame_triggers(fi, a.start);
      if (!eval_and_tell(fi)) return false;
    }
  }
  return true;
}

bool FdEngine::eval_switch(int frame_idx) {
  ConstraintFrame& f = frames_[frame_idx];
  if (f.fired) return true;
  const CompiledSwitch& sw = *f.sw;
  for (auto& cs : sw.cases) {
    EngineEval ev{*this, vars_, *f.env};
    bool hit = ev.cond(cs.cond);
    if (ev.bad) return false;
    if (hit) {
      set_fired(frame_idx, true);  // at most one case fires, permanently
      return run_actions(frame_idx, cs.actions);
    }
  }
  return true;
}

bool FdEngine::propagate() {
  while (qhead_ != -1) {
    int h = qhead_;
    FdVar& v = vars_[h];
    qhead_ = v.queue_next;
    if (qhead_ == -1) qtail_ = -1;
    uint32_t mask = v.queue_mask;
    v.queue_mask = 0;
    v.queue_next = -1;
    v.queue_stamp = 0;

    // chains to walk for this change mask
    int kinds[5];
    int nk = 0;
    if (mask & kChMin) kinds[nk++] = (int)ChainKind::Min;
    if (mask & kChMax) kinds[nk++] = (int)ChainKind::Max;
    if (mask & (kChMin | kChMax)) kinds[nk++] = (int)ChainKind::MinOrMax;
    if (mask & kChDom) kinds[nk++] = (int)ChainKind::Dom;
    if (mask & kChVal) kinds[nk++] = (int)ChainKind::Val;

    for (int ki = 0; ki < nk; ki++) {
      int kind = kinds[ki];
      if (stats.instrument) {
        auto& wc = wave_counts_[{h, kind}];
        wc.first++;
        if (wc.first > wc.second) stats.walk_violations++;
      }
      size_t n = vars_[h].chains[kind].size();
      for (size_t i = 0; i < n; i++) {
        int fi = vars_[h].chains[kind][i];
        if ((size_t)fi >= frames_.size()) continue;
        ConstraintFrame& f = frames_[fi];
        if (f.stopped) continue;
        if (f.is_switch) {
          if (!eval_switch(fi)) {
            qhead_ = qtail_ = -1;
            return false;
          }
          continue;
        }
        // skip primitives whose owner was instantiated before this run
        const FdVar& ov = vars_[f.owner];
        if (ov.dom.singleton() && ov.inst_wave < wave_) {
          stats.skipped_instantiated++;
          continue;
        }
        if (!eval_and_tell(fi)) {
          qhead_ = qtail_ = -1;
          return false;
        }
      }
    }
  }
  return true;
}

bool FdEngine::episode(const std::function<bool()>& body) {
  wave_++;
  if (stats.instrument) wave_counts_.clear();
  if (!body()) {
    qhead_ = qtail_ = -1;
    return false;
  }
  return propagate();
}

bool FdEngine::install(const CompiledDef& def,
                       const std::vector<InstallArg>& args) {
  if (args.size() != def.params.size())
    throw FdLangError("wrong number of arguments for " + def.name);
  int def_id = def_ids_.at(def.name);
  return episode([&]() {
    auto env = std::make_shared<std::vector<int64_t>>(args.size(), 0);
    for (size_t i = 0; i < args.size(); i++) {
      const InstallArg& a = args[i];
      switch (def.params[i].type) {
        case FdParam::Type::Fdv:
          if (a.k == InstallArg::K::Var)
            (*env)[i] = a.var;
          else if (a.k == InstallArg::K::Int)
            (*env)[i] = new_var(a.i, a.i);
          else
            throw FdLangError("fdv argument expected for " + def.name);
          break;
        case FdParam::Type::Int:
          if (a.k != InstallArg::K::Int)
            throw FdLangError("int argument expected for " + def.name);
          (*env)[i] = a.i;
          break;
        case FdParam::Type::LInt:
          if (a.k != InstallArg::K::IntList)
            throw FdLangError("l_int argument expected for " + def.name);
          (*env)[i] = add_array(a.ints);
          break;
        case FdParam::Type::LFdv: {
          if (a.k != InstallArg::K::VarList)
            throw FdLangError("l_fdv argument expected for " + def.name);
          std::vector<int64_t> hs(a.vars.begin(), a.vars.end());
          (*env)[i] = add_array(std::move(hs));
          break;
        }
      }
    }
    int base = (int)frames_.size();
    std::vector<int> prim_frames;
    for (auto& p : def.prims)
      prim_frames.push_back(push_prim_frame(def_id, &p, env, base));
    std::vector<int> sw_frames;
    for (auto& sw : def.switches) {
      ConstraintFrame f;
      f.def_id = def_id;
      f.is_switch = true;
      f.sw = &sw;
      f.env = env;
      f.install_base = base;
      frames_.push_back(std::move(f));
      sw_frames.push_back((int)frames_.size() - 1);
    }
    for (size_t k = 0; k < def.prims.size(); k++)
      register_frame_triggers(prim_frames[k], def.prims[k]);
    for (size_t k = 0; k < def.switches.size(); k++) {
      // switches register on their condition variables
      const auto& sw = def.switches[k];
      std::map<int, uint32_t> per_var;
      for (auto& t : sw.triggers) {
        int h = (int)(*env)[t.param];
        uint32_t bit = t.kind == TrigKind::Min   ? kChMin
                       : t.kind == TrigKind::Max ? kChMax
                       : t.kind == TrigKind::Dom ? kChDom
                                                 : kChVal;
        per_var[h] |= bit;
      }
      for (auto& [h, bits] : per_var) {
        trail_chains(h);
        FdVar& v = vars_[h];
        if (bits & kChDom) {
          v.chains[(int)ChainKind::Dom].push_back(sw_frames[k]);
          continue;
        }
        if ((bits & kChMin) && (bits & kChMax))
          v.chains[(int)ChainKind::MinOrMax].push_back(sw_frames[k]);
        else if (bits & kChMin)
          v.chains[(int)ChainKind::Min].push_back(sw_frames[k]);
        else if (bits & kChMax)
          v.chains[(int)ChainKind::Max].push_back(sw_frames[k]);
        if (bits & kChVal) v.chains[(int)ChainKind::Val].push_back(sw_frames[k]);
      }
    }
    // every primitive is evaluated once at install (val-delayed ones wait)
    for (int fi : prim_frames)
      if (!eval_and_tell(fi)) return false;
    for (int fi : sw_frames)
      if (!eval_switch(fi)) return false;
    return true;
  });
}

bool FdEngine::assign(int h, int64_t v) {
  return episode([&]() {
    return tell_result(h, vars_[h].dom.intersect_interval(v, v));
  });
}

bool FdEngine::exclude(int h, int64_t v) {
  return episode([&]() { return tell_result(h, vars_[h].dom.remove_value(v)); });
}

bool FdEngine::tell_interval(int h, int64_t lo, int64_t hi) {
  return episode([&]() {
    return tell_result(h, vars_[h].dom.intersect_interval(lo, hi));
  });
}

bool FdEngine::tell_set(int h, FdDomain set) {
  return episode(
      [&]() { return tell_result(h, vars_[h].dom.intersect_set(set)); });
}

bool FdEngine::unify_vars(int a, int b) {
  if (a == b) return true;
  const CompiledDef* eq = find_def("x_eq_y", 2);
  if (!eq) throw FdLangError("x_eq_y is not registered");
  return install(*eq, {InstallArg::mkvar(a), InstallArg::mkvar(b)});
}

std::string FdEngine::frame_range_string(const ConstraintFrame& f) const {
  if (f.is_switch) return "wait_switch";
  return range_to_string(f.prim->range, defs_[f.def_id]->params);
}

std::vector<int64_t> FdEngine::fn_arg_values(int64_t env_val,
                                              bool is_list) const {
  if (is_list) return arrays_[env_val];
  return {env_val};
}

}  // namespace prolite::fd
