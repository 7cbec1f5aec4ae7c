#pragma once

#include <array>
#include <set>
#include <functional>
#include <memory>

#include "prolite/fd_lang.hpp"

namespace prolite::fd {

/// Tagged trail record. Bind entries restore heap cells; the Fd* kinds carry
/// their payload in engine-side save stacks addressed by `b`.
struct TrailEntry {
  enum class K : uint8_t { Bind, FdDom, FdChains, FdFlags };
  K k = K::Bind;
  uint64_t a = 0;  // Bind: cell address; FdDom/FdChains: var; FdFlags: frame
  uint64_t b = 0;  // save-stack index / packed flags
};

enum class ChainKind { Min = 0, Max = 1, MinOrMax = 2, Dom = 3, Val = 4 };

constexpr uint32_t kChMin = 1, kChMax = 2, kChDom = 4, kChVal = 8;

struct ConstraintFrame {
  int def_id = -1;
  bool is_switch = false;
  const CompiledPrim* prim = nullptr;
  const CompiledSwitch* sw = nullptr;
  int owner = -1;  // constrained variable (primitives)
  std::shared_ptr<std::vector<int64_t>> env;  // one env per install
  int install_base = 0;  // first frame index of the same install
  bool stopped = false;
  bool fired = false;
};

struct FdVar {
  FdDomain dom;
  std::array<std::vector<int32_t>, 5> chains;  // per ChainKind
  int32_t queue_next = -1;
  uint32_t queue_mask = 0;
  uint64_t queue_stamp = 0;
  uint64_t dom_trail_stamp = ~0ull;
  uint64_t dep_trail_stamp = ~0ull;
  uint64_t inst_wave = 0;  // wave at which the domain became a singleton
};

struct InstallArg {
  enum class K { Var, Int, IntList, VarList };
  K k = K::Int;
  int var = -1;
  int64_t i = 0;
  std::vector<int64_t> ints;
  std::vector<int> vars;

  static InstallArg mkvar(int h) {
    InstallArg a;
    a.k = K::Var;
    a.var = h;
    return a;
  }
  static InstallArg mkint(int64_t v) {
    InstallArg a;
    a.k = K::Int;
    a.i = v;
    return a;
  }
  static InstallArg mkints(std::vector<int64_t> v) {
    InstallArg a;
    a.k = K::IntList;
    a.ints = std::move(v);
    return a;
  }
  static InstallArg mkvars(std::vector<int> v) {
    InstallArg a;
    a.k = K::VarList;
    a.vars = std::move(v);
    return a;
  }
};

class FdEngine {
 public:
  struct Stats {
    bool instrument = false;
    uint64_t domain_trail_entries = 0;
    uint64_t trail_dup_violations = 0;   // >1 domain entry per var per cp
    uint64_t walk_violations = 0;        // (var,kind) walked more than changed
    uint64_t enqueue_merges = 0;
    uint64_t frame_evals = 0;
    uint64_t skipped_instantiated = 0;
  };
  Stats stats;

  FdEngine(std::vector<TrailEntry>* trail, std::function<uint64_t()> cur_serial);

  // registry ---------------------------------------------------------------
  void register_def(const ConstraintDef& def);  // throws FdLangError
  void register_source(const std::string& fd_text);
  void register_external(const std::string& name, int arity, ExternalFn fn);
  const CompiledDef* find_def(const std::string& name, size_t nargs) const;
  const ExternalRegistry& externals() const { return ext_; }

  // variables ----------------------------------------------------------------
  int new_var(int64_t lo, int64_t hi);  // throws FdLangError on empty interval
  const FdVar& var(int h) const { return vars_[h]; }
  size_t var_count() const { return vars_.size(); }
  int64_t var_min(int h) const { return vars_[h].dom.lo; }
  int64_t var_max(int h) const { return vars_[h].dom.hi; }

  // constraint posting (each call is one propagation episode) ----------------
  bool install(const CompiledDef& def, const std::vector<InstallArg>& args);
  bool assign(int h, int64_t v);
  bool exclude(int h, int64_t v);
  bool tell_interval(int h, int64_t lo, int64_t hi);
  bool tell_set(int h, FdDomain set);
  bool unify_vars(int a, int b);

  // backtracking --------------------------------------------------------------
  size_t cs_top() const { return frames_.size(); }
  void on_backtrack(size_t cs_mark);
  void restore_trail_entry(const TrailEntry& e);

  // introspection ---------------------------------------------------------------
  const std::vector<ConstraintFrame>& frames() const { return frames_; }
  std::string frame_range_string(const ConstraintFrame& f) const;
  std::string def_name(int def_id) const { return defs_[def_id]->name; }
  std::vector<int64_t> fn_arg_values(int64_t env_val, bool is_list) const;

  struct InstallArgKindError : FdLangError {
    using FdLangError::FdLangError;
  };

 private:
  friend struct EngineEval;

  uint64_t cur_serial() const { return cur_serial_(); }
  void trail_domain(int h);
  void trail_chains(int h);
  void trail_flags(int frame);
  void set_stopped(int frame, bool v);
  void set_fired(int frame, bool v);
  void enqueue(int h, uint32_t mask);
  bool tell_result(int h, const FdDomain& nd);  // intersection already done
  bool eval_and_tell(int frame_idx);
  bool eval_switch(int frame_idx);
  bool run_actions(int frame_idx, const std::vector<CompiledAction>& actions);
  bool propagate();
  bool episode(const std::function<bool()>& body);
  int push_prim_frame(int def_id, const CompiledPrim* p,
                      std::shared_ptr<std::vector<int64_t>> env, int base);
  void register_frame_triggers(int frame_idx, const CompiledPrim& p);
  bool install_eval_prim(int frame_idx);

  std::vector<TrailEntry>* trail_;
  std::function<uint64_t()> cur_serial_;

  std::vector<FdVar> vars_;
  std::vector<ConstraintFrame> frames_;
  std::vector<std::vector<int64_t>> arrays_;  // l_int / l_fdv storage

  struct DomSave {
    FdDomain dom;
    uint64_t stamp, inst;
  };
  struct ChainSave {
    std::array<uint32_t, 5> lens;
    uint64_t dep_stamp;
  };
  std::vector<DomSave> dom_saves_;
  std::vector<ChainSave> chain_saves_;

  std::vector<std::unique_ptr<CompiledDef>> defs_;
  std::map<std::string, int> def_ids_;
  ExternalRegistry ext_;

  int32_t qhead_ = -1, qtail_ = -1;
  uint64_t wave_ = 1;

  // per-wave instrumentation
  std::map<std::pair<int, int>, std::pair<uint32_t, uint32_t>> wave_counts_;
  std::set<std::pair<int, uint64_t>> trail_seen_;

 public:
  // array pool access for external range functions
  const std::vector<int64_t>& array(int64_t id) const { return arrays_[id]; }
  int64_t add_array(std::vector<int64_t> a) {
    arrays_.push_back(std::move(a));
    return (int64_t)arrays_.size() - 1;
  }
};

}  // namespace prolite::fd
