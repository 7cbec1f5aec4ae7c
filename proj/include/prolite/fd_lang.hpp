#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "prolite/fd_domain.hpp"

namespace prolite::fd {

class FdLangError : public std::runtime_error {
 public:
  FdLangError(int line, const std::string& m)
      : std::runtime_error("fd: line " + std::to_string(line) + ": " + m) {}
  explicit FdLangError(const std::string& m) : std::runtime_error("fd: " + m) {}
};

// ---------------------------------------------------------------------------
// AST
// ---------------------------------------------------------------------------

struct ScalarExpr;
using SExpr = std::shared_ptr<const ScalarExpr>;

struct ScalarExpr {
  enum class K {
    Int,
    Param,    // int parameter
    MaxInt,
    Min,      // min(V)
    Max,      // max(V)
    Val,      // val(V): delays the primitive until V is determined
    Add,
    Sub,
    Mul,
    DivUp,    // />  (integer division rounding up)
    DivDown,  // /<  (integer division rounding down)
    FMin,     // Min(a,b)
    FMax,     // Max(a,b)
  };
  K k;
  int64_t ival = 0;
  int param = -1;
  SExpr a, b;

  static SExpr lit(int64_t v);
  static SExpr mk(K k, SExpr a, SExpr b = nullptr);
  static SExpr of_param(K k, int p);
};

struct RangeArg {
  bool is_dom = false;   // dom(V) argument
  bool is_list = false;  // l_int / l_fdv parameter (set during compilation)
  int param = -1;
};

struct RangeSpec {
  enum class K {
    Interval,    // lo .. hi
    Singleton,   // { e }
    Complement,  // ~{ e }
    Dom,         // dom(V)
    FnCall,      // external range function
  };
  K k = K::Interval;
  SExpr lo, hi, e;
  int param = -1;
  std::string fname;
  std::vector<RangeArg> args;
};

struct CondExpr;
using CExpr = std::shared_ptr<const CondExpr>;
struct CondExpr {
  enum class K { Eq, Ne, Gt, Lt, Ge, Le, Or, And };
  K k;
  SExpr x, y;
  CExpr a, b;
};

struct FdParam {
  enum class Type { Fdv, Int, LInt, LFdv };
  std::string name;
  Type type = Type::Fdv;
};

struct FdPrimitive {
  std::string cname;      // optional: start (c1) ...
  int target_param = -1;  // constrained variable (must be fdv)
  RangeSpec range;
};

struct FdAction {
  bool is_stop = false;
  std::string stop_name;
  FdPrimitive start;
};

struct FdCase {
  CExpr cond;
  std::vector<FdAction> actions;
};

struct FdBodyItem {
  bool is_switch = false;
  FdPrimitive prim;
  std::vector<FdCase> cases;
};

struct ConstraintDef {
  std::string name;
  std::vector<FdParam> params;
  std::vector<FdBodyItem> items;
  int param_index(const std::string& n) const {
    for (size_t i = 0; i < params.size(); i++)
      if (params[i].name == n) return (int)i;
    return -1;
  }
};

std::vector<ConstraintDef> parse_fd(const std::string& text);

// ---------------------------------------------------------------------------
// Compiled form
// ---------------------------------------------------------------------------

enum class TrigKind { Min = 0, Max = 1, Dom = 2, Val = 3 };

struct Trigger {
  int param;
  TrigKind kind;
  bool operator==(const Trigger&) const = default;
  bool operator<(const Trigger& o) const {
    return param != o.param ? param < o.param : kind < o.kind;
  }
};

/// Flat postfix program computing a range against a store.
struct RangeOp {
  enum class K {
    PushInt,
    PushParam,
    PushMaxInt,
    PushMin,
    PushMax,
    PushVal,
    Add,
    Sub,
    Mul,
    DivUp,
    DivDown,
    Min2,
    Max2,
    MkInterval,   // pops hi, lo
    MkSingleton,  // pops e
    MkComplement, // pops e
    MkDom,        // param in `param`
    MkFnCall,     // fname/args attached
  };
  K k;
  int64_t ival = 0;
  int param = -1;
  std::string fname;
  std::vector<RangeArg> args;
};

struct CompiledPrim {
  std::string cname;
  int target_param = -1;
  RangeSpec range;               // kept for direct interpretation / printing
  std::vector<RangeOp> program;  // compiled evaluation program
  std::vector<Trigger> triggers;
  std::vector<int> val_params;   // params this primitive waits on
  bool run_once = false;         // no triggers: evaluated once at install
};

struct CompiledAction {
  bool is_stop = false;
  int stop_prim = -1;    // index into CompiledDef::prims
  CompiledPrim start;
};

struct CompiledCase {
  CExpr cond;
  std::vector<CompiledAction> actions;
};

struct CompiledSwitch {
  std::vector<CompiledCase> cases;
  std::vector<Trigger> triggers;  // from condition variables
};

struct CompiledDef {
  std::string name;
  std::vector<FdParam> params;
  std::vector<CompiledPrim> prims;     // top-level primitives, in order
  std::vector<CompiledSwitch> switches;
};

/// Value passed to an external range function.
struct FnArgVal {
  bool is_dom = false;
  FdDomain dom;                // when is_dom
  std::vector<int64_t> ints;   // l_int contents
};

using ExternalFn = std::function<FdDomain(const std::vector<FnArgVal>&)>;

class ExternalRegistry {
 public:
  void register_external(const std::string& name, int arity, ExternalFn fn);
  const std::pair<int, ExternalFn>* find(const std::string& name) const;

 private:
  std::map<std::string, std::pair<int, ExternalFn>> fns_;
};

CompiledDef compile_def(const ConstraintDef& def, const ExternalRegistry& ext);

std::string range_to_string(const RangeSpec& r, const std::vector<FdParam>& params);

}  // namespace prolite::fd
