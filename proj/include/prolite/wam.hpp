#pragma once

#include <string>
#include <vector>

#include "prolite/term.hpp"

namespace prolite {

enum class WOp {
  GetVariable,
  GetValue,
  GetAtom,
  GetInteger,
  GetFloat,
  GetNil,
  GetList,
  GetStructure,
  PutVariable,
  PutValue,
  PutAtom,
  PutInteger,
  PutFloat,
  PutNil,
  PutList,
  PutStructure,
  UnifyVariable,
  UnifyValue,
  UnifyAtom,
  UnifyInteger,
  UnifyFloat,
  UnifyNil,
  UnifyVoid,
  Allocate,
  Deallocate,
  Call,
  Execute,
  Proceed,
  Fail,
  Label,
  SwitchOnTerm,
  SwitchOnAtom,
  SwitchOnInteger,
  SwitchOnStructure,
  TryMeElse,
  RetryMeElse,
  TrustMeElseFail,
  Try,
  Retry,
  Trust,
  LoadCutLevel,
  Cut
};

struct WamReg {
  bool y = false;
  int idx = 0;
  bool operator==(const WamReg&) const = default;
};

struct SwitchEntry {
  enum class Kind { Atom, Int, Struct };
  Kind kind = Kind::Atom;
  std::string name;
  int64_t ival = 0;
  int arity = 0;
  int label = 0;
};

struct WamInstr {
  WOp op;
  WamReg reg;        // register operand (get_variable/put_value/unify_*/cut)
  int a = 0;         // arg-register index, allocate n, label id, void count
  std::string atom;  // atom operand or call/execute functor
  int64_t ival = 0;
  double fval = 0;
  int arity = 0;                 // functor arity (get/put_structure, call, execute)
  int lbl[5] = {0, 0, 0, 0, 0};  // switch_on_term: var,atm,int,lst,stc; 0 = fail
  std::vector<SwitchEntry> table;

  static WamInstr simple(WOp op) { return WamInstr{.op = op}; }
};

struct WamPredicate {
  std::string name;
  int arity = 0;
  int line = 1;
  bool is_dynamic = false;
  bool is_public = false;
  std::string origin = "user";  // user | built_in | built_in_fd
  std::vector<WamInstr> code;
};

struct WamDirective {
  int line = 1;
  bool user = false;  // user: initialization/1 goal; system otherwise
  std::vector<WamInstr> code;
};

struct PredSpec {
  std::string name;
  int arity = 0;
};

struct WamFile {
  std::string path;
  std::vector<WamPredicate> preds;
  std::vector<WamDirective> directives;
  std::vector<PredSpec> ensure_linked;
};

class WamFormatError : public std::runtime_error {
 public:
  explicit WamFormatError(const std::string& m) : std::runtime_error(m) {}
};

std::string wam_instr_to_string(const WamInstr& i);
TermPtr wam_instr_to_term(const WamInstr& i);
WamInstr wam_instr_from_term(const TermPtr& t);

std::string emit_wam(const WamFile& f);
WamFile parse_wam(const std::string& text);

}  // namespace prolite
