#pragma once

#include <optional>
#include <string>
#include <vector>

#include "prolite/term.hpp"

namespace prolite {

class MaParseError : public std::runtime_error {
 public:
  MaParseError(int line, const std::string& msg)
      : std::runtime_error("ma: line " + std::to_string(line) + ": " + msg),
        line(line) {}
  int line;
};

struct MaArg {
  enum class Kind {
    Int,
    Flt,
    Str,
    Addr,      // &name (code label, code symbol or data symbol)
    MemVal,    // name or name(i): contents of a data word
    XReg,      // X(i)
    YReg,      // Y(i)
    XRegAddr,  // &X(i)
    YRegAddr,  // &Y(i)
  };
  Kind kind = Kind::Int;
  int64_t i = 0;       // integer value, register or element index
  double f = 0;
  std::string s;       // symbol/name or string contents
  bool indexed = false;  // name(i) form for MemVal

  static MaArg integer(int64_t v) { return {Kind::Int, v, 0, "", false}; }
  static MaArg flt(double v) { return {Kind::Flt, 0, v, "", false}; }
  static MaArg str(const std::string& v) { return {Kind::Str, 0, 0, v, false}; }
  static MaArg addr(const std::string& n) { return {Kind::Addr, 0, 0, n, false}; }
  static MaArg mem(const std::string& n, int64_t idx) {
    return {Kind::MemVal, idx, 0, n, true};
  }
  static MaArg mem(const std::string& n) { return {Kind::MemVal, 0, 0, n, false}; }
  static MaArg x(int64_t r) { return {Kind::XReg, r, 0, "", false}; }
  static MaArg y(int64_t r) { return {Kind::YReg, r, 0, "", false}; }
  static MaArg xaddr(int64_t r) { return {Kind::XRegAddr, r, 0, "", false}; }
  static MaArg yaddr(int64_t r) { return {Kind::YRegAddr, r, 0, "", false}; }
};

struct MaInstr {
  enum class Op {
    PlJump,
    PlCall,
    PlRet,
    PlFail,
    Jump,
    CallC,
    FailRet,
    JumpRet,
    MoveRet,
    CRet,
    Move,
    Label,  // pseudo: label definition inside a block
  };
  Op op;
  std::string sym;          // pl_jump/pl_call/jump target, label name, call_c fname
  std::vector<MaArg> args;  // call_c arguments; move/move_ret operands
};

struct MaBlock {
  bool pl_code = false;
  enum class Vis { Local, Global, Initializer };
  Vis vis = Vis::Global;
  std::string symbol;
  std::vector<MaInstr> code;
};

struct MaData {
  bool global = false;
  std::string name;
  bool is_array = false;
  int64_t size = 1;
  std::optional<int64_t> init;
};

struct MaObject {
  std::string name;  // source path, for diagnostics
  std::vector<MaBlock> blocks;
  std::vector<MaData> data;

  const MaBlock* find_block(const std::string& sym) const {
    for (auto& b : blocks)
      if (b.symbol == sym) return &b;
    return nullptr;
  }
};

std::string emit_ma(const MaObject& o);
MaObject parse_ma(const std::string& text, const std::string& name = "ma");

/// "X" + uppercase hex of each character + "_" + arity.
std::string encode_symbol(const std::string& name, int arity);
/// Inverse of encode_symbol; nullopt when sym is not an encoded name.
std::optional<std::pair<std::string, int>> decode_symbol(const std::string& sym);
/// Human form: decoded "name/arity" or the symbol itself.
std::string describe_symbol(const std::string& sym);

}  // namespace prolite
