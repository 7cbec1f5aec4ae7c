#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace prolite {

struct Term;
using TermPtr = std::shared_ptr<const Term>;

/// A Prolog term. Immutable once built; shared freely.
struct Term {
  enum class Kind { Var, Atom, Int, Float, Compound };

  Kind kind;
  std::string name;  // variable name, atom text or functor
  int64_t ival = 0;
  double fval = 0.0;
  uint64_t serial = 0;  // variable identity
  std::vector<TermPtr> args;

  static TermPtr var(const std::string& name);  // fresh serial
  static TermPtr var_serial(const std::string& name, uint64_t serial);
  static TermPtr atom(const std::string& text);
  static TermPtr integer(int64_t v);
  static TermPtr floating(double v);
  static TermPtr compound(const std::string& functor, std::vector<TermPtr> args);

  bool is_var() const { return kind == Kind::Var; }
  bool is_atom() const { return kind == Kind::Atom; }
  bool is_atom(const std::string& t) const { return kind == Kind::Atom && name == t; }
  bool is_int() const { return kind == Kind::Int; }
  bool is_float() const { return kind == Kind::Float; }
  bool is_compound() const { return kind == Kind::Compound; }
  bool is_functor(const std::string& f, size_t arity) const {
    return kind == Kind::Compound && name == f && args.size() == arity;
  }
  bool is_nil() const { return is_atom("[]"); }
  bool is_cons() const { return is_functor(".", 2); }
  bool is_callable() const { return is_atom() || is_compound(); }
  size_t arity() const { return kind == Kind::Compound ? args.size() : 0; }
};

TermPtr mk_list(const std::vector<TermPtr>& items, TermPtr tail = nullptr);
// Returns items of a proper list, or nullopt when not a proper list.
std::optional<std::vector<TermPtr>> list_items(const TermPtr& t);

/// Structural equality; variables compare by serial.
bool term_equals(const TermPtr& a, const TermPtr& b);
/// Equality up to a consistent renaming of variables.
bool term_variant(const TermPtr& a, const TermPtr& b);
/// Standard order of terms: Var < Float/Int < Atom < Compound.
int term_compare(const TermPtr& a, const TermPtr& b);
/// Copy with fresh variables (consistent within one call).
TermPtr term_rename(const TermPtr& t);
void term_variables(const TermPtr& t, std::vector<TermPtr>& out);

enum class OpType { XFX, XFY, YFX, FY, FX, XF, YF };

inline bool op_is_prefix(OpType t) { return t == OpType::FY || t == OpType::FX; }
inline bool op_is_postfix(OpType t) { return t == OpType::XF || t == OpType::YF; }
inline bool op_is_infix(OpType t) {
  return t == OpType::XFX || t == OpType::XFY || t == OpType::YFX;
}
const char* op_type_name(OpType t);
std::optional<OpType> op_type_from_name(const std::string& s);

struct OpDef {
  int priority = 0;
  OpType type = OpType::XFX;
};

class TableError : public std::runtime_error {
 public:
  explicit TableError(const std::string& m) : std::runtime_error(m) {}
};

/// Mutable operator table; one instance per compiler/top-level session.
class OperatorTable {
 public:
  static OperatorTable standard();

  // priority 0 removes the entry of that class; throws TableError on
  // out-of-range priority or a prefix/infix-postfix class conflict.
  void update(const std::string& name, int priority, OpType type);

  std::optional<OpDef> prefix(const std::string& name) const;
  std::optional<OpDef> infix(const std::string& name) const;
  std::optional<OpDef> postfix(const std::string& name) const;
  bool is_operator(const std::string& name) const;
  int max_priority(const std::string& name) const;

 private:
  struct Entry {
    std::optional<OpDef> pre;
    std::optional<OpDef> in_or_post;  // at most one infix-or-postfix entry
  };
  std::map<std::string, Entry> table_;
};

}  // namespace prolite
