#pragma once

#include <set>
#include <string>
#include <vector>

#include "prolite/reader.hpp"
#include "prolite/wam.hpp"

namespace prolite {

struct CompileOptions {
  bool reg_opt = true;          // preferred-register reuse
  bool reorder = true;          // constant head arguments matched first
  bool inline_builtins = true;  // '='/2 as unification; var/nonvar/atom/integer
  bool lco = true;              // last call (and last subterm) optimization
  std::string origin = "user";  // user | built_in | built_in_fd
};

class CompileError : public std::runtime_error {
 public:
  CompileError(int line, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line) + ": " + msg), line(line) {}
  int line;
};

/// One Prolog -> WAM compilation session; owns the operator table so that
/// op/3 directives take effect for the rest of the same file.
class CompilerSession {
 public:
  CompilerSession() : table(OperatorTable::standard()) {}

  OperatorTable table;
  CompileOptions opts;
  std::vector<std::string> warnings;

  WamFile compile_source(const std::string& path, const std::string& text);
  WamFile compile_results(const std::string& path,
                          const std::vector<ReadResult>& results);

  /// Compiles one clause (Head :- Body, or a fact) to instructions,
  /// without indexing. pred_has_cut_level: the predicate loads the cut
  /// register on entry.
  std::vector<WamInstr> compile_clause(const TermPtr& clause, int arity,
                                       bool pred_has_cut_level);

  /// Compiles a directive goal as a zero-arity clause body.
  std::vector<WamInstr> compile_directive_body(const TermPtr& goal);

  /// Builds predicate code from per-clause code: one-level first-argument
  /// indexing with try/retry/trust chains.
  static std::vector<WamInstr> build_indexing(
      const std::vector<TermPtr>& heads,
      const std::vector<std::vector<WamInstr>>& clause_code, bool load_cut,
      int arity);

  static bool term_has_cut(const TermPtr& body);

 private:
  std::set<std::string> dynamic_preds_;        // name/arity keys
  std::set<std::string> discontiguous_preds_;  // name/arity keys
};

}  // namespace prolite
