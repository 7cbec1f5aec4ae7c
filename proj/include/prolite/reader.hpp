#pragma once

#include <istream>
#include <map>
#include <string>

#include "prolite/term.hpp"

namespace prolite {

class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(int line, int col, const std::string& msg)
      : std::runtime_error("syntax error at line " + std::to_string(line) + ":" +
                           std::to_string(col) + ": " + msg),
        line(line),
        col(col) {}
  int line;
  int col;
};

struct ReadResult {
  TermPtr term;
  std::map<std::string, TermPtr> variables;  // named variables ('_' excluded)
  int line = 0;                              // line where the term starts
};

/// Reads full-stop terminated terms from a source text.
class Reader {
 public:
  Reader(std::string text, const OperatorTable* table);

  // Returns the next term, or nullopt at end of input.
  std::optional<ReadResult> read();
  bool at_end();

  int line() const { return line_; }

 private:
  struct Token;
  Token next_token();
  Token peek_token();
  void skip_layout();
  Token lex_number();
  Token lex_quoted(char quote);

  TermPtr parse(int max_prec, int& prec_out);
  TermPtr parse_primary(int max_prec, int& prec_out);
  std::vector<TermPtr> parse_arglist();
  TermPtr parse_list();
  bool token_starts_term(const Token& t);

  [[noreturn]] void fail(const std::string& msg);

  std::string text_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  const OperatorTable* table_;
  std::map<std::string, TermPtr> vars_;
  bool tok_valid_ = false;
  int term_start_line_ = 1;
};

/// Convenience: read every term in the text.
std::vector<ReadResult> read_all(const std::string& text, const OperatorTable& table);
TermPtr parse_term(const std::string& text, const OperatorTable& table);

}  // namespace prolite
