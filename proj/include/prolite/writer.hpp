#pragma once

#include <string>

#include "prolite/term.hpp"

namespace prolite {

struct WriteOptions {
  bool quoted = false;
  bool ignore_ops = false;
};

std::string write_term(const TermPtr& t, const OperatorTable& table,
                       const WriteOptions& opts = {});

/// True when the atom text needs quotes to read back as a single atom.
bool atom_needs_quotes(const std::string& text);
std::string quote_atom(const std::string& text);
std::string format_float(double v);

}  // namespace prolite
