#include "prolite/writer.hpp"

#include <cctype>
#include <cstdio>
#include <sstream>

namespace prolite {

namespace {

bool is_symbol_char(char c) {
  static const std::string sym = "+-*/\\^<>=~:.?@#&$";
  return sym.find(c) != std::string::npos;
}

bool is_solo(const std::string& s) {
  return s == "!" || s == ";" || s == "[]" || s == "{}";
}

}  // namespace

bool atom_needs_quotes(const std::string& text) {
  if (text.empty()) return true;
  if (is_solo(text)) return false;
  if (std::islower((unsigned char)text[0])) {
    for (char c : text)
      if (!(std::isalnum((unsigned char)c) || c == '_')) return true;
    return false;
  }
  bool all_sym = true;
  for (char c : text)
    if (!is_symbol_char(c)) {
      all_sym = false;
      break;
    }
  if (all_sym) return false;
  return true;
}

std::string quote_atom(const std::string& text) {
  std::string out = "'";
  for (char c : text) {
    switch (c) {
      case '\'': out += "\\'"; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      case '\a': out += "\\a"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      case '\v': out += "\\v"; break;
      default: out.push_back(c);
    }
  }
  out += "'";
  return out;
}

std::string format_float(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  std::string s = buf;
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
      s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
    s += ".0";
  return s;
}

namespace {

struct Writer {
  const OperatorTable& table;
  WriteOptions opts;
  std::ostringstream out;
  char last = 0;

  void emit(const std::string& s) {
    if (s.empty()) return;
    // keep symbol-char runs from gluing together ("1- -2", "a= =b")
    if (last && ((is_symbol_char(last) && is_symbol_char(s[0])) ||
                 ((std::isalnum((unsigned char)last) || last == '_') &&
                  (std::isalnum((unsigned char)s[0]) || s[0] == '_'))))
      out << ' ';
    out << s;
    last = s.back();
  }

  void atom(const std::string& text) {
    if (opts.quoted && atom_needs_quotes(text))
      emit(quote_atom(text));
    else
      emit(text);
  }

  void walk(const TermPtr& t, int max_prec) {
    switch (t->kind) {
      case Term::Kind::Var:
        emit(t->name.empty() || t->name == "_" ? "_G" + std::to_string(t->serial)
                                               : t->name);
        return;
      case Term::Kind::Int:
        emit(std::to_string(t->ival));
        return;
      case Term::Kind::Float:
        emit(format_float(t->fval));
        return;
      case Term::Kind::Atom: {
        // an operator atom written bare may need parens in operator position
        if (!opts.ignore_ops && table.is_operator(t->name) &&
            table.max_priority(t->name) > max_prec) {
          emit("(");
          atom(t->name);
          emit(")");
        } else {
          atom(t->name);
        }
        return;
      }
      case Term::Kind::Compound: break;
    }
    // lists
    if (t->is_cons()) {
      emit("[");
      TermPtr cur = t;
      bool first = true;
      while (cur->is_cons()) {
        if (!first) emit(",");
        walk(cur->args[0], 999);
        first = false;
        cur = cur->args[1];
      }
      if (!cur->is_nil()) {
        emit("|");
        walk(cur, 999);
      }
      emit("]");
      return;
    }
    if (t->is_functor("{}", 1)) {
      emit("{");
      walk(t->args[0], 1200);
      emit("}");
      return;
    }
    if (!opts.ignore_ops && t->args.size() == 2) {
      if (auto in = table.infix(t->name)) {
        int lp = in->type == OpType::YFX ? in->priority : in->priority - 1;
        int rp = in->type == OpType::XFY ? in->priority : in->priority - 1;
        bool paren = in->priority > max_prec;
        if (paren) emit("(");
        walk(t->args[0], lp);
        if (t->name == ",")
          emit(",");
        else
          atom(t->name);
        walk(t->args[1], rp);
        if (paren) emit(")");
        return;
      }
    }
    if (!opts.ignore_ops && t->args.size() == 1) {
      if (auto pre = table.prefix(t->name)) {
        int ap = pre->type == OpType::FY ? pre->priority : pre->priority - 1;
        bool paren = pre->priority > max_prec;
        if (paren) emit("(");
        atom(t->name);
        walk(t->args[0], ap);
        if (paren) emit(")");
        return;
      }
      if (auto post = table.postfix(t->name)) {
        int ap = post->type == OpType::YF ? post->priority : post->priority - 1;
        bool paren = post->priority > max_prec;
        if (paren) emit("(");
        walk(t->args[0], ap);
        atom(t->name);
        if (paren) emit(")");
        return;
      }
    }
    atom(t->name);
    out << "(";
    last = '(';
    for (size_t i = 0; i < t->args.size(); i++) {
      if (i) emit(",");
      walk(t->args[i], 999);
    }
    emit(")");
  }
};

}  // namespace

std::string write_term(const TermPtr& t, const OperatorTable& table,
                       const WriteOptions& opts) {
  Writer w{table, opts, {}, 0};
  w.walk(t, 1200);
  return w.out.str();
}

}  // namespace prolite
