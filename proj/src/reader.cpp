#include "prolite/reader.hpp"

#include <cctype>

namespace prolite {

namespace {

bool is_symbol_char(char c) {
  static const std::string sym = "+-*/\\^<>=~:.?@#&$";
  return sym.find(c) != std::string::npos;
}

bool is_alnum_(char c) { return std::isalnum((unsigned char)c) || c == '_'; }

}  // namespace

struct Reader::Token {
  enum Kind {
    Atom,       // includes quoted atoms and solo chars ! ;
    Var,
    Int,
    Float,
    Str,        // double-quoted: becomes a code list
    LParen,     // '(' not preceded by an atom
    FuncLParen, // '(' glued to a preceding atom
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Bar,
    End,        // clause-terminating '.'
    Eof
  };
  Kind kind = Eof;
  std::string text;
  int64_t ival = 0;
  double fval = 0;
  bool quoted = false;
  int line = 1, col = 1;
};

Reader::Reader(std::string text, const OperatorTable* table)
    : text_(std::move(text)), table_(table) {}

void Reader::fail(const std::string& msg) { throw SyntaxError(line_, col_, msg); }

void Reader::skip_layout() {
  while (pos_ < text_.size()) {
    char c = text_[pos_];
    if (c == '\n') {
      line_++;
      col_ = 1;
      pos_++;
    } else if (std::isspace((unsigned char)c)) {
      col_++;
      pos_++;
    } else if (c == '%') {
      while (pos_ < text_.size() && text_[pos_] != '\n') pos_++;
    } else if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '*') {
      pos_ += 2;
      col_ += 2;
      while (pos_ + 1 < text_.size() &&
             !(text_[pos_] == '*' && text_[pos_ + 1] == '/')) {
        if (text_[pos_] == '\n') {
          line_++;
          col_ = 1;
        } else
          col_++;
        pos_++;
      }
      if (pos_ + 1 >= text_.size()) fail("unterminated block comment");
      pos_ += 2;
      col_ += 2;
    } else {
      break;
    }
  }
}

Reader::Token Reader::lex_number() {
  Token t;
  t.line = line_;
  t.col = col_;
  size_t start = pos_;
  // 0'c character code
  if (text_[pos_] == '0' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '\'') {
    pos_ += 2;
    col_ += 2;
    if (pos_ >= text_.size()) fail("bad character code");
    char c = text_[pos_];
    if (c == '\\') {
      pos_++;
      col_++;
      if (pos_ >= text_.size()) fail("bad escape in character code");
      char e = text_[pos_];
      switch (e) {
        case 'n': c = '\n'; break;
        case 't': c = '\t'; break;
        case 'r': c = '\r'; break;
        case 'a': c = '\a'; break;
        case 'b': c = '\b'; break;
        case 'f': c = '\f'; break;
        case 'v': c = '\v'; break;
        case '\\': c = '\\'; break;
        case '\'': c = '\''; break;
        case '"': c = '"'; break;
        case '0': c = '\0'; break;
        default: fail("bad escape in character code");
      }
    }
    pos_++;
    col_++;
    t.kind = Token::Int;
    t.ival = (unsigned char)c;
    return t;
  }
  if (text_[pos_] == '0' && pos_ + 1 < text_.size() &&
      (text_[pos_ + 1] == 'x' || text_[pos_ + 1] == 'o' || text_[pos_ + 1] == 'b')) {
    int base = text_[pos_ + 1] == 'x' ? 16 : text_[pos_ + 1] == 'o' ? 8 : 2;
    size_t p = pos_ + 2;
    int64_t v = 0;
    bool any = false;
    while (p < text_.size()) {
      int d;
      char c = std::tolower((unsigned char)text_[p]);
      if (c >= '0' && c <= '9')
        d = c - '0';
      else if (c >= 'a' && c <= 'f')
        d = 10 + c - 'a';
      else
        break;
      if (d >= base) break;
      v = v * base + d;
      any = true;
      p++;
    }
    if (any) {
      col_ += (int)(p - pos_);
      pos_ = p;
      t.kind = Token::Int;
      t.ival = v;
      return t;
    }
  }
  while (pos_ < text_.size() && std::isdigit((unsigned char)text_[pos_])) pos_++;
  bool is_float = false;
  if (pos_ + 1 < text_.size() && text_[pos_] == '.' &&
      std::isdigit((unsigned char)text_[pos_ + 1])) {
    is_float = true;
    pos_++;
    while (pos_ < text_.size() && std::isdigit((unsigned char)text_[pos_])) pos_++;
  }
  if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
    size_t p = pos_ + 1;
    if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) p++;
    if (p < text_.size() && std::isdigit((unsigned char)text_[p])) {
      is_float = true;
      pos_ = p;
      while (pos_ < text_.size() && std::isdigit((unsigned char)text_[pos_])) pos_++;
    }
  }
  std::string s = text_.substr(start, pos_ - start);
  col_ += (int)(pos_ - start);
  if (is_float) {
    t.kind = Token::Float;
    t.fval = std::stod(s);
  } else {
    t.kind = Token::Int;
    t.ival = std::stoll(s);
  }
  return t;
}

Reader::Token Reader::lex_quoted(char quote) {
  Token t;
  t.line = line_;
  t.col = col_;
  pos_++;  // opening quote
  col_++;
  std::string out;
  while (true) {
    if (pos_ >= text_.size()) fail("unterminated quoted token");
    char c = text_[pos_];
    if (c == quote) {
      if (pos_ + 1 < text_.size() && text_[pos_ + 1] == quote) {
        out.push_back(quote);
        pos_ += 2;
        col_ += 2;
        continue;
      }
      pos_++;
      col_++;
      break;
    }
    if (c == '\\') {
      pos_++;
      col_++;
      if (pos_ >= text_.size()) fail("unterminated escape");
      char e = text_[pos_];
      switch (e) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case 'r': out.push_back('\r'); break;
        case 'a': out.push_back('\a'); break;
        case 'b': out.push_back('\b'); break;
        case 'f': out.push_back('\f'); break;
        case 'v': out.push_back('\v'); break;
        case '\\': out.push_back('\\'); break;
        case '\'': out.push_back('\''); break;
        case '"': out.push_back('"'); break;
        case '`': out.push_back('`'); break;
        case '\n': line_++; col_ = 0; break;  // line continuation
        case 'x': {
          pos_++;
          col_++;
          int v = 0;
          bool any = false;
          while (pos_ < text_.size() && std::isxdigit((unsigned char)text_[pos_])) {
            char h = std::tolower((unsigned char)text_[pos_]);
            v = v * 16 + (h <= '9' ? h - '0' : 10 + h - 'a');
            any = true;
            pos_++;
            col_++;
          }
          if (!any || pos_ >= text_.size() || text_[pos_] != '\\')
            fail("bad \\x escape");
          out.push_back((char)v);
          break;
        }
        default: fail("unknown escape character");
      }
      pos_++;
      col_++;
      continue;
    }
    if (c == '\n') {
      line_++;
      col_ = 1;
    }
    out.push_back(c);
    pos_++;
    col_++;
  }
  t.quoted = true;
  t.text = out;
  t.kind = quote == '"' ? Token::Str : Token::Atom;
  return t;
}

Reader::Token Reader::next_token() {
  skip_layout();
  Token t;
  t.line = line_;
  t.col = col_;
  if (pos_ >= text_.size()) {
    t.kind = Token::Eof;
    return t;
  }
  char c = text_[pos_];
  if (std::isdigit((unsigned char)c)) return lex_number();
  if (c == '\'' || c == '"') return lex_quoted(c);
  if (c == '_' || std::isupper((unsigned char)c)) {
    size_t start = pos_;
    while (pos_ < text_.size() && is_alnum_(text_[pos_])) pos_++;
    col_ += (int)(pos_ - start);
    t.kind = Token::Var;
    t.text = text_.substr(start, pos_ - start);
    return t;
  }
  if (std::islower((unsigned char)c)) {
    size_t start = pos_;
    while (pos_ < text_.size() && is_alnum_(text_[pos_])) pos_++;
    col_ += (int)(pos_ - start);
    t.kind = Token::Atom;
    t.text = text_.substr(start, pos_ - start);
    if (pos_ < text_.size() && text_[pos_] == '(') {
      // defer: parser checks glued paren via text scan
    }
    return t;
  }
  switch (c) {
    case '(': t.kind = Token::LParen; pos_++; col_++; return t;
    case ')': t.kind = Token::RParen; pos_++; col_++; return t;
    case '[': t.kind = Token::LBracket; pos_++; col_++; return t;
    case ']': t.kind = Token::RBracket; pos_++; col_++; return t;
    case '{': t.kind = Token::LBrace; pos_++; col_++; return t;
    case '}': t.kind = Token::RBrace; pos_++; col_++; return t;
    case ',': t.kind = Token::Comma; t.text = ","; pos_++; col_++; return t;
    case '|': t.kind = Token::Bar; t.text = "|"; pos_++; col_++; return t;
    case '!': t.kind = Token::Atom; t.text = "!"; pos_++; col_++; return t;
    case ';': t.kind = Token::Atom; t.text = ";"; pos_++; col_++; return t;
    default: break;
  }
  if (is_symbol_char(c)) {
    size_t start = pos_;
    while (pos_ < text_.size() && is_symbol_char(text_[pos_])) pos_++;
    std::string s = text_.substr(start, pos_ - start);
    // a lone '.' followed by layout or EOF terminates the clause
    if (s == ".") {
      size_t after = pos_;
      if (after >= text_.size() || std::isspace((unsigned char)text_[after]) ||
          text_[after] == '%') {
        col_++;
        t.kind = Token::End;
        return t;
      }
    }
    col_ += (int)(pos_ - start);
    t.kind = Token::Atom;
    t.text = s;
    return t;
  }
  fail(std::string("unexpected character '") + c + "'");
}

Reader::Token Reader::peek_token() {
  size_t save_pos = pos_;
  int save_line = line_, save_col = col_;
  Token t = next_token();
  pos_ = save_pos;
  line_ = save_line;
  col_ = save_col;
  return t;
}

bool Reader::at_end() {
  skip_layout();
  return pos_ >= text_.size();
}

bool Reader::token_starts_term(const Token& t) {
  switch (t.kind) {
    case Token::Int:
    case Token::Float:
    case Token::Var:
    case Token::Str:
    case Token::LParen:
    case Token::LBracket:
    case Token::LBrace:
      return true;
    case Token::Atom: {
      // an atom that can only act as an infix/postfix operator does not
      // start a term
      if (!t.quoted && table_->is_operator(t.text) && !table_->prefix(t.text) &&
          (table_->infix(t.text) || table_->postfix(t.text)))
        return false;
      return true;
    }
    default: return false;
  }
}

std::vector<TermPtr> Reader::parse_arglist() {
  std::vector<TermPtr> args;
  while (true) {
    int p;
    args.push_back(parse(999, p));
    Token t = next_token();
    if (t.kind == Token::RParen) break;
    if (t.kind != Token::Comma) fail("expected ',' or ')' in argument list");
  }
  return args;
}

TermPtr Reader::parse_list() {
  Token t = peek_token();
  if (t.kind == Token::RBracket) {
    next_token();
    return Term::atom("[]");
  }
  std::vector<TermPtr> items;
  TermPtr tail = nullptr;
  while (true) {
    int p;
    items.push_back(parse(999, p));
    Token s = next_token();
    if (s.kind == Token::Comma) continue;
    if (s.kind == Token::Bar) {
      int q;
      tail = parse(999, q);
      s = next_token();
      if (s.kind != Token::RBracket) fail("expected ']' after list tail");
      break;
    }
    if (s.kind == Token::RBracket) break;
    fail("expected ',', '|' or ']' in list");
  }
  return mk_list(items, tail);
}

TermPtr Reader::parse_primary(int max_prec, int& prec_out) {
  Token t = next_token();
  prec_out = 0;
  switch (t.kind) {
    case Token::Int: return Term::integer(t.ival);
    case Token::Float: return Term::floating(t.fval);
    case Token::Var: {
      if (t.text == "_") return Term::var("_");
      auto it = vars_.find(t.text);
      if (it != vars_.end()) return it->second;
      auto v = Term::var(t.text);
      vars_[t.text] = v;
      return v;
    }
    case Token::Str: {
      std::vector<TermPtr> codes;
      for (unsigned char c : t.text) codes.push_back(Term::integer(c));
      return mk_list(codes);
    }
    case Token::LParen: {
      int p;
      TermPtr inner = parse(1200, p);
      Token r = next_token();
      if (r.kind != Token::RParen) fail("expected ')'");
      return inner;
    }
    case Token::LBracket: return parse_list();
    case Token::LBrace: {
      Token r = peek_token();
      if (r.kind == Token::RBrace) {
        next_token();
        return Term::atom("{}");
      }
      int p;
      TermPtr inner = parse(1200, p);
      r = next_token();
      if (r.kind != Token::RBrace) fail("expected '}'");
      return Term::compound("{}", {inner});
    }
    case Token::Atom: {
      bool glued_paren = pos_ < text_.size() && text_[pos_] == '(';
      if (glued_paren && !t.quoted && t.text == "-") glued_paren = true;
      if (glued_paren) {
        next_token();  // consume '('
        auto args = parse_arglist();
        return Term::compound(t.text, std::move(args));
      }
      // negative numeric literal
      if (!t.quoted && (t.text == "-" || t.text == "+")) {
        Token nxt = peek_token();
        if ((nxt.kind == Token::Int || nxt.kind == Token::Float) &&
            nxt.line == t.line && nxt.col == t.col + 1) {
          next_token();
          int sign = t.text == "-" ? -1 : 1;
          if (nxt.kind == Token::Int) return Term::integer(sign * nxt.ival);
          return Term::floating(sign * nxt.fval);
        }
      }
      // prefix operator
      if (!t.quoted) {
        auto pre = table_->prefix(t.text);
        if (pre && pre->priority <= max_prec) {
          Token nxt = peek_token();
          if (token_starts_term(nxt)) {
            int sub = pre->type == OpType::FY ? pre->priority : pre->priority - 1;
            int p;
            TermPtr arg = parse(sub, p);
            prec_out = pre->priority;
            return Term::compound(t.text, {arg});
          }
        }
      }
      // plain atom (possibly an operator name used as an atom)
      if (!t.quoted && table_->is_operator(t.text))
        prec_out = table_->max_priority(t.text);
      return Term::atom(t.text);
    }
    case Token::End: fail("unexpected end of clause");
    case Token::Eof: fail("unterminated term");
    default: fail("unexpected token");
  }
  return nullptr;
}

TermPtr Reader::parse(int max_prec, int& prec_out) {
  int left_prec;
  TermPtr left = parse_primary(max_prec, left_prec);
  while (true) {
    Token t = peek_token();
    std::string opname;
    if (t.kind == Token::Comma)
      opname = ",";
    else if (t.kind == Token::Atom && !t.quoted)
      opname = t.text;
    else if (t.kind == Token::Bar)
      opname = ";";  // traditional: '|' as disjunction at 1100
    else
      break;
    auto in = t.kind == Token::Bar ? OpDef{1100, OpType::XFY}
                                   : (table_->infix(opname)
                                          ? *table_->infix(opname)
                                          : OpDef{0, OpType::XFX});
    bool have_infix = t.kind == Token::Bar || table_->infix(opname).has_value();
    auto post = table_->postfix(opname);
    if (have_infix && in.priority <= max_prec) {
      int left_max = in.type == OpType::YFX ? in.priority : in.priority - 1;
      int right_max = in.type == OpType::XFY ? in.priority : in.priority - 1;
      if (left_prec <= left_max) {
        Token nxt = next_token();
        (void)nxt;
        int rp;
        TermPtr right = parse(right_max, rp);
        left = Term::compound(opname == "|" ? ";" : opname, {left, right});
        left_prec = in.priority;
        continue;
      }
    }
    if (post && post->priority <= max_prec) {
      int left_max = post->type == OpType::YF ? post->priority : post->priority - 1;
      if (left_prec <= left_max) {
        next_token();
        left = Term::compound(opname, {left});
        left_prec = post->priority;
        continue;
      }
    }
    break;
  }
  prec_out = left_prec;
  return left;
}

std::optional<ReadResult> Reader::read() {
  vars_.clear();
  skip_layout();
  if (pos_ >= text_.size()) return std::nullopt;
  term_start_line_ = line_;
  int p;
  TermPtr t = parse(1200, p);
  Token e = next_token();
  if (e.kind != Token::End) {
    if (e.kind == Token::Eof) fail("unterminated term (missing '.')");
    fail("operator expected before '" + e.text + "'");
  }
  ReadResult r;
  r.term = t;
  r.line = term_start_line_;
  for (auto& [name, v] : vars_) r.variables[name] = v;
  return r;
}

std::vector<ReadResult> read_all(const std::string& text, const OperatorTable& table) {
  Reader r(text, &table);
  std::vector<ReadResult> out;
  while (auto t = r.read()) out.push_back(*t);
  return out;
}

TermPtr parse_term(const std::string& text, const OperatorTable& table) {
  Reader r(text, &table);
  auto t = r.read();
  if (!t) throw SyntaxError(1, 1, "empty input");
  return t->term;
}

}  // namespace prolite
