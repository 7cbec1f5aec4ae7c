#include "prolite/ma.hpp"

#include <cctype>
#include <cstdio>
#include <sstream>

#include "prolite/writer.hpp"

namespace prolite {

namespace {

const char* op_mnemonic(MaInstr::Op op) {
  switch (op) {
    case MaInstr::Op::PlJump: return "pl_jump";
    case MaInstr::Op::PlCall: return "pl_call";
    case MaInstr::Op::PlRet: return "pl_ret";
    case MaInstr::Op::PlFail: return "pl_fail";
    case MaInstr::Op::Jump: return "jump";
    case MaInstr::Op::CallC: return "call_c";
    case MaInstr::Op::FailRet: return "fail_ret";
    case MaInstr::Op::JumpRet: return "jump_ret";
    case MaInstr::Op::MoveRet: return "move_ret";
    case MaInstr::Op::CRet: return "c_ret";
    case MaInstr::Op::Move: return "move";
    case MaInstr::Op::Label: return "";
  }
  return "";
}

std::string quote_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  out += "\"";
  return out;
}

std::string arg_to_string(const MaArg& a) {
  switch (a.kind) {
    case MaArg::Kind::Int: return std::to_string(a.i);
    case MaArg::Kind::Flt: return format_float(a.f);
    case MaArg::Kind::Str: return quote_string(a.s);
    case MaArg::Kind::Addr: return "&" + a.s;
    case MaArg::Kind::MemVal:
      return a.indexed ? a.s + "(" + std::to_string(a.i) + ")" : a.s;
    case MaArg::Kind::XReg: return "X(" + std::to_string(a.i) + ")";
    case MaArg::Kind::YReg: return "Y(" + std::to_string(a.i) + ")";
    case MaArg::Kind::XRegAddr: return "&X(" + std::to_string(a.i) + ")";
    case MaArg::Kind::YRegAddr: return "&Y(" + std::to_string(a.i) + ")";
  }
  return "?";
}

}  // namespace

std::string emit_ma(const MaObject& o) {
  std::ostringstream out;
  bool first = true;
  auto pad = [](const std::string& m) {
    std::string s = m;
    while (s.size() < 9) s.push_back(' ');
    return s;
  };
  // data declarations go just before the initializer block
  size_t data_before = o.blocks.size();
  for (size_t k = 0; k < o.blocks.size(); k++)
    if (!o.blocks[k].pl_code && o.blocks[k].vis == MaBlock::Vis::Initializer) {
      data_before = k;
      break;
    }
  auto emit_data = [&]() {
    if (o.data.empty()) return;
    if (!first) out << "\n";
    first = false;
    for (auto& d : o.data) {
      out << "long " << (d.global ? "global" : "local") << " " << d.name;
      if (d.is_array) out << "(" << d.size << ")";
      if (d.init) out << " = " << *d.init;
      out << "\n";
    }
  };
  for (size_t bi = 0; bi < o.blocks.size(); bi++) {
    if (bi == data_before) emit_data();
    auto& b = o.blocks[bi];
    if (!first) out << "\n";
    first = false;
    if (b.pl_code) {
      out << "pl_code " << (b.vis == MaBlock::Vis::Global ? "global" : "local")
          << " " << b.symbol << "\n";
    } else {
      const char* vis = b.vis == MaBlock::Vis::Global      ? "global"
                        : b.vis == MaBlock::Vis::Initializer ? "initializer"
                                                             : "local";
      out << "c_code " << vis << " " << b.symbol << "\n";
    }
    for (auto& i : b.code) {
      if (i.op == MaInstr::Op::Label) {
        out << i.sym << ":\n";
        continue;
      }
      out << "  ";
      switch (i.op) {
        case MaInstr::Op::PlJump:
        case MaInstr::Op::PlCall:
        case MaInstr::Op::Jump:
          out << pad(op_mnemonic(i.op)) << i.sym;
          break;
        case MaInstr::Op::CallC: {
          out << pad("call_c") << i.sym << "(";
          for (size_t k = 0; k < i.args.size(); k++) {
            if (k) out << ",";
            out << arg_to_string(i.args[k]);
          }
          out << ")";
          break;
        }
        case MaInstr::Op::MoveRet:
          out << pad("move_ret") << arg_to_string(i.args[0]);
          break;
        case MaInstr::Op::Move:
          out << pad("move") << arg_to_string(i.args[0]) << ","
              << arg_to_string(i.args[1]);
          break;
        default:
          out << op_mnemonic(i.op);
          break;
      }
      out << "\n";
    }
  }
  if (data_before == o.blocks.size()) emit_data();
  return out.str();
}

namespace {

struct ArgParser {
  const std::string& s;
  size_t p = 0;
  int line;

  void skip_ws() {
    while (p < s.size() && (s[p] == ' ' || s[p] == '\t')) p++;
  }

  [[noreturn]] void fail(const std::string& m) { throw MaParseError(line, m); }

  std::string name() {
    size_t start = p;
    while (p < s.size() && (std::isalnum((unsigned char)s[p]) || s[p] == '_')) p++;
    if (p == start) fail("identifier expected");
    return s.substr(start, p - start);
  }

  MaArg arg() {
    skip_ws();
    if (p >= s.size()) fail("argument expected");
    char c = s[p];
    if (c == '&') {
      p++;
      std::string n = name();
      if (p < s.size() && s[p] == '(') {
        p++;
        int64_t idx = integer();
        if (p >= s.size() || s[p] != ')') fail("')' expected");
        p++;
        if (n == "X") return MaArg::xaddr(idx);
        if (n == "Y") return MaArg::yaddr(idx);
        fail("only register addresses may be indexed");
      }
      return MaArg::addr(n);
    }
    if (c == '"') {
      p++;
      std::string out;
      while (p < s.size() && s[p] != '"') {
        if (s[p] == '\\' && p + 1 < s.size()) {
          p++;
          switch (s[p]) {
            case 'n': out.push_back('\n'); break;
            case 't': out.push_back('\t'); break;
            case 'r': out.push_back('\r'); break;
            case '\\': out.push_back('\\'); break;
            case '"': out.push_back('"'); break;
            default: out.push_back(s[p]);
          }
          p++;
        } else {
          out.push_back(s[p++]);
        }
      }
      if (p >= s.size()) fail("unterminated string");
      p++;
      return MaArg::str(out);
    }
    if (c == '-' || std::isdigit((unsigned char)c)) {
      size_t start = p;
      if (c == '-') p++;
      while (p < s.size() && std::isdigit((unsigned char)s[p])) p++;
      bool isf = false;
      if (p < s.size() && s[p] == '.' && p + 1 < s.size() &&
          std::isdigit((unsigned char)s[p + 1])) {
        isf = true;
        p++;
        while (p < s.size() && std::isdigit((unsigned char)s[p])) p++;
      }
      if (p < s.size() && (s[p] == 'e' || s[p] == 'E')) {
        isf = true;
        p++;
        if (p < s.size() && (s[p] == '+' || s[p] == '-')) p++;
        while (p < s.size() && std::isdigit((unsigned char)s[p])) p++;
      }
      std::string num = s.substr(start, p - start);
      if (isf) return MaArg::flt(std::stod(num));
      return MaArg::integer(std::stoll(num));
    }
    std::string n = name();
    if (p < s.size() && s[p] == '(') {
      p++;
      int64_t idx = integer();
      if (p >= s.size() || s[p] != ')') fail("')' expected");
      p++;
      if (n == "X") return MaArg::x(idx);
      if (n == "Y") return MaArg::y(idx);
      return MaArg::mem(n, idx);
    }
    return MaArg::mem(n);
  }

  int64_t integer() {
    skip_ws();
    size_t start = p;
    if (p < s.size() && s[p] == '-') p++;
    while (p < s.size() && std::isdigit((unsigned char)s[p])) p++;
    if (p == start) fail("integer expected");
    return std::stoll(s.substr(start, p - start));
  }
};

std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (size_t i = 0; i < line.size(); i++) {
    char c = line[i];
    if (c == '"' && (i == 0 || line[i - 1] != '\\')) in_str = !in_str;
    if (c == ';' && !in_str) return line.substr(0, i);
  }
  return line;
}

std::vector<std::string> split_fields(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

}  // namespace

MaObject parse_ma(const std::string& text, const std::string& name) {
  MaObject o;
  o.name = name;
  MaBlock* cur = nullptr;
  bool have_initializer = false;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    lineno++;
    std::string line = strip_comment(raw);
    // trim
    size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    size_t e = line.find_last_not_of(" \t\r");
    std::string body = line.substr(b, e - b + 1);
    if (body.empty()) continue;

    if (body.rfind("pl_code", 0) == 0 || body.rfind("c_code", 0) == 0) {
      auto f = split_fields(body);
      if (f.size() != 3) throw MaParseError(lineno, "bad code declaration");
      MaBlock blk;
      blk.pl_code = f[0] == "pl_code";
      if (f[1] == "global")
        blk.vis = MaBlock::Vis::Global;
      else if (f[1] == "local")
        blk.vis = MaBlock::Vis::Local;
      else if (f[1] == "initializer" && !blk.pl_code)
        blk.vis = MaBlock::Vis::Initializer;
      else
        throw MaParseError(lineno, "bad visibility: " + f[1]);
      if (blk.vis == MaBlock::Vis::Initializer) {
        if (have_initializer)
          throw MaParseError(lineno, "duplicate initializer function");
        have_initializer = true;
      }
      blk.symbol = f[2];
      o.blocks.push_back(std::move(blk));
      cur = &o.blocks.back();
      continue;
    }
    if (body.rfind("long ", 0) == 0) {
      // long local|global name | name(size) | name = init
      ArgParser ap{body, 4, lineno};
      ap.skip_ws();
      std::string vis = ap.name();
      MaData d;
      if (vis == "global")
        d.global = true;
      else if (vis != "local")
        throw MaParseError(lineno, "bad data visibility");
      ap.skip_ws();
      d.name = ap.name();
      ap.skip_ws();
      if (ap.p < body.size() && body[ap.p] == '(') {
        ap.p++;
        d.is_array = true;
        d.size = ap.integer();
        ap.skip_ws();
        if (ap.p >= body.size() || body[ap.p] != ')')
          throw MaParseError(lineno, "')' expected");
        ap.p++;
      }
      ap.skip_ws();
      if (ap.p < body.size() && body[ap.p] == '=') {
        ap.p++;
        d.init = ap.integer();
      }
      o.data.push_back(d);
      continue;
    }
    // label?
    if (body.back() == ':') {
      std::string lbl = body.substr(0, body.size() - 1);
      if (!cur) throw MaParseError(lineno, "label outside code block");
      cur->code.push_back(MaInstr{MaInstr::Op::Label, lbl, {}});
      continue;
    }
    if (!cur) throw MaParseError(lineno, "instruction outside code block");
    // instruction
    size_t sp = body.find_first_of(" \t");
    std::string mn = sp == std::string::npos ? body : body.substr(0, sp);
    std::string rest = sp == std::string::npos ? "" : body.substr(sp + 1);
    MaInstr ins;
    if (mn == "pl_jump" || mn == "pl_call" || mn == "jump") {
      ins.op = mn == "pl_jump"  ? MaInstr::Op::PlJump
               : mn == "pl_call" ? MaInstr::Op::PlCall
                                 : MaInstr::Op::Jump;
      auto f = split_fields(rest);
      if (f.size() != 1) throw MaParseError(lineno, "one operand expected");
      ins.sym = f[0];
    } else if (mn == "pl_ret") {
      ins.op = MaInstr::Op::PlRet;
    } else if (mn == "pl_fail") {
      ins.op = MaInstr::Op::PlFail;
    } else if (mn == "fail_ret") {
      ins.op = MaInstr::Op::FailRet;
    } else if (mn == "jump_ret") {
      ins.op = MaInstr::Op::JumpRet;
    } else if (mn == "c_ret") {
      ins.op = MaInstr::Op::CRet;
    } else if (mn == "move_ret") {
      ins.op = MaInstr::Op::MoveRet;
      ArgParser ap{rest, 0, lineno};
      ins.args.push_back(ap.arg());
    } else if (mn == "move") {
      ins.op = MaInstr::Op::Move;
      ArgParser ap{rest, 0, lineno};
      ins.args.push_back(ap.arg());
      ap.skip_ws();
      if (ap.p >= rest.size() || rest[ap.p] != ',')
        throw MaParseError(lineno, "',' expected in move");
      ap.p++;
      ins.args.push_back(ap.arg());
    } else if (mn == "call_c") {
      ins.op = MaInstr::Op::CallC;
      ArgParser ap{rest, 0, lineno};
      ap.skip_ws();
      ins.sym = ap.name();
      ap.skip_ws();
      if (ap.p >= rest.size() || rest[ap.p] != '(')
        throw MaParseError(lineno, "'(' expected after function name");
      ap.p++;
      ap.skip_ws();
      if (ap.p < rest.size() && rest[ap.p] == ')') {
        ap.p++;
      } else {
        while (true) {
          ins.args.push_back(ap.arg());
          ap.skip_ws();
          if (ap.p < rest.size() && rest[ap.p] == ',') {
            ap.p++;
            continue;
          }
          if (ap.p < rest.size() && rest[ap.p] == ')') {
            ap.p++;
            break;
          }
          throw MaParseError(lineno, "',' or ')' expected in call_c");
        }
      }
    } else {
      throw MaParseError(lineno, "unknown instruction: " + mn);
    }
    cur->code.push_back(std::move(ins));
  }
  return o;
}

std::string encode_symbol(const std::string& name, int arity) {
  std::string out = "X";
  static const char* hex = "0123456789ABCDEF";
  for (unsigned char c : name) {
    out.push_back(hex[c >> 4]);
    out.push_back(hex[c & 15]);
  }
  out += "_" + std::to_string(arity);
  return out;
}

std::optional<std::pair<std::string, int>> decode_symbol(const std::string& sym) {
  if (sym.size() < 4 || sym[0] != 'X') return std::nullopt;
  size_t us = sym.rfind('_');
  if (us == std::string::npos || us <= 1 || us + 1 >= sym.size()) return std::nullopt;
  std::string hexpart = sym.substr(1, us - 1);
  if (hexpart.size() % 2 != 0) return std::nullopt;
  std::string name;
  for (size_t i = 0; i < hexpart.size(); i += 2) {
    auto hv = [](char c) -> int {
      if (c >= '0' && c <= '9') return c - '0';
      if (c >= 'A' && c <= 'F') return 10 + c - 'A';
      return -1;
    };
    int hi = hv(hexpart[i]), lo = hv(hexpart[i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    name.push_back((char)(hi * 16 + lo));
  }
  for (size_t i = us + 1; i < sym.size(); i++)
    if (!std::isdigit((unsigned char)sym[i])) return std::nullopt;
  int arity = std::stoi(sym.substr(us + 1));
  return std::make_pair(name, arity);
}

std::string describe_symbol(const std::string& sym) {
  if (auto d = decode_symbol(sym))
    return d->first + "/" + std::to_string(d->second);
  return sym;
}

}  // namespace prolite
