#include "prolite/fd_lang.hpp"

#include <cctype>
#include <set>

namespace prolite::fd {

SExpr ScalarExpr::lit(int64_t v) {
  auto e = std::make_shared<ScalarExpr>();
  e->k = K::Int;
  e->ival = v;
  return e;
}

SExpr ScalarExpr::mk(K k, SExpr a, SExpr b) {
  auto e = std::make_shared<ScalarExpr>();
  e->k = k;
  e->a = std::move(a);
  e->b = std::move(b);
  return e;
}

SExpr ScalarExpr::of_param(K k, int p) {
  auto e = std::make_shared<ScalarExpr>();
  e->k = k;
  e->param = p;
  return e;
}

// ---------------------------------------------------------------------------
// Lexer / parser
// ---------------------------------------------------------------------------

namespace {

struct Tok {
  enum class K {
    Id,
    Int,
    LPar,
    RPar,
    LBrace,
    RBrace,
    Comma,
    DotDot,
    Tilde,
    Plus,
    Minus,
    Star,
    DivUp,
    DivDown,
    EqEq,
    Ne,
    Gt,
    Lt,
    Ge,
    Le,
    OrOr,
    AndAnd,
    Eof
  };
  K k = K::Eof;
  std::string text;
  int64_t ival = 0;
  int line = 1;
};

struct Lexer {
  const std::string& s;
  size_t p = 0;
  int line = 1;

  Tok next() {
    while (p < s.size()) {
      char c = s[p];
      if (c == '\n') {
        line++;
        p++;
      } else if (std::isspace((unsigned char)c)) {
        p++;
      } else if (c == '/' && p + 1 < s.size() && s[p + 1] == '*') {
        p += 2;
        while (p + 1 < s.size() && !(s[p] == '*' && s[p + 1] == '/')) {
          if (s[p] == '\n') line++;
          p++;
        }
        if (p + 1 >= s.size()) throw FdLangError(line, "unterminated comment");
        p += 2;
      } else if (c == '/' && p + 1 < s.size() && s[p + 1] == '/') {
        while (p < s.size() && s[p] != '\n') p++;
      } else {
        break;
      }
    }
    Tok t;
    t.line = line;
    if (p >= s.size()) return t;
    char c = s[p];
    if (std::isdigit((unsigned char)c)) {
      size_t start = p;
      while (p < s.size() && std::isdigit((unsigned char)s[p])) p++;
      t.k = Tok::K::Int;
      t.ival = std::stoll(s.substr(start, p - start));
      return t;
    }
    if (std::isalpha((unsigned char)c) || c == '_') {
      size_t start = p;
      while (p < s.size() && (std::isalnum((unsigned char)s[p]) || s[p] == '_')) p++;
      t.k = Tok::K::Id;
      t.text = s.substr(start, p - start);
      return t;
    }
    auto two = [&](char a, char b) {
      return c == a && p + 1 < s.size() && s[p + 1] == b;
    };
    if (two('.', '.')) { p += 2; t.k = Tok::K::DotDot; return t; }
    if (two('/', '>')) { p += 2; t.k = Tok::K::DivUp; return t; }
    if (two('/', '<')) { p += 2; t.k = Tok::K::DivDown; return t; }
    if (two('=', '=')) { p += 2; t.k = Tok::K::EqEq; return t; }
    if (two('!', '=')) { p += 2; t.k = Tok::K::Ne; return t; }
    if (two('>', '=')) { p += 2; t.k = Tok::K::Ge; return t; }
    if (two('<', '=')) { p += 2; t.k = Tok::K::Le; return t; }
    if (two('|', '|')) { p += 2; t.k = Tok::K::OrOr; return t; }
    if (two('&', '&')) { p += 2; t.k = Tok::K::AndAnd; return t; }
    p++;
    switch (c) {
      case '(': t.k = Tok::K::LPar; return t;
      case ')': t.k = Tok::K::RPar; return t;
      case '{': t.k = Tok::K::LBrace; return t;
      case '}': t.k = Tok::K::RBrace; return t;
      case ',': t.k = Tok::K::Comma; return t;
      case '~': t.k = Tok::K::Tilde; return t;
      case '+': t.k = Tok::K::Plus; return t;
      case '-': t.k = Tok::K::Minus; return t;
      case '*': t.k = Tok::K::Star; return t;
      case '>': t.k = Tok::K::Gt; return t;
      case '<': t.k = Tok::K::Lt; return t;
    }
    throw FdLangError(line, std::string("unexpected character '") + c + "'");
  }
};

struct Parser {
  Lexer lx;
  Tok cur;
  ConstraintDef* def = nullptr;

  explicit Parser(const std::string& s) : lx{s} { cur = lx.next(); }

  void advance() { cur = lx.next(); }
  bool at(Tok::K k) const { return cur.k == k; }
  void expect(Tok::K k, const char* what) {
    if (cur.k != k) throw FdLangError(cur.line, std::string("expected ") + what);
    advance();
  }
  std::string ident(const char* what) {
    if (cur.k != Tok::K::Id)
      throw FdLangError(cur.line, std::string("expected ") + what);
    std::string s = cur.text;
    advance();
    return s;
  }

  int param_of(const std::string& n) {
    int p = def->param_index(n);
    if (p < 0) throw FdLangError(cur.line, "unknown identifier: " + n);
    return p;
  }

  int fdv_param(const char* ctx) {
    std::string n = ident("variable");
    int p = param_of(n);
    if (def->params[p].type != FdParam::Type::Fdv)
      throw FdLangError(cur.line,
                        std::string(ctx) + " expects an fdv parameter: " + n);
    return p;
  }

  SExpr scalar_factor() {
    if (at(Tok::K::Int)) {
      int64_t v = cur.ival;
      advance();
      return ScalarExpr::lit(v);
    }
    if (at(Tok::K::Minus)) {
      advance();
      auto f = scalar_factor();
      return ScalarExpr::mk(ScalarExpr::K::Sub, ScalarExpr::lit(0), f);
    }
    if (at(Tok::K::LPar)) {
      advance();
      auto e = scalar();
      expect(Tok::K::RPar, "')'");
      return e;
    }
    if (at(Tok::K::Id)) {
      std::string n = cur.text;
      if (n == "max_integer") {
        advance();
        return ScalarExpr::mk(ScalarExpr::K::MaxInt, nullptr);
      }
      if (n == "min" || n == "max" || n == "val") {
        advance();
        expect(Tok::K::LPar, "'('");
        int p = fdv_param(n.c_str());
        expect(Tok::K::RPar, "')'");
        auto k = n == "min"   ? ScalarExpr::K::Min
                 : n == "max" ? ScalarExpr::K::Max
                              : ScalarExpr::K::Val;
        return ScalarExpr::of_param(k, p);
      }
      if (n == "Min" || n == "Max") {
        advance();
        expect(Tok::K::LPar, "'('");
        auto a = scalar();
        expect(Tok::K::Comma, "','");
        auto b = scalar();
        expect(Tok::K::RPar, "')'");
        return ScalarExpr::mk(
            n == "Min" ? ScalarExpr::K::FMin : ScalarExpr::K::FMax, a, b);
      }
      advance();
      int p = param_of(n);
      if (def->params[p].type != FdParam::Type::Int)
        throw FdLangError(cur.line, "fdv used where int required: " + n);
      return ScalarExpr::of_param(ScalarExpr::K::Param, p);
    }
    throw FdLangError(cur.line, "expression expected");
  }

  SExpr scalar_term() {
    auto e = scalar_factor();
    while (at(Tok::K::Star) || at(Tok::K::DivUp) || at(Tok::K::DivDown)) {
      auto k = at(Tok::K::Star)    ? ScalarExpr::K::Mul
               : at(Tok::K::DivUp) ? ScalarExpr::K::DivUp
                                   : ScalarExpr::K::DivDown;
      advance();
      e = ScalarExpr::mk(k, e, scalar_factor());
    }
    return e;
  }

  SExpr scalar() {
    auto e = scalar_term();
    while (at(Tok::K::Plus) || at(Tok::K::Minus)) {
      auto k = at(Tok::K::Plus) ? ScalarExpr::K::Add : ScalarExpr::K::Sub;
      advance();
      e = ScalarExpr::mk(k, e, scalar_term());
    }
    return e;
  }

  RangeSpec range() {
    RangeSpec r;
    if (at(Tok::K::Tilde)) {
      advance();
      expect(Tok::K::LBrace, "'{'");
      r.k = RangeSpec::K::Complement;
      r.e = scalar();
      expect(Tok::K::RBrace, "'}'");
      return r;
    }
    if (at(Tok::K::LBrace)) {
      advance();
      r.k = RangeSpec::K::Singleton;
      r.e = scalar();
      expect(Tok::K::RBrace, "'}'");
      return r;
    }
    if (at(Tok::K::Id)) {
      std::string n = cur.text;
      if (n == "dom") {
        advance();
        expect(Tok::K::LPar, "'('");
        r.k = RangeSpec::K::Dom;
        r.param = fdv_param("dom");
        expect(Tok::K::RPar, "')'");
        return r;
      }
      // external range function: an identifier that is not a parameter or a
      // scalar builtin, applied to arguments
      if (def->param_index(n) < 0 && n != "min" && n != "max" && n != "val" &&
          n != "Min" && n != "Max" && n != "max_integer") {
        advance();
        expect(Tok::K::LPar, "'('");
        r.k = RangeSpec::K::FnCall;
        r.fname = n;
        if (!at(Tok::K::RPar)) {
          while (true) {
            RangeArg a;
            if (at(Tok::K::Id) && cur.text == "dom") {
              advance();
              expect(Tok::K::LPar, "'('");
              a.is_dom = true;
              a.param = fdv_param("dom");
              expect(Tok::K::RPar, "')'");
            } else {
              std::string an = ident("argument");
              a.param = param_of(an);
            }
            r.args.push_back(a);
            if (at(Tok::K::Comma)) {
              advance();
              continue;
            }
            break;
          }
        }
        expect(Tok::K::RPar, "')'");
        return r;
      }
    }
    r.k = RangeSpec::K::Interval;
    r.lo = scalar();
    expect(Tok::K::DotDot, "'..'");
    r.hi = scalar();
    return r;
  }

  CExpr cond_prim() {
    if (at(Tok::K::LPar)) {
      advance();
      auto c = cond();
      expect(Tok::K::RPar, "')'");
      return c;
    }
    auto x = scalar();
    CondExpr::K k;
    switch (cur.k) {
      case Tok::K::EqEq: k = CondExpr::K::Eq; break;
      case Tok::K::Ne: k = CondExpr::K::Ne; break;
      case Tok::K::Gt: k = CondExpr::K::Gt; break;
      case Tok::K::Lt: k = CondExpr::K::Lt; break;
      case Tok::K::Ge: k = CondExpr::K::Ge; break;
      case Tok::K::Le: k = CondExpr::K::Le; break;
      default: throw FdLangError(cur.line, "comparison expected");
    }
    advance();
    auto y = scalar();
    auto c = std::make_shared<CondExpr>();
    c->k = k;
    c->x = x;
    c->y = y;
    return c;
  }

  CExpr cond_and() {
    auto c = cond_prim();
    while (at(Tok::K::AndAnd)) {
      advance();
      auto r = std::make_shared<CondExpr>();
      r->k = CondExpr::K::And;
      r->a = c;
      r->b = cond_prim();
      c = r;
    }
    return c;
  }

  CExpr cond() {
    auto c = cond_and();
    while (at(Tok::K::OrOr)) {
      advance();
      auto r = std::make_shared<CondExpr>();
      r->k = CondExpr::K::Or;
      r->a = c;
      r->b = cond_and();
      c = r;
    }
    return c;
  }

  FdPrimitive primitive() {
    FdPrimitive p;
    if (at(Tok::K::LPar)) {
      advance();
      p.cname = ident("primitive name");
      expect(Tok::K::RPar, "')'");
    }
    std::string target = ident("target variable");
    int tp = param_of(target);
    if (def->params[tp].type != FdParam::Type::Fdv)
      throw FdLangError(cur.line, "target of a primitive must be an fdv: " + target);
    p.target_param = tp;
    std::string in = ident("'in'");
    if (in != "in") throw FdLangError(cur.line, "'in' expected");
    p.range = range();
    return p;
  }

  ConstraintDef parse_def() {
    ConstraintDef d;
    def = &d;
    d.name = ident("constraint name");
    expect(Tok::K::LPar, "'('");
    if (!at(Tok::K::RPar)) {
      while (true) {
        std::string ty = ident("parameter type");
        FdParam prm;
        if (ty == "fdv")
          prm.type = FdParam::Type::Fdv;
        else if (ty == "int")
          prm.type = FdParam::Type::Int;
        else if (ty == "l_int")
          prm.type = FdParam::Type::LInt;
        else if (ty == "l_fdv")
          prm.type = FdParam::Type::LFdv;
        else
          throw FdLangError(cur.line, "unknown parameter type: " + ty);
        prm.name = ident("parameter name");
        for (auto& q : d.params)
          if (q.name == prm.name)
            throw FdLangError(cur.line, "duplicate parameter: " + prm.name);
        d.params.push_back(prm);
        if (at(Tok::K::Comma)) {
          advance();
          continue;
        }
        break;
      }
    }
    expect(Tok::K::RPar, "')'");
    expect(Tok::K::LBrace, "'{'");
    std::set<std::string> declared;
    while (!at(Tok::K::RBrace)) {
      std::string kw = ident("'start' or 'wait_switch'");
      if (kw == "start") {
        FdBodyItem item;
        item.is_switch = false;
        item.prim = primitive();
        if (!item.prim.cname.empty()) declared.insert(item.prim.cname);
        d.items.push_back(std::move(item));
      } else if (kw == "wait_switch") {
        FdBodyItem item;
        item.is_switch = true;
        while (at(Tok::K::Id) && cur.text == "case") {
          advance();
          FdCase cs;
          cs.cond = cond();
          while (at(Tok::K::Id) && (cur.text == "stop" || cur.text == "start")) {
            std::string akw = cur.text;
            advance();
            FdAction a;
            if (akw == "stop") {
              a.is_stop = true;
              a.stop_name = ident("primitive name");
              if (!declared.count(a.stop_name))
                throw FdLangError(cur.line,
                                  "stop of undeclared primitive: " + a.stop_name);
            } else {
              a.start = primitive();
            }
            cs.actions.push_back(std::move(a));
          }
          if (cs.actions.empty())
            throw FdLangError(cur.line, "case without actions");
          item.cases.push_back(std::move(cs));
        }
        if (item.cases.empty())
          throw FdLangError(cur.line, "wait_switch without cases");
        d.items.push_back(std::move(item));
      } else {
        throw FdLangError(cur.line, "'start' or 'wait_switch' expected, got " + kw);
      }
    }
    expect(Tok::K::RBrace, "'}'");
    def = nullptr;
    return d;
  }
};

}  // namespace

std::vector<ConstraintDef> parse_fd(const std::string& text) {
  Parser p(text);
  std::vector<ConstraintDef> defs;
  while (!p.at(Tok::K::Eof)) defs.push_back(p.parse_def());
  return defs;
}

// ---------------------------------------------------------------------------
// Compilation
// ---------------------------------------------------------------------------

namespace {

void scalar_triggers(const SExpr& e, std::set<Trigger>& trig,
                     std::set<int>& vals) {
  if (!e) return;
  switch (e->k) {
    case ScalarExpr::K::Min: trig.insert({e->param, TrigKind::Min}); break;
    case ScalarExpr::K::Max: trig.insert({e->param, TrigKind::Max}); break;
    case ScalarExpr::K::Val:
      trig.insert({e->param, TrigKind::Val});
      vals.insert(e->param);
      break;
    default: break;
  }
  scalar_triggers(e->a, trig, vals);
  scalar_triggers(e->b, trig, vals);
}

void emit_scalar(const SExpr& e, std::vector<RangeOp>& out) {
  switch (e->k) {
    case ScalarExpr::K::Int:
      out.push_back({RangeOp::K::PushInt, e->ival});
      return;
    case ScalarExpr::K::Param:
      out.push_back({RangeOp::K::PushParam, 0, e->param});
      return;
    case ScalarExpr::K::MaxInt:
      out.push_back({RangeOp::K::PushMaxInt});
      return;
    case ScalarExpr::K::Min:
      out.push_back({RangeOp::K::PushMin, 0, e->param});
      return;
    case ScalarExpr::K::Max:
      out.push_back({RangeOp::K::PushMax, 0, e->param});
      return;
    case ScalarExpr::K::Val:
      out.push_back({RangeOp::K::PushVal, 0, e->param});
      return;
    default: break;
  }
  emit_scalar(e->a, out);
  emit_scalar(e->b, out);
  switch (e->k) {
    case ScalarExpr::K::Add: out.push_back({RangeOp::K::Add}); break;
    case ScalarExpr::K::Sub: out.push_back({RangeOp::K::Sub}); break;
    case ScalarExpr::K::Mul: out.push_back({RangeOp::K::Mul}); break;
    case ScalarExpr::K::DivUp: out.push_back({RangeOp::K::DivUp}); break;
    case ScalarExpr::K::DivDown: out.push_back({RangeOp::K::DivDown}); break;
    case ScalarExpr::K::FMin: out.push_back({RangeOp::K::Min2}); break;
    case ScalarExpr::K::FMax: out.push_back({RangeOp::K::Max2}); break;
    default: throw FdLangError("bad scalar expression");
  }
}

CompiledPrim compile_prim(const FdPrimitive& p, const ConstraintDef& def,
                          const ExternalRegistry& ext) {
  CompiledPrim out;
  out.cname = p.cname;
  out.target_param = p.target_param;
  out.range = p.range;
  std::set<Trigger> trig;
  std::set<int> vals;
  switch (p.range.k) {
    case RangeSpec::K::Interval:
      scalar_triggers(p.range.lo, trig, vals);
      scalar_triggers(p.range.hi, trig, vals);
      emit_scalar(p.range.lo, out.program);
      emit_scalar(p.range.hi, out.program);
      out.program.push_back({RangeOp::K::MkInterval});
      break;
    case RangeSpec::K::Singleton:
      scalar_triggers(p.range.e, trig, vals);
      emit_scalar(p.range.e, out.program);
      out.program.push_back({RangeOp::K::MkSingleton});
      break;
    case RangeSpec::K::Complement:
      scalar_triggers(p.range.e, trig, vals);
      emit_scalar(p.range.e, out.program);
      out.program.push_back({RangeOp::K::MkComplement});
      break;
    case RangeSpec::K::Dom: {
      trig.insert({p.range.param, TrigKind::Dom});
      RangeOp op{RangeOp::K::MkDom};
      op.param = p.range.param;
      out.program.push_back(op);
      break;
    }
    case RangeSpec::K::FnCall: {
      auto* f = ext.find(p.range.fname);
      if (!f)
        throw FdLangError("external range function not registered: " +
                          p.range.fname);
      if (f->first != (int)p.range.args.size())
        throw FdLangError("arity mismatch for external function: " +
                          p.range.fname);
      std::vector<RangeArg> rargs;
      for (auto& a : p.range.args) {
        RangeArg ra = a;
        if (a.is_dom) {
          if (def.params[a.param].type != FdParam::Type::Fdv)
            throw FdLangError("dom() expects an fdv parameter");
          trig.insert({a.param, TrigKind::Dom});
        } else {
          auto t = def.params[a.param].type;
          if (t == FdParam::Type::Fdv)
            throw FdLangError(
                "fdv argument to an external function must use dom()");
          ra.is_list = t == FdParam::Type::LInt || t == FdParam::Type::LFdv;
        }
        rargs.push_back(ra);
      }
      RangeOp op{RangeOp::K::MkFnCall};
      op.fname = p.range.fname;
      op.args = std::move(rargs);
      out.program.push_back(op);
      break;
    }
  }
  out.triggers.assign(trig.begin(), trig.end());
  out.val_params.assign(vals.begin(), vals.end());
  out.run_once = out.triggers.empty();
  return out;
}

void cond_triggers(const CExpr& c, std::set<Trigger>& trig, std::set<int>& vals) {
  if (!c) return;
  if (c->k == CondExpr::K::Or || c->k == CondExpr::K::And) {
    cond_triggers(c->a, trig, vals);
    cond_triggers(c->b, trig, vals);
    return;
  }
  scalar_triggers(c->x, trig, vals);
  scalar_triggers(c->y, trig, vals);
}

}  // namespace

CompiledDef compile_def(const ConstraintDef& def, const ExternalRegistry& ext) {
  CompiledDef out;
  out.name = def.name;
  out.params = def.params;
  std::map<std::string, int> named;
  for (auto& item : def.items) {
    if (!item.is_switch) {
      CompiledPrim p = compile_prim(item.prim, def, ext);
      if (!p.cname.empty()) named[p.cname] = (int)out.prims.size();
      out.prims.push_back(std::move(p));
    }
  }
  for (auto& item : def.items) {
    if (!item.is_switch) continue;
    CompiledSwitch sw;
    std::set<Trigger> trig;
    std::set<int> vals;
    for (auto& cs : item.cases) {
      CompiledCase cc;
      cc.cond = cs.cond;
      cond_triggers(cs.cond, trig, vals);
      for (auto& a : cs.actions) {
        CompiledAction ca;
        if (a.is_stop) {
          ca.is_stop = true;
          auto it = named.find(a.stop_name);
          if (it == named.end())
            throw FdLangError("stop of unknown primitive: " + a.stop_name);
          ca.stop_prim = it->second;
        } else {
          ca.start = compile_prim(a.start, def, ext);
        }
        cc.actions.push_back(std::move(ca));
      }
      sw.cases.push_back(std::move(cc));
    }
    // a switch is re-checked whenever any condition variable changes
    sw.triggers.assign(trig.begin(), trig.end());
    out.switches.push_back(std::move(sw));
  }
  return out;
}

// ---------------------------------------------------------------------------
// External registry & printing
// ---------------------------------------------------------------------------

void ExternalRegistry::register_external(const std::string& name, int arity,
                                         ExternalFn fn) {
  if (fns_.count(name))
    throw FdLangError("external function already registered: " + name);
  fns_[name] = {arity, std::move(fn)};
}

const std::pair<int, ExternalFn>* ExternalRegistry::find(
    const std::string& name) const {
  auto it = fns_.find(name);
  return it == fns_.end() ? nullptr : &it->second;
}

namespace {

std::string scalar_str(const SExpr& e, const std::vector<FdParam>& ps,
                       int prec = 0) {
  switch (e->k) {
    case ScalarExpr::K::Int: return std::to_string(e->ival);
    case ScalarExpr::K::Param: return ps[e->param].name;
    case ScalarExpr::K::MaxInt: return "max_integer";
    case ScalarExpr::K::Min: return "min(" + ps[e->param].name + ")";
    case ScalarExpr::K::Max: return "max(" + ps[e->param].name + ")";
    case ScalarExpr::K::Val: return "val(" + ps[e->param].name + ")";
    case ScalarExpr::K::FMin:
      return "Min(" + scalar_str(e->a, ps) + "," + scalar_str(e->b, ps) + ")";
    case ScalarExpr::K::FMax:
      return "Max(" + scalar_str(e->a, ps) + "," + scalar_str(e->b, ps) + ")";
    default: break;
  }
  const char* op = e->k == ScalarExpr::K::Add       ? "+"
                   : e->k == ScalarExpr::K::Sub     ? "-"
                   : e->k == ScalarExpr::K::Mul     ? "*"
                   : e->k == ScalarExpr::K::DivUp   ? "/>"
                                                    : "/<";
  int myprec = (e->k == ScalarExpr::K::Add || e->k == ScalarExpr::K::Sub) ? 1 : 2;
  std::string s =
      scalar_str(e->a, ps, myprec) + op + scalar_str(e->b, ps, myprec + 1);
  if (myprec < prec) return "(" + s + ")";
  return s;
}

}  // namespace

std::string range_to_string(const RangeSpec& r, const std::vector<FdParam>& ps) {
  switch (r.k) {
    case RangeSpec::K::Interval:
      return scalar_str(r.lo, ps) + ".." + scalar_str(r.hi, ps);
    case RangeSpec::K::Singleton: return "{" + scalar_str(r.e, ps) + "}";
    case RangeSpec::K::Complement: return "~{" + scalar_str(r.e, ps) + "}";
    case RangeSpec::K::Dom: return "dom(" + ps[r.param].name + ")";
    case RangeSpec::K::FnCall: {
      std::string s = r.fname + "(";
      for (size_t i = 0; i < r.args.size(); i++) {
        if (i) s += ",";
        s += r.args[i].is_dom ? "dom(" + ps[r.args[i].param].name + ")"
                              : ps[r.args[i].param].name;
      }
      return s + ")";
    }
  }
  return "?";
}

}  // namespace prolite::fd
