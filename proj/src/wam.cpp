#include "prolite/wam.hpp"

#include <sstream>

#include "prolite/reader.hpp"
#include "prolite/writer.hpp"

namespace prolite {

namespace {

const OperatorTable& wam_table() {
  static OperatorTable t = OperatorTable::standard();
  return t;
}

TermPtr reg_term(const WamReg& r) {
  return Term::compound(r.y ? "y" : "x", {Term::integer(r.idx)});
}

WamReg reg_from(const TermPtr& t) {
  if (t->is_functor("x", 1) && t->args[0]->is_int())
    return WamReg{false, (int)t->args[0]->ival};
  if (t->is_functor("y", 1) && t->args[0]->is_int())
    return WamReg{true, (int)t->args[0]->ival};
  throw WamFormatError("bad register operand");
}

TermPtr fn_term(const std::string& name, int arity) {
  return Term::compound("/", {Term::atom(name), Term::integer(arity)});
}

TermPtr lbl_term(int l) {
  return l == 0 ? Term::atom("fail") : Term::integer(l);
}

int lbl_from(const TermPtr& t) {
  if (t->is_atom("fail")) return 0;
  if (t->is_int()) return (int)t->ival;
  throw WamFormatError("bad label operand");
}

struct OpName {
  WOp op;
  const char* name;
};

const OpName kOpNames[] = {
    {WOp::GetVariable, "get_variable"},
    {WOp::GetValue, "get_value"},
    {WOp::GetAtom, "get_atom"},
    {WOp::GetInteger, "get_integer"},
    {WOp::GetFloat, "get_float"},
    {WOp::GetNil, "get_nil"},
    {WOp::GetList, "get_list"},
    {WOp::GetStructure, "get_structure"},
    {WOp::PutVariable, "put_variable"},
    {WOp::PutValue, "put_value"},
    {WOp::PutAtom, "put_atom"},
    {WOp::PutInteger, "put_integer"},
    {WOp::PutFloat, "put_float"},
    {WOp::PutNil, "put_nil"},
    {WOp::PutList, "put_list"},
    {WOp::PutStructure, "put_structure"},
    {WOp::UnifyVariable, "unify_variable"},
    {WOp::UnifyValue, "unify_value"},
    {WOp::UnifyAtom, "unify_atom"},
    {WOp::UnifyInteger, "unify_integer"},
    {WOp::UnifyFloat, "unify_float"},
    {WOp::UnifyNil, "unify_nil"},
    {WOp::UnifyVoid, "unify_void"},
    {WOp::Allocate, "allocate"},
    {WOp::Deallocate, "deallocate"},
    {WOp::Call, "call"},
    {WOp::Execute, "execute"},
    {WOp::Proceed, "proceed"},
    {WOp::Fail, "fail"},
    {WOp::Label, "label"},
    {WOp::SwitchOnTerm, "switch_on_term"},
    {WOp::SwitchOnAtom, "switch_on_atom"},
    {WOp::SwitchOnInteger, "switch_on_integer"},
    {WOp::SwitchOnStructure, "switch_on_structure"},
    {WOp::TryMeElse, "try_me_else"},
    {WOp::RetryMeElse, "retry_me_else"},
    {WOp::TrustMeElseFail, "trust_me_else_fail"},
    {WOp::Try, "try"},
    {WOp::Retry, "retry"},
    {WOp::Trust, "trust"},
    {WOp::LoadCutLevel, "load_cut_level"},
    {WOp::Cut, "cut"},
};

const char* op_name(WOp op) {
  for (auto& e : kOpNames)
    if (e.op == op) return e.name;
  return "?";
}

}  // namespace

TermPtr wam_instr_to_term(const WamInstr& i) {
  auto A = [&]() { return Term::integer(i.a); };
  switch (i.op) {
    case WOp::GetVariable:
    case WOp::GetValue:
    case WOp::PutVariable:
    case WOp::PutValue:
      return Term::compound(op_name(i.op), {reg_term(i.reg), A()});
    case WOp::GetAtom:
    case WOp::PutAtom:
      return Term::compound(op_name(i.op), {Term::atom(i.atom), A()});
    case WOp::GetInteger:
    case WOp::PutInteger:
      return Term::compound(op_name(i.op), {Term::integer(i.ival), A()});
    case WOp::GetFloat:
    case WOp::PutFloat:
      return Term::compound(op_name(i.op), {Term::floating(i.fval), A()});
    case WOp::GetNil:
    case WOp::GetList:
    case WOp::PutNil:
    case WOp::PutList:
      return Term::compound(op_name(i.op), {A()});
    case WOp::GetStructure:
    case WOp::PutStructure:
      return Term::compound(op_name(i.op), {fn_term(i.atom, i.arity), A()});
    case WOp::UnifyVariable:
    case WOp::UnifyValue:
    case WOp::Cut:
      return Term::compound(op_name(i.op), {reg_term(i.reg)});
    case WOp::UnifyAtom:
      return Term::compound(op_name(i.op), {Term::atom(i.atom)});
    case WOp::UnifyInteger:
      return Term::compound(op_name(i.op), {Term::integer(i.ival)});
    case WOp::UnifyFloat:
      return Term::compound(op_name(i.op), {Term::floating(i.fval)});
    case WOp::UnifyNil:
    case WOp::Deallocate:
    case WOp::Proceed:
    case WOp::Fail:
    case WOp::TrustMeElseFail:
      return Term::atom(op_name(i.op));
    case WOp::UnifyVoid:
    case WOp::Allocate:
    case WOp::Label:
    case WOp::LoadCutLevel:
      return Term::compound(op_name(i.op), {A()});
    case WOp::TryMeElse:
    case WOp::RetryMeElse:
    case WOp::Try:
    case WOp::Retry:
    case WOp::Trust:
      return Term::compound(op_name(i.op), {Term::integer(i.a)});
    case WOp::Call:
    case WOp::Execute:
      return Term::compound(op_name(i.op), {fn_term(i.atom, i.arity)});
    case WOp::SwitchOnTerm:
      return Term::compound(op_name(i.op),
                            {lbl_term(i.lbl[0]), lbl_term(i.lbl[1]), lbl_term(i.lbl[2]),
                             lbl_term(i.lbl[3]), lbl_term(i.lbl[4])});
    case WOp::SwitchOnAtom:
    case WOp::SwitchOnInteger:
    case WOp::SwitchOnStructure: {
      std::vector<TermPtr> items;
      for (auto& e : i.table) {
        TermPtr key;
        if (e.kind == SwitchEntry::Kind::Atom)
          key = Term::atom(e.name);
        else if (e.kind == SwitchEntry::Kind::Int)
          key = Term::integer(e.ival);
        else
          key = fn_term(e.name, e.arity);
        items.push_back(Term::compound(",", {key, Term::integer(e.label)}));
      }
      return Term::compound(op_name(i.op), {mk_list(items)});
    }
  }
  throw WamFormatError("unhandled opcode");
}

std::string wam_instr_to_string(const WamInstr& i) {
  return write_term(wam_instr_to_term(i), wam_table(), {.quoted = true});
}

WamInstr wam_instr_from_term(const TermPtr& t) {
  std::string n = t->name;
  WamInstr i;
  bool found = false;
  for (auto& e : kOpNames)
    if (n == e.name) {
      i.op = e.op;
      found = true;
      break;
    }
  if (!found || !(t->is_atom() || t->is_compound()))
    throw WamFormatError("unknown instruction: " + n);
  auto need = [&](size_t k) {
    if (t->arity() != k)
      throw WamFormatError("bad operand count for " + n);
  };
  auto as_int = [&](const TermPtr& x) -> int64_t {
    if (!x->is_int()) throw WamFormatError("integer operand expected in " + n);
    return x->ival;
  };
  auto as_atom = [&](const TermPtr& x) -> std::string {
    if (!x->is_atom()) throw WamFormatError("atom operand expected in " + n);
    return x->name;
  };
  auto as_fn = [&](const TermPtr& x) {
    if (!x->is_functor("/", 2) || !x->args[0]->is_atom() || !x->args[1]->is_int())
      throw WamFormatError("name/arity operand expected in " + n);
    i.atom = x->args[0]->name;
    i.arity = (int)x->args[1]->ival;
  };
  switch (i.op) {
    case WOp::GetVariable:
    case WOp::GetValue:
    case WOp::PutVariable:
    case WOp::PutValue:
      need(2);
      i.reg = reg_from(t->args[0]);
      i.a = (int)as_int(t->args[1]);
      break;
    case WOp::GetAtom:
    case WOp::PutAtom:
      need(2);
      i.atom = as_atom(t->args[0]);
      i.a = (int)as_int(t->args[1]);
      break;
    case WOp::GetInteger:
    case WOp::PutInteger:
      need(2);
      i.ival = as_int(t->args[0]);
      i.a = (int)as_int(t->args[1]);
      break;
    case WOp::GetFloat:
    case WOp::PutFloat:
      need(2);
      if (!t->args[0]->is_float()) throw WamFormatError("float expected");
      i.fval = t->args[0]->fval;
      i.a = (int)as_int(t->args[1]);
      break;
    case WOp::GetNil:
    case WOp::GetList:
    case WOp::PutNil:
    case WOp::PutList:
    case WOp::UnifyVoid:
    case WOp::Allocate:
    case WOp::Label:
    case WOp::LoadCutLevel:
    case WOp::TryMeElse:
    case WOp::RetryMeElse:
    case WOp::Try:
    case WOp::Retry:
    case WOp::Trust:
      need(1);
      i.a = (int)as_int(t->args[0]);
      break;
    case WOp::GetStructure:
    case WOp::PutStructure:
      need(2);
      as_fn(t->args[0]);
      i.a = (int)as_int(t->args[1]);
      break;
    case WOp::UnifyVariable:
    case WOp::UnifyValue:
    case WOp::Cut:
      need(1);
      i.reg = reg_from(t->args[0]);
      break;
    case WOp::UnifyAtom:
      need(1);
      i.atom = as_atom(t->args[0]);
      break;
    case WOp::UnifyInteger:
      need(1);
      i.ival = as_int(t->args[0]);
      break;
    case WOp::UnifyFloat:
      need(1);
      if (!t->args[0]->is_float()) throw WamFormatError("float expected");
      i.fval = t->args[0]->fval;
      break;
    case WOp::UnifyNil:
    case WOp::Deallocate:
    case WOp::Proceed:
    case WOp::Fail:
    case WOp::TrustMeElseFail:
      need(0);
      break;
    case WOp::Call:
    case WOp::Execute:
      need(1);
      as_fn(t->args[0]);
      break;
    case WOp::SwitchOnTerm:
      need(5);
      for (int k = 0; k < 5; k++) i.lbl[k] = lbl_from(t->args[k]);
      break;
    case WOp::SwitchOnAtom:
    case WOp::SwitchOnInteger:
    case WOp::SwitchOnStructure: {
      need(1);
      auto items = list_items(t->args[0]);
      if (!items) throw WamFormatError("switch table must be a list");
      for (auto& it : *items) {
        if (!it->is_functor(",", 2)) throw WamFormatError("bad switch entry");
        SwitchEntry e;
        auto& key = it->args[0];
        if (key->is_atom()) {
          e.kind = SwitchEntry::Kind::Atom;
          e.name = key->name;
        } else if (key->is_int()) {
          e.kind = SwitchEntry::Kind::Int;
          e.ival = key->ival;
        } else if (key->is_functor("/", 2)) {
          e.kind = SwitchEntry::Kind::Struct;
          e.name = key->args[0]->name;
          e.arity = (int)key->args[1]->ival;
        } else {
          throw WamFormatError("bad switch key");
        }
        e.label = (int)as_int(it->args[1]);
        i.table.push_back(e);
      }
      break;
    }
  }
  return i;
}

namespace {

void emit_code_list(std::ostringstream& out, const std::vector<WamInstr>& code) {
  out << "[";
  for (size_t k = 0; k < code.size(); k++) {
    const auto& ins = code[k];
    out << "\n";
    if (ins.op == WOp::Label)
      out << wam_instr_to_string(ins);
    else
      out << "    " << wam_instr_to_string(ins);
    if (k + 1 < code.size()) out << ",";
  }
  out << "]";
}

}  // namespace

std::string emit_wam(const WamFile& f) {
  std::ostringstream out;
  const auto& tbl = wam_table();
  out << "file_name(" << write_term(Term::atom(f.path), tbl, {.quoted = true})
      << ").\n";
  for (const auto& p : f.preds) {
    out << "\n";
    out << "predicate(" << write_term(fn_term(p.name, p.arity), tbl, {.quoted = true})
        << "," << p.line << "," << (p.is_dynamic ? "dynamic" : "static") << ","
        << (p.is_public ? "public" : "private") << "," << p.origin << ",";
    emit_code_list(out, p.code);
    out << ").\n";
  }
  for (const auto& d : f.directives) {
    out << "\n";
    out << "directive(" << d.line << "," << (d.user ? "user" : "system") << ",";
    emit_code_list(out, d.code);
    out << ").\n";
  }
  if (!f.ensure_linked.empty()) {
    out << "\n";
    std::vector<TermPtr> items;
    for (auto& e : f.ensure_linked) items.push_back(fn_term(e.name, e.arity));
    out << "ensure_linked(" << write_term(mk_list(items), tbl, {.quoted = true})
        << ").\n";
  }
  return out.str();
}

WamFile parse_wam(const std::string& text) {
  WamFile f;
  const auto& tbl = wam_table();
  auto results = read_all(text, tbl);
  for (auto& r : results) {
    const TermPtr& t = r.term;
    if (t->is_functor("file_name", 1)) {
      if (!t->args[0]->is_atom()) throw WamFormatError("file_name expects an atom");
      f.path = t->args[0]->name;
    } else if (t->is_functor("predicate", 6)) {
      WamPredicate p;
      auto& nm = t->args[0];
      if (!nm->is_functor("/", 2)) throw WamFormatError("predicate name/arity expected");
      p.name = nm->args[0]->name;
      p.arity = (int)nm->args[1]->ival;
      p.line = (int)t->args[1]->ival;
      p.is_dynamic = t->args[2]->is_atom("dynamic");
      p.is_public = t->args[3]->is_atom("public");
      p.origin = t->args[4]->name;
      auto items = list_items(t->args[5]);
      if (!items) throw WamFormatError("predicate code must be a list");
      for (auto& it : *items) p.code.push_back(wam_instr_from_term(it));
      f.preds.push_back(std::move(p));
    } else if (t->is_functor("directive", 3)) {
      WamDirective d;
      d.line = (int)t->args[0]->ival;
      d.user = t->args[1]->is_atom("user");
      auto items = list_items(t->args[2]);
      if (!items) throw WamFormatError("directive code must be a list");
      for (auto& it : *items) d.code.push_back(wam_instr_from_term(it));
      f.directives.push_back(std::move(d));
    } else if (t->is_functor("ensure_linked", 1)) {
      auto items = list_items(t->args[0]);
      if (!items) throw WamFormatError("ensure_linked expects a list");
      for (auto& it : *items) {
        if (!it->is_functor("/", 2)) throw WamFormatError("bad ensure_linked entry");
        f.ensure_linked.push_back(
            PredSpec{it->args[0]->name, (int)it->args[1]->ival});
      }
    } else {
      throw WamFormatError("unexpected record in wam file: " +
                           write_term(t, tbl, {}));
    }
  }
  return f;
}

}  // namespace prolite
