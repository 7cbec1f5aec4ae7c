#include "prolite/wam2ma.hpp"

#include <algorithm>
#include <map>

#include "prolite/tags.hpp"

namespace prolite {

namespace {

struct SwtEntry {
  SwitchEntry key;
  std::string label;
};

struct SwtTable {
  char kind;  // 'a' atom, 'i' integer, 's' structure
  std::vector<SwtEntry> entries;
};

struct Translator {
  const WamFile& f;
  MaObject out;

  std::vector<std::string> at;                 // atoms
  std::vector<std::string> ta;                 // tagged atoms
  std::vector<std::pair<std::string, int>> fn; // functor/arity
  std::vector<SwtTable> st;

  int at_index(const std::string& s) {
    for (size_t i = 0; i < at.size(); i++)
      if (at[i] == s) return (int)i;
    at.push_back(s);
    return (int)at.size() - 1;
  }
  int ta_index(const std::string& s) {
    for (size_t i = 0; i < ta.size(); i++)
      if (ta[i] == s) return (int)i;
    ta.push_back(s);
    return (int)ta.size() - 1;
  }
  int fn_index(const std::string& s, int ar) {
    for (size_t i = 0; i < fn.size(); i++)
      if (fn[i].first == s && fn[i].second == ar) return (int)i;
    fn.push_back({s, ar});
    return (int)fn.size() - 1;
  }

  // per-predicate state
  int pred_no = 0;
  int sub_no = 0;
  bool cut_loaded = false;
  int pred_arity = 0;
  MaBlock* blk = nullptr;

  void emit(MaInstr i) { blk->code.push_back(std::move(i)); }
  void emit_callc(const std::string& fname, std::vector<MaArg> args = {}) {
    emit(MaInstr{MaInstr::Op::CallC, fname, std::move(args)});
  }
  void emit_label(const std::string& l) { emit(MaInstr{MaInstr::Op::Label, l, {}}); }

  std::string lbl(int n) {
    return "Lpred" + std::to_string(pred_no) + "_" + std::to_string(n);
  }
  std::string sub_lbl(int n) {
    return "Lpred" + std::to_string(pred_no) + "_sub_" + std::to_string(n);
  }

  int cp_arity() const { return pred_arity + (cut_loaded ? 1 : 0); }

  void emit_choice(const char* base, const std::string& alt_label) {
    int k = cp_arity();
    std::vector<MaArg> args;
    if (!alt_label.empty()) args.push_back(MaArg::addr(alt_label));
    if (k >= 1 && k < 4) {
      emit_callc(std::string(base) + std::to_string(k), std::move(args));
    } else {
      args.push_back(MaArg::integer(k));
      emit_callc(base, std::move(args));
    }
  }
  void emit_choice_noalt(const char* base) {
    int k = cp_arity();
    if (k >= 1 && k < 4) {
      emit_callc(std::string(base) + std::to_string(k));
    } else {
      emit_callc(base, {MaArg::integer(k)});
    }
  }

  MaArg reg_arg(const WamReg& r) {
    return r.y ? MaArg::y(r.idx) : MaArg::x(r.idx);
  }

  // inline-lowered type tests: these stay register-transparent
  static const char* inline_test_fn(const std::string& name, int arity) {
    if (arity != 1) return nullptr;
    if (name == "var") return "Pl_Blt_Var";
    if (name == "nonvar") return "Pl_Blt_Non_Var";
    if (name == "atom") return "Pl_Blt_Atom";
    if (name == "integer") return "Pl_Blt_Integer";
    return nullptr;
  }

  void translate_instr(const WamInstr& i) {
    using Op = MaInstr::Op;
    switch (i.op) {
      case WOp::Label:
        emit_label(lbl(i.a));
        break;
      case WOp::Call:
        if (const char* fn_name = inline_test_fn(i.atom, i.arity)) {
          emit_callc(fn_name, {MaArg::x(0)});
          emit(MaInstr{Op::FailRet, "", {}});
        } else {
          emit(MaInstr{Op::PlCall, encode_symbol(i.atom, i.arity), {}});
        }
        break;
      case WOp::Execute:
        emit(MaInstr{Op::PlJump, encode_symbol(i.atom, i.arity), {}});
        break;
      case WOp::Proceed:
        emit(MaInstr{Op::PlRet, "", {}});
        break;
      case WOp::Fail:
        emit(MaInstr{Op::PlFail, "", {}});
        break;
      case WOp::Allocate:
        emit_callc("Pl_Allocate", {MaArg::integer(i.a)});
        break;
      case WOp::Deallocate:
        emit_callc("Pl_Deallocate");
        break;
      case WOp::GetAtom:
        emit_callc("Pl_Get_Atom_Tagged",
                   {MaArg::mem("ta", ta_index(i.atom)), MaArg::x(i.a)});
        emit(MaInstr{Op::FailRet, "", {}});
        break;
      case WOp::GetInteger:
        emit_callc("Pl_Get_Integer_Tagged",
                   {MaArg::integer((int64_t)rt::make_int(i.ival)), MaArg::x(i.a)});
        emit(MaInstr{Op::FailRet, "", {}});
        break;
      case WOp::GetFloat:
        emit_callc("Pl_Get_Float", {MaArg::flt(i.fval), MaArg::x(i.a)});
        emit(MaInstr{Op::FailRet, "", {}});
        break;
      case WOp::GetNil:
        emit_callc("Pl_Get_Nil", {MaArg::x(i.a)});
        emit(MaInstr{Op::FailRet, "", {}});
        break;
      case WOp::GetList:
        emit_callc("Pl_Get_List", {MaArg::x(i.a)});
        emit(MaInstr{Op::FailRet, "", {}});
        break;
      case WOp::GetStructure:
        emit_callc("Pl_Get_Structure_Tagged",
                   {MaArg::mem("fn", fn_index(i.atom, i.arity)), MaArg::x(i.a)});
        emit(MaInstr{Op::FailRet, "", {}});
        break;
      case WOp::GetValue:
        emit_callc("Pl_Get_Value", {reg_arg(i.reg), MaArg::x(i.a)});
        emit(MaInstr{Op::FailRet, "", {}});
        break;
      case WOp::GetVariable:
        emit(MaInstr{Op::Move, "", {MaArg::x(i.a), reg_arg(i.reg)}});
        break;
      case WOp::PutValue:
        emit(MaInstr{Op::Move, "", {reg_arg(i.reg), MaArg::x(i.a)}});
        break;
      case WOp::PutVariable:
        emit_callc("Pl_Put_Variable");
        if (!i.reg.y && i.reg.idx == i.a) {
          emit(MaInstr{Op::MoveRet, "", {MaArg::x(i.a)}});
        } else {
          emit(MaInstr{Op::MoveRet, "", {reg_arg(i.reg)}});
          emit(MaInstr{Op::Move, "", {reg_arg(i.reg), MaArg::x(i.a)}});
        }
        break;
      case WOp::PutAtom:
        emit_callc("Pl_Put_Atom_Tagged", {MaArg::mem("ta", ta_index(i.atom))});
        emit(MaInstr{Op::MoveRet, "", {MaArg::x(i.a)}});
        break;
      case WOp::PutInteger:
        emit_callc("Pl_Put_Integer_Tagged",
                   {MaArg::integer((int64_t)rt::make_int(i.ival))});
        emit(MaInstr{Op::MoveRet, "", {MaArg::x(i.a)}});
        break;
      case WOp::PutFloat:
        emit_callc("Pl_Put_Float", {MaArg::flt(i.fval)});
        emit(MaInstr{Op::MoveRet, "", {MaArg::x(i.a)}});
        break;
      case WOp::PutNil:
        emit_callc("Pl_Put_Nil");
        emit(MaInstr{Op::MoveRet, "", {MaArg::x(i.a)}});
        break;
      case WOp::PutList:
        emit_callc("Pl_Put_List");
        emit(MaInstr{Op::MoveRet, "", {MaArg::x(i.a)}});
        break;
      case WOp::PutStructure:
        emit_callc("Pl_Put_Structure_Tagged",
                   {MaArg::mem("fn", fn_index(i.atom, i.arity))});
        emit(MaInstr{Op::MoveRet, "", {MaArg::x(i.a)}});
        break;
      case WOp::UnifyVariable:
        emit_callc("Pl_Unify_Variable");
        emit(MaInstr{Op::MoveRet, "", {reg_arg(i.reg)}});
        break;
      case WOp::UnifyValue:
        emit_callc("Pl_Unify_Value", {reg_arg(i.reg)});
        emit(MaInstr{Op::FailRet, "", {}});
        break;
      case WOp::UnifyAtom:
        emit_callc("Pl_Unify_Atom_Tagged", {MaArg::mem("ta", ta_index(i.atom))});
        emit(MaInstr{Op::FailRet, "", {}});
        break;
      case WOp::UnifyInteger:
        emit_callc("Pl_Unify_Integer_Tagged",
                   {MaArg::integer((int64_t)rt::make_int(i.ival))});
        emit(MaInstr{Op::FailRet, "", {}});
        break;
      case WOp::UnifyFloat:
        emit_callc("Pl_Unify_Float", {MaArg::flt(i.fval)});
        emit(MaInstr{Op::FailRet, "", {}});
        break;
      case WOp::UnifyNil:
        emit_callc("Pl_Unify_Nil");
        emit(MaInstr{Op::FailRet, "", {}});
        break;
      case WOp::UnifyVoid:
        emit_callc("Pl_Unify_Void", {MaArg::integer(i.a)});
        break;
      case WOp::TryMeElse:
        emit_choice("Pl_Create_Choice_Point", lbl(i.a));
        break;
      case WOp::RetryMeElse:
        emit_choice("Pl_Update_Choice_Point", lbl(i.a));
        break;
      case WOp::TrustMeElseFail:
        emit_choice_noalt("Pl_Delete_Choice_Point");
        break;
      case WOp::Try: {
        std::string cont = sub_lbl(sub_no++);
        emit_choice("Pl_Create_Choice_Point", cont);
        emit(MaInstr{MaInstr::Op::Jump, lbl(i.a), {}});
        emit_label(cont);
        break;
      }
      case WOp::Retry: {
        std::string cont = sub_lbl(sub_no++);
        emit_choice("Pl_Update_Choice_Point", cont);
        emit(MaInstr{MaInstr::Op::Jump, lbl(i.a), {}});
        emit_label(cont);
        break;
      }
      case WOp::Trust:
        emit_choice_noalt("Pl_Delete_Choice_Point");
        emit(MaInstr{MaInstr::Op::Jump, lbl(i.a), {}});
        break;
      case WOp::SwitchOnTerm: {
        static const char* part[5] = {"Var", "Atm", "Int", "Lst", "Stc"};
        std::string fname = "Pl_Switch_On_Term";
        std::vector<MaArg> args;
        for (int k = 0; k < 5; k++) {
          if (i.lbl[k]) {
            fname += std::string("_") + part[k];
            args.push_back(MaArg::addr(lbl(i.lbl[k])));
          }
        }
        emit_callc(fname, std::move(args));
        emit(MaInstr{MaInstr::Op::JumpRet, "", {}});
        break;
      }
      case WOp::SwitchOnAtom:
      case WOp::SwitchOnInteger:
      case WOp::SwitchOnStructure: {
        SwtTable table;
        table.kind = i.op == WOp::SwitchOnAtom      ? 'a'
                     : i.op == WOp::SwitchOnInteger ? 'i'
                                                    : 's';
        for (auto& e : i.table) {
          if (e.kind != SwitchEntry::Kind::Int) at_index(e.name);
          table.entries.push_back(SwtEntry{e, lbl(e.label)});
        }
        int k = (int)st.size();
        st.push_back(std::move(table));
        const char* fname = i.op == WOp::SwitchOnAtom      ? "Pl_Switch_On_Atom"
                            : i.op == WOp::SwitchOnInteger ? "Pl_Switch_On_Integer"
                                                           : "Pl_Switch_On_Structure";
        emit_callc(fname,
                   {MaArg::mem("st", k), MaArg::integer((int64_t)i.table.size())});
        emit(MaInstr{MaInstr::Op::JumpRet, "", {}});
        break;
      }
      case WOp::LoadCutLevel:
        emit_callc("Pl_Load_Cut_Level", {MaArg::xaddr(i.a)});
        break;
      case WOp::Cut:
        emit_callc("Pl_Cut", {reg_arg(i.reg)});
        break;
    }
  }

  void run() {
    out.name = f.path;
    int file_atom = at_index(f.path);

    struct PredInit {
      int name_at;
      int arity;
      int line;
      int mask;
      std::string sym;
    };
    std::vector<PredInit> pred_inits;

    for (auto& p : f.preds) {
      pred_no++;
      sub_no = 0;
      pred_arity = p.arity;
      cut_loaded =
          !p.code.empty() && p.code.front().op == WOp::LoadCutLevel;
      std::string sym = encode_symbol(p.name, p.arity);
      out.blocks.push_back(MaBlock{true, MaBlock::Vis::Global, sym, {}});
      blk = &out.blocks.back();
      int mask = (p.is_dynamic ? 1 : 0) | (p.is_public ? 2 : 0) |
                 (p.origin == "built_in" ? 4 : 0) |
                 (p.origin == "built_in_fd" ? 8 : 0);
      pred_inits.push_back(
          PredInit{at_index(p.name), p.arity, p.line, mask, sym});
      if (p.is_dynamic) {
        // interpreted predicate: route static calls to the clause dispatcher
        emit_callc("Pl_Dyn_Dispatch", {MaArg::mem("at", at_index(p.name)),
                                       MaArg::integer(p.arity)});
        emit(MaInstr{MaInstr::Op::JumpRet, "", {}});
        continue;
      }
      for (auto& i : p.code) translate_instr(i);
    }

    // directive code blocks
    std::vector<std::pair<std::string, bool>> directive_blocks;  // label, user
    int dir_no = 0;
    for (auto& d : f.directives) {
      dir_no++;
      pred_no = 0;  // directive-local labels use their own prefix
      sub_no = 0;
      pred_arity = 0;
      cut_loaded = !d.code.empty() && d.code.front().op == WOp::LoadCutLevel;
      std::string dlbl = "Ldirective_" + std::to_string(dir_no);
      out.blocks.push_back(MaBlock{false, MaBlock::Vis::Local, dlbl, {}});
      blk = &out.blocks.back();
      for (auto& i : d.code) translate_instr(i);
      emit(MaInstr{MaInstr::Op::PlRet, "", {}});
      directive_blocks.push_back({dlbl, d.user});
    }

    // data arrays
    auto add_array = [&](const char* name, size_t n) {
      if (n) out.data.push_back(MaData{false, name, true, (int64_t)n, {}});
    };

    // initializer triple
    out.blocks.push_back(
        MaBlock{false, MaBlock::Vis::Initializer, "Object_Initializer", {}});
    blk = &out.blocks.back();
    emit_callc("Pl_New_Object",
               {MaArg::addr("Prolog_Object_Initializer"),
                MaArg::addr("System_Directives"), MaArg::addr("User_Directives")});
    emit(MaInstr{MaInstr::Op::CRet, "", {}});

    out.blocks.push_back(
        MaBlock{false, MaBlock::Vis::Local, "Prolog_Object_Initializer", {}});
    blk = &out.blocks.back();
    {
      // creation calls in sorted order; indices keep first-encounter order
      std::vector<int> order(at.size());
      for (size_t i = 0; i < at.size(); i++) order[i] = (int)i;
      std::sort(order.begin(), order.end(),
                [&](int a, int b) { return at[a] < at[b]; });
      for (int idx : order) {
        emit_callc("Pl_Create_Atom", {MaArg::str(at[idx])});
        emit(MaInstr{MaInstr::Op::MoveRet, "", {MaArg::mem("at", idx)}});
      }
      std::vector<int> torder(ta.size());
      for (size_t i = 0; i < ta.size(); i++) torder[i] = (int)i;
      std::sort(torder.begin(), torder.end(),
                [&](int a, int b) { return ta[a] < ta[b]; });
      for (int idx : torder) {
        emit_callc("Pl_Create_Atom_Tagged", {MaArg::str(ta[idx])});
        emit(MaInstr{MaInstr::Op::MoveRet, "", {MaArg::mem("ta", idx)}});
      }
      std::vector<int> forder(fn.size());
      for (size_t i = 0; i < fn.size(); i++) forder[i] = (int)i;
      std::sort(forder.begin(), forder.end(), [&](int a, int b) {
        return fn[a] < fn[b];
      });
      for (int idx : forder) {
        emit_callc("Pl_Create_Functor_Arity_Tagged",
                   {MaArg::str(fn[idx].first), MaArg::integer(fn[idx].second)});
        emit(MaInstr{MaInstr::Op::MoveRet, "", {MaArg::mem("fn", idx)}});
      }
      for (auto& pi : pred_inits) {
        emit_callc("Pl_Create_Pred",
                   {MaArg::mem("at", pi.name_at), MaArg::integer(pi.arity),
                    MaArg::mem("at", file_atom), MaArg::integer(pi.line),
                    MaArg::integer(pi.mask), MaArg::addr(pi.sym)});
      }
      for (auto& e : f.ensure_linked)
        emit_callc("Pl_Ensure_Linked",
                   {MaArg::addr(encode_symbol(e.name, e.arity))});
      for (size_t k = 0; k < st.size(); k++) {
        auto& t = st[k];
        emit_callc("Pl_Create_Swt_Table",
                   {MaArg::integer((int64_t)t.entries.size())});
        emit(MaInstr{MaInstr::Op::MoveRet, "", {MaArg::mem("st", (int)k)}});
        for (auto& e : t.entries) {
          int64_t size = (int64_t)t.entries.size();
          if (t.kind == 'a') {
            emit_callc("Pl_Create_Swt_Atm_Element",
                       {MaArg::mem("st", (int)k), MaArg::integer(size),
                        MaArg::mem("at", at_index(e.key.name)),
                        MaArg::addr(e.label)});
          } else if (t.kind == 'i') {
            emit_callc("Pl_Create_Swt_Int_Element",
                       {MaArg::mem("st", (int)k), MaArg::integer(size),
                        MaArg::integer(e.key.ival), MaArg::addr(e.label)});
          } else {
            emit_callc("Pl_Create_Swt_Stc_Element",
                       {MaArg::mem("st", (int)k), MaArg::integer(size),
                        MaArg::mem("at", at_index(e.key.name)),
                        MaArg::integer(e.key.arity), MaArg::addr(e.label)});
          }
        }
      }
      emit(MaInstr{MaInstr::Op::CRet, "", {}});
    }

    out.blocks.push_back(
        MaBlock{false, MaBlock::Vis::Local, "System_Directives", {}});
    blk = &out.blocks.back();
    for (auto& [dlbl, user] : directive_blocks)
      if (!user) emit_callc("Pl_Run_System_Directive", {MaArg::addr(dlbl)});
    emit(MaInstr{MaInstr::Op::CRet, "", {}});

    out.blocks.push_back(
        MaBlock{false, MaBlock::Vis::Local, "User_Directives", {}});
    blk = &out.blocks.back();
    for (auto& [dlbl, user] : directive_blocks)
      if (user) emit_callc("Pl_Run_User_Directive", {MaArg::addr(dlbl)});
    emit(MaInstr{MaInstr::Op::CRet, "", {}});

    add_array("at", at.size());
    add_array("ta", ta.size());
    add_array("fn", fn.size());
    add_array("st", st.size());
  }
};

}  // namespace

MaObject translate_wam(const WamFile& f) {
  Translator t{.f = f};
  t.run();
  return t.out;
}

}  // namespace prolite
