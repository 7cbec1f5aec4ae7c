#include <cmath>
#include <cstring>
#include <sstream>

#include "prolite/wam2ma.hpp"
#include "prolite/writer.hpp"
#include "vm_internal.hpp"

namespace prolite {

using namespace rt;

// ---------------------------------------------------------------------------
// Primitive name resolution
// ---------------------------------------------------------------------------

bool prim_lookup(const std::string& name, uint32_t& prim, uint64_t& aux) {
  aux = 0;
  static const std::map<std::string, Prim> simple = {
      {"Pl_Allocate", Prim::Allocate},
      {"Pl_Deallocate", Prim::Deallocate},
      {"Pl_Get_Atom_Tagged", Prim::GetAtomTagged},
      {"Pl_Get_Integer_Tagged", Prim::GetIntegerTagged},
      {"Pl_Get_Float", Prim::GetFloat},
      {"Pl_Get_Nil", Prim::GetNil},
      {"Pl_Get_List", Prim::GetList},
      {"Pl_Get_Structure_Tagged", Prim::GetStructureTagged},
      {"Pl_Get_Value", Prim::GetValue},
      {"Pl_Put_Variable", Prim::PutVariable},
      {"Pl_Put_Atom_Tagged", Prim::PutAtomTagged},
      {"Pl_Put_Integer_Tagged", Prim::PutIntegerTagged},
      {"Pl_Put_Float", Prim::PutFloat},
      {"Pl_Put_Nil", Prim::PutNil},
      {"Pl_Put_List", Prim::PutList},
      {"Pl_Put_Structure_Tagged", Prim::PutStructureTagged},
      {"Pl_Unify_Variable", Prim::UnifyVariable},
      {"Pl_Unify_Value", Prim::UnifyValue},
      {"Pl_Unify_Atom_Tagged", Prim::UnifyAtomTagged},
      {"Pl_Unify_Integer_Tagged", Prim::UnifyIntegerTagged},
      {"Pl_Unify_Float", Prim::UnifyFloat},
      {"Pl_Unify_Nil", Prim::UnifyNil},
      {"Pl_Unify_Void", Prim::UnifyVoid},
      {"Pl_Switch_On_Atom", Prim::SwitchOnAtom},
      {"Pl_Switch_On_Integer", Prim::SwitchOnInteger},
      {"Pl_Switch_On_Structure", Prim::SwitchOnStructure},
      {"Pl_Load_Cut_Level", Prim::LoadCutLevel},
      {"Pl_Cut", Prim::Cut},
      {"Pl_Create_Atom", Prim::CreateAtom},
      {"Pl_Create_Atom_Tagged", Prim::CreateAtomTagged},
      {"Pl_Create_Functor_Arity_Tagged", Prim::CreateFunctorArityTagged},
      {"Pl_Create_Swt_Table", Prim::CreateSwtTable},
      {"Pl_Create_Swt_Atm_Element", Prim::CreateSwtAtmElement},
      {"Pl_Create_Swt_Int_Element", Prim::CreateSwtIntElement},
      {"Pl_Create_Swt_Stc_Element", Prim::CreateSwtStcElement},
      {"Pl_Create_Pred", Prim::CreatePred},
      {"Pl_New_Object", Prim::NewObject},
      {"Pl_Ensure_Linked", Prim::EnsureLinked},
      {"Pl_Run_System_Directive", Prim::RunSystemDirective},
      {"Pl_Run_User_Directive", Prim::RunUserDirective},
      {"Pl_Blt_Var", Prim::BltVar},
      {"Pl_Blt_Non_Var", Prim::BltNonVar},
      {"Pl_Blt_Atom", Prim::BltAtom},
      {"Pl_Blt_Integer", Prim::BltInteger},
      {"Pl_Dyn_Dispatch", Prim::DynDispatch},
  };
  auto it = simple.find(name);
  if (it != simple.end()) {
    prim = (uint32_t)it->second;
    return true;
  }
  auto cp = [&](const char* base, Prim p) -> bool {
    size_t n = strlen(base);
    if (name.compare(0, n, base) != 0) return false;
    if (name.size() == n) {
      prim = (uint32_t)p;
      aux = 0;  // generic: k is the last argument
      return true;
    }
    if (name.size() == n + 1 && name[n] >= '1' && name[n] <= '3') {
      prim = (uint32_t)p;
      aux = (uint64_t)(name[n] - '0');
      return true;
    }
    return false;
  };
  if (cp("Pl_Create_Choice_Point", Prim::CreateChoicePoint)) return true;
  if (cp("Pl_Update_Choice_Point", Prim::UpdateChoicePoint)) return true;
  if (cp("Pl_Delete_Choice_Point", Prim::DeleteChoicePoint)) return true;
  const char* stp = "Pl_Switch_On_Term";
  if (name.compare(0, strlen(stp), stp) == 0) {
    static const char* part[5] = {"_Var", "_Atm", "_Int", "_Lst", "_Stc"};
    size_t p = strlen(stp);
    uint64_t mask = 0;
    while (p < name.size()) {
      bool hit = false;
      for (int k = 0; k < 5; k++) {
        size_t n = strlen(part[k]);
        if (name.compare(p, n, part[k]) == 0) {
          mask |= 1u << k;
          p += n;
          hit = true;
          break;
        }
      }
      if (!hit) return false;
    }
    prim = (uint32_t)Prim::SwitchOnTerm;
    aux = mask;
    return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Machine basics
// ---------------------------------------------------------------------------

Machine::Machine() : Machine(Options{}) {}

Machine::Machine(Options o) : opts(o) {
  trace = o.trace;
  x.resize(4096, 0);
  heap_.resize(4096, 0);
  lcl_.resize(4096, 0);
  bootstrap();
}

int Machine::intern(const std::string& s) {
  auto it = atom_ids_.find(s);
  if (it != atom_ids_.end()) return it->second;
  int id = (int)atoms_.size();
  atoms_.push_back(s);
  atom_ids_[s] = id;
  return id;
}

Word& Machine::cell(uint64_t addr) {
  if (addr >= kLocalBase) return lcl_[addr - kLocalBase];
  return heap_[addr];
}

Word Machine::cell_value(uint64_t addr) const {
  if (addr >= kLocalBase) return lcl_[addr - kLocalBase];
  return heap_[addr];
}

Word Machine::deref(Word w) const {
  while (tag_of(w) == REF) {
    Word v = cell_value(payload_of(w));
    if (v == w) return w;
    w = v;
  }
  return w;
}

uint64_t Machine::push_heap(Word w) {
  if (h_ >= heap_.size()) {
    if (h_ >= opts.heap_words) throw RuntimeFault("heap overflow");
    heap_.resize(std::min(opts.heap_words, heap_.size() * 2), 0);
  }
  heap_[h_] = w;
  return h_++;
}

Word Machine::new_unbound() {
  uint64_t a = push_heap(0);
  Word w = make_word(REF, a);
  heap_[a] = w;
  return w;
}

Word Machine::make_float(double d) {
  Word raw;
  std::memcpy(&raw, &d, 8);
  uint64_t a = push_heap(raw);
  return make_word(FLT, a);
}

double Machine::float_value(Word w) const {
  double d;
  Word raw = cell_value(payload_of(w));
  std::memcpy(&d, &raw, 8);
  return d;
}

void Machine::bind(uint64_t addr, Word w) {
  cell(addr) = w;
  uint64_t hb = b_ ? cp_h(b_) : 0;
  if (addr < hb) {
    if (trail_.size() >= opts.trail_entries) throw RuntimeFault("trail overflow");
    trail_.push_back(fd::TrailEntry{fd::TrailEntry::K::Bind, addr, 0});
  }
}

void Machine::untrail(size_t mark) {
  while (trail_.size() > mark) {
    fd::TrailEntry e = trail_.back();
    trail_.pop_back();
    if (e.k == fd::TrailEntry::K::Bind) {
      cell(e.a) = make_word(REF, e.a);
    } else {
      fd_->restore_trail_entry(e);
    }
  }
}

bool Machine::unify(Word a, Word b) {
  std::vector<std::pair<Word, Word>> stack{{a, b}};
  while (!stack.empty()) {
    auto [x1, x2] = stack.back();
    stack.pop_back();
    Word u = deref(x1), v = deref(x2);
    if (u == v) continue;
    Tag tu = tag_of(u), tv = tag_of(v);
    if (tu == REF && tv == REF) {
      // bind the younger cell to the older one
      if (payload_of(u) < payload_of(v))
        bind(payload_of(v), u);
      else
        bind(payload_of(u), v);
      continue;
    }
    if (tu == REF) {
      bind(payload_of(u), v);
      continue;
    }
    if (tv == REF) {
      bind(payload_of(v), u);
      continue;
    }
    if (tu == FDV || tv == FDV) {
      if (tu == FDV && tv == FDV) {
        if (!fd_->unify_vars((int)payload_of(u), (int)payload_of(v))) return false;
        continue;
      }
      Word fdw = tu == FDV ? u : v;
      Word other = tu == FDV ? v : u;
      if (tag_of(other) == INT) {
        int64_t val = int_value(other);
        if (val < 0) return false;
        if (!fd_->assign((int)payload_of(fdw), val)) return false;
        continue;
      }
      return false;
    }
    if (tu != tv) return false;
    switch (tu) {
      case ATM:
      case INT:
        return false;  // equal words already handled
      case FLT:
        if (float_value(u) != float_value(v)) return false;
        continue;
      case LST: {
        uint64_t pu = payload_of(u), pv = payload_of(v);
        stack.push_back({heap_[pu], heap_[pv]});
        stack.push_back({heap_[pu + 1], heap_[pv + 1]});
        continue;
      }
      case STC: {
        uint64_t pu = payload_of(u), pv = payload_of(v);
        if (heap_[pu] != heap_[pv]) return false;
        uint64_t n = ftr_arity(heap_[pu]);
        for (uint64_t i = 1; i <= n; i++)
          stack.push_back({heap_[pu + i], heap_[pv + i]});
        continue;
      }
      default: return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Stack frames
// ---------------------------------------------------------------------------

uint64_t Machine::env_top() const {
  if (e_ == 0) return 1;
  return e_ + 3 + lcl_[e_ + 2];
}

uint64_t Machine::stack_top() const { return std::max<uint64_t>(env_top(), b_ ? b_ : 1); }

void Machine::create_cp(int k, uint64_t alt) {
  uint64_t t = stack_top();
  uint64_t need = t + k + 9;
  if (need >= lcl_.size()) {
    if (need >= opts.local_words) throw RuntimeFault("local stack overflow");
    lcl_.resize(std::min<uint64_t>(opts.local_words, std::max(need + 1, lcl_.size() * 2)), 0);
  }
  for (int i = 0; i < k; i++) lcl_[t + i] = x[i];
  lcl_[t + k + 0] = (uint64_t)k;
  lcl_[t + k + 1] = ++cp_serial_counter_;
  lcl_[t + k + 2] = fd_->cs_top();
  lcl_[t + k + 3] = trail_.size();
  lcl_[t + k + 4] = h_;
  lcl_[t + k + 5] = cp_;
  lcl_[t + k + 6] = e_;
  lcl_[t + k + 7] = b_;
  lcl_[t + k + 8] = alt;
  b_ = t + k + 9;
}

void Machine::restore_cp_state(uint64_t b, int k) {
  untrail(cp_tr(b));
  h_ = cp_h(b);
  e_ = cp_e(b);
  cp_ = cp_cp(b);
  fd_->on_backtrack(cp_cs(b));
  uint64_t stored_k = cp_k(b);
  if (k >= 0 && (uint64_t)k != stored_k)
    throw RuntimeFault("choice point arity mismatch");
  for (uint64_t i = 0; i < stored_k; i++) x[i] = lcl_[b - 9 - stored_k + i];
}

void Machine::update_cp(int k, uint64_t alt) {
  restore_cp_state(b_, k);
  lcl_[b_ - 1] = alt;
}

void Machine::delete_cp(int k) {
  restore_cp_state(b_, k);
  b_ = cp_prevb(b_);
}

void Machine::cut_to(uint64_t b) { b_ = b; }

void Machine::do_fail() { pc_ = b_ ? cp_alt(b_) : kStopFail; }

// ---------------------------------------------------------------------------
// Operand access
// ---------------------------------------------------------------------------

Word Machine::load_op(const COp& op) {
  switch (op.k) {
    case COp::K::Imm: return op.v;
    case COp::K::Flt: {
      Word raw;
      double d = op.f;
      std::memcpy(&raw, &d, 8);
      return raw;
    }
    case COp::K::Str: return op.v;
    case COp::K::CodeAddr: return op.v;
    case COp::K::Slot: {
      uint64_t a = slots_[op.v];
      if (!a)
        throw RuntimeFault("reference to undefined predicate " +
                           describe_symbol(slot_names_[op.v]));
      return a;
    }
    case COp::K::DataVal: return (Word)data_[op.v];
    case COp::K::DataAddr: return op.v;
    case COp::K::XReg: return x[op.v];
    case COp::K::YReg: return lcl_[e_ + 3 + op.v];
    case COp::K::XAddr: return op.v;
    case COp::K::YAddr: return op.v;
  }
  return 0;
}

void Machine::store_op(const COp& op, Word w) {
  switch (op.k) {
    case COp::K::XReg: x[op.v] = w; break;
    case COp::K::YReg: lcl_[e_ + 3 + op.v] = w; break;
    case COp::K::DataVal: data_[op.v] = (int64_t)w; break;
    default: throw RuntimeFault("bad move target");
  }
}

// ---------------------------------------------------------------------------
// Primitives
// ---------------------------------------------------------------------------

uint64_t Machine::call_prim(const Instr& I) {
  auto arg = [&](size_t i) { return load_op(I.ops[i]); };
  switch ((Prim)I.a) {
    case Prim::Allocate: {
      int n = (int)arg(0);
      uint64_t t = stack_top();
      uint64_t need = t + 3 + n;
      if (need >= lcl_.size()) {
        if (need >= opts.local_words) throw RuntimeFault("local stack overflow");
        lcl_.resize(std::min<uint64_t>(opts.local_words,
                                       std::max(need + 1, lcl_.size() * 2)),
                    0);
      }
      lcl_[t] = e_;
      lcl_[t + 1] = cp_;
      lcl_[t + 2] = (uint64_t)n;
      e_ = t;
      return 1;
    }
    case Prim::Deallocate:
      cp_ = lcl_[e_ + 1];
      e_ = lcl_[e_];
      return 1;
    case Prim::GetAtomTagged:
    case Prim::GetIntegerTagged:
      return unify(arg(0), x[I.ops[1].v]) ? 1 : 0;
    case Prim::GetFloat: {
      Word w = deref(x[I.ops[1].v]);
      if (tag_of(w) == REF) {
        Word f = make_float(I.ops[0].f);
        bind(payload_of(w), f);
        return 1;
      }
      if (tag_of(w) != FLT) return 0;
      return float_value(w) == I.ops[0].f ? 1 : 0;
    }
    case Prim::GetNil:
      return unify(atom_word("[]"), x[I.ops[0].v]) ? 1 : 0;
    case Prim::GetList: {
      Word w = deref(x[I.ops[0].v]);
      if (tag_of(w) == REF) {
        bind(payload_of(w), make_word(LST, h_));
        write_mode_ = true;
        return 1;
      }
      if (tag_of(w) != LST) return 0;
      s_ = payload_of(w);
      write_mode_ = false;
      return 1;
    }
    case Prim::GetStructureTagged: {
      Word fn = arg(0);
      Word w = deref(x[I.ops[1].v]);
      if (tag_of(w) == REF) {
        uint64_t a = push_heap(fn);
        bind(payload_of(w), make_word(STC, a));
        write_mode_ = true;
        return 1;
      }
      if (tag_of(w) != STC) return 0;
      if (heap_[payload_of(w)] != fn) return 0;
      s_ = payload_of(w) + 1;
      write_mode_ = false;
      return 1;
    }
    case Prim::GetValue:
      return unify(arg(0), x[I.ops[1].v]) ? 1 : 0;
    case Prim::PutVariable: return new_unbound();
    case Prim::PutAtomTagged:
    case Prim::PutIntegerTagged:
      return arg(0);
    case Prim::PutFloat: return make_float(I.ops[0].f);
    case Prim::PutNil: return atom_word("[]");
    case Prim::PutList:
      write_mode_ = true;
      return make_word(LST, h_);
    case Prim::PutStructureTagged: {
      uint64_t a = push_heap(arg(0));
      write_mode_ = true;
      return make_word(STC, a);
    }
    case Prim::UnifyVariable: {
      if (write_mode_) return new_unbound();
      return heap_[s_++];
    }
    case Prim::UnifyValue: {
      Word v = arg(0);
      if (write_mode_) {
        push_heap(v);
        return 1;
      }
      return unify(v, heap_[s_++]) ? 1 : 0;
    }
    case Prim::UnifyAtomTagged:
    case Prim::UnifyIntegerTagged: {
      Word v = arg(0);
      if (write_mode_) {
        push_heap(v);
        return 1;
      }
      return unify(v, heap_[s_++]) ? 1 : 0;
    }
    case Prim::UnifyFloat: {
      if (write_mode_) {
        push_heap(make_float(I.ops[0].f));
        return 1;
      }
      Word w = heap_[s_++];
      Word f = make_float(I.ops[0].f);
      return unify(f, w) ? 1 : 0;
    }
    case Prim::UnifyNil: {
      Word nil = atom_word("[]");
      if (write_mode_) {
        push_heap(nil);
        return 1;
      }
      return unify(nil, heap_[s_++]) ? 1 : 0;
    }
    case Prim::UnifyVoid: {
      uint64_t n = arg(0);
      if (write_mode_) {
        for (uint64_t i = 0; i < n; i++) new_unbound();
      } else {
        s_ += n;
      }
      return 1;
    }
    case Prim::CreateChoicePoint: {
      int k = I.aux ? (int)I.aux : (int)arg(1);
      create_cp(k, arg(0));
      return 1;
    }
    case Prim::UpdateChoicePoint: {
      int k = I.aux ? (int)I.aux : (int)arg(1);
      update_cp(k, arg(0));
      return 1;
    }
    case Prim::DeleteChoicePoint: {
      int k = I.aux ? (int)I.aux : (int)arg(0);
      delete_cp(k);
      return 1;
    }
    case Prim::SwitchOnTerm: {
      Word w = deref(x[0]);
      int bucket;
      switch (tag_of(w)) {
        case ATM: bucket = 1; break;
        case INT: bucket = 2; break;
        case LST: bucket = 3; break;
        case STC: bucket = 4; break;
        default: bucket = 0; break;  // REF, FLT, FDV take the variable bucket
      }
      if (!(I.aux & (1u << bucket))) return kFailHandler;
      int pos = 0;
      for (int k = 0; k < bucket; k++)
        if (I.aux & (1u << k)) pos++;
      return arg(pos);
    }
    case Prim::SwitchOnAtom:
    case Prim::SwitchOnInteger:
    case Prim::SwitchOnStructure: {
      uint64_t table = arg(0);
      Word w = deref(x[0]);
      Word key = w;
      if ((Prim)I.a == Prim::SwitchOnStructure) key = heap_[payload_of(w)];
      auto& m = swt_[table].entries;
      auto it = m.find(key);
      return it == m.end() ? kFailHandler : it->second;
    }
    case Prim::LoadCutLevel:
      x[I.ops[0].v] = make_int((int64_t)b_);
      return 1;
    case Prim::Cut: {
      Word w = deref(arg(0));
      b_ = (uint64_t)int_value(w);
      return 1;
    }
    case Prim::CreateAtom: return (uint64_t)intern(strpool_[I.ops[0].v]);
    case Prim::CreateAtomTagged: return atom_word(strpool_[I.ops[0].v]);
    case Prim::CreateFunctorArityTagged:
      return make_ftr((uint64_t)intern(strpool_[I.ops[0].v]), arg(1));
    case Prim::CreateSwtTable: {
      swt_.push_back({});
      return swt_.size() - 1;
    }
    case Prim::CreateSwtAtmElement: {
      uint64_t t = arg(0);
      Word key = make_word(ATM, arg(2));
      swt_[t].entries[key] = arg(3);
      return 1;
    }
    case Prim::CreateSwtIntElement: {
      uint64_t t = arg(0);
      Word key = make_int((int64_t)arg(2));
      swt_[t].entries[key] = arg(3);
      return 1;
    }
    case Prim::CreateSwtStcElement: {
      uint64_t t = arg(0);
      Word key = make_ftr(arg(2), arg(3));
      swt_[t].entries[key] = arg(4);
      return 1;
    }
    case Prim::CreatePred: {
      int name_atom = (int)arg(0);
      int arity = (int)arg(1);
      int file_atom = (int)arg(2);
      int line = (int)arg(3);
      int mask = (int)arg(4);
      uint64_t addr = arg(5);
      std::string name = atom_name(name_atom);
      if (mask & 1) {
        // dynamic predicate: interpreted clauses behind a dispatch stub
        auto it = preds_.find({name, arity});
        if (it != preds_.end()) {
          if (it->second.kind == PredEntry::Kind::Builtin)
            throw PrologError("permission_error",
                              "modify static_procedure " + name + "/" +
                                  std::to_string(arity));
          preds_.erase(it);  // reconsult replaces earlier definitions
        }
        PredEntry& e = ensure_dynamic(name, arity);
        e.mask = mask;
        e.file_atom = file_atom;
        e.line = line;
        return 1;
      }
      PredEntry e;
      e.kind = PredEntry::Kind::Static;
      e.name = name;
      e.arity = arity;
      e.addr = addr;
      e.mask = mask;
      e.file_atom = file_atom;
      e.line = line;
      preds_[{e.name, arity}] = std::move(e);
      return 1;
    }
    case Prim::NewObject:
      register_object_triple(arg(0), arg(1), arg(2));
      return 1;
    case Prim::EnsureLinked: return 1;  // link-time marker only
    case Prim::RunSystemDirective:
      run_directive(arg(0), false);
      return 1;
    case Prim::RunUserDirective:
      run_directive(arg(0), true);
      return 1;
    case Prim::DynDispatch: {
      std::string name = atom_name((int)arg(0));
      int arity = (int)arg(1);
      PredEntry* p = find_pred(name, arity);
      if (!p || p->kind != PredEntry::Kind::Dynamic)
        p = &ensure_dynamic(name, arity);
      return p->addr;
    }
    case Prim::BltVar: return tag_of(deref(x[I.ops[0].v])) == REF ? 1 : 0;
    case Prim::BltNonVar: return tag_of(deref(x[I.ops[0].v])) != REF ? 1 : 0;
    case Prim::BltAtom: return tag_of(deref(x[I.ops[0].v])) == ATM ? 1 : 0;
    case Prim::BltInteger: return tag_of(deref(x[I.ops[0].v])) == INT ? 1 : 0;
  }
  throw RuntimeFault("bad primitive");
}

// ---------------------------------------------------------------------------
// Execution loops
// ---------------------------------------------------------------------------

bool Machine::resume_loop() {
  while (true) {
    const Instr& I = code_[pc_];
    switch (I.k) {
      case Instr::K::StopSuccess: return true;
      case Instr::K::StopFail: return false;
      case Instr::K::PlCall: {
        uint64_t a = slots_[I.a];
        if (!a)
          throw RuntimeFault("call to undefined predicate " +
                             describe_symbol(slot_names_[I.a]));
        cp_ = pc_ + 1;
        pc_ = a;
        break;
      }
      case Instr::K::PlJump: {
        uint64_t a = slots_[I.a];
        if (!a)
          throw RuntimeFault("call to undefined predicate " +
                             describe_symbol(slot_names_[I.a]));
        pc_ = a;
        break;
      }
      case Instr::K::PlRet: pc_ = cp_; break;
      case Instr::K::PlFail: do_fail(); break;
      case Instr::K::Jump: pc_ = I.aux; break;
      case Instr::K::CallC: ret_val_ = call_prim(I); pc_++; break;
      case Instr::K::FailRet:
        if (ret_val_ == 0)
          do_fail();
        else
          pc_++;
        break;
      case Instr::K::JumpRet: pc_ = ret_val_; break;
      case Instr::K::MoveRet: store_op(I.ops[0], ret_val_); pc_++; break;
      case Instr::K::CRet:
        throw RuntimeFault("c_ret executed in Prolog context");
      case Instr::K::Move: store_op(I.ops[1], load_op(I.ops[0])); pc_++; break;
      case Instr::K::Builtin: {
        BuiltinResult r = builtins_[I.a].fn(*this);
        switch (r.k) {
          case BuiltinResult::K::True: pc_++; break;
          case BuiltinResult::K::Fail: do_fail(); break;
          case BuiltinResult::K::Jump: pc_ = r.addr; break;
        }
        break;
      }
      case Instr::K::DynEnter:
      case Instr::K::DynRetry:
        dyn_step(I);
        break;
    }
  }
}

bool Machine::run_prolog(uint64_t addr) {
  pc_ = addr;
  return resume_loop();
}

void Machine::run_ccode(uint64_t addr) {
  uint64_t p = addr;
  while (true) {
    const Instr& I = code_[p];
    switch (I.k) {
      case Instr::K::CRet: return;
      case Instr::K::CallC: ret_val_ = call_prim(I); p++; break;
      case Instr::K::MoveRet: store_op(I.ops[0], ret_val_); p++; break;
      case Instr::K::Move: store_op(I.ops[1], load_op(I.ops[0])); p++; break;
      case Instr::K::Jump: p = I.aux; break;
      default:
        throw RuntimeFault("unexpected instruction in initializer code");
    }
  }
}

void Machine::run_directive(uint64_t addr, bool user) {
  uint64_t saved_b = b_, saved_e = e_, saved_cp = cp_, saved_pc = pc_;
  uint64_t saved_h = h_;
  size_t tr = trail_.size();
  size_t cs = fd_->cs_top();
  create_cp(0, kStopFail);
  cp_ = kStopSuccess;
  if (user) user_directives_run++;
  bool ok = false;
  try {
    ok = run_prolog(addr);
  } catch (const PrologError& e) {
    *err << "warning: directive raised " << e.what() << std::endl;
  }
  if (!ok && !user) *err << "warning: directive failed" << std::endl;
  if (!ok && user) *err << "warning: initialization goal failed" << std::endl;
  untrail(tr);
  fd_->on_backtrack(cs);
  b_ = saved_b;
  e_ = saved_e;
  cp_ = saved_cp;
  pc_ = saved_pc;
  h_ = saved_h;
}

// ---------------------------------------------------------------------------
// Term <-> heap conversion
// ---------------------------------------------------------------------------

Word Machine::term_to_heap(const TermPtr& t, std::map<uint64_t, Word>* varmap) {
  std::map<uint64_t, Word> local;
  if (!varmap) varmap = &local;  // variables still share within this term
  switch (t->kind) {
    case Term::Kind::Var: {
      auto it = varmap->find(t->serial);
      if (it != varmap->end()) return it->second;
      Word w = new_unbound();
      (*varmap)[t->serial] = w;
      return w;
    }
    case Term::Kind::Atom: return atom_word(t->name);
    case Term::Kind::Int: return make_int(t->ival);
    case Term::Kind::Float: return make_float(t->fval);
    case Term::Kind::Compound: {
      if (t->is_cons()) {
        Word car = term_to_heap(t->args[0], varmap);
        Word cdr = term_to_heap(t->args[1], varmap);
        uint64_t a = push_heap(car);
        push_heap(cdr);
        return make_word(LST, a);
      }
      std::vector<Word> args;
      args.reserve(t->args.size());
      for (auto& a : t->args) args.push_back(term_to_heap(a, varmap));
      uint64_t a = push_heap(make_ftr((uint64_t)intern(t->name), t->args.size()));
      for (Word w : args) push_heap(w);
      return make_word(STC, a);
    }
  }
  return 0;
}

namespace {
struct HeapReader {
  Machine& m;
  bool display;
  std::map<uint64_t, TermPtr> vars;

  TermPtr read(Word w) {
    w = m.deref(w);
    switch (tag_of(w)) {
      case REF: {
        uint64_t a = payload_of(w);
        auto it = vars.find(a);
        if (it != vars.end()) return it->second;
        auto v = Term::var("_G" + std::to_string(a));
        vars[a] = v;
        return v;
      }
      case ATM: return Term::atom(m.atom_name((int)payload_of(w)));
      case INT: return Term::integer(int_value(w));
      case FLT: return Term::floating(m.float_value(w));
      case FDV: {
        int h = (int)payload_of(w);
        const auto& dom = m.fd().var(h).dom;
        if (dom.singleton()) return Term::integer(dom.lo);
        if (display) return Term::var(m.fdvar_display(h));
        auto it = vars.find((uint64_t)h | (1ull << 62));
        if (it != vars.end()) return it->second;
        auto v = Term::var("_#" + std::to_string(h));
        vars[(uint64_t)h | (1ull << 62)] = v;
        return v;
      }
      case LST: {
        // iterative along the spine
        std::vector<TermPtr> items;
        Word cur = w;
        while (tag_of(cur) == LST) {
          uint64_t p = payload_of(cur);
          items.push_back(read(m.heap_value(p)));
          cur = m.deref(m.heap_value(p + 1));
        }
        TermPtr tail = nullptr;
        if (!(tag_of(cur) == ATM &&
              m.atom_name((int)payload_of(cur)) == "[]"))
          tail = read(cur);
        return mk_list(items, tail);
      }
      case STC: {
        uint64_t p = payload_of(w);
        Word fn = m.heap_value(p);
        uint64_t n = ftr_arity(fn);
        std::vector<TermPtr> args;
        for (uint64_t i = 1; i <= n; i++) args.push_back(read(m.heap_value(p + i)));
        return Term::compound(m.atom_name((int)ftr_atom(fn)), std::move(args));
      }
      default: return Term::atom("?");
    }
  }
};
}  // namespace

TermPtr Machine::heap_to_term(Word w, bool display) {
  HeapReader r{*this, display, {}};
  return r.read(w);
}

std::string Machine::write_word(Word w, bool quoted) {
  return write_term(heap_to_term(w, true), op_table, {.quoted = quoted});
}

std::string Machine::fdvar_display(int handle) {
  return "_#" + std::to_string(handle) + "(" +
         fd_->var(handle).dom.to_string() + ")";
}

// ---------------------------------------------------------------------------
// Arithmetic & comparison
// ---------------------------------------------------------------------------

Machine::Num Machine::eval_arith(Word w) {
  w = deref(w);
  switch (tag_of(w)) {
    case INT: return Num{false, int_value(w), 0};
    case FLT: return Num{true, 0, float_value(w)};
    case FDV: {
      const auto& dom = fd_->var((int)payload_of(w)).dom;
      if (dom.singleton()) return Num{false, dom.lo, 0};
      throw PrologError("instantiation_error", "unbound fd variable in arithmetic");
    }
    case REF:
      throw PrologError("instantiation_error", "unbound variable in arithmetic");
    case ATM: {
      const std::string& n = atom_name((int)payload_of(w));
      if (n == "max_integer") return Num{false, fd::kMaxInteger, 0};
      if (n == "pi") return Num{true, 0, M_PI};
      if (n == "e") return Num{true, 0, M_E};
      throw PrologError("type_error", "evaluable expected: " + n + "/0");
    }
    case STC: break;
    default: throw PrologError("type_error", "evaluable expected");
  }
  uint64_t p = payload_of(w);
  Word fn = heap_[p];
  const std::string& name = atom_name((int)ftr_atom(fn));
  uint64_t n = ftr_arity(fn);
  auto a1 = [&]() { return eval_arith(heap_[p + 1]); };
  auto a2 = [&]() { return eval_arith(heap_[p + 2]); };
  auto both_int = [](const Num& a, const Num& b) {
    return !a.is_float && !b.is_float;
  };
  if (n == 1) {
    Num a = a1();
    if (name == "-")
      return a.is_float ? Num{true, 0, -a.f} : Num{false, -a.i, 0};
    if (name == "+") return a;
    if (name == "abs")
      return a.is_float ? Num{true, 0, std::fabs(a.f)}
                        : Num{false, std::llabs(a.i), 0};
    if (name == "sign") {
      if (a.is_float) return Num{true, 0, a.f > 0 ? 1.0 : a.f < 0 ? -1.0 : 0.0};
      return Num{false, a.i > 0 ? 1 : a.i < 0 ? -1 : 0, 0};
    }
    if (name == "\\") {
      if (a.is_float) throw PrologError("type_error", "integer expected in \\/1");
      return Num{false, ~a.i, 0};
    }
    if (name == "float") return Num{true, 0, a.as_double()};
    if (name == "integer") return Num{false, (int64_t)a.as_double(), 0};
    if (name == "truncate") return Num{false, (int64_t)std::trunc(a.as_double()), 0};
    if (name == "round") return Num{false, (int64_t)std::llround(a.as_double()), 0};
    if (name == "floor") return Num{false, (int64_t)std::floor(a.as_double()), 0};
    if (name == "ceiling") return Num{false, (int64_t)std::ceil(a.as_double()), 0};
    if (name == "sqrt") return Num{true, 0, std::sqrt(a.as_double())};
    if (name == "sin") return Num{true, 0, std::sin(a.as_double())};
    if (name == "cos") return Num{true, 0, std::cos(a.as_double())};
    if (name == "log") return Num{true, 0, std::log(a.as_double())};
    if (name == "exp") return Num{true, 0, std::exp(a.as_double())};
  } else if (n == 2) {
    Num a = a1(), b = a2();
    if (name == "+") {
      if (both_int(a, b)) return Num{false, a.i + b.i, 0};
      return Num{true, 0, a.as_double() + b.as_double()};
    }
    if (name == "-") {
      if (both_int(a, b)) return Num{false, a.i - b.i, 0};
      return Num{true, 0, a.as_double() - b.as_double()};
    }
    if (name == "*") {
      if (both_int(a, b)) return Num{false, a.i * b.i, 0};
      return Num{true, 0, a.as_double() * b.as_double()};
    }
    if (name == "/") {
      if (both_int(a, b)) {
        if (b.i == 0) throw PrologError("evaluation_error", "zero_divisor");
        if (a.i % b.i == 0) return Num{false, a.i / b.i, 0};
        return Num{true, 0, (double)a.i / (double)b.i};
      }
      if (b.as_double() == 0)
        throw PrologError("evaluation_error", "zero_divisor");
      return Num{true, 0, a.as_double() / b.as_double()};
    }
    if (name == "//") {
      if (!both_int(a, b))
        throw PrologError("type_error", "integer expected in (//)/2");
      if (b.i == 0) throw PrologError("evaluation_error", "zero_divisor");
      return Num{false, a.i / b.i, 0};
    }
    if (name == "mod") {
      if (!both_int(a, b))
        throw PrologError("type_error", "integer expected in mod/2");
      if (b.i == 0) throw PrologError("evaluation_error", "zero_divisor");
      int64_t r = a.i % b.i;
      if (r != 0 && (r < 0) != (b.i < 0)) r += b.i;
      return Num{false, r, 0};
    }
    if (name == "rem") {
      if (!both_int(a, b))
        throw PrologError("type_error", "integer expected in rem/2");
      if (b.i == 0) throw PrologError("evaluation_error", "zero_divisor");
      return Num{false, a.i % b.i, 0};
    }
    if (name == "min") {
      if (both_int(a, b)) return Num{false, std::min(a.i, b.i), 0};
      return Num{true, 0, std::min(a.as_double(), b.as_double())};
    }
    if (name == "max") {
      if (both_int(a, b)) return Num{false, std::max(a.i, b.i), 0};
      return Num{true, 0, std::max(a.as_double(), b.as_double())};
    }
    if (name == ">>") return Num{false, a.i >> b.i, 0};
    if (name == "<<") return Num{false, a.i << b.i, 0};
    if (name == "/\\") return Num{false, a.i & b.i, 0};
    if (name == "\\/") return Num{false, a.i | b.i, 0};
    if (name == "xor") return Num{false, a.i ^ b.i, 0};
    if (name == "**") return Num{true, 0, std::pow(a.as_double(), b.as_double())};
    if (name == "^") {
      if (both_int(a, b)) {
        int64_t r = 1, base = a.i, e = b.i;
        if (e < 0) throw PrologError("type_error", "negative exponent in (^)/2");
        while (e) {
          if (e & 1) r *= base;
          base *= base;
          e >>= 1;
        }
        return Num{false, r, 0};
      }
      return Num{true, 0, std::pow(a.as_double(), b.as_double())};
    }
  }
  throw PrologError("type_error",
                    "evaluable expected: " + name + "/" + std::to_string(n));
}

int Machine::compare_words(Word a, Word b) {
  a = deref(a);
  b = deref(b);
  // an FD variable reduced to a singleton behaves as its integer value
  if (tag_of(a) == FDV) {
    const auto& d = fd_->var((int)payload_of(a)).dom;
    if (d.singleton()) a = make_int(d.lo);
  }
  if (tag_of(b) == FDV) {
    const auto& d = fd_->var((int)payload_of(b)).dom;
    if (d.singleton()) b = make_int(d.lo);
  }
  auto rank = [](Tag t) {
    switch (t) {
      case REF: return 0;
      case FDV: return 1;
      case FLT: return 2;
      case INT: return 2;
      case ATM: return 3;
      default: return 4;  // LST / STC
    }
  };
  Tag ta = tag_of(a), tb = tag_of(b);
  int ra = rank(ta), rb = rank(tb);
  if (ra != rb) return ra < rb ? -1 : 1;
  switch (ra) {
    case 0:
    case 1: {
      uint64_t pa = payload_of(a), pb = payload_of(b);
      return pa < pb ? -1 : pa > pb ? 1 : 0;
    }
    case 2: {
      double xa = ta == INT ? (double)int_value(a) : float_value(a);
      double xb = tb == INT ? (double)int_value(b) : float_value(b);
      if (xa != xb) return xa < xb ? -1 : 1;
      if (ta != tb) return ta == FLT ? -1 : 1;
      return 0;
    }
    case 3: {
      const std::string& na = atom_name((int)payload_of(a));
      const std::string& nb = atom_name((int)payload_of(b));
      return na < nb ? -1 : na > nb ? 1 : 0;
    }
    default: {
      uint64_t pa, pb, na, nb;
      std::string fa, fb;
      if (ta == LST) {
        na = 2;
        fa = ".";
        pa = payload_of(a) - 1;  // args at pa+1, pa+2
      } else {
        Word fn = heap_[payload_of(a)];
        na = ftr_arity(fn);
        fa = atom_name((int)ftr_atom(fn));
        pa = payload_of(a);
      }
      if (tb == LST) {
        nb = 2;
        fb = ".";
        pb = payload_of(b) - 1;
      } else {
        Word fn = heap_[payload_of(b)];
        nb = ftr_arity(fn);
        fb = atom_name((int)ftr_atom(fn));
        pb = payload_of(b);
      }
      if (na != nb) return na < nb ? -1 : 1;
      if (fa != fb) return fa < fb ? -1 : 1;
      for (uint64_t i = 1; i <= na; i++) {
        int c = compare_words(heap_[pa + i], heap_[pb + i]);
        if (c) return c;
      }
      return 0;
    }
  }
}

// ---------------------------------------------------------------------------
// Predicate table & dispatch
// ---------------------------------------------------------------------------

PredEntry* Machine::find_pred(const std::string& name, int arity) {
  auto it = preds_.find({name, arity});
  return it == preds_.end() ? nullptr : &it->second;
}

uint64_t Machine::pred_entry_addr(const std::string& name, int arity) {
  PredEntry* p = find_pred(name, arity);
  if (!p)
    throw PrologError("existence_error",
                      "procedure " + name + "/" + std::to_string(arity));
  return p->addr;
}

BuiltinResult Machine::dispatch_goal(Word goal, bool allow_trace) {
  Word g = deref(goal);
  std::string name;
  int arity = 0;
  switch (tag_of(g)) {
    case REF:
      throw PrologError("instantiation_error", "unbound goal in call/1");
    case ATM:
      name = atom_name((int)payload_of(g));
      break;
    case STC: {
      uint64_t p = payload_of(g);
      Word fn = heap_[p];
      name = atom_name((int)ftr_atom(fn));
      arity = (int)ftr_arity(fn);
      // copy arguments before clobbering the registers
      std::vector<Word> args(arity);
      for (int i = 0; i < arity; i++) args[i] = heap_[p + 1 + i];
      for (int i = 0; i < arity; i++) x[i] = args[i];
      break;
    }
    case LST: {
      // traditional: a list as a goal consults the named files
      Word cur = g;
      std::vector<std::string> files;
      while (tag_of(cur) == LST) {
        Word head = deref(heap_[payload_of(cur)]);
        if (tag_of(head) != ATM)
          throw PrologError("type_error", "atom expected in consult list");
        files.push_back(atom_name((int)payload_of(head)));
        cur = deref(heap_[payload_of(cur) + 1]);
      }
      for (auto& f : files) consult_file(f);
      return BuiltinResult::ok();
    }
    default:
      throw PrologError("type_error", "callable expected in call/1");
  }
  PredEntry* p = find_pred(name, arity);
  if (!p)
    throw PrologError("existence_error",
                      "procedure " + name + "/" + std::to_string(arity));
  if (allow_trace && trace && p->kind == PredEntry::Kind::Dynamic &&
      name[0] != '$') {
    x[0] = g;
    return BuiltinResult::jump(pred_entry_addr("$traced", 1));
  }
  return BuiltinResult::jump(p->addr);
}

bool Machine::run_goal_word(Word goal) {
  uint64_t saved_b = b_, saved_e = e_, saved_cp = cp_, saved_pc = pc_;
  create_cp(0, kStopFail);
  cp_ = kStopSuccess;
  x[0] = goal;
  bool ok = run_prolog(pred_entry_addr("call", 1));
  if (ok) b_ = saved_b;  // keep bindings, drop the barrier
  e_ = saved_e;
  cp_ = saved_cp;
  pc_ = saved_pc;
  return ok;
}

// ---------------------------------------------------------------------------
// Queries
// ---------------------------------------------------------------------------

Machine::QueryState Machine::query_start(
    const TermPtr& goal, const std::map<std::string, TermPtr>& vars) {
  QueryState q;
  q.trail_mark = trail_.size();
  q.h_mark = h_;
  q.saved_b = b_;
  q.saved_e = e_;
  q.saved_cp = cp_;
  q.cs_mark = fd_->cs_top();
  create_cp(0, kStopFail);
  q.barrier_b = b_;
  std::map<uint64_t, Word> varmap;
  q.goal = term_to_heap(goal, &varmap);
  for (auto& [name, v] : vars) {
    auto it = varmap.find(v->serial);
    if (it != varmap.end()) q.vars[name] = it->second;
  }
  q.open = true;
  return q;
}

bool Machine::query_next(QueryState& q) {
  if (!q.open) return false;
  bool ok;
  try {
    if (!q.started) {
      q.started = true;
      cp_ = kStopSuccess;
      x[0] = q.goal;
      ok = run_prolog(pred_entry_addr("call", 1));
    } else {
      do_fail();
      ok = resume_loop();
    }
  } catch (...) {
    query_finish(q);
    throw;
  }
  q.more = ok;
  if (!ok) query_finish(q);
  return ok;
}

TermPtr Machine::query_value(QueryState& q, const std::string& name) {
  auto it = q.vars.find(name);
  if (it == q.vars.end()) return nullptr;
  return heap_to_term(it->second, true);
}

std::string Machine::query_value_string(QueryState& q, const std::string& name) {
  auto it = q.vars.find(name);
  if (it == q.vars.end()) return "";
  return write_word(it->second, true);
}

void Machine::query_finish(QueryState& q) {
  if (!q.open) return;
  q.open = false;
  untrail(q.trail_mark);
  fd_->on_backtrack(q.cs_mark);
  h_ = q.h_mark;
  b_ = q.saved_b;
  e_ = q.saved_e;
  cp_ = q.saved_cp;
  findall_stack.clear();
}

std::vector<std::map<std::string, std::string>> Machine::solve(
    const std::string& goal_text, int max_solutions) {
  Reader r(goal_text, &op_table);
  auto rr = r.read();
  if (!rr) throw PrologError("syntax_error", "empty query");
  std::map<std::string, TermPtr> vars;
  for (auto& [n, v] : rr->variables) vars[n] = v;
  QueryState q = query_start(rr->term, vars);
  std::vector<std::map<std::string, std::string>> out;
  while ((max_solutions < 0 || (int)out.size() < max_solutions) &&
         query_next(q)) {
    std::map<std::string, std::string> sol;
    for (auto& [n, w] : q.vars) sol[n] = write_word(w, true);
    out.push_back(std::move(sol));
  }
  query_finish(q);
  return out;
}

bool Machine::once(const std::string& goal_text) {
  Reader r(goal_text, &op_table);
  auto rr = r.read();
  if (!rr) throw PrologError("syntax_error", "empty query");
  QueryState q = query_start(rr->term, {});
  bool ok = query_next(q);
  query_finish(q);
  return ok;
}

void Machine::do_fail_from_builtin() {}

bool Machine::unify_test_undo(Word a, Word b) {
  create_cp(0, kStopFail);
  bool r = unify(a, b);
  restore_cp_state(b_, 0);
  b_ = cp_prevb(b_);
  return r;
}

}  // namespace prolite
