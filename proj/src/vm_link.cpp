#include <algorithm>
#include <sstream>

#include "vm_internal.hpp"

namespace prolite {

// ---------------------------------------------------------------------------
// Symbol analysis & linking
// ---------------------------------------------------------------------------

namespace {

struct ObjSymbols {
  std::set<std::string> provides;  // global code + data symbols
  std::set<std::string> internal;  // labels, local blocks, local data
  std::set<std::string> refs;      // referenced names
};

ObjSymbols analyze(const MaObject& o) {
  ObjSymbols s;
  for (auto& b : o.blocks) {
    if (b.vis == MaBlock::Vis::Global)
      s.provides.insert(b.symbol);
    else
      s.internal.insert(b.symbol);
    for (auto& i : b.code) {
      switch (i.op) {
        case MaInstr::Op::Label: s.internal.insert(i.sym); break;
        case MaInstr::Op::PlJump:
        case MaInstr::Op::PlCall:
        case MaInstr::Op::Jump: s.refs.insert(i.sym); break;
        case MaInstr::Op::CallC:
          for (auto& a : i.args)
            if (a.kind == MaArg::Kind::Addr) s.refs.insert(a.s);
          break;
        default: break;
      }
    }
  }
  for (auto& d : o.data) {
    if (d.global)
      s.provides.insert(d.name);
    else
      s.internal.insert(d.name);
  }
  return s;
}

}  // namespace

LinkedImage link_image(std::vector<MaObject> objects,
                       const std::vector<MaObject>& library,
                       const std::set<std::string>& predefined,
                       bool top_level) {
  LinkedImage img;
  img.top_level = top_level;
  img.objects = std::move(objects);

  std::vector<ObjSymbols> syms;
  std::set<std::string> defined = predefined;
  auto add_object_symbols = [&](const MaObject& o) {
    ObjSymbols s = analyze(o);
    for (auto& p : s.provides) {
      if (defined.count(p))
        throw LinkError("duplicate definition of " + describe_symbol(p) + " in " +
                        o.name);
      defined.insert(p);
    }
    syms.push_back(std::move(s));
  };
  for (auto& o : img.objects) add_object_symbols(o);

  std::vector<ObjSymbols> lib_syms;
  lib_syms.reserve(library.size());
  for (auto& m : library) lib_syms.push_back(analyze(m));

  // pull in library members until the needed set is stable
  std::vector<bool> included(library.size(), false);
  bool changed = true;
  while (changed) {
    changed = false;
    std::set<std::string> needed;
    for (auto& s : syms)
      for (auto& r : s.refs)
        if (!s.internal.count(r) && !defined.count(r)) needed.insert(r);
    if (needed.empty()) break;
    for (size_t k = 0; k < library.size(); k++) {
      if (included[k]) continue;
      bool want = false;
      for (auto& p : lib_syms[k].provides)
        if (needed.count(p)) {
          want = true;
          break;
        }
      if (want) {
        included[k] = true;
        img.objects.push_back(library[k]);
        add_object_symbols(library[k]);
        changed = true;
      }
    }
    if (!changed) {
      std::string msg = "undefined symbol(s):";
      for (auto& r : needed) msg += " " + describe_symbol(r);
      throw LinkError(msg);
    }
  }
  return img;
}

// ---------------------------------------------------------------------------
// Image container
// ---------------------------------------------------------------------------

std::string serialize_image(const LinkedImage& img) {
  std::ostringstream out;
  out << "%%prolite-image 1\n";
  out << "%%top-level " << (img.top_level ? 1 : 0) << "\n";
  for (auto& o : img.objects) {
    std::string text = emit_ma(o);
    size_t lines = std::count(text.begin(), text.end(), '\n');
    out << "%%object " << lines << " " << o.name << "\n";
    out << text;
  }
  return out.str();
}

LinkedImage parse_image(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("%%prolite-image", 0) != 0)
    throw LinkError("not an image file");
  LinkedImage img;
  while (std::getline(in, line)) {
    if (line.rfind("%%top-level ", 0) == 0) {
      img.top_level = line.substr(12) == "1";
    } else if (line.rfind("%%object ", 0) == 0) {
      std::istringstream hdr(line.substr(9));
      size_t nlines;
      std::string name;
      hdr >> nlines;
      std::getline(hdr, name);
      if (!name.empty() && name[0] == ' ') name = name.substr(1);
      std::string body;
      for (size_t k = 0; k < nlines; k++) {
        if (!std::getline(in, line)) throw LinkError("truncated image file");
        body += line;
        body += "\n";
      }
      img.objects.push_back(parse_ma(body, name));
    } else if (!line.empty()) {
      throw LinkError("bad image line: " + line);
    }
  }
  return img;
}

// ---------------------------------------------------------------------------
// Object decoding
// ---------------------------------------------------------------------------

uint32_t Machine::slot_id(const std::string& sym) {
  auto it = slot_ids_.find(sym);
  if (it != slot_ids_.end()) return it->second;
  uint32_t id = (uint32_t)slots_.size();
  slots_.push_back(0);
  slot_ids_[sym] = id;
  slot_names_.push_back(sym);
  return id;
}

void Machine::load_object_code(const MaObject& obj) {
  file_atom_hint = obj.name;

  // data segment
  std::map<std::string, std::pair<size_t, int64_t>> local_data;  // base, size
  for (auto& d : obj.data) {
    size_t base = data_.size();
    data_.resize(base + (size_t)d.size, d.init.value_or(0));
    if (d.global) {
      if (global_data_.count(d.name))
        throw LinkError("duplicate global data symbol: " + d.name);
      global_data_[d.name] = base;
    }
    local_data[d.name] = {base, d.size};
  }

  // pass 1: assign addresses to every non-label instruction
  std::map<std::string, uint64_t> local_code;  // labels and block symbols
  uint64_t addr = code_.size();
  for (auto& b : obj.blocks) {
    local_code[b.symbol] = addr;
    for (auto& i : b.code) {
      if (i.op == MaInstr::Op::Label)
        local_code[i.sym] = addr;
      else
        addr++;
    }
  }

  auto data_index = [&](const std::string& name, int64_t idx,
                        bool indexed) -> size_t {
    auto it = local_data.find(name);
    size_t base;
    int64_t size;
    if (it != local_data.end()) {
      base = it->second.first;
      size = it->second.second;
    } else {
      auto g = global_data_.find(name);
      if (g == global_data_.end())
        throw LinkError("unknown data symbol: " + name + " in " + obj.name);
      base = g->second;
      size = indexed ? idx + 1 : 1;  // cross-object size not tracked
    }
    if (indexed && (idx < 0 || idx >= size))
      throw LinkError("data index out of range: " + name + "(" +
                      std::to_string(idx) + ")");
    return base + (size_t)(indexed ? idx : 0);
  };

  auto decode_arg = [&](const MaArg& a) -> COp {
    COp op;
    switch (a.kind) {
      case MaArg::Kind::Int:
        op.k = COp::K::Imm;
        op.v = (uint64_t)a.i;
        break;
      case MaArg::Kind::Flt:
        op.k = COp::K::Flt;
        op.f = a.f;
        break;
      case MaArg::Kind::Str:
        op.k = COp::K::Str;
        op.v = strpool_.size();
        strpool_.push_back(a.s);
        break;
      case MaArg::Kind::Addr: {
        auto lc = local_code.find(a.s);
        if (lc != local_code.end()) {
          op.k = COp::K::CodeAddr;
          op.v = lc->second;
        } else if (local_data.count(a.s) || global_data_.count(a.s)) {
          op.k = COp::K::DataAddr;
          op.v = data_index(a.s, 0, false);
        } else {
          op.k = COp::K::Slot;
          op.v = slot_id(a.s);
        }
        break;
      }
      case MaArg::Kind::MemVal:
        op.k = COp::K::DataVal;
        op.v = data_index(a.s, a.i, a.indexed);
        break;
      case MaArg::Kind::XReg:
        op.k = COp::K::XReg;
        op.v = (uint64_t)a.i;
        break;
      case MaArg::Kind::YReg:
        op.k = COp::K::YReg;
        op.v = (uint64_t)a.i;
        break;
      case MaArg::Kind::XRegAddr:
        op.k = COp::K::XAddr;
        op.v = (uint64_t)a.i;
        break;
      case MaArg::Kind::YRegAddr:
        op.k = COp::K::YAddr;
        op.v = (uint64_t)a.i;
        break;
    }
    return op;
  };

  // pass 2: decode
  uint64_t initializer_addr = 0;
  for (auto& b : obj.blocks) {
    bool last_was_callc = false;
    if (!b.pl_code && b.vis == MaBlock::Vis::Initializer)
      initializer_addr = local_code[b.symbol];
    if (b.vis == MaBlock::Vis::Global) {
      uint32_t sid = slot_id(b.symbol);
      slots_[sid] = local_code[b.symbol];
    }
    for (auto& mi : b.code) {
      if (mi.op == MaInstr::Op::Label) continue;
      Instr I;
      switch (mi.op) {
        case MaInstr::Op::PlJump:
        case MaInstr::Op::PlCall: {
          I.k = mi.op == MaInstr::Op::PlJump ? Instr::K::PlJump : Instr::K::PlCall;
          auto lc = local_code.find(mi.sym);
          if (lc != local_code.end()) {
            // local target: still routed through a slot for uniformity
            uint32_t sid = slot_id(obj.name + "##" + mi.sym);
            slots_[sid] = lc->second;
            I.a = sid;
          } else {
            I.a = slot_id(mi.sym);
          }
          break;
        }
        case MaInstr::Op::Jump: {
          I.k = Instr::K::Jump;
          auto lc = local_code.find(mi.sym);
          if (lc == local_code.end())
            throw LinkError("jump to unknown label: " + mi.sym);
          I.aux = lc->second;
          break;
        }
        case MaInstr::Op::PlRet: I.k = Instr::K::PlRet; break;
        case MaInstr::Op::PlFail: I.k = Instr::K::PlFail; break;
        case MaInstr::Op::CRet: I.k = Instr::K::CRet; break;
        case MaInstr::Op::FailRet:
        case MaInstr::Op::JumpRet:
        case MaInstr::Op::MoveRet: {
          if (!last_was_callc)
            throw LinkError("*_ret without a preceding call_c in " + obj.name +
                            " (" + b.symbol + ")");
          I.k = mi.op == MaInstr::Op::FailRet   ? Instr::K::FailRet
                : mi.op == MaInstr::Op::JumpRet ? Instr::K::JumpRet
                                                : Instr::K::MoveRet;
          for (auto& a : mi.args) I.ops.push_back(decode_arg(a));
          break;
        }
        case MaInstr::Op::Move: {
          I.k = Instr::K::Move;
          for (auto& a : mi.args) I.ops.push_back(decode_arg(a));
          break;
        }
        case MaInstr::Op::CallC: {
          I.k = Instr::K::CallC;
          uint32_t prim;
          uint64_t aux = 0;
          if (!prim_lookup(mi.sym, prim, aux))
            throw LinkError("unknown runtime function: " + mi.sym);
          I.a = prim;
          I.aux = aux;
          for (auto& a : mi.args) I.ops.push_back(decode_arg(a));
          break;
        }
        case MaInstr::Op::Label: break;
      }
      last_was_callc = mi.op == MaInstr::Op::CallC;
      code_.push_back(std::move(I));
    }
  }

  // run the registration initializer (Pl_New_Object)
  if (initializer_addr) run_ccode(initializer_addr);
}

void Machine::load_image(const LinkedImage& img) {
  has_top_level = img.top_level;
  for (auto& o : img.objects) load_object_code(o);
}

void Machine::dynamic_load(const MaObject& obj) {
  load_object_code(obj);
  if (!objects.empty()) {
    run_object_triple(objects.back());
    objects.back().pro_ini = 0;  // mark as already run for start()
  }
}

void Machine::register_object_triple(uint64_t a, uint64_t b, uint64_t c) {
  LoadedObject o;
  o.name = file_atom_hint;
  o.pro_ini = a;
  o.sys_dir = b;
  o.usr_dir = c;
  objects.push_back(o);
}

void Machine::run_object_triple(const LoadedObject& o) {
  if (o.pro_ini) run_ccode(o.pro_ini);
  if (o.sys_dir) run_ccode(o.sys_dir);
  if (o.usr_dir) run_ccode(o.usr_dir);
}

int Machine::start(const std::vector<std::string>& argv) {
  (void)argv;
  try {
    // initializers run per object, in reverse registration order
    std::vector<LoadedObject> pending;
    for (auto& o : objects)
      if (o.pro_ini) pending.push_back(o);
    for (auto& o : objects)
      if (o.pro_ini) o.pro_ini = 0;
    for (auto it = pending.rbegin(); it != pending.rend(); ++it)
      run_object_triple(*it);
    bool toplevel_ran = false;
    if (has_top_level) {
      repl();
      toplevel_ran = true;
    }
    if (toplevel_ran || user_directives_run > 0) return 0;
    *err << "warning: no initialization goal executed and no top level linked"
         << std::endl;
    return 1;
  } catch (const HaltException& h) {
    return h.code;
  }
}

}  // namespace prolite
