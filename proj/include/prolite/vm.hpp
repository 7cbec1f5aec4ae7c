#pragma once

#include <iostream>
#include <map>
#include <memory>
#include <set>

#include "prolite/fd_engine.hpp"
#include "prolite/ma.hpp"
#include "prolite/pl2wam.hpp"
#include "prolite/tags.hpp"
#include "prolite/term.hpp"

namespace prolite {

using rt::Word;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class PrologError : public std::runtime_error {
 public:
  PrologError(std::string kind, const std::string& msg)
      : std::runtime_error(kind + ": " + msg), kind(std::move(kind)) {}
  std::string kind;
};

struct HaltException {
  int code = 0;
};

class RuntimeFault : public std::runtime_error {
 public:
  explicit RuntimeFault(const std::string& m) : std::runtime_error(m) {}
};

class LinkError : public std::runtime_error {
 public:
  explicit LinkError(const std::string& m) : std::runtime_error(m) {}
};

// ---------------------------------------------------------------------------
// Linking
// ---------------------------------------------------------------------------

struct LinkedImage {
  std::vector<MaObject> objects;  // in link order
  bool top_level = true;
};

/// Selects library members by need (reference fixpoint); rejects duplicate
/// global definitions; reports undefined symbols with decoded names.
LinkedImage link_image(std::vector<MaObject> objects,
                       const std::vector<MaObject>& library,
                       const std::set<std::string>& predefined,
                       bool top_level = true);

/// Symbols the runtime provides natively (built-in predicates).
const std::set<std::string>& builtin_symbol_set();

std::string serialize_image(const LinkedImage& img);
LinkedImage parse_image(const std::string& text);

// ---------------------------------------------------------------------------
// Decoded code
// ---------------------------------------------------------------------------

struct COp {
  enum class K {
    Imm,      // integer / tagged word
    Flt,
    Str,      // string pool id
    CodeAddr, // resolved local label
    Slot,     // symbol slot (code)
    DataVal,  // data word index (read/write)
    DataAddr, // data word index (address-of)
    XReg,
    YReg,
    XAddr,
    YAddr,
  };
  K k = K::Imm;
  uint64_t v = 0;
  double f = 0;
};

struct Instr {
  enum class K : uint8_t {
    StopSuccess,
    StopFail,
    PlCall,
    PlJump,
    PlRet,
    PlFail,
    Jump,
    CallC,
    FailRet,
    JumpRet,
    MoveRet,
    CRet,
    Move,
    Builtin,
    DynEnter,
    DynRetry,
  };
  K k = K::StopSuccess;
  uint32_t a = 0;    // slot / builtin id / dyn pred id / prim id
  uint64_t aux = 0;  // jump target; switch bucket mask; choice-point k
  std::vector<COp> ops;
};

class Machine;

struct BuiltinResult {
  enum class K { True, Fail, Jump };
  K k = K::True;
  uint64_t addr = 0;
  static BuiltinResult ok() { return {}; }
  static BuiltinResult fail() { return {K::Fail, 0}; }
  static BuiltinResult jump(uint64_t a) { return {K::Jump, a}; }
};

struct BuiltinSpec {
  const char* name;
  int arity;
  bool fd = false;
  BuiltinResult (*fn)(Machine&) = nullptr;
};

struct DynClause {
  TermPtr clause;  // (Head :- Body) or Head
  uint64_t birth = 0;
  uint64_t death = ~0ull;
};

struct PredEntry {
  enum class Kind { Static, Dynamic, Builtin };
  Kind kind = Kind::Static;
  std::string name;
  int arity = 0;
  uint64_t addr = 0;  // entry address (static code / builtin stub / dyn stub)
  int mask = 0;       // bit0 dynamic, bit1 public, bit2 built_in, bit3 built_in_fd
  int file_atom = -1;
  int line = 0;
  std::vector<DynClause> clauses;
  uint64_t generation = 0;
};

// ---------------------------------------------------------------------------
// Machine
// ---------------------------------------------------------------------------

class Machine {
 public:
  struct Options {
    size_t heap_words = 8u << 20;
    size_t local_words = 4u << 20;
    size_t trail_entries = 2u << 20;
    size_t cstr_frames = 1u << 20;
    bool trace = false;
  };

  Machine();
  explicit Machine(Options o);

  std::ostream* out = &std::cout;
  std::ostream* err = &std::cerr;
  std::istream* in = &std::cin;

  Options opts;
  OperatorTable op_table = OperatorTable::standard();
  CompileOptions compile_opts;
  bool trace = false;

  // ---- image / loading ----
  void load_image(const LinkedImage& img);
  void dynamic_load(const MaObject& obj);  // consult mechanism: link + run triple
  int start(const std::vector<std::string>& argv);
  bool has_top_level = true;

  void consult_file(const std::string& path);
  void consult_text(const std::string& text, const std::string& path);
  void load_fd_library_file(const std::string& path);  // .fd definitions

  // ---- queries ----
  struct QueryState {
    uint64_t trail_mark, h_mark, saved_b, saved_e, saved_cp;
    uint64_t barrier_b = 0;
    size_t cs_mark;
    std::map<std::string, Word> vars;  // query variable cells
    Word goal = 0;
    bool started = false;
    bool open = false;
    bool more = false;
  };
  QueryState query_start(const TermPtr& goal,
                         const std::map<std::string, TermPtr>& vars);
  bool query_next(QueryState& q);
  TermPtr query_value(QueryState& q, const std::string& name);
  std::string query_value_string(QueryState& q, const std::string& name);
  void query_finish(QueryState& q);

  // conveniences
  std::vector<std::map<std::string, std::string>> solve(
      const std::string& goal_text, int max_solutions = -1);
  bool once(const std::string& goal_text);

  int repl();
  void repl_banner();

  // ---- runtime machinery (shared with built-ins and tests) ----
  int intern(const std::string& s);
  const std::string& atom_name(int id) const { return atoms_[id]; }
  Word atom_word(const std::string& s) { return rt::make_word(rt::ATM, intern(s)); }

  Word deref(Word w) const;
  Word& cell(uint64_t addr);
  Word cell_value(uint64_t addr) const;
  void bind(uint64_t addr, Word w);
  bool unify(Word a, Word b);
  Word new_unbound();
  uint64_t push_heap(Word w);
  Word make_float(double d);
  double float_value(Word w) const;

  Word term_to_heap(const TermPtr& t, std::map<uint64_t, Word>* varmap);
  TermPtr heap_to_term(Word w, bool display = false);
  std::string write_word(Word w, bool quoted);

  // arithmetic
  struct Num {
    bool is_float = false;
    int64_t i = 0;
    double f = 0;
    double as_double() const { return is_float ? f : (double)i; }
  };
  Num eval_arith(Word w);

  int compare_words(Word a, Word b);

  // predicate table
  PredEntry* find_pred(const std::string& name, int arity);
  PredEntry& ensure_dynamic(const std::string& name, int arity);
  void add_clause(const TermPtr& clause, bool front);
  const std::map<std::pair<std::string, int>, PredEntry>& preds() const {
    return preds_;
  }

  // control helpers used by built-ins
  void do_fail_from_builtin();  // unused; builtins return Fail instead
  uint64_t current_b() const { return b_; }
  void cut_to(uint64_t b);
  uint64_t pred_entry_addr(const std::string& name, int arity);
  BuiltinResult dispatch_goal(Word goal, bool allow_trace = true);
  bool run_goal_word(Word goal);  // nested execution, own barrier

  // findall support
  std::vector<std::vector<TermPtr>> findall_stack;

  Word heap_value(uint64_t a) const { return heap_[a]; }
  bool unify_test_undo(Word a, Word b);  // unify, then undo all bindings
  void dyn_step(const Instr& I);         // dynamic-predicate clause iteration
  std::vector<std::pair<std::string, int>> dyn_keys;

  // fd engine
  fd::FdEngine& fd() { return *fd_; }
  std::string fdvar_display(int handle);

  // trail / state save-restore helpers (used by \= etc.)
  size_t trail_mark() const { return trail_.size(); }
  void untrail(size_t mark);

  uint64_t user_directives_run = 0;

  // exposed machine registers for built-ins
  std::vector<Word> x;

  // loaded objects (registration order) and their entry points
  struct LoadedObject {
    std::string name;
    uint64_t pro_ini = 0, sys_dir = 0, usr_dir = 0;
  };
  std::vector<LoadedObject> objects;
  void run_object_triple(const LoadedObject& o);

  // pending object registration (Pl_New_Object)
  void register_object_triple(uint64_t a, uint64_t b, uint64_t c);

  // directive execution (Pl_Run_*_Directive)
  void run_directive(uint64_t addr, bool user);

  // dynamic stub creation
  uint64_t make_dyn_stub(const std::string& name, int arity);

  std::string file_atom_hint;  // current object name during loading

 private:
  friend struct Prims;
  friend struct Builtins;

  void bootstrap();
  void load_object_code(const MaObject& obj);
  void run_ccode(uint64_t addr);
  bool run_prolog(uint64_t addr);
  bool resume_loop();
  void do_fail();
  uint64_t call_prim(const Instr& I);
  Word load_op(const COp& op);
  void store_op(const COp& op, Word w);

  // choice points
  void create_cp(int k, uint64_t alt);
  void update_cp(int k, uint64_t alt);
  void delete_cp(int k);
  void restore_cp_state(uint64_t b, int k);
  uint64_t env_top() const;
  uint64_t stack_top() const;

  uint64_t cp_alt(uint64_t b) const { return lcl_[b - 1]; }
  uint64_t cp_prevb(uint64_t b) const { return lcl_[b - 2]; }
  uint64_t cp_e(uint64_t b) const { return lcl_[b - 3]; }
  uint64_t cp_cp(uint64_t b) const { return lcl_[b - 4]; }
  uint64_t cp_h(uint64_t b) const { return lcl_[b - 5]; }
  uint64_t cp_tr(uint64_t b) const { return lcl_[b - 6]; }
  uint64_t cp_cs(uint64_t b) const { return lcl_[b - 7]; }
  uint64_t cp_serial(uint64_t b) const { return lcl_[b - 8]; }
  uint64_t cp_k(uint64_t b) const { return lcl_[b - 9]; }

  // code & symbols
  std::vector<Instr> code_;
  std::vector<std::string> strpool_;
  std::vector<uint64_t> slots_;
  std::map<std::string, uint32_t> slot_ids_;
  std::vector<std::string> slot_names_;
  std::map<std::string, size_t> global_data_;
  std::vector<int64_t> data_;

  uint32_t slot_id(const std::string& sym);

  // state
  std::vector<Word> heap_;
  uint64_t h_ = 1;  // heap cell 0 reserved
  std::vector<Word> lcl_;
  uint64_t e_ = 0, b_ = 0;
  uint64_t cp_ = 0;
  uint64_t pc_ = 0;
  uint64_t s_ = 0;
  bool write_mode_ = false;
  uint64_t ret_val_ = 0;
  std::vector<fd::TrailEntry> trail_;
  uint64_t cp_serial_counter_ = 0;

  std::vector<std::string> atoms_;
  std::map<std::string, int> atom_ids_;
  std::map<std::pair<std::string, int>, PredEntry> preds_;

  struct SwtTable {
    std::map<Word, uint64_t> entries;
  };
  std::vector<SwtTable> swt_;

  std::vector<BuiltinSpec> builtins_;
  std::unique_ptr<fd::FdEngine> fd_;

  static constexpr uint64_t kStopSuccess = 0, kStopFail = 1, kFailHandler = 2;
  static constexpr uint64_t kLocalBase = 1ull << 40;

 public:
  static constexpr uint64_t local_base() { return kLocalBase; }
  uint64_t heap_top() const { return h_; }
  uint64_t reg_b() const { return b_; }
  uint64_t stop_fail_addr() const { return kStopFail; }
};

}  // namespace prolite
