#include "prolite/term.hpp"

#include <atomic>

namespace prolite {

static std::atomic<uint64_t> g_var_serial{1};

TermPtr Term::var(const std::string& name) {
  auto t = std::make_shared<Term>();
  t->kind = Kind::Var;
  t->name = name;
  t->serial = g_var_serial.fetch_add(1);
  return t;
}

TermPtr Term::var_serial(const std::string& name, uint64_t serial) {
  auto t = std::make_shared<Term>();
  t->kind = Kind::Var;
  t->name = name;
  t->serial = serial;
  return t;
}

TermPtr Term::atom(const std::string& text) {
  auto t = std::make_shared<Term>();
  t->kind = Kind::Atom;
  t->name = text;
  return t;
}

TermPtr Term::integer(int64_t v) {
  auto t = std::make_shared<Term>();
  t->kind = Kind::Int;
  t->ival = v;
  return t;
}

TermPtr Term::floating(double v) {
  auto t = std::make_shared<Term>();
  t->kind = Kind::Float;
  t->fval = v;
  return t;
}

TermPtr Term::compound(const std::string& functor, std::vector<TermPtr> args) {
  if (args.empty()) return atom(functor);
  auto t = std::make_shared<Term>();
  t->kind = Kind::Compound;
  t->name = functor;
  t->args = std::move(args);
  return t;
}

TermPtr mk_list(const std::vector<TermPtr>& items, TermPtr tail) {
  TermPtr t = tail ? tail : Term::atom("[]");
  for (auto it = items.rbegin(); it != items.rend(); ++it)
    t = Term::compound(".", {*it, t});
  return t;
}

std::optional<std::vector<TermPtr>> list_items(const TermPtr& t) {
  std::vector<TermPtr> out;
  TermPtr cur = t;
  while (true) {
    if (cur->is_nil()) return out;
    if (!cur->is_cons()) return std::nullopt;
    out.push_back(cur->args[0]);
    cur = cur->args[1];
  }
}

bool term_equals(const TermPtr& a, const TermPtr& b) {
  if (a.get() == b.get()) return true;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case Term::Kind::Var: return a->serial == b->serial;
    case Term::Kind::Atom: return a->name == b->name;
    case Term::Kind::Int: return a->ival == b->ival;
    case Term::Kind::Float: return a->fval == b->fval;
    case Term::Kind::Compound:
      if (a->name != b->name || a->args.size() != b->args.size()) return false;
      for (size_t i = 0; i < a->args.size(); i++)
        if (!term_equals(a->args[i], b->args[i])) return false;
      return true;
  }
  return false;
}

static bool variant_rec(const TermPtr& a, const TermPtr& b,
                        std::map<uint64_t, uint64_t>& ab,
                        std::map<uint64_t, uint64_t>& ba) {
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case Term::Kind::Var: {
      auto ia = ab.find(a->serial);
      auto ib = ba.find(b->serial);
      if (ia == ab.end() && ib == ba.end()) {
        ab[a->serial] = b->serial;
        ba[b->serial] = a->serial;
        return true;
      }
      return ia != ab.end() && ib != ba.end() && ia->second == b->serial &&
             ib->second == a->serial;
    }
    case Term::Kind::Atom: return a->name == b->name;
    case Term::Kind::Int: return a->ival == b->ival;
    case Term::Kind::Float: return a->fval == b->fval;
    case Term::Kind::Compound:
      if (a->name != b->name || a->args.size() != b->args.size()) return false;
      for (size_t i = 0; i < a->args.size(); i++)
        if (!variant_rec(a->args[i], b->args[i], ab, ba)) return false;
      return true;
  }
  return false;
}

bool term_variant(const TermPtr& a, const TermPtr& b) {
  std::map<uint64_t, uint64_t> ab, ba;
  return variant_rec(a, b, ab, ba);
}

static int kind_rank(const Term& t) {
  switch (t.kind) {
    case Term::Kind::Var: return 0;
    case Term::Kind::Float: return 1;
    case Term::Kind::Int: return 1;
    case Term::Kind::Atom: return 2;
    case Term::Kind::Compound: return 3;
  }
  return 4;
}

int term_compare(const TermPtr& a, const TermPtr& b) {
  int ra = kind_rank(*a), rb = kind_rank(*b);
  if (ra != rb) return ra < rb ? -1 : 1;
  switch (a->kind) {
    case Term::Kind::Var:
      return a->serial < b->serial ? -1 : a->serial > b->serial ? 1 : 0;
    case Term::Kind::Int:
    case Term::Kind::Float: {
      double x = a->is_int() ? (double)a->ival : a->fval;
      double y = b->is_int() ? (double)b->ival : b->fval;
      if (x != y) return x < y ? -1 : 1;
      // float precedes int of equal value in the standard order
      if (a->kind != b->kind) return a->is_float() ? -1 : 1;
      return 0;
    }
    case Term::Kind::Atom:
      return a->name < b->name ? -1 : a->name > b->name ? 1 : 0;
    case Term::Kind::Compound: {
      if (a->args.size() != b->args.size())
        return a->args.size() < b->args.size() ? -1 : 1;
      if (a->name != b->name) return a->name < b->name ? -1 : 1;
      for (size_t i = 0; i < a->args.size(); i++) {
        int c = term_compare(a->args[i], b->args[i]);
        if (c != 0) return c;
      }
      return 0;
    }
  }
  return 0;
}

static TermPtr rename_rec(const TermPtr& t, std::map<uint64_t, TermPtr>& seen) {
  switch (t->kind) {
    case Term::Kind::Var: {
      auto it = seen.find(t->serial);
      if (it != seen.end()) return it->second;
      auto v = Term::var(t->name);
      seen[t->serial] = v;
      return v;
    }
    case Term::Kind::Compound: {
      std::vector<TermPtr> args;
      args.reserve(t->args.size());
      for (auto& a : t->args) args.push_back(rename_rec(a, seen));
      return Term::compound(t->name, std::move(args));
    }
    default: return t;
  }
}

TermPtr term_rename(const TermPtr& t) {
  std::map<uint64_t, TermPtr> seen;
  return rename_rec(t, seen);
}

void term_variables(const TermPtr& t, std::vector<TermPtr>& out) {
  if (t->is_var()) {
    for (auto& v : out)
      if (v->serial == t->serial) return;
    out.push_back(t);
  } else if (t->is_compound()) {
    for (auto& a : t->args) term_variables(a, out);
  }
}

const char* op_type_name(OpType t) {
  switch (t) {
    case OpType::XFX: return "xfx";
    case OpType::XFY: return "xfy";
    case OpType::YFX: return "yfx";
    case OpType::FY: return "fy";
    case OpType::FX: return "fx";
    case OpType::XF: return "xf";
    case OpType::YF: return "yf";
  }
  return "?";
}

std::optional<OpType> op_type_from_name(const std::string& s) {
  if (s == "xfx") return OpType::XFX;
  if (s == "xfy") return OpType::XFY;
  if (s == "yfx") return OpType::YFX;
  if (s == "fy") return OpType::FY;
  if (s == "fx") return OpType::FX;
  if (s == "xf") return OpType::XF;
  if (s == "yf") return OpType::YF;
  return std::nullopt;
}

OperatorTable OperatorTable::standard() {
  OperatorTable t;
  auto add = [&](const char* n, int p, OpType ty) { t.update(n, p, ty); };
  add(":-", 1200, OpType::XFX);
  add("-->", 1200, OpType::XFX);
  add(":-", 1200, OpType::FX);
  add("?-", 1200, OpType::FX);
  add("dynamic", 1150, OpType::FX);
  add("discontiguous", 1150, OpType::FX);
  add("multifile", 1150, OpType::FX);
  add("public", 1150, OpType::FX);
  add(";", 1100, OpType::XFY);
  add("->", 1050, OpType::XFY);
  add(",", 1000, OpType::XFY);
  add("\\+", 900, OpType::FY);
  add("=", 700, OpType::XFX);
  add("\\=", 700, OpType::XFX);
  add("==", 700, OpType::XFX);
  add("\\==", 700, OpType::XFX);
  add("@<", 700, OpType::XFX);
  add("@>", 700, OpType::XFX);
  add("@=<", 700, OpType::XFX);
  add("@>=", 700, OpType::XFX);
  add("is", 700, OpType::XFX);
  add("=:=", 700, OpType::XFX);
  add("=\\=", 700, OpType::XFX);
  add("<", 700, OpType::XFX);
  add(">", 700, OpType::XFX);
  add("=<", 700, OpType::XFX);
  add(">=", 700, OpType::XFX);
  add("=..", 700, OpType::XFX);
  add("#=", 700, OpType::XFX);
  add("#\\=", 700, OpType::XFX);
  add("#<", 700, OpType::XFX);
  add("#=<", 700, OpType::XFX);
  add("#>", 700, OpType::XFX);
  add("#>=", 700, OpType::XFX);
  add("+", 500, OpType::YFX);
  add("-", 500, OpType::YFX);
  add("/\\", 500, OpType::YFX);
  add("\\/", 500, OpType::YFX);
  add("xor", 500, OpType::YFX);
  add("*", 400, OpType::YFX);
  add("/", 400, OpType::YFX);
  add("//", 400, OpType::YFX);
  add("mod", 400, OpType::YFX);
  add("rem", 400, OpType::YFX);
  add("<<", 400, OpType::YFX);
  add(">>", 400, OpType::YFX);
  add("**", 200, OpType::XFX);
  add("^", 200, OpType::XFY);
  add("-", 200, OpType::FY);
  add("+", 200, OpType::FY);
  add("\\", 200, OpType::FY);
  return t;
}

void OperatorTable::update(const std::string& name, int priority, OpType type) {
  if (priority < 0 || priority > 1200)
    throw TableError("operator priority out of range: " + std::to_string(priority));
  if (name == "," && !(priority == 1000 && type == OpType::XFY))
    throw TableError("cannot modify operator ','");
  auto& e = table_[name];
  if (priority == 0) {
    if (op_is_prefix(type))
      e.pre.reset();
    else
      e.in_or_post.reset();
    if (!e.pre && !e.in_or_post) table_.erase(name);
    return;
  }
  if (op_is_prefix(type)) {
    e.pre = OpDef{priority, type};
  } else {
    // one infix-or-postfix entry per name; switching between infix and
    // postfix classes is a conflict
    if (e.in_or_post && op_is_infix(e.in_or_post->type) != op_is_infix(type))
      throw TableError("conflicting operator class for '" + name + "'");
    e.in_or_post = OpDef{priority, type};
  }
}

std::optional<OpDef> OperatorTable::prefix(const std::string& name) const {
  auto it = table_.find(name);
  if (it == table_.end()) return std::nullopt;
  return it->second.pre;
}

std::optional<OpDef> OperatorTable::infix(const std::string& name) const {
  auto it = table_.find(name);
  if (it == table_.end() || !it->second.in_or_post) return std::nullopt;
  if (!op_is_infix(it->second.in_or_post->type)) return std::nullopt;
  return it->second.in_or_post;
}

std::optional<OpDef> OperatorTable::postfix(const std::string& name) const {
  auto it = table_.find(name);
  if (it == table_.end() || !it->second.in_or_post) return std::nullopt;
  if (!op_is_postfix(it->second.in_or_post->type)) return std::nullopt;
  return it->second.in_or_post;
}

bool OperatorTable::is_operator(const std::string& name) const {
  return table_.count(name) != 0;
}

int OperatorTable::max_priority(const std::string& name) const {
  auto it = table_.find(name);
  if (it == table_.end()) return 0;
  int p = 0;
  if (it->second.pre) p = it->second.pre->priority;
  if (it->second.in_or_post && it->second.in_or_post->priority > p)
    p = it->second.in_or_post->priority;
  return p;
}

}  // namespace prolite
