#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "prolite/writer.hpp"

namespace prolite::oracle {

void Oracle::load(const std::string& source) {
  for (auto& r : read_all(source, *table_)) {
    TermPtr t = r.term;
    if (t->is_functor(":-", 1)) continue;  // directives are not interpreted
    TermPtr head = t->is_functor(":-", 2) ? t->args[0] : t;
    db_[{head->name, (int)head->arity()}].push_back(t);
  }
}

TermPtr Oracle::walk(const TermPtr& t) const {
  TermPtr cur = t;
  while (cur->is_var()) {
    auto it = subst_.find(cur->serial);
    if (it == subst_.end()) return cur;
    cur = it->second;
  }
  return cur;
}

TermPtr Oracle::resolve(const TermPtr& t) const {
  TermPtr w = walk(t);
  if (!w->is_compound()) return w;
  std::vector<TermPtr> args;
  args.reserve(w->args.size());
  for (auto& a : w->args) args.push_back(resolve(a));
  return Term::compound(w->name, std::move(args));
}

bool Oracle::unify(const TermPtr& a, const TermPtr& b) {
  TermPtr u = walk(a), v = walk(b);
  if (u->is_var() && v->is_var() && u->serial == v->serial) return true;
  if (u->is_var()) {
    subst_[u->serial] = v;
    trail_.push_back(u->serial);
    return true;
  }
  if (v->is_var()) {
    subst_[v->serial] = u;
    trail_.push_back(v->serial);
    return true;
  }
  if (u->kind != v->kind) {
    // integer/float never unify across kinds here
    return false;
  }
  switch (u->kind) {
    case Term::Kind::Atom: return u->name == v->name;
    case Term::Kind::Int: return u->ival == v->ival;
    case Term::Kind::Float: return u->fval == v->fval;
    case Term::Kind::Compound: {
      if (u->name != v->name || u->args.size() != v->args.size()) return false;
      for (size_t i = 0; i < u->args.size(); i++)
        if (!unify(u->args[i], v->args[i])) return false;
      return true;
    }
    default: return false;
  }
}

void Oracle::undo(size_t m) {
  while (trail_.size() > m) {
    subst_.erase(trail_.back());
    trail_.pop_back();
  }
}

Oracle::Num Oracle::eval(const TermPtr& t) const {
  TermPtr w = walk(t);
  switch (w->kind) {
    case Term::Kind::Int: return {false, w->ival, 0};
    case Term::Kind::Float: return {true, 0, w->fval};
    case Term::Kind::Var: throw std::runtime_error("oracle: unbound in is/2");
    case Term::Kind::Atom:
      throw std::runtime_error("oracle: not evaluable: " + w->name);
    case Term::Kind::Compound: break;
  }
  auto& n = w->name;
  if (w->args.size() == 1) {
    Num a = eval(w->args[0]);
    if (n == "-") return a.is_float ? Num{true, 0, -a.f} : Num{false, -a.i, 0};
    if (n == "+") return a;
    if (n == "abs")
      return a.is_float ? Num{true, 0, std::fabs(a.f)}
                        : Num{false, std::llabs(a.i), 0};
  } else if (w->args.size() == 2) {
    Num a = eval(w->args[0]), b = eval(w->args[1]);
    bool ii = !a.is_float && !b.is_float;
    if (n == "+") return ii ? Num{false, a.i + b.i, 0} : Num{true, 0, a.d() + b.d()};
    if (n == "-") return ii ? Num{false, a.i - b.i, 0} : Num{true, 0, a.d() - b.d()};
    if (n == "*") return ii ? Num{false, a.i * b.i, 0} : Num{true, 0, a.d() * b.d()};
    if (n == "//") return Num{false, a.i / b.i, 0};
    if (n == "mod") {
      int64_t r = a.i % b.i;
      if (r != 0 && (r < 0) != (b.i < 0)) r += b.i;
      return Num{false, r, 0};
    }
    if (n == "min") return ii ? Num{false, std::min(a.i, b.i), 0}
                              : Num{true, 0, std::min(a.d(), b.d())};
    if (n == "max") return ii ? Num{false, std::max(a.i, b.i), 0}
                              : Num{true, 0, std::max(a.d(), b.d())};
    if (n == "/") {
      if (ii && b.i != 0 && a.i % b.i == 0) return Num{false, a.i / b.i, 0};
      return Num{true, 0, a.d() / b.d()};
    }
  }
  throw std::runtime_error("oracle: not evaluable: " + n);
}

bool Oracle::solve_once(const TermPtr& goal, int depth) {
  bool found = false;
  long id = ++activations_;
  solve(
      goal,
      [&]() -> Flow {
        found = true;
        return Flow::stop();
      },
      depth, id);
  return found;
}

Oracle::Flow Oracle::solve(const TermPtr& goal, const Cont& k, int depth,
                           long cut_id) {
  if (++steps_ > 100000000L) throw std::runtime_error("oracle: step budget");
  if (depth > 100000) throw std::runtime_error("oracle: depth budget");
  TermPtr g = walk(goal);
  if (g->is_var()) throw std::runtime_error("oracle: unbound goal");

  const std::string& n = g->name;
  size_t ar = g->arity();

  // control
  if (g->is_atom("true")) return k();
  if (g->is_atom("fail") || g->is_atom("false")) return Flow::cont();
  if (g->is_atom("!")) {
    Flow f = k();
    return f.k == Flow::K::Stop ? f : Flow::cut(cut_id);
  }
  if (n == "," && ar == 2) {
    return solve(
        g->args[0],
        [&]() -> Flow { return solve(g->args[1], k, depth + 1, cut_id); },
        depth + 1, cut_id);
  }
  if (n == ";" && ar == 2) {
    TermPtr lhs = walk(g->args[0]);
    if (lhs->is_functor("->", 2)) {
      size_t m = mark();
      if (solve_once(lhs->args[0], depth + 1))
        return solve(lhs->args[1], k, depth + 1, cut_id);
      undo(m);
      return solve(g->args[1], k, depth + 1, cut_id);
    }
    // a cut inside a plain disjunct commits the disjunction (call-local cut)
    long id = ++activations_;
    size_t m = mark();
    Flow f = solve(g->args[0], k, depth + 1, id);
    if (f.k == Flow::K::Stop) return f;
    if (f.k == Flow::K::Cut)
      return f.target == id ? Flow::cont() : f;
    undo(m);
    f = solve(g->args[1], k, depth + 1, id);
    if (f.k == Flow::K::Cut && f.target == id) return Flow::cont();
    return f;
  }
  if (n == "->" && ar == 2) {
    size_t m = mark();
    if (solve_once(g->args[0], depth + 1))
      return solve(g->args[1], k, depth + 1, cut_id);
    undo(m);
    return Flow::cont();
  }
  if ((n == "\\+" || n == "not") && ar == 1) {
    size_t m = mark();
    bool found = solve_once(g->args[0], depth + 1);
    undo(m);
    return found ? Flow::cont() : k();
  }
  if (n == "call" && ar == 1) {
    long id = ++activations_;
    Flow f = solve(g->args[0], k, depth + 1, id);
    if (f.k == Flow::K::Cut && f.target == id) return Flow::cont();
    return f;
  }

  auto det = [&](bool ok) -> Flow { return ok ? k() : Flow::cont(); };

  // built-ins
  if (n == "=" && ar == 2) {
    size_t m = mark();
    if (unify(g->args[0], g->args[1])) {
      Flow f = k();
      if (f.k != Flow::K::Continue) return f;
    }
    undo(m);
    return Flow::cont();
  }
  if (n == "\\=" && ar == 2) {
    size_t m = mark();
    bool ok = unify(g->args[0], g->args[1]);
    undo(m);
    return det(!ok);
  }
  if ((n == "==" || n == "\\==" || n == "@<" || n == "@>" || n == "@=<" ||
       n == "@>=") &&
      ar == 2) {
    int c = term_compare(resolve(g->args[0]), resolve(g->args[1]));
    bool ok = n == "=="     ? c == 0
              : n == "\\==" ? c != 0
              : n == "@<"   ? c < 0
              : n == "@>"   ? c > 0
              : n == "@=<"  ? c <= 0
                            : c >= 0;
    return det(ok);
  }
  if (n == "is" && ar == 2) {
    Num v = eval(g->args[1]);
    TermPtr r = v.is_float ? Term::floating(v.f) : Term::integer(v.i);
    size_t m = mark();
    if (unify(g->args[0], r)) {
      Flow f = k();
      if (f.k != Flow::K::Continue) return f;
    }
    undo(m);
    return Flow::cont();
  }
  if ((n == "=:=" || n == "=\\=" || n == "<" || n == ">" || n == "=<" ||
       n == ">=") &&
      ar == 2) {
    Num a = eval(g->args[0]), b = eval(g->args[1]);
    double x = a.d(), y = b.d();
    bool ok = n == "=:="   ? x == y
              : n == "=\\=" ? x != y
              : n == "<"    ? x < y
              : n == ">"    ? x > y
              : n == "=<"   ? x <= y
                            : x >= y;
    return det(ok);
  }
  if (ar == 1 &&
      (n == "var" || n == "nonvar" || n == "atom" || n == "integer" ||
       n == "number" || n == "atomic" || n == "compound" || n == "callable" ||
       n == "float")) {
    TermPtr a = walk(g->args[0]);
    bool ok = n == "var"      ? a->is_var()
              : n == "nonvar" ? !a->is_var()
              : n == "atom"   ? a->is_atom()
              : n == "integer" ? a->is_int()
              : n == "float"  ? a->is_float()
              : n == "number" ? (a->is_int() || a->is_float())
              : n == "atomic" ? (a->is_atom() || a->is_int() || a->is_float())
              : n == "compound" ? a->is_compound()
                                : (a->is_atom() || a->is_compound());
    return det(ok);
  }

  // user predicates
  auto it = db_.find({n, (int)ar});
  if (it == db_.end())
    throw std::runtime_error("oracle: unknown predicate " + n + "/" +
                             std::to_string(ar));
  long my_id = ++activations_;
  for (auto& clause : it->second) {
    TermPtr c = term_rename(clause);
    TermPtr head = c->is_functor(":-", 2) ? c->args[0] : c;
    TermPtr body = c->is_functor(":-", 2) ? c->args[1] : Term::atom("true");
    size_t m = mark();
    if (unify(g, head)) {
      Flow f = solve(body, k, depth + 1, my_id);
      if (f.k == Flow::K::Stop) return f;
      if (f.k == Flow::K::Cut) {
        undo(m);
        // a cut for this activation is absorbed; deeper targets propagate
        return f.target == my_id ? Flow::cont() : f;
      }
    }
    undo(m);
  }
  return Flow::cont();
}

std::vector<std::map<std::string, TermPtr>> Oracle::run(
    const TermPtr& goal, const std::map<std::string, TermPtr>& vars,
    int max_solutions) {
  std::vector<std::map<std::string, TermPtr>> out;
  steps_ = 0;
  long id = ++activations_;
  solve(
      goal,
      [&]() -> Flow {
        std::map<std::string, TermPtr> sol;
        for (auto& [name, v] : vars) sol[name] = resolve(v);
        out.push_back(std::move(sol));
        if (max_solutions >= 0 && (int)out.size() >= max_solutions)
          return Flow::stop();
        return Flow::cont();
      },
      0, id);
  subst_.clear();
  trail_.clear();
  return out;
}

std::vector<std::string> Oracle::solutions(const std::string& query_text,
                                           int max_solutions) {
  Reader r(query_text, table_);
  auto rr = r.read();
  if (!rr) throw std::runtime_error("oracle: empty query");
  std::map<std::string, TermPtr> vars;
  for (auto& [n, v] : rr->variables) vars[n] = v;
  auto sols = run(rr->term, vars, max_solutions);
  std::vector<std::string> out;
  out.reserve(sols.size());
  for (auto& s : sols) out.push_back(canonical_solution(s, *table_));
  return out;
}

std::string canonical_solution(const std::map<std::string, TermPtr>& sol,
                               const OperatorTable& table) {
  // variables are renamed to stable placeholders before printing
  std::string out;
  std::map<uint64_t, std::string> names;
  for (auto& [name, t] : sol) {
    std::function<TermPtr(const TermPtr&)> canon = [&](const TermPtr& x) -> TermPtr {
      if (x->is_var()) {
        auto it = names.find(x->serial);
        if (it == names.end()) {
          std::string nm = "_V" + std::to_string(names.size());
          names[x->serial] = nm;
          return Term::var_serial(nm, 900000000 + names.size());
        }
        return Term::var_serial(it->second, 900000000);
      }
      if (!x->is_compound()) return x;
      std::vector<TermPtr> args;
      for (auto& a : x->args) args.push_back(canon(a));
      return Term::compound(x->name, std::move(args));
    };
    out += name + "=" + write_term(canon(t), table, {.quoted = true}) + " ";
  }
  return out;
}

}  // namespace prolite::oracle
