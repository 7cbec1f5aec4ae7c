#include "prolite/toplevel.hpp"

#include <fstream>
#include <sstream>

#include "prolite/wam2ma.hpp"
#include "prolite/writer.hpp"
#include "vm_internal.hpp"

namespace prolite {

// ---------------------------------------------------------------------------
// REPL
// ---------------------------------------------------------------------------

void Machine::repl_banner() { *out << "prolite top level\n"; }

namespace {

// reads one full-stop terminated query from the stream; empty optional at EOF
std::optional<ReadResult> read_query(Machine& m) {
  std::string buf;
  std::string line;
  while (true) {
    *m.out << (buf.empty() ? "| ?- " : "       ");
    m.out->flush();
    if (!std::getline(*m.in, line)) return std::nullopt;
    buf += line + "\n";
    try {
      Reader r(buf, &m.op_table);
      auto rr = r.read();
      if (!rr) {
        buf.clear();
        continue;
      }
      return rr;
    } catch (const SyntaxError& e) {
      std::string msg = e.what();
      if (msg.find("unterminated") != std::string::npos) continue;  // more input
      *m.err << msg << std::endl;
      buf.clear();
    }
  }
}

}  // namespace

int Machine::repl() {
  while (true) {
    std::optional<ReadResult> rr;
    try {
      rr = read_query(*this);
    } catch (const SyntaxError& e) {
      *err << e.what() << std::endl;
      continue;
    }
    if (!rr) return 0;  // end of input
    if (rr->term->is_atom("end_of_file")) return 0;
    std::map<std::string, TermPtr> vars;
    for (auto& [n, v] : rr->variables) vars[n] = v;
    QueryState q;
    try {
      q = query_start(rr->term, vars);
      bool any = false;
      while (true) {
        bool ok = query_next(q);
        if (!ok) {
          *out << (any ? "no\n" : "no\n");
          break;
        }
        any = true;
        bool shown = false;
        for (auto& [n, w] : q.vars) {
          if (!n.empty() && n[0] == '_') continue;
          *out << n << " = " << write_word(w, true) << "\n";
          shown = true;
        }
        bool more_possible = current_b() > q.barrier_b;
        if (!more_possible) {
          *out << (shown ? "yes\n" : "yes\n");
          query_finish(q);
          break;
        }
        *out << "(more) ? ";
        out->flush();
        std::string ans;
        if (!std::getline(*in, ans)) ans = "";
        if (ans == ";") continue;
        *out << "yes\n";
        query_finish(q);
        break;
      }
    } catch (const HaltException&) {
      query_finish(q);
      throw;
    } catch (const PrologError& e) {
      query_finish(q);
      *err << "error: " << e.what() << std::endl;
    } catch (const RuntimeFault& e) {
      query_finish(q);
      *err << "fault: " << e.what() << std::endl;
    }
  }
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeFault("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw RuntimeFault("cannot write " + path);
  out << text;
}

std::string suffix_of(const std::string& path) {
  size_t dot = path.rfind('.');
  size_t slash = path.find_last_of('/');
  if (dot == std::string::npos ||
      (slash != std::string::npos && dot < slash))
    return "";
  return path.substr(dot);
}

std::string with_suffix(const std::string& path, const char* suffix) {
  size_t dot = path.rfind('.');
  size_t slash = path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return path + suffix;
  return path.substr(0, dot) + suffix;
}

}  // namespace

std::vector<MaObject> read_library_manifest(const std::string& path) {
  std::vector<MaObject> members;
  std::ifstream in(path);
  if (!in) throw RuntimeFault("cannot open library manifest " + path);
  std::string line;
  std::string dir;
  size_t slash = path.find_last_of('/');
  if (slash != std::string::npos) dir = path.substr(0, slash + 1);
  while (std::getline(in, line)) {
    size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    size_t e = line.find_last_not_of(" \t\r");
    std::string member = line.substr(b, e - b + 1);
    if (member.empty() || member[0] == '#') continue;
    std::string full = member[0] == '/' ? member : dir + member;
    members.push_back(parse_ma(read_file(full), full));
  }
  return members;
}

int drive(const std::vector<std::string>& inputs, const DriveOptions& opts,
          std::istream& in, std::ostream& out, std::ostream& err) {
  try {
    struct Unit {
      std::string path;
      std::string kind;
      MaObject ma;
      WamFile wam;
      bool have_wam = false;
    };
    std::vector<Unit> units;
    std::vector<MaObject> library;
    std::string image_input;

    for (auto& path : inputs) {
      std::string sfx = suffix_of(path);
      if (sfx == ".pl" || sfx == ".wam" || sfx == ".ma") {
        Unit u;
        u.path = path;
        u.kind = sfx;
        units.push_back(std::move(u));
      } else if (sfx == ".mlib") {
        for (auto& m : read_library_manifest(path)) library.push_back(std::move(m));
      } else if (sfx == ".img") {
        image_input = path;
      } else {
        err << "prolite: unknown file suffix: " << path << std::endl;
        return 2;
      }
    }

    if (!image_input.empty()) {
      LinkedImage img = parse_image(read_file(image_input));
      Machine m(opts.mopts);
      m.in = &in;
      m.out = &out;
      m.err = &err;
      m.trace = opts.trace;
      m.compile_opts = opts.copts;
      for (auto& f : opts.fd_libs) m.load_fd_library_file(f);
      if (opts.no_top_level) img.top_level = false;
      m.load_image(img);
      return m.start(inputs);
    }

    // advance each unit through its chain
    for (auto& u : units) {
      if (u.kind == ".pl") {
        CompilerSession cs;
        cs.opts = opts.copts;
        u.wam = cs.compile_source(u.path, read_file(u.path));
        for (auto& w : cs.warnings) err << "warning: " << w << std::endl;
        u.have_wam = true;
      } else if (u.kind == ".wam") {
        u.wam = parse_wam(read_file(u.path));
        u.have_wam = true;
      }
    }
    if (opts.stop_wam) {
      for (auto& u : units) {
        if (u.kind != ".pl") continue;
        std::string dest = !opts.output.empty() && units.size() == 1
                               ? opts.output
                               : with_suffix(u.path, ".wam");
        write_file(dest, emit_wam(u.wam));
      }
      return 0;
    }
    for (auto& u : units) {
      if (u.have_wam)
        u.ma = translate_wam(u.wam);
      else
        u.ma = parse_ma(read_file(u.path), u.path);
    }
    if (opts.stop_ma) {
      for (auto& u : units) {
        if (u.kind == ".ma") continue;
        std::string dest = !opts.output.empty() && units.size() == 1
                               ? opts.output
                               : with_suffix(u.path, ".ma");
        write_file(dest, emit_ma(u.ma));
      }
      return 0;
    }

    std::vector<MaObject> objects;
    for (auto& u : units) objects.push_back(std::move(u.ma));
    LinkedImage img =
        link_image(std::move(objects), library, builtin_symbol_set(),
                   !opts.no_top_level);

    if (!opts.output.empty()) {
      write_file(opts.output, serialize_image(img));
      return 0;
    }

    Machine m(opts.mopts);
    m.in = &in;
    m.out = &out;
    m.err = &err;
    m.trace = opts.trace;
    m.compile_opts = opts.copts;
    for (auto& f : opts.fd_libs) m.load_fd_library_file(f);
    m.load_image(img);
    return m.start(inputs);
  } catch (const LinkError& e) {
    err << "link error: " << e.what() << std::endl;
    return 1;
  } catch (const CompileError& e) {
    err << "compile error: " << e.what() << std::endl;
    return 1;
  } catch (const SyntaxError& e) {
    err << "syntax error: " << e.what() << std::endl;
    return 1;
  } catch (const MaParseError& e) {
    err << e.what() << std::endl;
    return 1;
  } catch (const RuntimeFault& e) {
    err << "fault: " << e.what() << std::endl;
    return 1;
  } catch (const HaltException& h) {
    return h.code;
  }
}

}  // namespace prolite
