#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "prolite/toplevel.hpp"
#include "prolite/wam2ma.hpp"

namespace py = pybind11;
using namespace prolite;

namespace {

CompileOptions options_from_kwargs(bool reg_opt, bool reorder,
                                   bool inline_builtins, bool lco) {
  CompileOptions o;
  o.reg_opt = reg_opt;
  o.reorder = reorder;
  o.inline_builtins = inline_builtins;
  o.lco = lco;
  return o;
}

std::string compile_wam(const std::string& source, const std::string& path,
                        bool reg_opt, bool reorder, bool inline_builtins,
                        bool lco) {
  CompilerSession s;
  s.opts = options_from_kwargs(reg_opt, reorder, inline_builtins, lco);
  return emit_wam(s.compile_source(path, source));
}

std::string wam_to_ma(const std::string& wam_text) {
  return emit_ma(translate_wam(parse_wam(wam_text)));
}

std::string compile_ma(const std::string& source, const std::string& path) {
  CompilerSession s;
  return emit_ma(translate_wam(s.compile_source(path, source)));
}

/// One interactive machine: consult sources, run queries, inspect output.
class Session {
 public:
  Session() {
    machine_.out = &out_;
    machine_.err = &err_;
  }

  void consult_text(const std::string& source, const std::string& path) {
    machine_.consult_text(source, path);
  }
  void consult(const std::string& path) { machine_.consult_file(path); }

  std::vector<std::map<std::string, std::string>> query(
      const std::string& goal, int max_solutions) {
    try {
      return machine_.solve(goal, max_solutions);
    } catch (const HaltException& h) {
      throw py::stop_iteration("halt(" + std::to_string(h.code) + ")");
    }
  }

  bool once(const std::string& goal) {
    try {
      return machine_.once(goal);
    } catch (const HaltException&) {
      return true;
    }
  }

  void op(int priority, const std::string& type, const std::string& name) {
    auto t = op_type_from_name(type);
    if (!t) throw std::runtime_error("bad operator type: " + type);
    machine_.op_table.update(name, priority, *t);
  }

  std::string output() {
    std::string s = out_.str();
    out_.str("");
    return s;
  }
  std::string errors() {
    std::string s = err_.str();
    err_.str("");
    return s;
  }

 private:
  Machine machine_;
  std::ostringstream out_, err_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "prolite: a small Prolog compiler, mini-assembly VM and FD solver";

  m.def("compile_wam", &compile_wam, py::arg("source"),
        py::arg("path") = "user.pl", py::arg("reg_opt") = true,
        py::arg("reorder") = true, py::arg("inline_builtins") = true,
        py::arg("lco") = true,
        "Compile Prolog source text to the textual WAM form.");
  m.def("wam_to_ma", &wam_to_ma, py::arg("wam_text"),
        "Translate a .wam text into the mini-assembly form.");
  m.def("compile_ma", &compile_ma, py::arg("source"),
        py::arg("path") = "user.pl",
        "Compile Prolog source text straight to mini-assembly.");
  m.def("encode_symbol", &encode_symbol, py::arg("name"), py::arg("arity"),
        "Hex-encode a predicate name/arity into a linker symbol.");
  m.def(
      "decode_symbol",
      [](const std::string& sym) -> py::object {
        auto d = decode_symbol(sym);
        if (!d) return py::none();
        return py::make_tuple(d->first, d->second);
      },
      py::arg("symbol"));

  py::class_<Session>(m, "Session")
      .def(py::init<>())
      .def("consult_text", &Session::consult_text, py::arg("source"),
           py::arg("path") = "user.pl")
      .def("consult", &Session::consult, py::arg("path"))
      .def("query", &Session::query, py::arg("goal"),
           py::arg("max_solutions") = -1,
           "Run a goal; returns one dict of variable bindings per solution.")
      .def("once", &Session::once, py::arg("goal"))
      .def("op", &Session::op, py::arg("priority"), py::arg("type"),
           py::arg("name"))
      .def("output", &Session::output, "Drain captured standard output.")
      .def("errors", &Session::errors, "Drain captured error output.");
}
