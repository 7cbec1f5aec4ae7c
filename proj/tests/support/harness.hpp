#pragma once

// Shared helpers for end-to-end tests: corpus loading and solution-set
// comparison between the compiled pipeline and the reference interpreter.

#include <algorithm>
#include <fstream>
#include <sstream>
#include <vector>

#include "oracle.hpp"
#include "prolite/toplevel.hpp"
#include "prolite/wam2ma.hpp"
#include "prolite/writer.hpp"

namespace prolite::harness {

struct CorpusFile {
  std::string path;
  std::string source;
  std::vector<std::string> queries;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline CorpusFile load_corpus_file(const std::string& path) {
  CorpusFile f;
  f.path = path;
  f.source = slurp(path);
  std::istringstream in(f.source);
  std::string line;
  const std::string tag = "%% query: ";
  while (std::getline(in, line)) {
    size_t p = line.find(tag);
    if (p != std::string::npos) f.queries.push_back(line.substr(p + tag.size()));
  }
  return f;
}

inline std::vector<std::string> corpus_paths() {
  static const char* names[] = {
      "01_append.pl",  "02_nrev.pl",   "03_qsort.pl",  "04_member.pl",
      "05_reverse.pl", "06_last.pl",   "07_delete.pl", "08_select.pl",
      "09_perm.pl",    "10_zebra_lite.pl", "11_hanoi.pl", "12_fib.pl",
      "13_ack.pl",     "14_color.pl",  "15_family.pl", "16_flatten.pl",
      "17_sum.pl",     "18_len.pl",    "19_msort.pl",  "20_pqueens.pl",
      "21_bool.pl",    "22_subopt.pl", "23_arith.pl",  "24_cut.pl",
      "25_disj.pl"};
  std::vector<std::string> out;
  for (const char* n : names)
    out.push_back(std::string(PROLITE_CORPUS_DIR) + "/" + n);
  return out;
}

// solution multiset from the compiled pipeline, canonicalized
inline std::vector<std::string> machine_solutions(Machine& m,
                                                  const std::string& query,
                                                  int max_solutions = -1) {
  Reader r(query, &m.op_table);
  auto rr = r.read();
  if (!rr) throw std::runtime_error("bad query: " + query);
  std::map<std::string, TermPtr> vars;
  for (auto& [n, v] : rr->variables) vars[n] = v;
  auto q = m.query_start(rr->term, vars);
  std::vector<std::string> out;
  while ((max_solutions < 0 || (int)out.size() < max_solutions) &&
         m.query_next(q)) {
    std::map<std::string, TermPtr> sol;
    for (auto& [n, w] : q.vars) sol[n] = m.heap_to_term(w, false);
    out.push_back(oracle::canonical_solution(sol, m.op_table));
  }
  m.query_finish(q);
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<std::string> oracle_solutions(oracle::Oracle& o,
                                                 const OperatorTable& table,
                                                 const std::string& query,
                                                 int max_solutions = -1) {
  auto out = o.solutions(query, max_solutions);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace prolite::harness
