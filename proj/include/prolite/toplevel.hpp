#pragma once

#include <iostream>
#include <string>
#include <vector>

#include "prolite/vm.hpp"

namespace prolite {

struct DriveOptions {
  bool stop_wam = false;  // stop after .wam
  bool stop_ma = false;   // stop after .ma
  std::string output;     // -o: image file (or single-input .wam/.ma path)
  bool no_top_level = false;
  CompileOptions copts;
  std::vector<std::string> fd_libs;  // .fd manifest files
  Machine::Options mopts;
  bool trace = false;
};

/// Suffix-dispatched multipass driver: advances each input through its pass
/// chain, then links and runs (or serializes) the result.
int drive(const std::vector<std::string>& inputs, const DriveOptions& opts,
          std::istream& in, std::ostream& out, std::ostream& err);

/// Reads a library manifest: one MA file path per line.
std::vector<MaObject> read_library_manifest(const std::string& path);

}  // namespace prolite
