#pragma once

#include "prolite/ma.hpp"
#include "prolite/wam.hpp"

namespace prolite {

class TranslateError : public std::runtime_error {
 public:
  explicit TranslateError(const std::string& m) : std::runtime_error(m) {}
};

/// Single-pass WAM -> MA translation.
MaObject translate_wam(const WamFile& f);

}  // namespace prolite
