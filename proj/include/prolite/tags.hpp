#pragma once

#include <cstdint>

namespace prolite::rt {

using Word = uint64_t;

// One machine word per runtime cell: 3 tag bits, payload above.
enum Tag : uint64_t {
  REF = 0,  // heap address (self-reference = unbound)
  ATM = 1,  // atom id
  INT = 2,  // signed integer
  FLT = 3,  // heap address of a raw double cell
  LST = 4,  // heap address of 2 cells
  STC = 5,  // heap address of functor word followed by arity cells
  FDV = 6,  // finite-domain variable handle
  FTR = 7,  // functor/arity word (heap-internal)
};

constexpr int kTagBits = 3;

constexpr Word make_word(Tag t, uint64_t payload) {
  return (payload << kTagBits) | (Word)t;
}
constexpr Tag tag_of(Word w) { return (Tag)(w & 7u); }
constexpr uint64_t payload_of(Word w) { return w >> kTagBits; }

constexpr Word make_int(int64_t v) {
  return ((Word)v << kTagBits) | (Word)INT;
}
constexpr int64_t int_value(Word w) { return (int64_t)w >> kTagBits; }

constexpr Word make_ftr(uint64_t atom_id, uint64_t arity) {
  return make_word(FTR, (atom_id << 16) | (arity & 0xffff));
}
constexpr uint64_t ftr_atom(Word w) { return payload_of(w) >> 16; }
constexpr uint64_t ftr_arity(Word w) { return payload_of(w) & 0xffff; }

}  // namespace prolite::rt
