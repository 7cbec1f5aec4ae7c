#pragma once

#include <cstdint>
#include <vector>

namespace prolite::fd {

/// Largest value an FD variable can take (keeps tagged-integer headroom).
constexpr int64_t kMaxInteger = (1 << 28) - 1;

/// Largest value representable in the sparse (bit-vector) form. Values above
/// this are dropped when a domain is forced sparse; the domain then
/// under-approximates, which can prune solutions but never admits wrong ones.
constexpr int64_t kSparseLimit = (1 << 20) - 1;

/// An FD domain: interval when bits is empty, otherwise a bit-vector over
/// 0..hi with cached extrema.
struct FdDomain {
  int64_t lo = 0;
  int64_t hi = -1;  // lo > hi encodes the empty domain
  std::vector<uint64_t> bits;

  static FdDomain interval(int64_t lo, int64_t hi);
  static FdDomain empty() { return FdDomain{}; }

  bool sparse() const { return !bits.empty(); }
  bool is_empty() const { return lo > hi; }
  bool singleton() const { return lo == hi && lo >= 0; }
  int64_t size() const;
  bool contains(int64_t v) const;

  /// smallest value >= v in the domain, or -1
  int64_t next_value(int64_t v) const;

  void make_sparse();  // promote; clamps to kSparseLimit (never demoted)
  void set_bit(int64_t v);
  void clear_bit(int64_t v);
  void recompute_extrema();

  FdDomain intersect_interval(int64_t lo, int64_t hi) const;
  FdDomain intersect_set(const FdDomain& set) const;
  FdDomain remove_value(int64_t v) const;

  bool equals(const FdDomain& o) const;
  std::vector<int64_t> values() const;  // careful with huge intervals
  std::string to_string() const;
};

}  // namespace prolite::fd
