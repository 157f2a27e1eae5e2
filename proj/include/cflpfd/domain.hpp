#pragma once

#include <string>
#include <utility>
#include <vector>

namespace cflpfd {

// Finite integer domain kept as a sorted list of disjoint, non-adjacent
// closed intervals.  An empty interval list means the domain is empty
// (inconsistent); a variable with no recorded domain is unrestricted.
class IntDomain {
 public:
  using Iv = std::pair<long long, long long>;

  // Bounds used to express "unbounded" one-sided ranges.
  static constexpr long long kMinInf = -(1LL << 60);
  static constexpr long long kMaxInf = (1LL << 60);

  IntDomain() = default;
  static IntDomain range(long long lo, long long hi);
  static IntDomain singleton(long long v) { return range(v, v); }
  static IntDomain full() { return range(kMinInf, kMaxInf); }
  // Values must be strictly ascending.
  static IntDomain from_values(const std::vector<long long>& vals);

  bool empty() const { return iv_.empty(); }
  bool is_singleton() const;
  long long min() const;  // requires non-empty
  long long max() const;  // requires non-empty
  long long size() const;
  bool contains(long long v) const;

  void intersect_range(long long lo, long long hi);
  void intersect(const IntDomain& other);
  void remove_value(long long v);

  const std::vector<Iv>& intervals() const { return iv_; }
  std::vector<long long> values() const;  // enumerates; intended for small domains

  bool operator==(const IntDomain& o) const { return iv_ == o.iv_; }

  // Rendered as "3", "1..5" or "1..2\/4..6".
  std::string str() const;

 private:
  std::vector<Iv> iv_;
};

}  // namespace cflpfd
