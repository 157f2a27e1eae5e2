#include "cflpfd/domain.hpp"

#include <algorithm>
#include <cassert>

namespace cflpfd {

IntDomain IntDomain::range(long long lo, long long hi) {
  IntDomain d;
  if (lo <= hi) d.iv_.push_back({lo, hi});
  return d;
}

IntDomain IntDomain::from_values(const std::vector<long long>& vals) {
  IntDomain d;
  for (long long v : vals) {
    assert(d.iv_.empty() || v > d.iv_.back().second);
    if (!d.iv_.empty() && d.iv_.back().second + 1 == v)
      d.iv_.back().second = v;
    else
      d.iv_.push_back({v, v});
  }
  return d;
}

bool IntDomain::is_singleton() const {
  return iv_.size() == 1 && iv_[0].first == iv_[0].second;
}

long long IntDomain::min() const {
  assert(!iv_.empty());
  return iv_.front().first;
}

long long IntDomain::max() const {
  assert(!iv_.empty());
  return iv_.back().second;
}

long long IntDomain::size() const {
  long long n = 0;
  for (const auto& [a, b] : iv_) n += b - a + 1;
  return n;
}

bool IntDomain::contains(long long v) const {
  for (const auto& [a, b] : iv_) {
    if (v < a) return false;
    if (v <= b) return true;
  }
  return false;
}

void IntDomain::intersect_range(long long lo, long long hi) {
  std::vector<Iv> out;
  for (const auto& [a, b] : iv_) {
    long long na = std::max(a, lo), nb = std::min(b, hi);
    if (na <= nb) out.push_back({na, nb});
  }
  iv_ = std::move(out);
}

void IntDomain::intersect(const IntDomain& other) {
  std::vector<Iv> out;
  size_t i = 0, j = 0;
  while (i < iv_.size() && j < other.iv_.size()) {
    long long a = std::max(iv_[i].first, other.iv_[j].first);
    long long b = std::min(iv_[i].second, other.iv_[j].second);
    if (a <= b) out.push_back({a, b});
    if (iv_[i].second < other.iv_[j].second)
      ++i;
    else
      ++j;
  }
  iv_ = std::move(out);
}

void IntDomain::remove_value(long long v) {
  for (size_t i = 0; i < iv_.size(); ++i) {
    auto [a, b] = iv_[i];
    if (v < a || v > b) continue;
    std::vector<Iv> repl;
    if (a <= v - 1) repl.push_back({a, v - 1});
    if (v + 1 <= b) repl.push_back({v + 1, b});
    iv_.erase(iv_.begin() + i);
    iv_.insert(iv_.begin() + i, repl.begin(), repl.end());
    return;
  }
}

std::vector<long long> IntDomain::values() const {
  std::vector<long long> out;
  for (const auto& [a, b] : iv_)
    for (long long v = a; v <= b; ++v) out.push_back(v);
  return out;
}

std::string IntDomain::str() const {
  if (iv_.empty()) return "{}";
  std::string s;
  for (size_t i = 0; i < iv_.size(); ++i) {
    if (i) s += "\\/";
    auto [a, b] = iv_[i];
    s += std::to_string(a);
    if (a != b) s += ".." + std::to_string(b);
  }
  return s;
}

}  // namespace cflpfd
