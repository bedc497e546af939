#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace slimshap {

// Subsets are bitmasks over a feature universe of size p. Enumerating all of
// them materializes 2^p entries, so p is capped at 30 for full enumeration.
inline constexpr int kMaxSubsetUniverse = 30;

struct FeatureSubset {
  std::uint32_t mask = 0;
  int p = 0;

  FeatureSubset() = default;
  FeatureSubset(std::uint32_t mask_, int p_) : mask(mask_), p(p_) {}

  // members must be strictly increasing and inside [0, p)
  static FeatureSubset from_members(const std::vector<int>& members, int p) {
    if (p < 0 || p > kMaxSubsetUniverse)
      throw std::invalid_argument("FeatureSubset: universe size " + std::to_string(p) +
                                  " outside [0, " + std::to_string(kMaxSubsetUniverse) + "]");
    FeatureSubset s{0, p};
    int prev = -1;
    for (int m : members) {
      if (m < 0 || m >= p)
        throw std::invalid_argument("FeatureSubset: member " + std::to_string(m) +
                                    " outside [0, " + std::to_string(p) + ")");
      if (m <= prev)
        throw std::invalid_argument("FeatureSubset: members must be strictly increasing");
      s.mask |= (1u << m);
      prev = m;
    }
    return s;
  }

  int size() const { return std::popcount(mask); }
  bool empty() const { return mask == 0; }
  bool full() const { return mask == full_mask(p); }
  bool contains(int i) const { return (mask >> i) & 1u; }

  FeatureSubset complement() const { return {full_mask(p) & ~mask, p}; }
  FeatureSubset intersect(const FeatureSubset& o) const { return {mask & o.mask, p}; }
  FeatureSubset unite(const FeatureSubset& o) const { return {mask | o.mask, p}; }

  std::vector<int> members() const {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(size()));
    for (int i = 0; i < p; ++i)
      if (contains(i)) out.push_back(i);
    return out;
  }

  std::string to_string() const {
    std::string s = "{";
    bool first = true;
    for (int m : members()) {
      if (!first) s += ",";
      s += std::to_string(m);
      first = false;
    }
    return s + "}";
  }

  bool operator==(const FeatureSubset& o) const { return mask == o.mask && p == o.p; }

  static std::uint32_t full_mask(int p) {
    return p == 0 ? 0u : (p >= 32 ? ~0u : ((1u << p) - 1u));
  }
};

// All 2^p subsets ordered by (size, lexicographic member list), so the empty
// set comes first and the full set last. Rejects p > 30.
inline std::vector<FeatureSubset> enumerate_subsets(int p) {
  if (p < 0) throw std::invalid_argument("enumerate_subsets: negative p");
  if (p > kMaxSubsetUniverse)
    throw std::invalid_argument("enumerate_subsets: p = " + std::to_string(p) +
                                " exceeds the enumeration cap of " +
                                std::to_string(kMaxSubsetUniverse));
  std::vector<FeatureSubset> out;
  out.reserve(std::size_t{1} << p);
  out.emplace_back(0u, p);
  std::vector<int> comb;
  for (int s = 1; s <= p; ++s) {
    comb.resize(static_cast<std::size_t>(s));
    for (int i = 0; i < s; ++i) comb[static_cast<std::size_t>(i)] = i;
    for (;;) {
      std::uint32_t m = 0;
      for (int v : comb) m |= (1u << v);
      out.emplace_back(m, p);
      // advance to the next size-s combination in lexicographic order
      int i = s - 1;
      while (i >= 0 && comb[static_cast<std::size_t>(i)] == p - s + i) --i;
      if (i < 0) break;
      ++comb[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < s; ++j)
        comb[static_cast<std::size_t>(j)] = comb[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return out;
}

}  // namespace slimshap
