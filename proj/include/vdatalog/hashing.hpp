#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace vdatalog {

inline void hash_combine(std::size_t& seed, std::size_t v) {
  seed ^= v + 0x9e3779b97f4a7c15ull + (seed << 6) + (seed >> 2);
}

struct VecHash {
  std::size_t operator()(const std::vector<std::uint32_t>& v) const {
    std::size_t seed = v.size();
    for (auto x : v) hash_combine(seed, x);
    return seed;
  }
};

struct ArrayHash3 {
  std::size_t operator()(const std::array<std::uint32_t, 3>& a) const {
    std::size_t seed = 3;
    hash_combine(seed, a[0]);
    hash_combine(seed, a[1]);
    hash_combine(seed, a[2]);
    return seed;
  }
};

}  // namespace vdatalog
