#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace occtrack {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent generator for a named purpose, keyed by up to two indices
/// (for example frame and camera). Streams for different names never share
/// state, so varying one noise source leaves the others untouched.
inline std::mt19937_64 substream(std::uint64_t seed, std::string_view name, std::uint64_t a = 0,
                                 std::uint64_t b = 0) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  std::uint64_t key = splitmix64(seed ^ splitmix64(h));
  key = splitmix64(key ^ splitmix64(a + 0x632be59bd9b4e019ULL));
  key = splitmix64(key ^ splitmix64(b + 0x85157af5ULL));
  return std::mt19937_64(key);
}

}  // namespace occtrack
