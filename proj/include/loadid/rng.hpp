#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace loadid {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to turn (seed, label, index) into stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed for a named, indexed sub-stream of a master seed. Streams for
/// different (label, index) pairs are independent of scheduling order.
constexpr std::uint64_t substream_seed(std::uint64_t master, std::string_view label,
                                       std::uint64_t index = 0) {
  return mix64(mix64(master ^ hash_label(label)) + mix64(index + 1));
}

inline Rng make_rng(std::uint64_t master, std::string_view label, std::uint64_t index = 0) {
  return Rng(substream_seed(master, label, index));
}

}  // namespace loadid
