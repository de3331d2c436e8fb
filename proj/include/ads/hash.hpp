#pragma once
#include <array>
#include <cstdint>
#include <cstddef>
#include <string_view>

namespace ads {

// MurmurHash3 x64 128-bit, seed 0. Used everywhere a stable 128-bit digest is
// needed (node identifiers, rendezvous keys, trace digests); platform-stable.
struct Digest128 {
  uint64_t hi = 0;
  uint64_t lo = 0;
  friend bool operator==(const Digest128&, const Digest128&) = default;
};

Digest128 murmur3_128(const void* data, size_t len, uint32_t seed = 0);
Digest128 murmur3_128(std::string_view s);

// Convenience 64-bit mix for RNG substream labels.
uint64_t hash64(std::string_view s);

}  // namespace ads
