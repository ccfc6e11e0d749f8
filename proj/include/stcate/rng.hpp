#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace stcate {

using Engine = std::mt19937_64;

/// Reproducible random stream keyed by (master seed, stream id). Distinct keys
/// give independent engines; equal keys replay identical draws.
struct SeedStream {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;

  Engine engine() const;
  /// Sub-stream for a numeric or textual label.
  SeedStream child(std::uint64_t label) const;
  SeedStream child(std::string_view label) const;
};

std::uint64_t splitmix64(std::uint64_t x);
/// FNV-1a, stable across platforms.
std::uint64_t hash_label(std::string_view label);

}  // namespace stcate
