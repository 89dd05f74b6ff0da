#pragma once

#include <cstdint>
#include <string_view>

namespace gazenlq {

/// Derives an independent 64-bit seed for a named substream ("data", "init",
/// "shuffle", ...) from the root seed. Same (root, name) always yields the same
/// value.
uint64_t derive_seed(uint64_t root, std::string_view stream);

/// Derives a per-item seed, e.g. one per video id, from a substream seed.
uint64_t derive_seed(uint64_t root, uint64_t index);

}  // namespace gazenlq
