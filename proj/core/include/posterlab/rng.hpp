#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace posterlab {

// All randomness in the project flows from a root seed through derive_seed.
// Stage and per-item seeds are derived as hash(root, tag, index) so that any
// artifact can be reproduced in isolation.

uint64_t hash64(std::string_view bytes);
uint64_t mix64(uint64_t x);
uint64_t derive_seed(uint64_t root, std::string_view tag, uint64_t index = 0);

inline std::mt19937_64 make_rng(uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace posterlab
