#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mdgan {

using Rng = std::mt19937_64;

// Seeds form a tree: experiment seed -> run seed -> per-purpose streams
// ("d2_init", "batching", "noise", ...). A child seed depends only on its
// parent and its label, never on how many draws other streams made.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label);
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index);

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace mdgan
