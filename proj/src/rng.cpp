#include "mdgan/rng.hpp"

namespace mdgan {
namespace {

// splitmix64 finalizer
std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t parent, std::string_view label) {
  return mix(mix(parent) ^ fnv1a(label));
}

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
  return mix(mix(parent) ^ mix(index + 0x632be59bd9b4e019ULL));
}

}  // namespace mdgan
