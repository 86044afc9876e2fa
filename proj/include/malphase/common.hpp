#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace malphase {

// Bad input: malformed files, wrong dimensions, violated preconditions.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Integrity failures such as a quarantine audit catching unseen-family data
// in a training artefact.
class AuditError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/// Derive an independent stream seed from a root seed and a stage name, so
/// every stage of a run can be reproduced on its own.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view stage) {
  return detail::splitmix64(root ^ detail::splitmix64(detail::fnv1a(stage)));
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view stage,
                                 std::uint64_t index) {
  return detail::splitmix64(derive_seed(root, stage) + detail::splitmix64(index));
}

}  // namespace malphase
