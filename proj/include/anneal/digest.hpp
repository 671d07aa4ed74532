#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>

#include <Eigen/Core>

namespace anneal {

/// 64-bit FNV-1a.
class Fnv1a {
 public:
  void update(std::span<const std::uint8_t> bytes) noexcept {
    for (auto b : bytes) {
      hash_ ^= b;
      hash_ *= 0x100000001B3ULL;
    }
  }

  /// Feeds the little-endian encoding of `value`.
  void update(double value) noexcept {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(value);
    for (int i = 0; i < 8; ++i) {
      hash_ ^= static_cast<std::uint8_t>(bits & 0xFF);
      hash_ *= 0x100000001B3ULL;
      bits >>= 8;
    }
  }

  std::uint64_t value() const noexcept { return hash_; }

 private:
  std::uint64_t hash_ = 0xCBF29CE484222325ULL;
};

inline std::uint64_t checksum(const Eigen::Ref<const Eigen::VectorXd>& values) noexcept {
  Fnv1a h;
  for (double v : values) {
    h.update(v);
  }
  return h.value();
}

}  // namespace anneal
