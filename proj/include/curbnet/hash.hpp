#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include <fmt/format.h>

namespace curbnet {

/// 64-bit FNV-1a. Used for content hashes in manifests and golden fixtures,
/// where the value must be stable across builds and platforms.
class Fnv1a {
 public:
  void update(std::string_view bytes) {
    for (unsigned char c : bytes) {
      state_ ^= c;
      state_ *= 0x100000001B3ULL;
    }
  }
  void update(std::span<const std::uint8_t> bytes) {
    for (std::uint8_t c : bytes) {
      state_ ^= c;
      state_ *= 0x100000001B3ULL;
    }
  }
  std::uint64_t value() const { return state_; }
  std::string hex() const { return fmt::format("{:016x}", state_); }

 private:
  std::uint64_t state_ = 0xCBF29CE484222325ULL;
};

inline std::string fnv1a_hex(std::string_view bytes) {
  Fnv1a h;
  h.update(bytes);
  return h.hex();
}

}  // namespace curbnet
