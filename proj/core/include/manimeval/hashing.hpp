#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

namespace manimeval {

/// 64-bit FNV-1a. Stable across platforms; used for feature hashing.
constexpr std::uint64_t fnv1a64(std::string_view data,
                                std::uint64_t seed = 14695981039346656037ULL) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

/// Lower-case hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// Incremental SHA-256 for hashing several pieces (file trees, cache keys).
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(std::string_view data);
  std::string hex_digest();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace manimeval
