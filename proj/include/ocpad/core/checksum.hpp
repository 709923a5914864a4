#pragma once

#include <cstdint>
#include <cstdio>
#include <span>
#include <string>

namespace ocpad {

/// 64-bit FNV-1a. Used for reproducibility manifests, not for integrity
/// against tampering.
inline std::uint64_t fnv1a64(std::span<const char> bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace ocpad
