#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mpssl {

// Thrown for malformed configs / schema violations. Maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when a run fails at execution time. Maps to exit code 1.
class RunError : public std::runtime_error {
 public:
  explicit RunError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

inline void require_cfg(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

// FNV-1a over a byte range. Used for config hashes and parameter checksums.
// The byte variant carries a distinct name: a const char* argument would
// otherwise silently prefer the (void*, size_t) overload.
std::uint64_t fnv1a64_bytes(const void* data, std::size_t len,
                            std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL);

std::string to_hex(std::uint64_t v);

}  // namespace mpssl
