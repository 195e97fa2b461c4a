#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace qgen {

// Error taxonomy mirrors the CLI exit codes: usage=1, data=2, numeric=3.
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

inline constexpr const char* kToolVersion = "0.1.0";

// FNV-1a, used for content digests in run manifests.
inline uint64_t fnv1a(const void* data, size_t n, uint64_t h = 14695981039346656037ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(uint64_t v);
std::string file_digest(const std::string& path);

}  // namespace qgen
