#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <stdexcept>
#include <string>

namespace consensus {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when user-supplied input (files, CLI arguments, parameters)
/// violates a documented precondition. The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Shortest-faithful decimal rendering used by every writer, so that a rerun
/// with identical inputs produces byte-identical files.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

/// FNV-1a, used to fingerprint graphs and matrices in run metadata.
inline std::uint64_t fnv1a(const void* data, std::size_t len,
                           std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a_append(std::uint64_t h, std::uint64_t value) {
  return fnv1a(&value, sizeof(value), h);
}

inline std::uint64_t fnv1a_append(std::uint64_t h, double value) {
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(value));
  std::memcpy(&bits, &value, sizeof(bits));
  return fnv1a_append(h, bits);
}

}  // namespace detail

}  // namespace consensus
