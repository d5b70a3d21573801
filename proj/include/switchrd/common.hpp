#pragma once

#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace switchrd {

// Base class for all toolkit errors so callers can catch one type.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct zero_horizon_error : error {
  zero_horizon_error() : error("occupation fractions need a positive horizon") {}
};

struct outside_support_error : error {
  explicit outside_support_error(double y)
      : error("y = " + std::to_string(y) + " lies outside the open support interval") {}
};

struct degenerate_support_error : error {
  degenerate_support_error()
      : error("support interval is degenerate: a(+)/b(+) equals a(-)/b(-)") {}
};

struct tolerance_not_met_error : error {
  using error::error;
};

struct no_interior_equilibrium_error : error {
  no_interior_equilibrium_error()
      : error("plus regime has no interior equilibrium: a(+)e(+) <= b(+)d(+)") {}
};

struct stability_violation_error : error {
  using error::error;
};

struct path_mismatch_error : error {
  using error::error;
};

struct insufficient_data_error : error {
  using error::error;
};

struct empty_cloud_error : error {
  empty_cloud_error() : error("omega-set cloud is empty") {}
};

// Configuration-class failures exit with code 2; numerical ones with 1.
struct config_error : error {
  using error::error;
};

struct unknown_example_error : config_error {
  explicit unknown_example_error(const std::string& id)
      : config_error("unknown example id: " + id) {}
};

struct unknown_field_error : config_error {
  explicit unknown_field_error(const std::string& field)
      : config_error("unknown sweep field: " + field) {}
};

// Shortest round-trip decimal representation. Used for every CSV number so
// that identical doubles always serialize to identical bytes.
inline std::string format_double(double x) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

// FNV-1a, used as a content digest for configs and paths (bookkeeping, not
// security).
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace switchrd
