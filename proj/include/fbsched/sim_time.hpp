#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace fbsched {

/// Span of virtual time in integer nanoseconds.
struct Duration {
  std::int64_t ns = 0;

  constexpr auto operator<=>(const Duration&) const = default;

  constexpr Duration operator+(Duration o) const { return {ns + o.ns}; }
  constexpr Duration operator-(Duration o) const { return {ns - o.ns}; }
  constexpr Duration& operator+=(Duration o) { ns += o.ns; return *this; }
  constexpr Duration& operator-=(Duration o) { ns -= o.ns; return *this; }

  constexpr double seconds() const { return static_cast<double>(ns) * 1e-9; }
  constexpr double millis() const { return static_cast<double>(ns) * 1e-6; }
};

/// Instant on the simulation clock, nanoseconds since t = 0.
struct SimTime {
  std::int64_t ns = 0;

  constexpr auto operator<=>(const SimTime&) const = default;

  constexpr SimTime operator+(Duration d) const { return {ns + d.ns}; }
  constexpr SimTime& operator+=(Duration d) { ns += d.ns; return *this; }
  constexpr Duration operator-(SimTime o) const { return {ns - o.ns}; }
  constexpr SimTime operator-(Duration d) const { return {ns - d.ns}; }

  constexpr double seconds() const { return static_cast<double>(ns) * 1e-9; }
};

constexpr Duration nanoseconds(std::int64_t n) { return {n}; }
constexpr Duration microseconds(std::int64_t n) { return {n * 1'000}; }
constexpr Duration milliseconds(std::int64_t n) { return {n * 1'000'000}; }
constexpr Duration seconds(std::int64_t n) { return {n * 1'000'000'000}; }

/// Converts a real-valued number of seconds to nanoseconds, rounding half up.
inline std::int64_t round_to_ns(double seconds) {
  const double scaled = seconds * 1e9;
  if (!std::isfinite(scaled) || std::abs(scaled) > 9.0e18) {
    throw std::out_of_range("time value not representable in nanoseconds");
  }
  return static_cast<std::int64_t>(std::floor(scaled + 0.5));
}

inline Duration duration_from_seconds(double s) { return {round_to_ns(s)}; }
inline Duration duration_from_millis(double ms) { return {round_to_ns(ms * 1e-3)}; }
inline SimTime time_from_seconds(double s) { return {round_to_ns(s)}; }

}  // namespace fbsched
