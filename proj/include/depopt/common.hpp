#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace depopt {

inline constexpr double kGravity = 9.80665;     // m/s^2
inline constexpr double kFeet = 0.3048;         // m per ft
inline constexpr double kKnot = 0.514444;       // m/s per kt
inline constexpr double kDayLengthS = 24.0 * 3600.0;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
};

inline Vec2 unit_from_heading(double psi) { return {std::cos(psi), std::sin(psi)}; }

// Wrap to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * M_PI);
  if (a <= -M_PI) a += 2.0 * M_PI;
  return a;
}

// Error raised by loaders and validators; carries file/field context.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::string file, std::string field, const std::string& what)
      : std::runtime_error(file + ": " + field + ": " + what),
        file_(std::move(file)),
        field_(std::move(field)) {}
  const std::string& file() const { return file_; }
  const std::string& field() const { return field_; }

 private:
  std::string file_;
  std::string field_;
};

class InfeasibleScheduleError : public ScenarioError {
 public:
  using ScenarioError::ScenarioError;
};

class EmptyArchiveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Process-wide counters for clamped model evaluations. Monitoring only;
// never part of computed results.
struct WarningCounters {
  std::atomic<std::uint64_t> thrust_envelope_clamps{0};
  std::atomic<std::uint64_t> npd_distance_clamps{0};
  std::atomic<std::uint64_t> hypervolume_dropped_points{0};

  void reset() {
    thrust_envelope_clamps = 0;
    npd_distance_clamps = 0;
    hypervolume_dropped_points = 0;
  }
};

WarningCounters& warnings();

// Kahan compensated accumulator; summation order stays deterministic, this
// keeps the result stable against intermediate rounding.
class CompensatedSum {
 public:
  void add(double v) {
    const double y = v - c_;
    const double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

// Runs fn(i) for i in [0, n). Work is split into contiguous blocks so the
// result layout is independent of the worker count.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn);

// FNV-1a, used for scenario fingerprints.
class Fnv1a {
 public:
  void feed_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  void feed(double v) { feed_bytes(&v, sizeof v); }
  void feed(std::uint64_t v) { feed_bytes(&v, sizeof v); }
  void feed(std::int64_t v) { feed_bytes(&v, sizeof v); }
  void feed(const std::string& s) {
    feed(static_cast<std::uint64_t>(s.size()));
    feed_bytes(s.data(), s.size());
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace depopt
