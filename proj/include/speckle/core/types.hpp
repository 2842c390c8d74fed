#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace speckle {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition or invariant violated by caller-supplied values.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A computation would exceed its configured memory or enumeration budget.
class ResourceError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed file contents (bad header, truncated payload, unsupported depth).
class FormatError : public Error {
 public:
  using Error::Error;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr bool operator==(const Vec2&) const = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double norm_sq(Vec2 a) { return dot(a, a); }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

inline Vec2 polar_vec(double magnitude, double angle) {
  return {magnitude * std::cos(angle), magnitude * std::sin(angle)};
}

namespace detail {
inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidArgument(what);
}
}  // namespace detail

}  // namespace speckle
