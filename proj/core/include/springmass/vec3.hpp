#pragma once

#include <cmath>
#include <optional>
#include <ostream>

namespace springmass {

using Real = double;

/// Three-component vector used for positions (m), velocities (m/s) and
/// forces (N). Plain aggregate; all arithmetic is component-wise IEEE.
struct Vec3 {
  Real x = 0.0;
  Real y = 0.0;
  Real z = 0.0;

  constexpr Vec3& operator+=(const Vec3& o) noexcept {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr Vec3& operator-=(const Vec3& o) noexcept {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  constexpr Vec3& operator*=(Real s) noexcept {
    x *= s;
    y *= s;
    z *= s;
    return *this;
  }

  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr Vec3 operator+(Vec3 a, const Vec3& b) noexcept { return a += b; }
constexpr Vec3 operator-(Vec3 a, const Vec3& b) noexcept { return a -= b; }
constexpr Vec3 operator-(const Vec3& a) noexcept { return {-a.x, -a.y, -a.z}; }
constexpr Vec3 operator*(Vec3 a, Real s) noexcept { return a *= s; }
constexpr Vec3 operator*(Real s, Vec3 a) noexcept { return a *= s; }
constexpr Vec3 operator/(const Vec3& a, Real s) noexcept { return {a.x / s, a.y / s, a.z / s}; }

constexpr Real dot(const Vec3& a, const Vec3& b) noexcept {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

constexpr Vec3 cross(const Vec3& a, const Vec3& b) noexcept {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline Real norm(const Vec3& a) noexcept { return std::sqrt(dot(a, a)); }
constexpr Real norm_squared(const Vec3& a) noexcept { return dot(a, a); }

/// Unit vector along `a`, or nullopt for the zero vector (direction undefined).
inline std::optional<Vec3> normalize(const Vec3& a) noexcept {
  const Real n = norm(a);
  if (!(n > 0.0)) return std::nullopt;
  return a / n;
}

inline bool is_finite(const Vec3& a) noexcept {
  return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

inline Vec3 component_min(const Vec3& a, const Vec3& b) noexcept {
  return {std::fmin(a.x, b.x), std::fmin(a.y, b.y), std::fmin(a.z, b.z)};
}
inline Vec3 component_max(const Vec3& a, const Vec3& b) noexcept {
  return {std::fmax(a.x, b.x), std::fmax(a.y, b.y), std::fmax(a.z, b.z)};
}

inline std::ostream& operator<<(std::ostream& os, const Vec3& v) {
  return os << '(' << v.x << ", " << v.y << ", " << v.z << ')';
}

}  // namespace springmass
