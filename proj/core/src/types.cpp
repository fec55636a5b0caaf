#include "springmass/types.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "springmass/errors.hpp"

namespace springmass {
namespace {

constexpr Real kUnitTolerance = 1e-9;

void require(bool ok, const char* what) {
  if (!ok) throw ValidationError(what);
}

bool is_unit(const Vec3& v) { return std::abs(norm(v) - 1.0) <= kUnitTolerance; }

}  // namespace

void validate(const LocalConstraint& c) {
  std::visit(
      [](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, LineConstraint>) {
          require(is_unit(k.direction), "line constraint direction must be a unit vector");
        } else {
          require(is_unit(k.normal), "plane constraint normal must be a unit vector");
        }
      },
      c);
}

Vec3 project_velocity(const LocalConstraint& c, const Vec3& vel) noexcept {
  if (const auto* line = std::get_if<LineConstraint>(&c)) {
    return line->direction * dot(vel, line->direction);
  }
  const auto& plane = std::get<PlaneConstraint>(c);
  return vel - plane.normal * dot(vel, plane.normal);
}

void Mass::validate() const {
  require(m > 0.0 && std::isfinite(m), "mass must be positive and finite");
  require(is_finite(pos) && is_finite(vel) && is_finite(force) && is_finite(load),
          "mass state must be finite");
  for (const auto& c : constraints) springmass::validate(c);
}

Real Spring::area() const noexcept {
  const Real r = 0.5 * diameter;
  return std::numbers::pi * r * r;
}

void Spring::validate() const {
  require(!(m1 == m2), "spring endpoints must differ");
  require(rest_length > 0.0 && std::isfinite(rest_length), "spring rest length must be positive");
  require(k >= 0.0 && std::isfinite(k), "spring stiffness must be non-negative");
  require(diameter >= 0.0 && std::isfinite(diameter), "spring diameter must be non-negative");
  if (yield_stress) require(*yield_stress > 0.0, "yield stress must be positive");
  if (actuation) actuation->validate();
}

void Material::validate() const {
  require(youngs_modulus > 0.0 && std::isfinite(youngs_modulus),
          "elasticity modulus must be positive");
  require(density > 0.0 && std::isfinite(density), "density must be positive");
  if (yield_stress) require(*yield_stress > 0.0, "yield stress must be positive");
}

void ContactPlane::validate() const {
  require(is_unit(normal), "contact plane normal must be a unit vector");
  require(stiffness >= 0.0, "contact stiffness must be non-negative");
  require(mu_static >= 0.0 && mu_kinetic >= 0.0, "friction coefficients must be non-negative");
  require(mu_kinetic <= mu_static, "kinetic friction must not exceed static friction");
}

void ContactBall::validate() const {
  require(radius > 0.0, "contact ball radius must be positive");
  require(stiffness >= 0.0, "contact stiffness must be non-negative");
}

void Environment::validate() const {
  require(is_finite(gravity), "gravity must be finite");
  require(drag >= 0.0 && std::isfinite(drag), "drag coefficient must be non-negative");
  for (const auto& c : contacts) std::visit([](const auto& k) { k.validate(); }, c);
}

}  // namespace springmass
