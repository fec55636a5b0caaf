#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "springmass/actuation_params.hpp"
#include "springmass/vec3.hpp"

namespace springmass {

/// Generational reference into an ObjectStore slot array. A handle resolves
/// only while its generation matches the slot's current generation.
template <typename Tag>
struct Handle {
  static constexpr std::uint32_t kInvalidSlot = 0xffffffffu;

  std::uint32_t slot = kInvalidSlot;
  std::uint32_t generation = 0;

  constexpr bool is_null() const noexcept { return slot == kInvalidSlot; }
  friend constexpr bool operator==(const Handle&, const Handle&) = default;
  friend constexpr auto operator<=>(const Handle&, const Handle&) = default;
};

struct MassTag {};
struct SpringTag {};
using MassHandle = Handle<MassTag>;
using SpringHandle = Handle<SpringTag>;

/// Velocity-projection constraint attached to a mass.
struct LineConstraint {
  Vec3 direction;  // unit; velocity is projected onto this line
};
struct PlaneConstraint {
  Vec3 normal;  // unit; normal velocity component is removed
};
using LocalConstraint = std::variant<LineConstraint, PlaneConstraint>;

void validate(const LocalConstraint& c);
/// Applies the constraint to a velocity.
Vec3 project_velocity(const LocalConstraint& c, const Vec3& vel) noexcept;

// Position and force lead so the spring pass touches one cache line per
// endpoint.
struct alignas(64) Mass {
  Vec3 pos;
  Vec3 force;  // per-step accumulator, cleared by the mass pass
  Vec3 vel;
  Vec3 acc;    // diagnostic, written by the mass pass
  /// Persistent external load applied every step (N). Unlike `force` it is
  /// not cleared by the mass pass.
  Vec3 load;
  /// Position at creation; actuation offsets are measured from it.
  Vec3 origin;
  Real m = 1.0;
  bool fixed = false;
  std::vector<LocalConstraint> constraints;

  void validate() const;
};

// One cache line; actuation parameters live out of line.
struct alignas(64) Spring {
  MassHandle m1;
  MassHandle m2;
  Real rest_length = 1.0;  // L_r, m
  Real k = 0.0;            // N/m
  Real diameter = 0.0;     // m
  std::optional<Real> yield_stress;  // Pa
  ActuationBox actuation;

  /// Cross-sectional area pi * (diameter / 2)^2.
  Real area() const noexcept;
  void validate() const;
};

struct Material {
  Real youngs_modulus = 1.0;  // E, Pa
  Real density = 1.0;         // kg/m^3
  std::optional<Real> yield_stress;

  void validate() const;
};

/// Half-space solid {p : dot(p, normal) < offset} with penalty contact and
/// Coulomb friction.
struct ContactPlane {
  Vec3 normal{0.0, 0.0, 1.0};
  Real offset = 0.0;
  Real stiffness = 1e4;
  Real mu_static = 0.0;
  Real mu_kinetic = 0.0;

  void validate() const;
};

/// Solid ball with frictionless penalty contact.
struct ContactBall {
  Vec3 center;
  Real radius = 1.0;
  Real stiffness = 1e4;

  void validate() const;
};

using Contact = std::variant<ContactPlane, ContactBall>;

struct Environment {
  Vec3 gravity{0.0, 0.0, -9.81};
  Real drag = 0.0;  // linear drag coefficient, kg/s
  std::vector<Contact> contacts;

  void validate() const;
};

}  // namespace springmass
