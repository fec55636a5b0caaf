#pragma once

#include <span>

#include "springmass/control.hpp"
#include "springmass/types.hpp"

namespace springmass {

struct EnergyBreakdown {
  Real kinetic = 0.0;
  Real spring = 0.0;        // sum of k/2 * (len - L_s * L_r)^2
  Real gravitational = 0.0;  // -sum of m * dot(g, pos)
  Real total() const noexcept { return kinetic + spring + gravitational; }
};

EnergyBreakdown compute_energy(const Snapshot& snap, const Environment& env);
EnergyBreakdown compute_energy(const ObjectStore& store, const Environment& env, Real sim_time);

/// Mass-weighted mean position of the live records (or of `subset`).
Vec3 center_of_mass(const Snapshot& snap);
Vec3 center_of_mass(const Snapshot& snap, std::span<const MassHandle> subset);

/// Sum of m * vel over live masses.
Vec3 total_momentum(const ObjectStore& store);

/// Axial stress |F| / A_c of a spring given its endpoint positions; zero
/// when the spring has no cross-section.
Real spring_stress(const Spring& s, const Vec3& p1, const Vec3& p2, Real rest_factor);

}  // namespace springmass
