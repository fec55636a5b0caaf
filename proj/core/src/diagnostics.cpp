#include "springmass/diagnostics.hpp"

#include "springmass/engine.hpp"

namespace springmass {
namespace {

Real spring_energy(const Spring& s, const Vec3& p1, const Vec3& p2, Real factor) {
  const Real stretch = norm(p2 - p1) - factor * s.rest_length;
  return 0.5 * s.k * stretch * stretch;
}

}  // namespace

EnergyBreakdown compute_energy(const Snapshot& snap, const Environment& env) {
  EnergyBreakdown e;
  for (const auto& r : snap.masses) {
    if (!r.alive) continue;
    e.kinetic += 0.5 * r.state.m * norm_squared(r.state.vel);
    e.gravitational -= r.state.m * dot(env.gravity, r.state.pos);
  }
  for (const auto& r : snap.springs) {
    if (!r.alive) continue;
    const MassRecord* a = snap.find(r.state.m1);
    const MassRecord* b = snap.find(r.state.m2);
    if (a == nullptr || b == nullptr || !a->alive || !b->alive) continue;
    e.spring += spring_energy(r.state, a->state.pos, b->state.pos,
                              rest_factor(r.state, snap.sim_time, r.handle.slot));
  }
  return e;
}

EnergyBreakdown compute_energy(const ObjectStore& store, const Environment& env, Real sim_time) {
  EnergyBreakdown e;
  const MassArray& masses = store.masses();
  for (std::uint32_t i = 0; i < masses.slot_count(); ++i) {
    if (!masses.alive_at(i)) continue;
    const Mass& m = masses.values()[i];
    e.kinetic += 0.5 * m.m * norm_squared(m.vel);
    e.gravitational -= m.m * dot(env.gravity, m.pos);
  }
  const SpringArray& springs = store.springs();
  for (std::uint32_t i = 0; i < springs.slot_count(); ++i) {
    if (!springs.alive_at(i)) continue;
    const Spring& s = springs.values()[i];
    if (!store.alive(s.m1) || !store.alive(s.m2)) continue;
    e.spring += spring_energy(s, store.mass(s.m1).pos, store.mass(s.m2).pos,
                              rest_factor(s, sim_time, i));
  }
  return e;
}

Vec3 center_of_mass(const Snapshot& snap) {
  Vec3 weighted;
  Real total = 0.0;
  for (const auto& r : snap.masses) {
    if (!r.alive) continue;
    weighted += r.state.pos * r.state.m;
    total += r.state.m;
  }
  return total > 0.0 ? weighted / total : Vec3{};
}

Vec3 center_of_mass(const Snapshot& snap, std::span<const MassHandle> subset) {
  Vec3 weighted;
  Real total = 0.0;
  for (MassHandle h : subset) {
    const MassRecord* r = snap.find(h);
    if (r == nullptr || !r->alive) continue;
    weighted += r->state.pos * r->state.m;
    total += r->state.m;
  }
  return total > 0.0 ? weighted / total : Vec3{};
}

Vec3 total_momentum(const ObjectStore& store) {
  Vec3 p;
  const MassArray& masses = store.masses();
  for (std::uint32_t i = 0; i < masses.slot_count(); ++i) {
    if (masses.alive_at(i)) p += masses.values()[i].vel * masses.values()[i].m;
  }
  return p;
}

Real spring_stress(const Spring& s, const Vec3& p1, const Vec3& p2, Real factor) {
  const Real area = s.area();
  if (!(area > 0.0)) return 0.0;
  return norm(spring_force(s, p1, p2, factor)) / area;
}

}  // namespace springmass
