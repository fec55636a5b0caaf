#include "springmass/actuation.hpp"

#include <algorithm>
#include <limits>

#include "springmass/errors.hpp"

namespace springmass {

void assign_wave_offsets(const Body& body, ObjectStore& store) {
  if (body.masses.empty()) throw ValidationError("cannot assign wave offsets to an empty body");
  Real x_min = std::numeric_limits<Real>::infinity();
  for (MassHandle h : body.masses) {
    if (store.alive(h)) x_min = std::min(x_min, store.mass(h).origin.x);
  }
  if (x_min == std::numeric_limits<Real>::infinity()) {
    throw ValidationError("body has no live masses");
  }
  for (SpringHandle h : body.springs) {
    if (!store.alive(h)) continue;
    Spring& s = store.mutable_spring(h);
    const Real x1 = store.mass(s.m1).origin.x;
    const Real x2 = store.mass(s.m2).origin.x;
    if (!s.actuation) s.actuation = ActuationParams{};
    s.actuation->offset = std::min(x1, x2) - x_min;
  }
}

void configure_worm(const Body& body, ObjectStore& store, const WormParams& params) {
  ActuationParams base;
  base.expansion = params.expansion;
  base.omega = params.omega;
  base.period = params.period;
  base.mode = params.mode;
  base.validate();
  for (SpringHandle h : body.springs) {
    if (store.alive(h)) store.mutable_spring(h).actuation = base;
  }
  assign_wave_offsets(body, store);
}

}  // namespace springmass
