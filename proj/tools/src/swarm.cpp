#include <cmath>
#include <limits>

#include "springmass/errors.hpp"
#include "springmass_tools/experiments.hpp"

namespace springmass::tools {

SwarmReport run_swarm(const Scenario& scenario, int count, std::uint64_t memory_limit_bytes) {
  if (count < 1) throw ValidationError("swarm count must be >= 1");
  const std::uint64_t need = estimate_scene_bytes(scenario, count);
  if (need > memory_limit_bytes) {
    throw ValidationError("swarm of " + std::to_string(count) + " bodies needs about " +
                          std::to_string(need >> 20) + " MiB, above the limit of " +
                          std::to_string(memory_limit_bytes >> 20) + " MiB");
  }

  SwarmReport out;
  BuiltScene scene;
  auto strain_of = [](const Spring& s, const Vec3& p1, const Vec3& p2) {
    return std::abs(norm(p2 - p1) - s.rest_length) / s.rest_length;
  };
  auto hook = [&](SimController& ctl, const PauseReport& pr, const Snapshot& snap) {
    if (pr.state == SimState::Idle && !scene.connective.empty()) {
      // Connective strain is watched after every step, not just at pauses.
      ctl.set_step_observer([&out, &scene, strain_of](const StateView& view) {
        const ObjectStore& store = view.store();
        for (SpringHandle h : scene.connective) {
          const Spring* s = store.springs().find(h);
          if (s == nullptr) continue;
          const Mass* a = store.masses().find(s->m1);
          const Mass* b = store.masses().find(s->m2);
          if (a == nullptr || b == nullptr) continue;
          out.max_connective_strain =
              std::max(out.max_connective_strain, strain_of(*s, a->pos, b->pos));
        }
      });
    }
    if (!out.times.empty() && out.times.back() == snap.sim_time) return true;
    out.times.push_back(snap.sim_time);
    out.tracks.resize(scene.bodies.size());
    for (std::size_t b = 0; b < scene.bodies.size(); ++b) {
      out.tracks[b].push_back(center_of_mass(snap, scene.bodies[b].masses));
    }
    out.connective_alive = 0;
    for (SpringHandle h : scene.connective) {
      const SpringRecord* r = snap.find(h);
      if (r != nullptr && r->alive) ++out.connective_alive;
    }
    return true;
  };
  out.run = run_scenario(scenario, count, hook, &scene);

  out.connective_total = scene.connective.size();
  out.connective_break_strain = std::numeric_limits<Real>::infinity();
  for (const BodySpec& b : scenario.bodies) {
    if (b.kind != BodyKind::CubeGrid) continue;
    const auto yield = b.connective_yield_stress ? b.connective_yield_stress
                                                 : b.material.yield_stress;
    if (yield) out.connective_break_strain = *yield / b.material.youngs_modulus;
  }
  return out;
}

}  // namespace springmass::tools
