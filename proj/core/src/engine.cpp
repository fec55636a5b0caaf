#include "springmass/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "springmass/errors.hpp"
#include "springmass/log.hpp"
#include "worker_pool.hpp"

namespace springmass {
namespace {

constexpr std::uint32_t kNoTarget = 0xffffffffu;
constexpr Real kStabilityWarnThreshold = 0.5;

inline void atomic_add(Vec3& target, const Vec3& v) noexcept {
  std::atomic_ref<Real>(target.x).fetch_add(v.x, std::memory_order_relaxed);
  std::atomic_ref<Real>(target.y).fetch_add(v.y, std::memory_order_relaxed);
  std::atomic_ref<Real>(target.z).fetch_add(v.z, std::memory_order_relaxed);
}

Vec3 tangential(const Vec3& v, const Vec3& n) noexcept { return v - n * dot(v, n); }

Vec3 clamp_magnitude(const Vec3& v, Real limit) noexcept {
  const Real mag = norm(v);
  if (mag <= limit || mag == 0.0) return v;
  return v * (limit / mag);
}

}  // namespace

void StepConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("dt must be positive");
  if (workers < 1) throw ValidationError("worker count must be at least 1");
  if (!(stick_velocity >= 0.0)) throw ValidationError("stick velocity must be non-negative");
}

Vec3 spring_force(const Spring& s, const Vec3& p1, const Vec3& p2, Real rest_factor) noexcept {
  const Vec3 d = p2 - p1;
  const Real len = norm(d);
  if (len == 0.0) return {};
  const Real target = rest_factor * s.rest_length;
  return d * (s.k * (len - target) / len);
}

Real rest_factor(const Spring& s, Real sim_time, std::uint32_t slot) {
  return s.actuation ? actuation_factor(*s.actuation, sim_time, slot) : 1.0;
}

Vec3 contact_forces(const Mass& mass, const Environment& env, Real dt,
                    Real stick_velocity) noexcept {
  const Vec3 applied = mass.force + mass.load + env.gravity * mass.m - mass.vel * env.drag;
  Vec3 total;
  for (const Contact& contact : env.contacts) {
    if (const auto* plane = std::get_if<ContactPlane>(&contact)) {
      const Vec3& n = plane->normal;
      const Real depth = plane->offset - dot(mass.pos, n);
      if (!(depth > 0.0)) continue;
      const Real normal_mag = plane->stiffness * depth;
      total += n * normal_mag;
      if (plane->mu_static == 0.0 && plane->mu_kinetic == 0.0) continue;

      const Vec3 vt = tangential(mass.vel, n);
      const Vec3 ft_applied = tangential(applied, n);
      const Real vt_mag = norm(vt);
      const Real static_limit = plane->mu_static * normal_mag;
      const Real kinetic_mag = plane->mu_kinetic * normal_mag;
      // Force that brings the tangential velocity to exactly zero this step.
      const Vec3 hold = -ft_applied - vt * (mass.m / dt);

      if (vt_mag < stick_velocity) {
        const Real ft_mag = norm(ft_applied);
        if (ft_mag <= static_limit) {
          total += clamp_magnitude(hold, static_limit);
        } else {
          total += ft_applied * (-kinetic_mag / ft_mag);
        }
        continue;
      }
      const Vec3 kinetic = vt * (-kinetic_mag / vt_mag);
      const Vec3 vt_next = vt + (ft_applied + kinetic) * (dt / mass.m);
      if (dot(vt_next, vt) < 0.0 && norm(hold) <= std::max(static_limit, kinetic_mag)) {
        total += hold;
      } else {
        total += kinetic;
      }
    } else {
      const auto& ball = std::get<ContactBall>(contact);
      const Vec3 d = mass.pos - ball.center;
      const Real dist = norm(d);
      const Real depth = ball.radius - dist;
      if (!(depth > 0.0) || dist == 0.0) continue;
      total += d * (ball.stiffness * depth / dist);
    }
  }
  return total;
}

Real throughput(std::uint64_t springs, std::uint64_t steps, Real wall_seconds) {
  if (!(wall_seconds > 0.0)) throw ValidationError("wall time must be positive");
  return static_cast<Real>(springs) * static_cast<Real>(steps) / wall_seconds;
}

Real stability_number(const ObjectStore& store, Real dt) {
  Real worst = 0.0;
  const SpringArray& all = store.springs();
  for (std::uint32_t i = 0; i < all.slot_count(); ++i) {
    if (!all.alive_at(i)) continue;
    const Spring& s = all.values()[i];
    const ReadResult<Mass> a = store.read(s.m1);
    const ReadResult<Mass> b = store.read(s.m2);
    if (a.value == nullptr || b.value == nullptr || a.stale || b.stale) continue;
    Real m = std::numeric_limits<Real>::infinity();
    if (!a.value->fixed) m = std::min(m, a.value->m);
    if (!b.value->fixed) m = std::min(m, b.value->m);
    if (!std::isfinite(m)) continue;
    worst = std::max(worst, dt * std::sqrt(s.k / m));
  }
  return worst;
}

// Per-mass force slots. `offsets[m]..offsets[m+1]` index the slots owned by
// mass slot m; each spring slot owns at most one slot on each endpoint.
struct Integrator::SlotLayout {
  std::uint64_t version = ~std::uint64_t{0};
  std::size_t mass_slots = 0;
  std::size_t spring_slots = 0;
  std::vector<std::uint32_t> offsets;
  std::vector<std::uint32_t> target1;
  std::vector<std::uint32_t> target2;
  std::vector<Vec3> forces;
  /// Set by the spring pass; the next mass pass consumes the slots once.
  bool fresh = false;
};

struct Integrator::PassScratch {
  std::vector<std::uint32_t> killed;
  std::uint32_t bad_mass = kNoTarget;
  std::string bad_message;
};

Integrator::Integrator(StepConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  const unsigned workers = cfg_.backend == Backend::Parallel ? cfg_.workers : 1;
  pool_ = std::make_unique<detail::WorkerPool>(workers);
  scratch_.resize(workers);
  if (cfg_.accumulation == Accumulation::Slotted) layout_ = std::make_unique<SlotLayout>();
}

Integrator::~Integrator() = default;

template <typename Fn>
void Integrator::for_ranges(std::size_t count, Fn&& fn) {
  const unsigned parts = pool_->size();
  if (parts == 1) {
    fn(0u, std::uint32_t{0}, static_cast<std::uint32_t>(count));
    return;
  }
  pool_->run([&](unsigned w) {
    const auto begin = static_cast<std::uint32_t>(count * w / parts);
    const auto end = static_cast<std::uint32_t>(count * (w + 1) / parts);
    fn(w, begin, end);
  });
}

void Integrator::ensure_slot_layout(const ObjectStore& store) {
  SlotLayout& L = *layout_;
  const MassArray& masses = store.masses();
  const SpringArray& springs = store.springs();
  if (L.version == store.topology_version() && L.mass_slots == masses.slot_count() &&
      L.spring_slots == springs.slot_count()) {
    return;
  }
  L.version = store.topology_version();
  L.mass_slots = masses.slot_count();
  L.spring_slots = springs.slot_count();
  L.offsets.assign(masses.slot_count() + 1, 0);
  L.target1.assign(springs.slot_count(), kNoTarget);
  L.target2.assign(springs.slot_count(), kNoTarget);

  const auto values = springs.values();
  auto participates = [&](std::uint32_t i) {
    return springs.alive_at(i) && masses.contains(values[i].m1) && masses.contains(values[i].m2);
  };
  for (std::uint32_t i = 0; i < values.size(); ++i) {
    if (!participates(i)) continue;
    ++L.offsets[values[i].m1.slot + 1];
    ++L.offsets[values[i].m2.slot + 1];
  }
  for (std::size_t i = 1; i < L.offsets.size(); ++i) L.offsets[i] += L.offsets[i - 1];
  std::vector<std::uint32_t> cursor(L.offsets.begin(), L.offsets.end() - 1);
  for (std::uint32_t i = 0; i < values.size(); ++i) {
    if (!participates(i)) continue;
    L.target1[i] = cursor[values[i].m1.slot]++;
    L.target2[i] = cursor[values[i].m2.slot]++;
  }
  L.forces.assign(L.offsets.back(), Vec3{});
}

void Integrator::note_zero_length(std::uint32_t slot) {
  std::lock_guard lock(zero_length_mutex_);
  if (zero_length_logged_.insert(slot).second) {
    log_warning("spring in slot " + std::to_string(slot) +
                " has zero length; it contributes no force while degenerate");
  }
}

void Integrator::spring_range(ObjectStore& store, Real sim_time, std::uint32_t begin,
                              std::uint32_t end, PassScratch& scratch) {
  MassArray& masses = store.mutable_masses();
  const SpringArray& springs = store.springs();
  const bool slotted = cfg_.accumulation == Accumulation::Slotted;
  const bool concurrent = pool_->size() > 1;
  Mass* mdata = masses.values().data();
  const Spring* sdata = springs.values().data();

  for (std::uint32_t i = begin; i < end; ++i) {
    if (!springs.alive_at(i)) continue;
    const Spring& s = sdata[i];
    const bool alive1 = masses.contains(s.m1);
    const bool alive2 = masses.contains(s.m2);

    Vec3 f;
    bool kill = false;
    if (alive1 && alive2) {
      const Vec3& p1 = mdata[s.m1.slot].pos;
      const Vec3& p2 = mdata[s.m2.slot].pos;
      if (p1 == p2) note_zero_length(i);
      f = spring_force(s, p1, p2, rest_factor(s, sim_time, i));
      if (!is_finite(f)) {
        if (scratch.bad_mass == kNoTarget) {
          scratch.bad_mass = s.m1.slot;
          scratch.bad_message = "non-finite spring force in spring slot " + std::to_string(i);
        }
        f = {};
      } else if (s.yield_stress) {
        const Real area = s.area();
        if (area > 0.0 && norm(f) / area > *s.yield_stress) {
          kill = true;
          f = {};
        }
      }
    } else {
      kill = true;
    }
    if (kill) scratch.killed.push_back(i);

    if (slotted) {
      SlotLayout& L = *layout_;
      if (L.target1[i] != kNoTarget) {
        L.forces[L.target1[i]] = f;
        L.forces[L.target2[i]] = -f;
      }
      continue;
    }
    if (!(alive1 && alive2)) continue;
    if (concurrent) {
      atomic_add(mdata[s.m1.slot].force, f);
      atomic_add(mdata[s.m2.slot].force, -f);
    } else {
      mdata[s.m1.slot].force += f;
      mdata[s.m2.slot].force += -f;
    }
  }
}

void Integrator::finish_spring_pass(ObjectStore& store) {
  std::vector<std::uint32_t> killed;
  const PassScratch* bad = nullptr;
  for (PassScratch& sc : scratch_) {
    killed.insert(killed.end(), sc.killed.begin(), sc.killed.end());
    sc.killed.clear();
    if (sc.bad_mass != kNoTarget && bad == nullptr) bad = &sc;
  }
  std::sort(killed.begin(), killed.end());
  for (std::uint32_t slot : killed) store.invalidate_spring(slot);
  invalidated_ += killed.size();
  if (bad != nullptr) {
    NumericalError err(bad->bad_message, bad->bad_mass);
    for (PassScratch& sc : scratch_) sc.bad_mass = kNoTarget;
    throw err;
  }
}

void Integrator::spring_pass(ObjectStore& store, Real sim_time) {
  if (layout_) ensure_slot_layout(store);
  const std::size_t count = store.springs().slot_count();
  for_ranges(count, [&](unsigned w, std::uint32_t begin, std::uint32_t end) {
    spring_range(store, sim_time, begin, end, scratch_[w]);
  });
  if (layout_) layout_->fresh = true;
  finish_spring_pass(store);
}

void Integrator::mass_range(ObjectStore& store, const Environment& env, std::uint32_t begin,
                            std::uint32_t end, PassScratch& scratch) {
  MassArray& masses = store.mutable_masses();
  const auto values = masses.values();
  const auto& globals = store.global_constraints();
  const Real dt = cfg_.dt;
  const SlotLayout* L = (layout_ && layout_->fresh) ? layout_.get() : nullptr;

  for (std::uint32_t i = begin; i < end; ++i) {
    if (!masses.alive_at(i)) continue;
    Mass& m = values[i];
    if (L != nullptr && i < L->mass_slots) {
      Vec3 f = m.force;
      for (std::uint32_t k = L->offsets[i]; k < L->offsets[i + 1]; ++k) f += L->forces[k];
      m.force = f;
    }
    if (m.fixed) {
      m.vel = {};
      m.acc = {};
      m.force = {};
      continue;
    }
    const Vec3 contact = contact_forces(m, env, dt, cfg_.stick_velocity);
    const Real inv_m = 1.0 / m.m;
    const Vec3 a = (m.force + m.load) * inv_m + env.gravity - m.vel * (env.drag * inv_m) +
                   contact * inv_m;
    Vec3 vel = m.vel + a * dt;
    for (const auto& c : m.constraints) vel = project_velocity(c, vel);
    for (const auto& c : globals) vel = project_velocity(c, vel);
    m.vel = vel;
    m.pos += vel * dt;
    m.acc = a;
    m.force = {};
    if (!is_finite(m.pos) || !is_finite(m.vel)) {
      if (scratch.bad_mass == kNoTarget) {
        scratch.bad_mass = i;
        std::ostringstream os;
        os << "non-finite state in mass slot " << i;
        scratch.bad_message = os.str();
      }
    }
  }
}

void Integrator::mass_pass(ObjectStore& store, const Environment& env) {
  const std::size_t count = store.masses().slot_count();
  for_ranges(count, [&](unsigned w, std::uint32_t begin, std::uint32_t end) {
    mass_range(store, env, begin, end, scratch_[w]);
  });
  if (layout_) layout_->fresh = false;
  for (PassScratch& sc : scratch_) {
    if (sc.bad_mass == kNoTarget) continue;
    NumericalError err(sc.bad_message, sc.bad_mass);
    for (PassScratch& other : scratch_) other.bad_mass = kNoTarget;
    throw err;
  }
}

void Integrator::maybe_warn_stability(const ObjectStore& store) {
  if (stability_warned_ || stability_checked_version_ == store.topology_version()) return;
  stability_checked_version_ = store.topology_version();
  const Real number = stability_number(store, cfg_.dt);
  if (number > kStabilityWarnThreshold) {
    stability_warned_ = true;
    std::ostringstream os;
    os << "dt*sqrt(k_max/m_min) = " << number << " exceeds " << kStabilityWarnThreshold
       << "; the explicit integrator may be unstable";
    log_warning(os.str());
  }
}

Real Integrator::step(ObjectStore& store, const Environment& env, Real sim_time) {
  maybe_warn_stability(store);
  spring_pass(store, sim_time);
  mass_pass(store, env);
  return sim_time + cfg_.dt;
}

}  // namespace springmass
