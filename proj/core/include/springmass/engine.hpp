#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <unordered_set>
#include <vector>

#include "springmass/store.hpp"
#include "springmass/types.hpp"

namespace springmass {

/// How concurrent spring contributions to one mass are combined.
enum class Accumulation : std::uint8_t {
  /// Serialized read-modify-write per force component.
  Linearizable,
  /// Each spring writes a pre-assigned per-mass slot; the mass pass reduces
  /// slots in ascending order, which makes results independent of scheduling.
  Slotted,
};

enum class Backend : std::uint8_t { Serial, Parallel };

struct StepConfig {
  Real dt = 1e-4;
  Accumulation accumulation = Accumulation::Linearizable;
  Backend backend = Backend::Serial;
  unsigned workers = 1;
  /// Tangential speed under which a contact may stick (m/s).
  Real stick_velocity = 1e-6;

  void validate() const;
};

/// Force exerted on the spring's first endpoint (the second receives the
/// negation). `rest_factor` scales the rest length (actuation); zero-length
/// springs yield zero.
Vec3 spring_force(const Spring& s, const Vec3& p1, const Vec3& p2, Real rest_factor) noexcept;

/// Rest-length factor of a spring at sim-time T (1 when unactuated).
Real rest_factor(const Spring& s, Real sim_time, std::uint32_t slot);

/// Penalty contact and Coulomb friction exerted on `mass` by every solid in
/// `env`. Uses the mass's accumulated force to decide whether static friction
/// holds; kinetic friction is capped so it never reverses the tangential
/// velocity within one step.
Vec3 contact_forces(const Mass& mass, const Environment& env, Real dt,
                    Real stick_velocity = 1e-6) noexcept;

/// Spring updates per second.
Real throughput(std::uint64_t springs, std::uint64_t steps, Real wall_seconds);

/// Largest dt * sqrt(k / m) over live springs, using the lighter endpoint.
Real stability_number(const ObjectStore& store, Real dt);

namespace detail {
class WorkerPool;
}

/// Alternating spring/mass pass integrator (semi-implicit Euler).
///
/// One instance drives one store from a single thread at a time; with the
/// Parallel backend it fans each pass out over a persistent worker pool and
/// joins before the next pass begins.
class Integrator {
 public:
  explicit Integrator(StepConfig cfg);
  ~Integrator();
  Integrator(const Integrator&) = delete;
  Integrator& operator=(const Integrator&) = delete;

  const StepConfig& config() const noexcept { return cfg_; }

  /// spring_pass then mass_pass; returns sim_time + dt.
  Real step(ObjectStore& store, const Environment& env, Real sim_time);

  void spring_pass(ObjectStore& store, Real sim_time);
  void mass_pass(ObjectStore& store, const Environment& env);

  /// Number of springs invalidated so far (dead endpoint or yield).
  std::uint64_t invalidated_springs() const noexcept { return invalidated_; }

 private:
  struct SlotLayout;
  struct PassScratch;

  void ensure_slot_layout(const ObjectStore& store);
  void spring_range(ObjectStore& store, Real sim_time, std::uint32_t begin, std::uint32_t end,
                    PassScratch& scratch);
  void mass_range(ObjectStore& store, const Environment& env, std::uint32_t begin,
                  std::uint32_t end, PassScratch& scratch);
  template <typename Fn>
  void for_ranges(std::size_t count, Fn&& fn);
  void finish_spring_pass(ObjectStore& store);
  void maybe_warn_stability(const ObjectStore& store);
  void note_zero_length(std::uint32_t slot);

  StepConfig cfg_;
  std::unique_ptr<detail::WorkerPool> pool_;
  std::unique_ptr<SlotLayout> layout_;
  std::vector<PassScratch> scratch_;
  std::uint64_t invalidated_ = 0;
  std::uint64_t stability_checked_version_ = ~std::uint64_t{0};
  bool stability_warned_ = false;
  std::mutex zero_length_mutex_;
  std::unordered_set<std::uint32_t> zero_length_logged_;
};

}  // namespace springmass
