#include "springmass/control.hpp"

#include <algorithm>
#include <set>

#include "springmass/errors.hpp"

namespace springmass {
namespace {

// AtTime comparisons tolerate this fraction of dt so that times which are an
// exact multiple of dt fire on the expected step despite rounding.
constexpr Real kTimeSlack = 1e-9;

template <typename Rec, typename H>
const Rec* find_record(const std::vector<Rec>& records, H h) noexcept {
  auto it = std::lower_bound(records.begin(), records.end(), h.slot,
                             [](const Rec& r, std::uint32_t slot) { return r.handle.slot < slot; });
  for (; it != records.end() && it->handle.slot == h.slot; ++it) {
    if (it->handle == h) return &*it;
  }
  return nullptr;
}

}  // namespace

Real StateView::max_speed() const noexcept {
  Real best = 0.0;
  const MassArray& masses = store_.masses();
  for (std::uint32_t i = 0; i < masses.slot_count(); ++i) {
    if (masses.alive_at(i)) best = std::max(best, norm(masses.values()[i].vel));
  }
  return best;
}

const MassRecord* Snapshot::find(MassHandle h) const noexcept { return find_record(masses, h); }
const SpringRecord* Snapshot::find(SpringHandle h) const noexcept {
  return find_record(springs, h);
}

Snapshot capture_snapshot(const ObjectStore& store, Real sim_time, std::uint64_t step,
                          const SnapshotSelection& selection) {
  Snapshot snap;
  snap.sim_time = sim_time;
  snap.step = step;
  if (selection.everything) {
    const auto& masses = store.masses();
    snap.masses.reserve(masses.alive_count());
    for (std::uint32_t i = 0; i < masses.slot_count(); ++i) {
      if (masses.alive_at(i)) snap.masses.push_back({masses.handle_at(i), masses.values()[i], true});
    }
    const auto& springs = store.springs();
    snap.springs.reserve(springs.alive_count());
    for (std::uint32_t i = 0; i < springs.slot_count(); ++i) {
      if (springs.alive_at(i)) {
        snap.springs.push_back({springs.handle_at(i), springs.values()[i], true});
      }
    }
    return snap;
  }
  for (MassHandle h : selection.masses) {
    const ReadResult<Mass> r = store.read(h);
    if (r.value != nullptr) snap.masses.push_back({h, *r.value, !r.stale});
  }
  for (SpringHandle h : selection.springs) {
    const ReadResult<Spring> r = store.read(h);
    if (r.value != nullptr) snap.springs.push_back({h, *r.value, !r.stale});
  }
  auto by_slot = [](const auto& a, const auto& b) { return a.handle < b.handle; };
  std::stable_sort(snap.masses.begin(), snap.masses.end(), by_slot);
  std::stable_sort(snap.springs.begin(), snap.springs.end(), by_slot);
  return snap;
}

const char* to_string(SimState s) noexcept {
  switch (s) {
    case SimState::Idle: return "idle";
    case SimState::Running: return "running";
    case SimState::Paused: return "paused";
    case SimState::Done: return "done";
  }
  return "?";
}

SimController::SimController(StepConfig cfg, Environment env, ControllerOptions options)
    : env_(std::move(env)), integrator_(cfg), options_(options) {
  env_.validate();
}

SimController::SimController(const ObjectStore& initial, StepConfig cfg, Environment env,
                             Real sim_time, ControllerOptions options)
    : store_(initial), env_(std::move(env)), integrator_(cfg), options_(options),
      time_origin_(sim_time) {
  env_.validate();
  last_report_.sim_time = sim_time;
}

SimController::~SimController() {
  try {
    stop();
  } catch (...) {
  }
}

Environment SimController::environment() const {
  std::lock_guard lock(mutex_);
  return env_;
}

void SimController::set_environment(Environment env) {
  env.validate();
  std::lock_guard lock(mutex_);
  if (state_ == SimState::Running) {
    throw StateError("cannot replace the environment while running; queue SetEnvironment");
  }
  env_ = std::move(env);
}

Real SimController::current_time_locked() const noexcept {
  return time_origin_ + static_cast<Real>(steps_since_origin_) * integrator_.config().dt;
}

SimState SimController::state() const {
  std::lock_guard lock(mutex_);
  return state_;
}

Real SimController::sim_time() const {
  std::lock_guard lock(mutex_);
  return current_time_locked();
}

std::uint64_t SimController::step_count() const {
  std::lock_guard lock(mutex_);
  return total_steps_;
}

void SimController::set_step_observer(std::function<void(const StateView&)> observer) {
  std::lock_guard lock(mutex_);
  observer_ = std::move(observer);
}

void SimController::ensure_thread() {
  if (!thread_.joinable()) thread_ = std::thread([this] { loop(); });
}

void SimController::transition_to_running() {
  if (options_.retain_pause_snapshots && !pause_snapshot_) {
    pause_snapshot_ = capture_snapshot(store_, current_time_locked(), total_steps_);
  }
  store_.lock_writes();
  state_ = SimState::Running;
  pause_requested_ = false;
  ensure_thread();
  loop_cv_.notify_all();
}

void SimController::start(std::optional<Real> duration) {
  std::lock_guard lock(mutex_);
  if (state_ == SimState::Running) throw StateError("controller is already running");
  if (state_ == SimState::Done) throw StateError("controller has been stopped");
  if (duration) {
    if (!(*duration >= 0.0)) throw ValidationError("duration must be non-negative");
    breakpoints_.push_back(
        {next_breakpoint_id_++, Breakpoint{AtTime{current_time_locked() + *duration}, "duration"},
         0});
  }
  transition_to_running();
}

BreakpointId SimController::set_breakpoint(Breakpoint bp) {
  if (const auto* cond = std::get_if<OnCondition>(&bp.kind)) {
    if (!cond->predicate) throw ValidationError("condition breakpoint needs a predicate");
    if (cond->every_steps == 0) throw ValidationError("condition interval must be >= 1 step");
  }
  std::lock_guard lock(mutex_);
  InstalledBreakpoint installed{next_breakpoint_id_++, std::move(bp), 0};
  if (const auto* cond = std::get_if<OnCondition>(&installed.bp.kind)) {
    installed.next_check = total_steps_ + cond->every_steps;
  }
  breakpoints_.push_back(std::move(installed));
  return breakpoints_.back().id;
}

bool SimController::clear_breakpoint(BreakpointId id) {
  std::lock_guard lock(mutex_);
  auto it = std::find_if(breakpoints_.begin(), breakpoints_.end(),
                         [&](const InstalledBreakpoint& b) { return b.id == id; });
  if (it == breakpoints_.end()) return false;
  breakpoints_.erase(it);
  return true;
}

std::optional<std::size_t> SimController::due_breakpoint() {
  const Real now = current_time_locked();
  const Real slack = kTimeSlack * integrator_.config().dt;
  std::optional<std::size_t> best;
  Real best_time = 0.0;
  for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
    const auto* at = std::get_if<AtTime>(&breakpoints_[i].bp.kind);
    if (at == nullptr || now + slack < at->time) continue;
    if (!best || at->time < best_time) {
      best = i;
      best_time = at->time;
    }
  }
  if (best) return best;
  for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
    auto& b = breakpoints_[i];
    auto* cond = std::get_if<OnCondition>(&b.bp.kind);
    if (cond == nullptr || total_steps_ < b.next_check) continue;
    b.next_check = total_steps_ + cond->every_steps;
    if (cond->predicate(StateView(store_, now, total_steps_))) return i;
  }
  return std::nullopt;
}

void SimController::enter_pause(PauseReason reason, std::optional<BreakpointId> bp,
                                std::string label) {
  state_ = SimState::Paused;
  pause_requested_ = false;
  store_.unlock_writes();
  last_report_ = PauseReport{SimState::Paused, reason, current_time_locked(), total_steps_, bp,
                             std::move(label), {}};
  apply_queued();
  if (options_.retain_pause_snapshots) {
    pause_snapshot_ = capture_snapshot(store_, last_report_.sim_time, total_steps_);
  } else {
    pause_snapshot_.reset();
  }
  ++pause_epoch_;
  event_cv_.notify_all();
}

void SimController::loop() {
  std::unique_lock lock(mutex_);
  for (;;) {
    loop_cv_.wait(lock, [&] { return state_ == SimState::Running || state_ == SimState::Done; });
    if (state_ == SimState::Done) return;

    if (pause_requested_) {
      enter_pause(PauseReason::Manual, std::nullopt, "pause");
      continue;
    }
    if (auto idx = due_breakpoint()) {
      InstalledBreakpoint fired = std::move(breakpoints_[*idx]);
      breakpoints_.erase(breakpoints_.begin() + static_cast<std::ptrdiff_t>(*idx));
      enter_pause(PauseReason::Breakpoint, fired.id, fired.bp.label);
      continue;
    }

    const Real now = current_time_locked();
    lock.unlock();
    std::string error;
    try {
      integrator_.step(store_, env_, now);
    } catch (const NumericalError& e) {
      error = e.what();
    }
    lock.lock();
    if (!error.empty()) {
      state_ = SimState::Done;
      store_.unlock_writes();
      last_report_ = PauseReport{SimState::Done, PauseReason::Aborted, now, total_steps_,
                                 std::nullopt, "numerical abort", error};
      for (auto& q : queue_) {
        BatchResult r;
        r.sim_time = now;
        r.step = total_steps_;
        r.commands.resize(q->batch.commands.size());
        q->promise.set_value(std::move(r));
      }
      queue_.clear();
      ++pause_epoch_;
      event_cv_.notify_all();
      return;
    }
    ++steps_since_origin_;
    ++total_steps_;
    if (observer_) observer_(StateView(store_, current_time_locked(), total_steps_));
  }
}

PauseReport SimController::wait_for_event() {
  std::unique_lock lock(mutex_);
  if (state_ == SimState::Idle) throw StateError("wait_for_event on a controller never started");
  const std::uint64_t epoch = pause_epoch_;
  event_cv_.wait(lock, [&] { return state_ != SimState::Running || pause_epoch_ != epoch; });
  return last_report_;
}

std::optional<PauseReport> SimController::wait_for_event_for(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  if (state_ == SimState::Idle) throw StateError("wait_for_event on a controller never started");
  const std::uint64_t epoch = pause_epoch_;
  if (!event_cv_.wait_for(lock, timeout, [&] {
        return state_ != SimState::Running || pause_epoch_ != epoch;
      })) {
    return std::nullopt;
  }
  return last_report_;
}

void SimController::pause() {
  std::unique_lock lock(mutex_);
  switch (state_) {
    case SimState::Paused: return;
    case SimState::Idle: throw StateError("cannot pause a controller that was never started");
    case SimState::Done: throw StateError("cannot pause a stopped controller");
    case SimState::Running: break;
  }
  pause_requested_ = true;
  const std::uint64_t epoch = pause_epoch_;
  event_cv_.wait(lock, [&] { return state_ != SimState::Running || pause_epoch_ != epoch; });
}

void SimController::resume() {
  std::lock_guard lock(mutex_);
  if (state_ != SimState::Paused) {
    throw StateError(std::string("cannot resume from state ") + to_string(state_));
  }
  transition_to_running();
}

void SimController::stop() {
  {
    std::lock_guard lock(mutex_);
    if (state_ != SimState::Done) {
      state_ = SimState::Done;
      store_.unlock_writes();
      last_report_.state = SimState::Done;
      last_report_.reason = PauseReason::Stopped;
      last_report_.sim_time = current_time_locked();
      last_report_.step = total_steps_;
      for (auto& q : queue_) {
        BatchResult r;
        r.sim_time = last_report_.sim_time;
        r.step = total_steps_;
        r.commands.resize(q->batch.commands.size());
        q->promise.set_value(std::move(r));
      }
      queue_.clear();
      ++pause_epoch_;
    }
  }
  loop_cv_.notify_all();
  event_cv_.notify_all();
  if (thread_.joinable() && std::this_thread::get_id() != thread_.get_id()) thread_.join();
}

Snapshot SimController::snapshot(const SnapshotSelection& selection) const {
  std::lock_guard lock(mutex_);
  if (state_ != SimState::Running) {
    return capture_snapshot(store_, current_time_locked(), total_steps_, selection);
  }
  Snapshot out;
  if (pause_snapshot_) {
    if (selection.everything) {
      out = *pause_snapshot_;
    } else {
      out.sim_time = pause_snapshot_->sim_time;
      out.step = pause_snapshot_->step;
      for (MassHandle h : selection.masses) {
        if (const auto* r = pause_snapshot_->find(h)) out.masses.push_back(*r);
      }
      for (SpringHandle h : selection.springs) {
        if (const auto* r = pause_snapshot_->find(h)) out.springs.push_back(*r);
      }
    }
  }
  out.stale = true;
  return out;
}

Ticket SimController::queue_mutations(MutationBatch batch) {
  std::lock_guard lock(mutex_);
  std::promise<BatchResult> promise;
  Ticket ticket = promise.get_future().share();
  if (state_ == SimState::Done) {
    BatchResult r;
    r.sim_time = current_time_locked();
    r.step = total_steps_;
    r.commands.resize(batch.commands.size());
    for (auto& c : r.commands) c.message = "controller stopped";
    promise.set_value(std::move(r));
    return ticket;
  }
  if (state_ != SimState::Running) {
    promise.set_value(apply_batch(batch));
    return ticket;
  }
  BatchResult early;
  if (!precheck(batch, early)) {
    promise.set_value(std::move(early));
    return ticket;
  }
  queue_.push_back(std::make_unique<QueuedBatch>(QueuedBatch{std::move(batch), std::move(promise)}));
  return ticket;
}

void SimController::apply_queued() {
  for (auto& q : queue_) q->promise.set_value(apply_batch(q->batch));
  queue_.clear();
}

// Optimistic validation against the last pause-point snapshot. Only handle
// liveness is checked; apply_batch() re-validates everything authoritatively.
bool SimController::precheck(const MutationBatch& batch, BatchResult& out) const {
  if (!pause_snapshot_ || batch.policy != BatchPolicy::AbortAll) return true;
  const Snapshot& snap = *pause_snapshot_;
  std::optional<std::size_t> bad;
  for (std::size_t i = 0; i < batch.commands.size() && !bad; ++i) {
    std::visit(
        [&](const auto& c) {
          using C = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<C, SetMassField> || std::is_same_v<C, DeleteMass>) {
            if (snap.find(c.handle) == nullptr) bad = i;
          } else if constexpr (std::is_same_v<C, SetSpringField> ||
                               std::is_same_v<C, DeleteSpring>) {
            if (snap.find(c.handle) == nullptr) bad = i;
          }
        },
        batch.commands[i]);
  }
  if (!bad) return true;
  out.sim_time = snap.sim_time;
  out.step = snap.step;
  out.commands.resize(batch.commands.size());
  out.commands[*bad].status = CommandStatus::Rejected;
  out.commands[*bad].message = "stale handle (rejected at enqueue)";
  return false;
}

BatchResult SimController::apply_batch(const MutationBatch& batch) {
  BatchResult result;
  result.sim_time = current_time_locked();
  result.step = total_steps_;
  const std::size_t n = batch.commands.size();
  result.commands.resize(n);

  // Batch-local view used to validate each command as if all earlier valid
  // commands had already been applied.
  std::set<MassHandle> deleted_masses;
  std::set<SpringHandle> deleted_springs;
  std::vector<bool> valid(n, false);

  auto mass_ok = [&](MassHandle h) { return store_.alive(h) && !deleted_masses.count(h); };
  auto ref_ok = [&](const MassRef& r, std::size_t self) -> bool {
    if (const auto* h = std::get_if<MassHandle>(&r)) return mass_ok(*h);
    const std::size_t idx = std::get<PendingMass>(r).command_index;
    return idx < self && valid[idx] && std::holds_alternative<CreateMass>(batch.commands[idx]);
  };
  auto same_ref = [](const MassRef& a, const MassRef& b) {
    if (a.index() != b.index()) return false;
    if (const auto* h = std::get_if<MassHandle>(&a)) return *h == std::get<MassHandle>(b);
    return std::get<PendingMass>(a).command_index == std::get<PendingMass>(b).command_index;
  };

  for (std::size_t i = 0; i < n; ++i) {
    std::string why;
    try {
      std::visit(
          [&](const auto& c) {
            using C = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<C, SetMassField>) {
              if (!mass_ok(c.handle)) throw StaleHandleError("stale mass handle");
              Mass probe = store_.mass(c.handle);
              ObjectStore scratch;
              const MassHandle h = scratch.create_mass(probe);
              scratch.set(h, c.field, c.value);
            } else if constexpr (std::is_same_v<C, SetSpringField>) {
              if (!store_.alive(c.handle) || deleted_springs.count(c.handle)) {
                throw StaleHandleError("stale spring handle");
              }
              Spring probe = store_.spring(c.handle);
              switch (c.field) {
                case SpringField::Stiffness: probe.k = std::get<Real>(c.value); break;
                case SpringField::RestLength: probe.rest_length = std::get<Real>(c.value); break;
                case SpringField::Diameter: probe.diameter = std::get<Real>(c.value); break;
                case SpringField::YieldStress:
                  probe.yield_stress = std::get<std::optional<Real>>(c.value);
                  break;
                case SpringField::Actuation:
                  probe.actuation = std::get<std::optional<ActuationParams>>(c.value);
                  break;
              }
              probe.validate();
            } else if constexpr (std::is_same_v<C, CreateMass>) {
              c.mass.validate();
            } else if constexpr (std::is_same_v<C, CreateSpring>) {
              if (same_ref(c.m1, c.m2)) throw ValidationError("spring endpoints must differ");
              if (!ref_ok(c.m1, i) || !ref_ok(c.m2, i)) {
                throw StaleHandleError("spring endpoint does not resolve");
              }
              Spring probe = c.spring;
              probe.m1 = MassHandle{0, 0};
              probe.m2 = MassHandle{1, 0};
              probe.validate();
            } else if constexpr (std::is_same_v<C, DeleteMass>) {
              if (!mass_ok(c.handle)) throw StaleHandleError("stale mass handle");
              deleted_masses.insert(c.handle);
            } else if constexpr (std::is_same_v<C, DeleteSpring>) {
              if (!store_.alive(c.handle) || deleted_springs.count(c.handle)) {
                throw StaleHandleError("stale spring handle");
              }
              deleted_springs.insert(c.handle);
            } else if constexpr (std::is_same_v<C, SetEnvironment>) {
              c.environment.validate();
            }
          },
          batch.commands[i]);
      valid[i] = true;
    } catch (const std::bad_variant_access&) {
      why = "wrong value type for field";
    } catch (const Error& e) {
      why = e.what();
    }
    if (!valid[i]) {
      result.commands[i].status = CommandStatus::Rejected;
      result.commands[i].message = why;
    }
  }

  const bool all_valid = std::all_of(valid.begin(), valid.end(), [](bool v) { return v; });
  if (!all_valid && batch.policy == BatchPolicy::AbortAll) return result;

  for (std::size_t i = 0; i < n; ++i) {
    if (!valid[i]) continue;
    CommandResult& out = result.commands[i];
    std::visit(
        [&](const auto& c) {
          using C = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<C, SetMassField>) {
            store_.set(c.handle, c.field, c.value);
          } else if constexpr (std::is_same_v<C, SetSpringField>) {
            store_.set(c.handle, c.field, c.value);
          } else if constexpr (std::is_same_v<C, CreateMass>) {
            out.created_mass = store_.create_mass(c.mass);
          } else if constexpr (std::is_same_v<C, CreateSpring>) {
            auto resolve = [&](const MassRef& r) {
              if (const auto* h = std::get_if<MassHandle>(&r)) return *h;
              return *result.commands[std::get<PendingMass>(r).command_index].created_mass;
            };
            Spring s;
            s = c.spring;
            s.m1 = resolve(c.m1);
            s.m2 = resolve(c.m2);
            out.created_spring = store_.create_spring(std::move(s));
          } else if constexpr (std::is_same_v<C, DeleteMass>) {
            store_.delete_mass(c.handle);
          } else if constexpr (std::is_same_v<C, DeleteSpring>) {
            store_.delete_spring(c.handle);
          } else if constexpr (std::is_same_v<C, SetEnvironment>) {
            env_ = c.environment;
          }
        },
        batch.commands[i]);
    out.status = CommandStatus::Applied;
  }
  result.applied = all_valid;
  return result;
}

}  // namespace springmass
