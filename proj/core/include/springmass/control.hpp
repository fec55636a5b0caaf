#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "springmass/engine.hpp"
#include "springmass/store.hpp"

namespace springmass {

/// Read-only view handed to breakpoint predicates and step observers. Valid
/// only for the duration of the callback.
class StateView {
 public:
  StateView(const ObjectStore& store, Real sim_time, std::uint64_t step) noexcept
      : store_(store), sim_time_(sim_time), step_(step) {}

  const ObjectStore& store() const noexcept { return store_; }
  Real sim_time() const noexcept { return sim_time_; }
  std::uint64_t step() const noexcept { return step_; }

  /// Largest speed over live masses.
  Real max_speed() const noexcept;

 private:
  const ObjectStore& store_;
  Real sim_time_;
  std::uint64_t step_;
};

/// Fires at the first step boundary with sim-time >= time.
struct AtTime {
  Real time = 0.0;
};

/// Fires when `predicate` holds; evaluated every `every_steps` steps.
struct OnCondition {
  std::function<bool(const StateView&)> predicate;
  std::uint64_t every_steps = 100;
};

struct Breakpoint {
  std::variant<AtTime, OnCondition> kind;
  std::string label;
};

using BreakpointId = std::uint64_t;

enum class SimState : std::uint8_t { Idle, Running, Paused, Done };
enum class PauseReason : std::uint8_t { Breakpoint, Manual, Stopped, Aborted };

struct PauseReport {
  SimState state = SimState::Idle;
  PauseReason reason = PauseReason::Manual;
  Real sim_time = 0.0;
  std::uint64_t step = 0;
  std::optional<BreakpointId> breakpoint;
  std::string label;
  std::string error;  // set when reason == Aborted
};

/// Refers to the mass created by an earlier CreateMass in the same batch.
struct PendingMass {
  std::size_t command_index = 0;
};
using MassRef = std::variant<MassHandle, PendingMass>;

struct SetMassField {
  MassHandle handle;
  MassField field;
  FieldValue value;
};
struct SetSpringField {
  SpringHandle handle;
  SpringField field;
  FieldValue value;
};
struct CreateMass {
  Mass mass;
};
/// `spring.m1`/`spring.m2` are ignored in favour of the two refs.
struct CreateSpring {
  MassRef m1;
  MassRef m2;
  Spring spring;
};
struct DeleteMass {
  MassHandle handle;
};
struct DeleteSpring {
  SpringHandle handle;
};
struct SetEnvironment {
  Environment environment;
};

using Command = std::variant<SetMassField, SetSpringField, CreateMass, CreateSpring, DeleteMass,
                             DeleteSpring, SetEnvironment>;

enum class BatchPolicy : std::uint8_t {
  /// Any rejected command rejects the whole batch.
  AbortAll,
  /// Valid commands are applied; invalid ones are reported individually.
  PartialApply,
};

struct MutationBatch {
  std::vector<Command> commands;
  BatchPolicy policy = BatchPolicy::AbortAll;

  MutationBatch& add(Command c) {
    commands.push_back(std::move(c));
    return *this;
  }
};

enum class CommandStatus : std::uint8_t { Applied, Rejected, NotApplied };

struct CommandResult {
  CommandStatus status = CommandStatus::NotApplied;
  std::string message;
  std::optional<MassHandle> created_mass;
  std::optional<SpringHandle> created_spring;
};

struct BatchResult {
  bool applied = false;  // every command applied
  Real sim_time = 0.0;
  std::uint64_t step = 0;
  std::vector<CommandResult> commands;
};

using Ticket = std::shared_future<BatchResult>;

struct MassRecord {
  MassHandle handle;
  Mass state;
  bool alive = true;
};

struct SpringRecord {
  SpringHandle handle;
  Spring state;
  bool alive = true;
};

/// Caller-owned deep copy of simulation state.
struct Snapshot {
  Real sim_time = 0.0;
  std::uint64_t step = 0;
  /// Taken at an earlier pause point because the loop was running.
  bool stale = false;
  std::vector<MassRecord> masses;
  std::vector<SpringRecord> springs;

  const MassRecord* find(MassHandle h) const noexcept;
  const SpringRecord* find(SpringHandle h) const noexcept;
};

struct SnapshotSelection {
  bool everything = true;
  std::vector<MassHandle> masses;
  std::vector<SpringHandle> springs;

  static SnapshotSelection all() { return {}; }
  static SnapshotSelection of(std::vector<MassHandle> m, std::vector<SpringHandle> s = {}) {
    return {false, std::move(m), std::move(s)};
  }
};

/// Deep copy of the store's live objects (or of the selected handles,
/// including last-known state of deleted ones).
Snapshot capture_snapshot(const ObjectStore& store, Real sim_time, std::uint64_t step,
                          const SnapshotSelection& selection = SnapshotSelection::all());

struct ControllerOptions {
  /// Keep a snapshot at every pause point so snapshot() while running has
  /// something to return. Costs one O(n) copy per pause.
  bool retain_pause_snapshots = true;
};

/// Runs the step loop on a dedicated thread. Callers install breakpoints,
/// block on wait_for_event(), and queue mutations that are applied only at
/// pause points. Every public member is safe to call concurrently.
class SimController {
 public:
  explicit SimController(StepConfig cfg, Environment env = {}, ControllerOptions options = {});
  /// Starts from a copy of `initial` at sim-time `sim_time`.
  SimController(const ObjectStore& initial, StepConfig cfg, Environment env = {},
                Real sim_time = 0.0, ControllerOptions options = {});
  ~SimController();
  SimController(const SimController&) = delete;
  SimController& operator=(const SimController&) = delete;

  /// Direct store access. Mutators throw StateError while the loop runs;
  /// reads are only meaningful while not Running.
  ObjectStore& store() noexcept { return store_; }
  const ObjectStore& store() const noexcept { return store_; }

  /// Copy of the environment. set_environment() requires a non-running loop.
  Environment environment() const;
  void set_environment(Environment env);
  const StepConfig& step_config() const noexcept { return integrator_.config(); }

  void start(std::optional<Real> duration = std::nullopt);
  BreakpointId set_breakpoint(Breakpoint bp);
  bool clear_breakpoint(BreakpointId id);

  PauseReport wait_for_event();
  /// As wait_for_event(), but gives up after `timeout`.
  std::optional<PauseReport> wait_for_event_for(std::chrono::milliseconds timeout);

  Ticket queue_mutations(MutationBatch batch);

  void pause();
  void resume();
  void stop();

  Snapshot snapshot(const SnapshotSelection& selection = SnapshotSelection::all()) const;

  SimState state() const;
  Real sim_time() const;
  std::uint64_t step_count() const;

  /// Called on the loop thread after every step (instrumentation hook).
  void set_step_observer(std::function<void(const StateView&)> observer);

 private:
  struct QueuedBatch {
    MutationBatch batch;
    std::promise<BatchResult> promise;
  };
  struct InstalledBreakpoint {
    BreakpointId id;
    Breakpoint bp;
    std::uint64_t next_check = 0;
  };

  void loop();
  void ensure_thread();
  void enter_pause(PauseReason reason, std::optional<BreakpointId> bp, std::string label);
  std::optional<std::size_t> due_breakpoint();
  BatchResult apply_batch(const MutationBatch& batch);
  void apply_queued();
  bool precheck(const MutationBatch& batch, BatchResult& out) const;
  Real current_time_locked() const noexcept;
  void transition_to_running();

  mutable std::mutex mutex_;
  std::condition_variable loop_cv_;
  mutable std::condition_variable event_cv_;

  ObjectStore store_;
  Environment env_;
  Integrator integrator_;
  ControllerOptions options_;
  std::thread thread_;

  SimState state_ = SimState::Idle;
  bool pause_requested_ = false;
  Real time_origin_ = 0.0;
  std::uint64_t steps_since_origin_ = 0;
  std::uint64_t total_steps_ = 0;
  std::uint64_t pause_epoch_ = 0;
  PauseReport last_report_;
  std::optional<Snapshot> pause_snapshot_;

  BreakpointId next_breakpoint_id_ = 1;
  std::vector<InstalledBreakpoint> breakpoints_;
  std::vector<std::unique_ptr<QueuedBatch>> queue_;
  std::function<void(const StateView&)> observer_;
};

const char* to_string(SimState s) noexcept;

}  // namespace springmass
