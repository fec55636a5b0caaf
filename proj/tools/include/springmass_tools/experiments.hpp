#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "springmass/control.hpp"
#include "springmass/diagnostics.hpp"
#include "springmass_tools/scenario.hpp"

namespace springmass::tools {

/// Command-line overrides layered on top of a scenario file.
struct Overrides {
  std::optional<unsigned> workers;
  std::optional<Accumulation> accumulation;
  std::optional<Backend> backend;
  std::optional<Real> snapshot_every;
  std::optional<std::filesystem::path> out;
};

void apply_overrides(Scenario& scenario, const Overrides& overrides);

struct EnergySample {
  Real sim_time = 0.0;
  std::uint64_t step = 0;
  EnergyBreakdown energy;
};

struct RunReport {
  std::string name;
  std::uint64_t steps = 0;
  Real sim_time = 0.0;
  Real wall_seconds = 0.0;
  std::uint64_t masses = 0;
  std::uint64_t springs = 0;  // live springs when the run started
  Real throughput = 0.0;      // springs * steps / wall_seconds
  std::vector<std::filesystem::path> snapshots;
  std::vector<EnergySample> energy;
  bool aborted = false;
  std::string error;
};

/// Called at every pause point, including the initial state, with the
/// controller paused and a snapshot of that pause. Returning false ends the
/// run early.
using PauseHook =
    std::function<bool(SimController&, const PauseReport&, const Snapshot&)>;

/// Builds the scene, then drives a controller with AtTime breakpoints every
/// `snapshot_every`, writing snapshot CSVs, energy.csv and report.json under
/// the output directory when enabled. `scene_out`, when given, is filled
/// before the first hook call.
RunReport run_scenario(const Scenario& scenario, int copies = 1, const PauseHook& hook = {},
                       BuiltScene* scene_out = nullptr);

void write_report_json(const std::filesystem::path& path, const RunReport& report);

struct BenchOptions {
  std::vector<int> sizes{10, 20, 30};
  Real dt = 1e-4;
  Real duration = 1.0;
  std::vector<Backend> backends{Backend::Serial, Backend::Parallel};
  Accumulation accumulation = Accumulation::Slotted;
  unsigned workers = 0;  // 0: hardware concurrency
  Material material{4.56e9, 1140.0, std::nullopt};
  Real spacing = 0.01;
  Real diameter = 0.001;
};

struct BenchRow {
  int n = 0;
  Backend backend = Backend::Serial;
  unsigned workers = 1;
  std::uint64_t masses = 0;
  std::uint64_t springs = 0;
  std::uint64_t steps = 0;
  Real wall_seconds = 0.0;
  Real updates_per_second = 0.0;
};

/// n^3 lattices at rest with no gravity, stepped for duration/dt steps per
/// backend, one after the other.
std::vector<BenchRow> run_bench(const BenchOptions& options);
void write_bench_csv(const std::filesystem::path& path, const std::vector<BenchRow>& rows);

struct SwarmReport {
  RunReport run;
  /// tracks[b][i] is body b's center of mass at times[i].
  std::vector<Real> times;
  std::vector<std::vector<Vec3>> tracks;
  /// Largest |len - L_r| / L_r over connective springs, checked every step.
  Real max_connective_strain = 0.0;
  /// Strain at which a connective spring yields (infinite without yield).
  Real connective_break_strain = 0.0;
  std::uint64_t connective_alive = 0;
  std::uint64_t connective_total = 0;
};

/// Throws ValidationError when the estimated footprint exceeds
/// `memory_limit_bytes`.
SwarmReport run_swarm(const Scenario& scenario, int count, std::uint64_t memory_limit_bytes);

struct TopoEpoch {
  int epoch = 0;
  Real sim_time = 0.0;
  std::vector<SpringHandle> removed;
  std::uint64_t springs_left = 0;
};

struct TopoReport {
  RunReport run;
  Real threshold = 0.0;
  std::vector<TopoEpoch> epochs;
  bool disconnected = false;
  std::string message;
  /// Masses still connected to an anchored mass over the initial count.
  Real mass_fraction = 1.0;
};

/// Observer of each removal round: the pause snapshot the stresses came
/// from and the springs chosen for deletion.
using TopoObserver = std::function<void(const Snapshot&, const std::vector<SpringHandle>&)>;

/// Per-spring axial stress |F| / A_c evaluated from snapshot state.
std::vector<std::pair<SpringHandle, Real>> snapshot_stresses(const Snapshot& snap);

/// Removes springs whose stress is below `threshold` every topology
/// interval. Stops early, without deleting, if a round would cut every
/// loaded mass off from the anchored ones.
TopoReport run_topology(const Scenario& scenario, Real threshold,
                        const TopoObserver& observer = {});

/// Connectivity over alive springs minus `removed`: true when every loaded
/// mass reaches some anchored mass.
bool loads_reach_anchors(const Snapshot& snap, const std::vector<SpringHandle>& removed,
                         const std::vector<MassHandle>& anchored,
                         const std::vector<MassHandle>& loaded,
                         std::uint64_t* reachable_masses = nullptr);

}  // namespace springmass::tools
