#include <chrono>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "springmass/errors.hpp"
#include "springmass/snapshot_io.hpp"
#include "springmass_tools/experiments.hpp"

namespace springmass::tools {
namespace {

using Clock = std::chrono::steady_clock;

std::filesystem::path snapshot_path(const std::filesystem::path& dir, std::size_t index) {
  char name[32];
  std::snprintf(name, sizeof name, "snap_%06zu.csv", index);
  return dir / "snapshots" / name;
}

void write_energy_row(std::ostream& out, const EnergySample& s) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%.17g,%llu,%.17g,%.17g,%.17g,%.17g\n", s.sim_time,
                static_cast<unsigned long long>(s.step), s.energy.kinetic, s.energy.spring,
                s.energy.gravitational, s.energy.total());
  out << buf;
}

}  // namespace

void apply_overrides(Scenario& scenario, const Overrides& o) {
  if (o.workers) scenario.run.step.workers = *o.workers;
  if (o.accumulation) scenario.run.step.accumulation = *o.accumulation;
  if (o.backend) scenario.run.step.backend = *o.backend;
  if (o.snapshot_every) scenario.run.snapshot_every = *o.snapshot_every;
  if (o.out) scenario.output.dir = *o.out;
  // A worker count above one only makes sense in parallel.
  if (o.workers && *o.workers > 1 && !o.backend) scenario.run.step.backend = Backend::Parallel;
  scenario.validate();
}

RunReport run_scenario(const Scenario& sc, int copies, const PauseHook& hook,
                       BuiltScene* scene_out) {
  sc.validate();
  SimController ctl(sc.run.step, sc.environment);
  BuiltScene scene = build_scene(sc, ctl.store(), copies);
  if (scene_out != nullptr) *scene_out = scene;

  RunReport report;
  report.name = sc.name;
  report.masses = ctl.store().mass_count();
  report.springs = ctl.store().spring_count();

  const std::filesystem::path& dir = sc.output.dir;
  if (sc.output.snapshots) std::filesystem::create_directories(dir / "snapshots");
  std::ofstream energy_csv;
  if (sc.output.energy) {
    std::filesystem::create_directories(dir);
    energy_csv.open(dir / "energy.csv");
    if (!energy_csv) throw Error("cannot write " + (dir / "energy.csv").string());
    energy_csv << "time,step,kinetic,spring,gravitational,total\n";
  }

  std::optional<std::uint64_t> last_written;
  const Environment env = ctl.environment();
  auto record = [&](const PauseReport& pr) {
    const Snapshot snap = ctl.snapshot();
    if (!last_written || *last_written != snap.step) {
      last_written = snap.step;
      if (sc.output.snapshots) {
        report.snapshots.push_back(snapshot_path(dir, report.snapshots.size()));
        write_snapshot_csv(report.snapshots.back(), snap);
      }
      report.energy.push_back({snap.sim_time, snap.step, compute_energy(snap, env)});
      if (energy_csv.is_open()) write_energy_row(energy_csv, report.energy.back());
    }
    return hook ? hook(ctl, pr, snap) : true;
  };

  const Real dt = sc.run.step.dt;
  const Real t0 = ctl.sim_time();
  const Real end = t0 + sc.run.duration;
  std::uint64_t next_interval = 1;
  auto schedule = [&] {
    if (!(sc.run.snapshot_every > 0.0)) return;
    const Real t = t0 + sc.run.snapshot_every * static_cast<Real>(next_interval++);
    if (t < end - 0.5 * dt) ctl.set_breakpoint({AtTime{t}, "snapshot"});
  };

  PauseReport initial{SimState::Idle, PauseReason::Manual, t0, 0, std::nullopt, "initial", {}};
  Clock::duration running{};
  if (record(initial)) {
    schedule();
    auto resumed = Clock::now();
    ctl.start(sc.run.duration);
    for (;;) {
      const PauseReport pr = ctl.wait_for_event();
      running += Clock::now() - resumed;
      if (pr.state == SimState::Done) {
        report.aborted = pr.reason == PauseReason::Aborted;
        if (report.aborted) {
          char where[64];
          std::snprintf(where, sizeof where, " (sim_time %.17g)", pr.sim_time);
          report.error = pr.error + where;
        }
        break;
      }
      if (!record(pr) || pr.label == "duration") break;
      schedule();
      resumed = Clock::now();
      ctl.resume();
    }
  }
  report.steps = ctl.step_count();
  report.sim_time = ctl.sim_time();
  ctl.stop();

  report.wall_seconds = std::chrono::duration<Real>(running).count();
  report.throughput = report.wall_seconds > 0.0
                          ? throughput(report.springs, report.steps, report.wall_seconds)
                          : 0.0;
  if (sc.output.snapshots || sc.output.energy) write_report_json(dir / "report.json", report);
  return report;
}

void write_report_json(const std::filesystem::path& path, const RunReport& r) {
  nlohmann::json j;
  j["name"] = r.name;
  j["steps"] = r.steps;
  j["sim_time"] = r.sim_time;
  j["wall_seconds"] = r.wall_seconds;
  j["masses"] = r.masses;
  j["springs"] = r.springs;
  j["spring_updates_per_second"] = r.throughput;
  j["aborted"] = r.aborted;
  if (r.aborted) j["error"] = r.error;
  auto& snaps = j["snapshots"] = nlohmann::json::array();
  for (const auto& p : r.snapshots) snaps.push_back(p.filename().string());
  auto& energy = j["energy"] = nlohmann::json::array();
  for (const EnergySample& e : r.energy) {
    energy.push_back({{"time", e.sim_time},
                      {"step", e.step},
                      {"kinetic", e.energy.kinetic},
                      {"spring", e.energy.spring},
                      {"gravitational", e.energy.gravitational}});
  }
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace springmass::tools
