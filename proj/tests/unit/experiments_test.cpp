#include "springmass_tools/experiments.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "springmass/errors.hpp"
#include "springmass/log.hpp"
#include "springmass/snapshot_io.hpp"

namespace springmass::tools {
namespace {

Scenario parse(const std::string& text, const std::filesystem::path& out) {
  std::istringstream in(text);
  Scenario sc = parse_scenario(in);
  sc.output.dir = out;
  return sc;
}

const char* kDrop = R"(
[body]
corner = 0 0 0.02
size = 4 4 4
youngs_modulus = 5e6
density = 1100
[plane]
stiffness = 500
mu_static = 0.6
mu_kinetic = 0.5
[run]
duration = 0.1
snapshot_every = 0.02
)";

TEST(ExperimentsTest, RunWritesSnapshotsEnergyAndReport) {
  const auto dir = testing_support::scratch_dir("run");
  const RunReport r = run_scenario(parse(kDrop, dir));
  EXPECT_EQ(r.steps, 1000u);
  EXPECT_NEAR(r.sim_time, 0.1, 1e-12);
  EXPECT_EQ(r.snapshots.size(), 6u);
  EXPECT_EQ(r.energy.size(), 6u);
  EXPECT_FALSE(r.aborted);
  EXPECT_DOUBLE_EQ(r.throughput, throughput(r.springs, r.steps, r.wall_seconds));
  for (const auto& p : r.snapshots) EXPECT_TRUE(std::filesystem::exists(p));

  std::ifstream energy(dir / "energy.csv");
  std::string header;
  std::getline(energy, header);
  EXPECT_EQ(header, "time,step,kinetic,spring,gravitational,total");
  int rows = 0;
  for (std::string l; std::getline(energy, l);) ++rows;
  EXPECT_EQ(rows, 6);

  std::ifstream report(dir / "report.json");
  const auto j = nlohmann::json::parse(report);
  EXPECT_EQ(j["steps"].get<std::uint64_t>(), 1000u);
  EXPECT_DOUBLE_EQ(j["spring_updates_per_second"].get<double>(), r.throughput);
  EXPECT_EQ(j["snapshots"].size(), 6u);
}

TEST(ExperimentsTest, ZeroDurationWritesOnlyInitialSnapshot) {
  const auto dir = testing_support::scratch_dir("zero");
  Scenario sc = parse(kDrop, dir);
  sc.run.duration = 0.0;
  const RunReport r = run_scenario(sc);
  EXPECT_EQ(r.steps, 0u);
  ASSERT_EQ(r.snapshots.size(), 1u);
  EXPECT_EQ(r.throughput, 0.0);
}

TEST(ExperimentsTest, SerialRunsAreByteIdentical) {
  const auto a = testing_support::scratch_dir("det_a");
  const auto b = testing_support::scratch_dir("det_b");
  const RunReport ra = run_scenario(parse(kDrop, a));
  const RunReport rb = run_scenario(parse(kDrop, b));
  ASSERT_EQ(ra.snapshots.size(), rb.snapshots.size());
  for (std::size_t i = 0; i < ra.snapshots.size(); ++i) {
    EXPECT_EQ(oracle::slurp(ra.snapshots[i]), oracle::slurp(rb.snapshots[i])) << i;
  }
}

TEST(ExperimentsTest, ReloadedSnapshotReproducesFile) {
  const auto dir = testing_support::scratch_dir("reload");
  const RunReport first = run_scenario(parse(kDrop, dir / "first"));
  const auto mid = first.snapshots[3];
  Scenario again = parse(kDrop, dir / "again");
  again.run.initial_state = mid;
  again.run.duration = 0.0;
  const RunReport second = run_scenario(again);
  ASSERT_EQ(second.snapshots.size(), 1u);
  EXPECT_EQ(oracle::slurp(second.snapshots[0]), oracle::slurp(mid));
}

TEST(ExperimentsTest, NumericalAbortIsReported) {
  set_log_sink([](LogLevel, std::string_view) {});
  const auto dir = testing_support::scratch_dir("abort");
  Scenario sc = parse(kDrop, dir);
  sc.bodies[0].material.youngs_modulus = 1e15;
  sc.run.step.dt = 1e-2;
  sc.run.duration = 5.0;
  const RunReport r = run_scenario(sc);
  set_log_sink(nullptr);
  EXPECT_TRUE(r.aborted);
  EXPECT_NE(r.error.find("sim_time"), std::string::npos);
}

TEST(ExperimentsTest, OverridesApply) {
  Scenario sc = parse(kDrop, "x");
  Overrides o;
  o.workers = 2;
  o.accumulation = Accumulation::Slotted;
  o.snapshot_every = 0.05;
  o.out = "elsewhere";
  apply_overrides(sc, o);
  EXPECT_EQ(sc.run.step.workers, 2u);
  EXPECT_EQ(sc.run.step.backend, Backend::Parallel);
  EXPECT_EQ(sc.run.step.accumulation, Accumulation::Slotted);
  EXPECT_EQ(sc.run.snapshot_every, 0.05);
  EXPECT_EQ(sc.output.dir, "elsewhere");
}

TEST(ExperimentsTest, BenchRowsPerSizeAndBackend) {
  BenchOptions o;
  o.sizes = {1, 3};
  o.duration = 0.01;
  o.workers = 2;
  const auto rows = run_bench(o);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].springs, 0u);
  EXPECT_EQ(rows[0].masses, 1u);
  EXPECT_EQ(rows[2].springs, lattice_spring_count(3, 3, 3));
  EXPECT_EQ(rows[2].steps, 100u);
  EXPECT_EQ(rows[3].backend, Backend::Parallel);
  EXPECT_EQ(rows[3].workers, 2u);
  const auto dir = testing_support::scratch_dir("bench");
  write_bench_csv(dir / "bench.csv", rows);
  std::ifstream in(dir / "bench.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "n,backend,workers,masses,springs,steps,wall_seconds,spring_updates_per_second");
}

const char* kWorm = R"(
[body]
size = 8 3 3
youngs_modulus = 5e6
density = 1100
[environment]
drag = 0.001
[plane]
stiffness = 500
mu_static = 0.6
mu_kinetic = 0.5
[actuation]
kind = worm
[run]
duration = 0.2
snapshot_every = 0.1
[output]
snapshots = false
energy = false
)";

TEST(ExperimentsTest, SwarmOfOneIsThePlainRun) {
  const Scenario sc = parse(kWorm, testing_support::scratch_dir("swarm1"));
  const SwarmReport swarm = run_swarm(sc, 1, 1ull << 32);
  ASSERT_EQ(swarm.tracks.size(), 1u);
  Vec3 plain_com;
  run_scenario(sc, 1, [&](SimController&, const PauseReport&, const Snapshot& s) {
    plain_com = center_of_mass(s);
    return true;
  });
  EXPECT_EQ(swarm.tracks[0].back(), plain_com);
  EXPECT_EQ(swarm.times.size(), 3u);
}

TEST(ExperimentsTest, SwarmCopiesAreIndependentBodies) {
  const Scenario sc = parse(kWorm, testing_support::scratch_dir("swarm3"));
  const SwarmReport swarm = run_swarm(sc, 3, 1ull << 32);
  ASSERT_EQ(swarm.tracks.size(), 3u);
  EXPECT_EQ(swarm.run.masses, 3u * 72u);
  EXPECT_EQ(swarm.connective_total, 0u);
}

TEST(ExperimentsTest, SwarmMemoryGuard) {
  const Scenario sc = parse(kWorm, testing_support::scratch_dir("guard"));
  try {
    run_swarm(sc, 100, 1024);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("MiB"), std::string::npos);
  }
}

TEST(ExperimentsTest, CubePairStaysConnected) {
  const Scenario sc = parse(R"(
[body]
kind = cube_grid
cubes = 2
size = 4 4 4
gap = 0.02
connective_diameter = 0.0004
connective_yield_stress = 4e6
youngs_modulus = 5e6
density = 1100
[plane]
stiffness = 500
mu_static = 0.6
mu_kinetic = 0.5
[actuation]
kind = worm
mode = quiescent
[run]
duration = 0.3
snapshot_every = 0.1
[output]
snapshots = false
energy = false
)",
                            testing_support::scratch_dir("pair"));
  const SwarmReport r = run_swarm(sc, 1, 1ull << 32);
  EXPECT_EQ(r.tracks.size(), 2u);
  EXPECT_EQ(r.connective_total, 16u);
  EXPECT_EQ(r.connective_alive, 16u);
  EXPECT_GT(r.max_connective_strain, 0.0);
  EXPECT_LT(r.max_connective_strain, r.connective_break_strain);
}

const char* kBeam = R"(
[body]
size = 6 2 3
youngs_modulus = 5e6
density = 1100
fix = x_min
load = 0 0 -0.1
[environment]
gravity = 0 0 0
drag = 0.002
[topology]
epochs = 3
interval = 0.05
[output]
snapshots = false
energy = false
)";

TEST(ExperimentsTest, TopologyThresholdZeroEqualsPlainRun) {
  const Scenario sc = parse(kBeam, testing_support::scratch_dir("topo0"));
  Snapshot topo_final;
  const TopoReport r = run_topology(sc, 0.0, [&](const Snapshot& s, const auto& removed) {
    EXPECT_TRUE(removed.empty());
    topo_final = s;
  });
  ASSERT_EQ(r.epochs.size(), 3u);
  Scenario plain = sc;
  plain.run.duration = 0.15;
  Snapshot plain_final;
  run_scenario(plain, 1, [&](SimController&, const PauseReport&, const Snapshot& s) {
    plain_final = s;
    return true;
  });
  ASSERT_EQ(plain_final.step, topo_final.step);
  for (std::size_t i = 0; i < plain_final.masses.size(); ++i) {
    ASSERT_EQ(plain_final.masses[i].state.pos, topo_final.masses[i].state.pos);
  }
}

// Springs chosen for removal must be exactly those whose independently
// computed stress is below the threshold.
TEST(ExperimentsTest, TopologyRemovalMatchesStressOracle) {
  const Scenario sc = parse(kBeam, testing_support::scratch_dir("topo"));
  const Real threshold = 2000.0;
  int rounds = 0;
  std::size_t total_removed = 0;
  const TopoReport r = run_topology(sc, threshold, [&](const Snapshot& s, const auto& removed) {
    ++rounds;
    std::vector<SpringHandle> expected;
    for (const SpringRecord& rec : s.springs) {
      if (!rec.alive) continue;
      const Vec3 a = s.find(rec.state.m1)->state.pos;
      const Vec3 b = s.find(rec.state.m2)->state.pos;
      const Real stress = oracle::bar_stress(rec.state.k, rec.state.rest_length,
                                             rec.state.diameter, a.x, a.y, a.z, b.x, b.y, b.z);
      if (stress < threshold) expected.push_back(rec.handle);
    }
    std::vector<SpringHandle> got = removed;
    std::sort(got.begin(), got.end());
    std::sort(expected.begin(), expected.end());
    EXPECT_EQ(got, expected);
    total_removed += removed.size();
  });
  EXPECT_EQ(rounds, 3);
  EXPECT_FALSE(r.disconnected);
  EXPECT_GT(total_removed, 0u);
  EXPECT_EQ(r.epochs.back().springs_left, r.run.springs - total_removed);
}

TEST(ExperimentsTest, TopologyGuardStopsFullRemoval) {
  const Scenario sc = parse(kBeam, testing_support::scratch_dir("topo_guard"));
  const TopoReport r = run_topology(sc, 1e12);
  EXPECT_TRUE(r.disconnected);
  EXPECT_TRUE(r.epochs.empty());
  EXPECT_EQ(r.mass_fraction, 1.0);
}

TEST(ExperimentsTest, TopologyNeedsAnchorsAndLoad) {
  Scenario sc = parse(kBeam, testing_support::scratch_dir("topo_bad"));
  sc.bodies[0].fix_x_min = false;
  EXPECT_THROW(run_topology(sc, 1.0), ValidationError);
}

}  // namespace
}  // namespace springmass::tools
