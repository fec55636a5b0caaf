// springmass command-line front end: run, bench, swarm and topo subcommands.
#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "springmass/errors.hpp"
#include "springmass/version.hpp"
#include "springmass_tools/experiments.hpp"

namespace sm = springmass;
namespace tools = springmass::tools;

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kScenario = 2, kNumerical = 3 };

struct Common {
  std::optional<unsigned> workers;
  std::string accumulation;
  std::string backend;
  std::optional<double> snapshot_every;
  std::string out;

  void attach(CLI::App& app) {
    app.add_option("--workers", workers, "Worker threads (implies --backend parallel when > 1)")
        ->check(CLI::PositiveNumber);
    app.add_option("--accumulation", accumulation, "linearizable | slotted")
        ->check(CLI::IsMember({"linearizable", "slotted"}));
    app.add_option("--backend", backend, "serial | parallel")
        ->check(CLI::IsMember({"serial", "parallel"}));
    app.add_option("--snapshot-every", snapshot_every, "Sim-time between snapshots (s)")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--out", out, "Output directory");
  }

  tools::Overrides overrides() const {
    tools::Overrides o;
    o.workers = workers;
    if (accumulation == "linearizable") o.accumulation = sm::Accumulation::Linearizable;
    if (accumulation == "slotted") o.accumulation = sm::Accumulation::Slotted;
    if (backend == "serial") o.backend = sm::Backend::Serial;
    if (backend == "parallel") o.backend = sm::Backend::Parallel;
    o.snapshot_every = snapshot_every;
    if (!out.empty()) o.out = out;
    return o;
  }
};

std::uint64_t memory_limit() {
  const long pages = sysconf(_SC_PHYS_PAGES);
  const long page = sysconf(_SC_PAGE_SIZE);
  if (pages <= 0 || page <= 0) return std::uint64_t{1} << 32;
  return static_cast<std::uint64_t>(pages) * static_cast<std::uint64_t>(page) / 2;
}

void print_run(const tools::RunReport& r) {
  std::printf("%s: %llu masses, %llu springs\n", r.name.c_str(),
              static_cast<unsigned long long>(r.masses), static_cast<unsigned long long>(r.springs));
  std::printf("  steps %llu, sim_time %.6g s, wall %.3f s, %.4g spring updates/s\n",
              static_cast<unsigned long long>(r.steps), r.sim_time, r.wall_seconds, r.throughput);
  if (!r.snapshots.empty()) std::printf("  %zu snapshots\n", r.snapshots.size());
}

int finish(const tools::RunReport& r) {
  if (r.aborted) {
    std::fprintf(stderr, "numerical abort: %s\n", r.error.c_str());
    return kNumerical;
  }
  return kOk;
}

tools::Scenario load(const std::string& file, const Common& common) {
  tools::Scenario sc = tools::load_scenario(file);
  tools::apply_overrides(sc, common.overrides());
  return sc;
}

int cmd_run(const std::string& file, const Common& common) {
  const tools::RunReport r = tools::run_scenario(load(file, common));
  print_run(r);
  return finish(r);
}

int cmd_swarm(const std::string& file, int count, const Common& common) {
  const tools::Scenario sc = load(file, common);
  const tools::SwarmReport r = tools::run_swarm(sc, count, memory_limit());
  print_run(r.run);
  std::ofstream tracks(sc.output.dir / "com_tracks.csv");
  tracks << "time,body,x,y,z\n";
  tracks.precision(17);
  for (std::size_t b = 0; b < r.tracks.size(); ++b) {
    for (std::size_t i = 0; i < r.times.size(); ++i) {
      const sm::Vec3& c = r.tracks[b][i];
      tracks << r.times[i] << ',' << b << ',' << c.x << ',' << c.y << ',' << c.z << '\n';
    }
    const sm::Vec3 d = r.tracks[b].back() - r.tracks[b].front();
    std::printf("  body %zu: COM displacement (%.4g, %.4g, %.4g) m\n", b, d.x, d.y, d.z);
  }
  if (r.connective_total > 0) {
    std::printf("  connective springs: %llu of %llu intact, max strain %.4g (break at %.4g)\n",
                static_cast<unsigned long long>(r.connective_alive),
                static_cast<unsigned long long>(r.connective_total), r.max_connective_strain,
                r.connective_break_strain);
  }
  return finish(r.run);
}

int cmd_topo(const std::string& file, double threshold, const Common& common) {
  const tools::Scenario sc = load(file, common);
  const tools::TopoReport r = tools::run_topology(sc, threshold);
  print_run(r.run);
  std::filesystem::create_directories(sc.output.dir);
  std::ofstream csv(sc.output.dir / "topology.csv");
  csv << "epoch,time,removed,springs_left\n";
  for (const tools::TopoEpoch& e : r.epochs) {
    csv << e.epoch << ',' << e.sim_time << ',' << e.removed.size() << ',' << e.springs_left << '\n';
    std::printf("  epoch %d (t=%.4g s): removed %zu, %llu springs left\n", e.epoch, e.sim_time,
                e.removed.size(), static_cast<unsigned long long>(e.springs_left));
  }
  std::printf("  %s; connected mass fraction %.4f\n", r.message.c_str(), r.mass_fraction);
  return finish(r.run);
}

int cmd_bench(const tools::BenchOptions& o, const std::string& out) {
  const auto rows = tools::run_bench(o);
  std::printf("%4s %-9s %7s %10s %10s %12s %14s\n", "n", "backend", "workers", "masses", "springs",
              "wall [s]", "updates/s");
  for (const tools::BenchRow& r : rows) {
    std::printf("%4d %-9s %7u %10llu %10llu %12.4f %14.4g\n", r.n,
                r.backend == sm::Backend::Serial ? "serial" : "parallel", r.workers,
                static_cast<unsigned long long>(r.masses),
                static_cast<unsigned long long>(r.springs), r.wall_seconds, r.updates_per_second);
  }
  const std::filesystem::path path = std::filesystem::path(out.empty() ? "out" : out) / "bench.csv";
  tools::write_bench_csv(path, rows);
  std::printf("wrote %s\n", path.string().c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spring-mass simulation runner", "springmass"};
  app.set_version_flag("--version", std::string(SPRINGMASS_VERSION));
  app.require_subcommand(1);

  std::string file;
  Common run_common;
  auto* run = app.add_subcommand("run", "Run a scenario file");
  run->add_option("file", file, "Scenario file")->required();
  run_common.attach(*run);

  tools::BenchOptions bench_opts;
  std::string bench_backends = "serial,parallel";
  std::string bench_accumulation = "slotted";
  std::string bench_out;
  auto* bench = app.add_subcommand("bench", "Time n^3 lattices per backend");
  bench->add_option("--sizes", bench_opts.sizes, "Lattice sizes n")->delimiter(',');
  bench->add_option("--dt", bench_opts.dt, "Time step (s)")->check(CLI::PositiveNumber);
  bench->add_option("--duration", bench_opts.duration, "Simulated time (s)")
      ->check(CLI::NonNegativeNumber);
  bench->add_option("--backends", bench_backends, "Comma-separated: serial,parallel");
  bench->add_option("--workers", bench_opts.workers, "Parallel workers (0 = all cores)");
  bench->add_option("--accumulation", bench_accumulation, "linearizable | slotted")
      ->check(CLI::IsMember({"linearizable", "slotted"}));
  bench->add_option("--out", bench_out, "Output directory");

  int count = 1;
  Common swarm_common;
  auto* swarm = app.add_subcommand("swarm", "Run N copies of a scenario's bodies");
  swarm->add_option("--count", count, "Number of bodies")->check(CLI::PositiveNumber);
  swarm->add_option("file", file, "Scenario file")->required();
  swarm_common.attach(*swarm);

  double threshold = 0.0;
  Common topo_common;
  auto* topo = app.add_subcommand("topo", "Stress-driven spring removal");
  topo->add_option("file", file, "Scenario file")->required();
  topo->add_option("--threshold", threshold, "Stress threshold (Pa)")
      ->required()
      ->check(CLI::NonNegativeNumber);
  topo_common.attach(*topo);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return cmd_run(file, run_common);
    if (*swarm) return cmd_swarm(file, count, swarm_common);
    if (*topo) return cmd_topo(file, threshold, topo_common);
    if (*bench) {
      bench_opts.accumulation = bench_accumulation == "linearizable"
                                    ? sm::Accumulation::Linearizable
                                    : sm::Accumulation::Slotted;
      bench_opts.backends.clear();
      std::stringstream list(bench_backends);
      for (std::string b; std::getline(list, b, ',');) {
        if (b == "serial") {
          bench_opts.backends.push_back(sm::Backend::Serial);
        } else if (b == "parallel") {
          bench_opts.backends.push_back(sm::Backend::Parallel);
        } else {
          std::fprintf(stderr, "unknown backend '%s'\n", b.c_str());
          return kUsage;
        }
      }
      return cmd_bench(bench_opts, bench_out);
    }
  } catch (const sm::NumericalError& e) {
    std::fprintf(stderr, "numerical abort: %s\n", e.what());
    return kNumerical;
  } catch (const sm::ParseError& e) {
    std::fprintf(stderr, "scenario error: %s\n", e.what());
    return kScenario;
  } catch (const sm::Error& e) {
    std::fprintf(stderr, "scenario error: %s\n", e.what());
    return kScenario;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "file error: %s\n", e.what());
    return kScenario;
  }
  return kUsage;
}
