#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include "springmass/builder.hpp"
#include "springmass/errors.hpp"
#include "springmass_tools/experiments.hpp"

namespace springmass::tools {

std::vector<BenchRow> run_bench(const BenchOptions& o) {
  if (!(o.dt > 0.0) || !(o.duration >= 0.0)) throw ValidationError("bad dt or duration");
  const auto steps = static_cast<std::uint64_t>(std::llround(o.duration / o.dt));
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  std::vector<BenchRow> rows;
  for (int n : o.sizes) {
    if (n < 1) throw ValidationError("lattice size must be >= 1");
    for (Backend backend : o.backends) {
      ObjectStore store;
      build_lattice({{}, n, n, n, o.spacing, o.material, o.diameter}, store);
      StepConfig cfg;
      cfg.dt = o.dt;
      cfg.backend = backend;
      cfg.accumulation = o.accumulation;
      cfg.workers = backend == Backend::Serial ? 1 : (o.workers == 0 ? hw : o.workers);
      Integrator integrator(cfg);
      Environment env;
      env.gravity = {};  // at rest: every spring sits exactly at its rest length

      const auto start = std::chrono::steady_clock::now();
      Real t = 0.0;
      for (std::uint64_t s = 0; s < steps; ++s) t = integrator.step(store, env, t);
      const Real wall =
          std::chrono::duration<Real>(std::chrono::steady_clock::now() - start).count();

      BenchRow row;
      row.n = n;
      row.backend = backend;
      row.workers = cfg.workers;
      row.masses = store.mass_count();
      row.springs = store.spring_count();
      row.steps = steps;
      row.wall_seconds = wall;
      row.updates_per_second = wall > 0.0 ? throughput(row.springs, steps, wall) : 0.0;
      rows.push_back(row);
    }
  }
  return rows;
}

void write_bench_csv(const std::filesystem::path& path, const std::vector<BenchRow>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "n,backend,workers,masses,springs,steps,wall_seconds,spring_updates_per_second\n";
  for (const BenchRow& r : rows) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%d,%s,%u,%llu,%llu,%llu,%.9g,%.9g\n", r.n,
                  r.backend == Backend::Serial ? "serial" : "parallel", r.workers,
                  static_cast<unsigned long long>(r.masses),
                  static_cast<unsigned long long>(r.springs),
                  static_cast<unsigned long long>(r.steps), r.wall_seconds, r.updates_per_second);
    out << buf;
  }
}

}  // namespace springmass::tools
