#include <benchmark/benchmark.h>

#include <vector>

#include "springmass/springmass.hpp"

namespace sm = springmass;

namespace {

const sm::Material kSoft{5e6, 1100.0, std::nullopt};

sm::Body lattice(sm::ObjectStore& store, int n) {
  sm::LatticeSpec spec;
  spec.nx = spec.ny = spec.nz = n;
  spec.material = kSoft;
  return sm::build_lattice(spec, store);
}

sm::Environment vacuum() {
  sm::Environment env;
  env.gravity = {};
  return env;
}

void set_spring_counters(benchmark::State& state, std::uint64_t springs) {
  state.counters["springs"] = static_cast<double>(springs);
  state.counters["spring_updates/s"] = benchmark::Counter(
      static_cast<double>(springs), benchmark::Counter::kIsIterationInvariantRate);
}

void BM_SpringPass(benchmark::State& state) {
  sm::ObjectStore store;
  lattice(store, static_cast<int>(state.range(0)));
  sm::Integrator integ(sm::StepConfig{});
  for (auto _ : state) {
    integ.spring_pass(store, 0.0);
    benchmark::ClobberMemory();
  }
  set_spring_counters(state, store.spring_count());
}
BENCHMARK(BM_SpringPass)->Arg(10)->Arg(20)->Arg(30);

// range(1): 0 serial, 1 parallel linearizable, 2 parallel slotted.
void BM_Step(benchmark::State& state) {
  sm::ObjectStore store;
  lattice(store, static_cast<int>(state.range(0)));
  sm::StepConfig cfg;
  if (state.range(1) > 0) {
    cfg.backend = sm::Backend::Parallel;
    cfg.workers = 4;
    cfg.accumulation =
        state.range(1) == 2 ? sm::Accumulation::Slotted : sm::Accumulation::Linearizable;
  }
  sm::Integrator integ(cfg);
  const sm::Environment env = vacuum();
  sm::Real t = 0.0;
  for (auto _ : state) t = integ.step(store, env, t);
  set_spring_counters(state, store.spring_count());
}
BENCHMARK(BM_Step)->ArgsProduct({{10, 20}, {0, 1, 2}})->UseRealTime();

// Worm-style load: actuated lattice on a friction plane.
void BM_ActuatedStepOnPlane(benchmark::State& state) {
  sm::ObjectStore store;
  const sm::Body body = lattice(store, static_cast<int>(state.range(0)));
  sm::configure_worm(body, store);
  sm::Environment env;
  env.contacts.push_back(sm::ContactPlane{{0, 0, 1}, 0.0, 500.0, 0.6, 0.5});
  sm::Integrator integ(sm::StepConfig{});
  sm::Real t = 0.0;
  for (auto _ : state) t = integ.step(store, env, t);
  set_spring_counters(state, store.spring_count());
}
BENCHMARK(BM_ActuatedStepOnPlane)->Arg(10);

// Deletes every object of a store holding range(0) masses, in creation order.
void BM_StoreDelete(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<sm::MassHandle> handles;
  handles.reserve(n);
  for (auto _ : state) {
    state.PauseTiming();
    sm::ObjectStore store;
    handles.clear();
    for (std::size_t i = 0; i < n; ++i) handles.push_back(store.create_mass(sm::Mass{}));
    state.ResumeTiming();
    for (sm::MassHandle h : handles) benchmark::DoNotOptimize(store.delete_mass(h));
    state.PauseTiming();
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_StoreDelete)->Arg(1000)->Arg(1000000)->Unit(benchmark::kMillisecond);

void BM_StaleRead(benchmark::State& state) {
  sm::ObjectStore store;
  std::vector<sm::MassHandle> handles;
  for (int i = 0; i < 4096; ++i) handles.push_back(store.create_mass(sm::Mass{}));
  for (std::size_t i = 0; i < handles.size(); i += 2) store.delete_mass(handles[i]);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(store.read(handles[i]));
    i = (i + 1) & 4095;
  }
}
BENCHMARK(BM_StaleRead);

void BM_CaptureSnapshot(benchmark::State& state) {
  sm::ObjectStore store;
  lattice(store, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sm::capture_snapshot(store, 0.0, 0));
}
BENCHMARK(BM_CaptureSnapshot)->Arg(10)->Arg(20);

void BM_PointInMesh(benchmark::State& state) {
  const sm::TriMesh ball = sm::make_icosphere({}, 1.0, static_cast<int>(state.range(0)));
  sm::Real x = -1.2;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sm::point_in_mesh({x, 0.1, 0.2}, ball));
    x = x > 1.2 ? -1.2 : x + 0.01;
  }
}
BENCHMARK(BM_PointInMesh)->Arg(2)->Arg(4);

}  // namespace

BENCHMARK_MAIN();
