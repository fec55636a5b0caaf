#include <algorithm>
#include <numeric>

#include "springmass/errors.hpp"
#include "springmass_tools/experiments.hpp"

namespace springmass::tools {
namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t i) {
    while (parent_[i] != i) {
      parent_[i] = parent_[parent_[i]];
      i = parent_[i];
    }
    return i;
  }
  void unite(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

std::vector<std::pair<SpringHandle, Real>> snapshot_stresses(const Snapshot& snap) {
  std::vector<std::pair<SpringHandle, Real>> out;
  out.reserve(snap.springs.size());
  for (const SpringRecord& r : snap.springs) {
    if (!r.alive) continue;
    const MassRecord* a = snap.find(r.state.m1);
    const MassRecord* b = snap.find(r.state.m2);
    if (a == nullptr || b == nullptr || !a->alive || !b->alive) continue;
    const Real factor = rest_factor(r.state, snap.sim_time, r.handle.slot);
    out.emplace_back(r.handle, spring_stress(r.state, a->state.pos, b->state.pos, factor));
  }
  return out;
}

bool loads_reach_anchors(const Snapshot& snap, const std::vector<SpringHandle>& removed,
                         const std::vector<MassHandle>& anchored,
                         const std::vector<MassHandle>& loaded, std::uint64_t* reachable) {
  std::size_t slots = 0;
  for (const MassRecord& m : snap.masses) slots = std::max<std::size_t>(slots, m.handle.slot + 1);
  DisjointSets sets(slots);
  std::vector<SpringHandle> cut = removed;
  std::sort(cut.begin(), cut.end());
  for (const SpringRecord& r : snap.springs) {
    if (!r.alive || std::binary_search(cut.begin(), cut.end(), r.handle)) continue;
    const MassRecord* a = snap.find(r.state.m1);
    const MassRecord* b = snap.find(r.state.m2);
    if (a == nullptr || b == nullptr || !a->alive || !b->alive) continue;
    sets.unite(a->handle.slot, b->handle.slot);
  }
  std::vector<bool> anchor_root(slots, false);
  for (MassHandle h : anchored) {
    if (h.slot < slots) anchor_root[sets.find(h.slot)] = true;
  }
  if (reachable != nullptr) {
    *reachable = 0;
    for (const MassRecord& m : snap.masses) {
      if (m.alive && anchor_root[sets.find(m.handle.slot)]) ++*reachable;
    }
  }
  return std::all_of(loaded.begin(), loaded.end(), [&](MassHandle h) {
    return h.slot < slots && anchor_root[sets.find(h.slot)];
  });
}

TopoReport run_topology(const Scenario& scenario, Real threshold, const TopoObserver& observer) {
  if (!(threshold >= 0.0)) throw ValidationError("stress threshold must be non-negative");
  Scenario sc = scenario;
  sc.run.duration = sc.topology.interval * sc.topology.epochs;
  sc.run.snapshot_every = sc.topology.interval;

  TopoReport out;
  out.threshold = threshold;
  BuiltScene scene;
  std::uint64_t initial_masses = 0;
  std::uint64_t connected = 0;
  auto hook = [&](SimController& ctl, const PauseReport& pr, const Snapshot& snap) {
    if (pr.state == SimState::Idle) {
      if (scene.anchored.empty() || scene.loaded.empty()) {
        throw ValidationError("topology demo needs a body with fix = x_min and a load");
      }
      initial_masses = snap.masses.size();
      loads_reach_anchors(snap, {}, scene.anchored, scene.loaded, &connected);
      return true;
    }
    std::vector<SpringHandle> removed;
    for (const auto& [h, stress] : snapshot_stresses(snap)) {
      if (stress < threshold) removed.push_back(h);
    }
    if (!removed.empty() &&
        !loads_reach_anchors(snap, removed, scene.anchored, scene.loaded, nullptr)) {
      out.disconnected = true;
      out.message = "removing " + std::to_string(removed.size()) +
                    " springs would disconnect the load from the anchors; stopped";
      return false;
    }
    if (observer) observer(snap, removed);
    if (!removed.empty()) {
      MutationBatch batch;
      for (SpringHandle h : removed) batch.add(DeleteSpring{h});
      const BatchResult result = ctl.queue_mutations(std::move(batch)).get();
      if (!result.applied) throw StateError("spring removal batch was rejected");
    }
    TopoEpoch e;
    e.epoch = static_cast<int>(out.epochs.size()) + 1;
    e.sim_time = snap.sim_time;
    e.removed = std::move(removed);
    e.springs_left = ctl.store().spring_count();
    out.epochs.push_back(std::move(e));
    loads_reach_anchors(ctl.snapshot(), {}, scene.anchored, scene.loaded, &connected);
    return true;
  };
  out.run = run_scenario(sc, 1, hook, &scene);
  out.mass_fraction =
      initial_masses > 0 ? static_cast<Real>(connected) / static_cast<Real>(initial_masses) : 0.0;
  if (!out.disconnected) out.message = "completed " + std::to_string(out.epochs.size()) + " epochs";
  return out;
}

}  // namespace springmass::tools
