#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "springmass/actuation.hpp"
#include "springmass/engine.hpp"
#include "springmass/store.hpp"
#include "springmass/types.hpp"

namespace springmass::tools {

enum class BodyKind : std::uint8_t { Lattice, StlFill, CubeGrid };

struct BodySpec {
  BodyKind kind = BodyKind::Lattice;
  Vec3 corner;                      // lattice corner, or translation of the mesh
  std::array<int, 3> size{1, 1, 1};  // nodes per axis (per cube for cube grids)
  Real spacing = 0.01;
  Real diameter = 0.001;
  Material material{4.56e9, 1140.0, std::nullopt};
  std::filesystem::path mesh;

  // Cube grid: `cubes` lattices in a row along x, `gap` apart, joined by
  // thin connective springs between facing nodes.
  int cubes = 2;
  Real gap = 0.01;
  Real connective_diameter = 0.0004;
  std::optional<Real> connective_yield_stress;

  bool fix_x_min = false;  // pin every node on the low-x face
  Vec3 load;               // total persistent force spread over the high-x face
  Vec3 velocity;           // initial velocity of every node
  Real swarm_gap = 0.02;   // y clearance between swarm copies
};

struct ActuationSpec {
  bool enabled = false;
  WormParams worm;
};

struct RunSpec {
  StepConfig step;
  Real duration = 1.0;
  /// Sim-time between snapshots; 0 writes only the first and last.
  Real snapshot_every = 0.0;
  std::filesystem::path initial_state;
};

struct TopologySpec {
  int epochs = 3;
  Real interval = 0.05;  // sim-time between removal rounds
};

struct OutputSpec {
  std::filesystem::path dir = "out";
  bool snapshots = true;
  bool energy = true;
};

struct Scenario {
  std::string name = "scenario";
  std::vector<BodySpec> bodies;
  Environment environment;
  ActuationSpec actuation;
  RunSpec run;
  TopologySpec topology;
  OutputSpec output;

  void validate() const;
};

/// Parses the sectioned key/value format documented in docs/scenario-format.md.
/// Relative file paths are resolved against `base_dir`. Throws ParseError with
/// a 1-based line number; unknown sections and keys are errors.
Scenario parse_scenario(std::istream& in, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

struct BuiltScene {
  std::vector<Body> bodies;  // one per lattice, filled mesh, worm copy or cube
  std::vector<SpringHandle> connective;
  /// Masses carrying a persistent load, and fixed masses.
  std::vector<MassHandle> loaded;
  std::vector<MassHandle> anchored;
};

/// Rough bytes needed for a scene before building it.
std::uint64_t estimate_scene_bytes(const Scenario& scenario, int copies);

/// Builds every body into `store`. `copies` replicates lattice and mesh
/// bodies side by side along y and sets the cube count of cube grids.
/// Actuation, initial state and boundary conditions are applied here.
BuiltScene build_scene(const Scenario& scenario, ObjectStore& store, int copies = 1);

const char* to_string(BodyKind kind) noexcept;

}  // namespace springmass::tools
