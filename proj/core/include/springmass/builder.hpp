#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "springmass/store.hpp"
#include "springmass/types.hpp"

namespace springmass {

/// Node mass used when a node has no bar with positive volume attached.
inline constexpr Real kMinimumNodeMass = 1e-9;

struct LatticeSpec {
  Vec3 corner;
  int nx = 1;
  int ny = 1;
  int nz = 1;
  Real spacing = 0.01;  // m
  Material material;
  Real diameter = 0.001;  // m, applied to every spring

  void validate() const;
};

struct Bar {
  Real length = 0.0;    // m
  Real diameter = 0.0;  // m
};

/// k = E * A_c / L_r with A_c = pi * (diameter / 2)^2.
Real derive_spring_constant(const Material& material, Real diameter, Real rest_length);

/// Node mass from the bars meeting at it: half of each bar's mass
/// (density * A_c * L). Falls back to kMinimumNodeMass when that is zero.
Real derive_mass(const Material& material, std::span<const Bar> bars);

/// Springs of an nx*ny*nz lattice where every pair of nodes sharing a unit
/// cell is connected (axis edges, face diagonals, body diagonals).
std::uint64_t lattice_spring_count(std::uint64_t nx, std::uint64_t ny, std::uint64_t nz) noexcept;

/// Builds a lattice with 26-neighbour connectivity. Masses are created in
/// x-fastest order, springs in a fixed order, so identical specs produce
/// identical stores.
Body build_lattice(const LatticeSpec& spec, ObjectStore& store);

struct Triangle {
  Vec3 v0, v1, v2;
};

struct TriMesh {
  std::vector<Triangle> triangles;
  Vec3 lower;
  Vec3 upper;

  void update_bounds() noexcept;
  Real diagonal() const noexcept { return norm(upper - lower); }
};

/// Binary STL (80-byte header, uint32 count, 50 bytes per facet). An ASCII
/// "solid ... endsolid" file is also accepted. Throws ParseError carrying the
/// byte offset (binary) or line number (ASCII) of the problem.
TriMesh load_stl(const std::filesystem::path& path);
TriMesh parse_stl(std::span<const std::uint8_t> bytes);

/// Writes binary STL with computed facet normals.
void write_stl(const std::filesystem::path& path, const TriMesh& mesh);
std::vector<std::uint8_t> encode_stl(const TriMesh& mesh);

/// Axis-aligned box, 12 outward-facing triangles.
TriMesh make_box_mesh(const Vec3& lower, const Vec3& upper);
/// Subdivided icosahedron projected onto the sphere; 20 * 4^subdivisions
/// triangles.
TriMesh make_icosphere(const Vec3& center, Real radius, int subdivisions);

/// Inside test by ray parity. Points within 1e-9 * bbox-diagonal of the
/// surface count as inside.
bool point_in_mesh(const Vec3& p, const TriMesh& mesh);

struct FillOptions {
  Real spacing = 0.01;
  Material material;
  Real diameter = 0.001;
};

/// Lattice over the mesh bounding box keeping only grid points inside the
/// mesh and springs whose endpoints both survive.
Body fill_mesh(const TriMesh& mesh, const FillOptions& options, ObjectStore& store);

}  // namespace springmass
