#include "springmass/builder.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>

#include "springmass/errors.hpp"
#include "springmass/log.hpp"

namespace springmass {
namespace {

// Half of the 26 neighbour offsets; each unordered pair is visited once.
constexpr std::array<std::array<int, 3>, 13> kForwardOffsets{{
    {1, 0, 0}, {0, 1, 0}, {0, 0, 1},                                  // axis
    {1, 1, 0}, {1, -1, 0}, {1, 0, 1}, {1, 0, -1}, {0, 1, 1}, {0, 1, -1},  // face
    {1, 1, 1}, {1, 1, -1}, {1, -1, 1}, {1, -1, -1},                   // body
}};

Real cross_section(Real diameter) noexcept {
  const Real r = 0.5 * diameter;
  return std::numbers::pi * r * r;
}

Real half_bar_mass(const Material& material, Real length, Real diameter) noexcept {
  return 0.5 * material.density * cross_section(diameter) * length;
}

struct GridSpec {
  Vec3 origin;
  int nx = 1, ny = 1, nz = 1;
  Real spacing = 1.0;
  Material material;
  Real diameter = 0.0;
};

// Shared two-phase lattice construction: node masses depend on every
// incident bar, so connectivity is enumerated before anything is created.
template <typename Keep>
Body build_grid(const GridSpec& g, Keep&& keep, ObjectStore& store) {
  const std::size_t total = static_cast<std::size_t>(g.nx) * g.ny * g.nz;
  auto linear = [&](int i, int j, int k) {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(g.nx) * (static_cast<std::size_t>(j) +
                                             static_cast<std::size_t>(g.ny) * k);
  };
  auto position = [&](int i, int j, int k) {
    return g.origin + Vec3{i * g.spacing, j * g.spacing, k * g.spacing};
  };

  constexpr std::uint32_t kDropped = 0xffffffffu;
  std::vector<std::uint32_t> node(total, kDropped);
  std::vector<Vec3> positions;
  std::uint32_t kept = 0;
  for (int k = 0; k < g.nz; ++k) {
    for (int j = 0; j < g.ny; ++j) {
      for (int i = 0; i < g.nx; ++i) {
        const Vec3 p = position(i, j, k);
        if (!keep(p)) continue;
        node[linear(i, j, k)] = kept++;
        positions.push_back(p);
      }
    }
  }

  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  pairs.reserve(static_cast<std::size_t>(kept) * 13);
  for (int k = 0; k < g.nz; ++k) {
    for (int j = 0; j < g.ny; ++j) {
      for (int i = 0; i < g.nx; ++i) {
        const std::uint32_t a = node[linear(i, j, k)];
        if (a == kDropped) continue;
        for (const auto& o : kForwardOffsets) {
          const int ii = i + o[0], jj = j + o[1], kk = k + o[2];
          if (ii < 0 || jj < 0 || kk < 0 || ii >= g.nx || jj >= g.ny || kk >= g.nz) continue;
          const std::uint32_t b = node[linear(ii, jj, kk)];
          if (b != kDropped) pairs.emplace_back(a, b);
        }
      }
    }
  }

  std::vector<Real> node_mass(kept, 0.0);
  std::vector<Real> lengths(pairs.size());
  for (std::size_t s = 0; s < pairs.size(); ++s) {
    const auto [a, b] = pairs[s];
    lengths[s] = norm(positions[b] - positions[a]);
    const Real half = half_bar_mass(g.material, lengths[s], g.diameter);
    node_mass[a] += half;
    node_mass[b] += half;
  }

  Body body;
  body.masses.reserve(kept);
  body.springs.reserve(pairs.size());
  bool clamped = false;
  for (std::uint32_t n = 0; n < kept; ++n) {
    Mass m;
    m.pos = positions[n];
    m.m = node_mass[n];
    if (!(m.m > 0.0)) {
      m.m = kMinimumNodeMass;
      clamped = true;
    }
    body.masses.push_back(store.create_mass(std::move(m)));
  }
  if (clamped) log_warning("lattice node without bar volume given the minimum node mass");

  for (std::size_t s = 0; s < pairs.size(); ++s) {
    Spring sp;
    sp.m1 = body.masses[pairs[s].first];
    sp.m2 = body.masses[pairs[s].second];
    sp.rest_length = lengths[s];
    sp.k = derive_spring_constant(g.material, g.diameter, lengths[s]);
    sp.diameter = g.diameter;
    sp.yield_stress = g.material.yield_stress;
    body.springs.push_back(store.create_spring(std::move(sp)));
  }
  return body;
}

// --- STL ------------------------------------------------------------------

float read_f32(const std::uint8_t* p) noexcept {
  std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                       (static_cast<std::uint32_t>(p[2]) << 16) |
                       (static_cast<std::uint32_t>(p[3]) << 24);
  float f;
  std::memcpy(&f, &bits, sizeof f);
  return f;
}

std::uint32_t read_u32(const std::uint8_t* p) noexcept {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, Real v) {
  const float f = static_cast<float>(v);
  std::uint32_t bits;
  std::memcpy(&bits, &f, sizeof bits);
  put_u32(out, bits);
}

bool looks_ascii(std::span<const std::uint8_t> bytes) {
  static constexpr char kSolid[] = "solid";
  std::size_t i = 0;
  while (i < bytes.size() && std::isspace(bytes[i])) ++i;
  if (bytes.size() - i < 5 || std::memcmp(bytes.data() + i, kSolid, 5) != 0) return false;
  const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  return text.find("facet") != std::string_view::npos || text.find("endsolid") != std::string_view::npos;
}

TriMesh parse_ascii_stl(std::span<const std::uint8_t> bytes) {
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  TriMesh mesh;
  std::string line;
  std::size_t line_no = 0;
  std::vector<Vec3> verts;
  bool in_facet = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    if (word == "facet") {
      if (in_facet) throw ParseError("nested facet in ASCII STL", line_no);
      in_facet = true;
      verts.clear();
    } else if (word == "vertex") {
      if (!in_facet) throw ParseError("vertex outside facet in ASCII STL", line_no);
      Vec3 v;
      if (!(ls >> v.x >> v.y >> v.z)) throw ParseError("malformed vertex in ASCII STL", line_no);
      verts.push_back(v);
    } else if (word == "endfacet") {
      if (!in_facet || verts.size() != 3) {
        throw ParseError("facet without exactly three vertices in ASCII STL", line_no);
      }
      mesh.triangles.push_back({verts[0], verts[1], verts[2]});
      in_facet = false;
    } else if (word == "solid" || word == "outer" || word == "endloop" || word == "endsolid") {
      continue;
    } else {
      throw ParseError("unexpected token '" + word + "' in ASCII STL", line_no);
    }
  }
  if (in_facet) throw ParseError("unterminated facet in ASCII STL", line_no);
  if (mesh.triangles.empty()) throw ParseError("ASCII STL contains no facets", line_no);
  mesh.update_bounds();
  return mesh;
}

// --- inside test ------------------------------------------------------------

Vec3 closest_point_on_triangle(const Vec3& p, const Triangle& t) noexcept {
  const Vec3 ab = t.v1 - t.v0, ac = t.v2 - t.v0, ap = p - t.v0;
  const Real d1 = dot(ab, ap), d2 = dot(ac, ap);
  if (d1 <= 0.0 && d2 <= 0.0) return t.v0;
  const Vec3 bp = p - t.v1;
  const Real d3 = dot(ab, bp), d4 = dot(ac, bp);
  if (d3 >= 0.0 && d4 <= d3) return t.v1;
  const Real vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return t.v0 + ab * (d1 / (d1 - d3));
  const Vec3 cp = p - t.v2;
  const Real d5 = dot(ab, cp), d6 = dot(ac, cp);
  if (d6 >= 0.0 && d5 <= d6) return t.v2;
  const Real vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return t.v0 + ac * (d2 / (d2 - d6));
  const Real va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return t.v1 + (t.v2 - t.v1) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
  }
  const Real denom = 1.0 / (va + vb + vc);
  return t.v0 + ab * (vb * denom) + ac * (vc * denom);
}

enum class RayHit { Miss, Hit, Grazing };

RayHit intersect(const Vec3& origin, const Vec3& dir, const Triangle& t) noexcept {
  constexpr Real kParallel = 1e-14;
  constexpr Real kEdge = 1e-10;
  const Vec3 e1 = t.v1 - t.v0, e2 = t.v2 - t.v0;
  const Vec3 pv = cross(dir, e2);
  const Real det = dot(e1, pv);
  const Real scale = norm(e1) * norm(e2);
  if (std::abs(det) <= kParallel * scale) return RayHit::Miss;
  const Real inv = 1.0 / det;
  const Vec3 tv = origin - t.v0;
  const Real u = dot(tv, pv) * inv;
  if (u < -kEdge || u > 1.0 + kEdge) return RayHit::Miss;
  const Vec3 qv = cross(tv, e1);
  const Real v = dot(dir, qv) * inv;
  if (v < -kEdge || u + v > 1.0 + kEdge) return RayHit::Miss;
  const Real dist = dot(e2, qv) * inv;
  if (dist <= 0.0) return RayHit::Miss;
  if (u < kEdge || v < kEdge || u + v > 1.0 - kEdge) return RayHit::Grazing;
  return RayHit::Hit;
}

class InsideTester {
 public:
  explicit InsideTester(const TriMesh& mesh) : mesh_(mesh) {
    const Real diag = mesh.diagonal();
    surface_eps_ = 1e-9 * (diag > 0.0 ? diag : 1.0);
    bounds_.reserve(mesh.triangles.size());
    for (const auto& t : mesh.triangles) {
      bounds_.push_back({component_min(component_min(t.v0, t.v1), t.v2),
                         component_max(component_max(t.v0, t.v1), t.v2)});
    }
    // Rays travel almost exactly along +x; this bounds their drift in y and z
    // across the whole mesh.
    drift_ = 1e-3 * (diag > 0.0 ? diag : 1.0);
  }

  bool inside(const Vec3& p) const {
    for (std::size_t i = 0; i < bounds_.size(); ++i) {
      const auto& [lo, hi] = bounds_[i];
      if (p.x < lo.x - surface_eps_ || p.x > hi.x + surface_eps_ || p.y < lo.y - surface_eps_ ||
          p.y > hi.y + surface_eps_ || p.z < lo.z - surface_eps_ || p.z > hi.z + surface_eps_) {
        continue;
      }
      if (norm(closest_point_on_triangle(p, mesh_.triangles[i]) - p) <= surface_eps_) return true;
    }
    static const Vec3 kPrimary = *normalize(Vec3{1.0, 1e-4, 2e-4});
    static const Vec3 kFallback = *normalize(Vec3{1.0, -3.1e-4, 1.3e-4});
    bool grazing = false;
    const bool odd = parity(p, kPrimary, grazing);
    if (!grazing) return odd;
    return parity(p, kFallback, grazing);
  }

 private:
  bool parity(const Vec3& p, const Vec3& dir, bool& grazing) const {
    grazing = false;
    std::size_t crossings = 0;
    for (std::size_t i = 0; i < bounds_.size(); ++i) {
      const auto& [lo, hi] = bounds_[i];
      if (hi.x < p.x || hi.y < p.y - drift_ || lo.y > p.y + drift_ || hi.z < p.z - drift_ ||
          lo.z > p.z + drift_) {
        continue;
      }
      switch (intersect(p, dir, mesh_.triangles[i])) {
        case RayHit::Miss: break;
        case RayHit::Hit: ++crossings; break;
        case RayHit::Grazing:
          ++crossings;
          grazing = true;
          break;
      }
    }
    return (crossings % 2) == 1;
  }

  const TriMesh& mesh_;
  std::vector<std::pair<Vec3, Vec3>> bounds_;
  Real surface_eps_ = 0.0;
  Real drift_ = 0.0;
};

}  // namespace

void LatticeSpec::validate() const {
  if (nx < 1 || ny < 1 || nz < 1) throw ValidationError("lattice counts must be >= 1");
  if (!(spacing > 0.0)) throw ValidationError("lattice spacing must be positive");
  if (!(diameter >= 0.0)) throw ValidationError("spring diameter must be non-negative");
  if (!is_finite(corner)) throw ValidationError("lattice corner must be finite");
  material.validate();
}

Real derive_spring_constant(const Material& material, Real diameter, Real rest_length) {
  if (!(rest_length > 0.0)) throw ValidationError("rest length must be positive");
  if (!(diameter >= 0.0)) throw ValidationError("diameter must be non-negative");
  material.validate();
  return material.youngs_modulus * cross_section(diameter) / rest_length;
}

Real derive_mass(const Material& material, std::span<const Bar> bars) {
  if (!(material.density > 0.0)) throw ValidationError("density must be positive");
  Real m = 0.0;
  for (const Bar& b : bars) m += half_bar_mass(material, b.length, b.diameter);
  return m > 0.0 ? m : kMinimumNodeMass;
}

std::uint64_t lattice_spring_count(std::uint64_t nx, std::uint64_t ny, std::uint64_t nz) noexcept {
  if (nx == 0 || ny == 0 || nz == 0) return 0;
  const std::uint64_t ex = nx - 1, ey = ny - 1, ez = nz - 1;
  const std::uint64_t axis = ex * ny * nz + nx * ey * nz + nx * ny * ez;
  const std::uint64_t face = 2 * (ex * ey * nz + ex * ny * ez + nx * ey * ez);
  const std::uint64_t body = 4 * ex * ey * ez;
  return axis + face + body;
}

Body build_lattice(const LatticeSpec& spec, ObjectStore& store) {
  spec.validate();
  const GridSpec g{spec.corner, spec.nx, spec.ny, spec.nz, spec.spacing, spec.material,
                   spec.diameter};
  return build_grid(g, [](const Vec3&) { return true; }, store);
}

void TriMesh::update_bounds() noexcept {
  if (triangles.empty()) {
    lower = upper = {};
    return;
  }
  lower = upper = triangles.front().v0;
  for (const auto& t : triangles) {
    for (const Vec3* v : {&t.v0, &t.v1, &t.v2}) {
      lower = component_min(lower, *v);
      upper = component_max(upper, *v);
    }
  }
}

TriMesh parse_stl(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw ParseError("STL file is empty", 0);
  if (bytes.size() < 84) {
    if (looks_ascii(bytes)) return parse_ascii_stl(bytes);
    throw ParseError("STL file shorter than the 84-byte binary header", bytes.size());
  }
  const std::uint32_t count = read_u32(bytes.data() + 80);
  const std::uint64_t expected = 84 + 50ull * count;
  if (bytes.size() != expected) {
    if (looks_ascii(bytes)) return parse_ascii_stl(bytes);
    if (bytes.size() < expected) {
      const std::size_t complete = (bytes.size() - 84) / 50;
      throw ParseError("truncated binary STL: header declares " + std::to_string(count) +
                           " triangles, data ends inside triangle " + std::to_string(complete),
                       84 + complete * 50);
    }
    throw ParseError("binary STL has " + std::to_string(bytes.size() - expected) +
                         " bytes beyond the declared " + std::to_string(count) + " triangles",
                     expected);
  }
  TriMesh mesh;
  mesh.triangles.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint8_t* f = bytes.data() + 84 + 50ull * i + 12;  // skip stored normal
    Triangle t;
    Vec3* verts[3] = {&t.v0, &t.v1, &t.v2};
    for (int v = 0; v < 3; ++v) {
      *verts[v] = {read_f32(f + 12 * v), read_f32(f + 12 * v + 4), read_f32(f + 12 * v + 8)};
      if (!is_finite(*verts[v])) {
        throw ParseError("non-finite vertex in binary STL", 84 + 50ull * i + 12 + 12 * v);
      }
    }
    mesh.triangles.push_back(t);
  }
  mesh.update_bounds();
  return mesh;
}

TriMesh load_stl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open STL file " + path.string(), 0);
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return parse_stl(bytes);
}

std::vector<std::uint8_t> encode_stl(const TriMesh& mesh) {
  std::vector<std::uint8_t> out(80, 0);
  const char* tag = "springmass binary STL";
  std::memcpy(out.data(), tag, std::strlen(tag));
  out.reserve(84 + 50 * mesh.triangles.size());
  put_u32(out, static_cast<std::uint32_t>(mesh.triangles.size()));
  for (const auto& t : mesh.triangles) {
    const Vec3 n = normalize(cross(t.v1 - t.v0, t.v2 - t.v0)).value_or(Vec3{});
    for (const Vec3* v : {&n, &t.v0, &t.v1, &t.v2}) {
      put_f32(out, v->x);
      put_f32(out, v->y);
      put_f32(out, v->z);
    }
    out.push_back(0);
    out.push_back(0);
  }
  return out;
}

void write_stl(const std::filesystem::path& path, const TriMesh& mesh) {
  const auto bytes = encode_stl(mesh);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write STL file " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

TriMesh make_box_mesh(const Vec3& lo, const Vec3& hi) {
  const std::array<Vec3, 8> c{{{lo.x, lo.y, lo.z},
                               {hi.x, lo.y, lo.z},
                               {hi.x, hi.y, lo.z},
                               {lo.x, hi.y, lo.z},
                               {lo.x, lo.y, hi.z},
                               {hi.x, lo.y, hi.z},
                               {hi.x, hi.y, hi.z},
                               {lo.x, hi.y, hi.z}}};
  static constexpr int kFaces[12][3] = {{0, 2, 1}, {0, 3, 2}, {4, 5, 6}, {4, 6, 7},
                                        {0, 1, 5}, {0, 5, 4}, {1, 2, 6}, {1, 6, 5},
                                        {2, 3, 7}, {2, 7, 6}, {3, 0, 4}, {3, 4, 7}};
  TriMesh mesh;
  for (const auto& f : kFaces) mesh.triangles.push_back({c[f[0]], c[f[1]], c[f[2]]});
  mesh.update_bounds();
  return mesh;
}

TriMesh make_icosphere(const Vec3& center, Real radius, int subdivisions) {
  if (!(radius > 0.0)) throw ValidationError("sphere radius must be positive");
  if (subdivisions < 0 || subdivisions > 7) throw ValidationError("subdivisions must be in [0, 7]");
  const Real phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {{-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
                             {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
                             {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
  for (auto& v : verts) v = *normalize(v);
  std::vector<std::array<std::uint32_t, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoint;
    auto mid = [&](std::uint32_t a, std::uint32_t b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      verts.push_back(*normalize((verts[a] + verts[b]) * 0.5));
      const auto idx = static_cast<std::uint32_t>(verts.size() - 1);
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<std::uint32_t, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const std::uint32_t a = mid(f[0], f[1]), b = mid(f[1], f[2]), c = mid(f[2], f[0]);
      next.push_back({f[0], a, c});
      next.push_back({f[1], b, a});
      next.push_back({f[2], c, b});
      next.push_back({a, b, c});
    }
    faces = std::move(next);
  }
  TriMesh mesh;
  mesh.triangles.reserve(faces.size());
  for (const auto& f : faces) {
    mesh.triangles.push_back({center + verts[f[0]] * radius, center + verts[f[1]] * radius,
                              center + verts[f[2]] * radius});
  }
  mesh.update_bounds();
  return mesh;
}

bool point_in_mesh(const Vec3& p, const TriMesh& mesh) {
  if (mesh.triangles.empty()) throw ValidationError("point_in_mesh needs a non-empty mesh");
  return InsideTester(mesh).inside(p);
}

Body fill_mesh(const TriMesh& mesh, const FillOptions& options, ObjectStore& store) {
  if (mesh.triangles.empty()) throw ValidationError("cannot fill an empty mesh");
  if (!(options.spacing > 0.0)) throw ValidationError("fill spacing must be positive");
  options.material.validate();
  const Vec3 extent = mesh.upper - mesh.lower;
  const Real largest = std::max({extent.x, extent.y, extent.z});
  if (options.spacing > largest) {
    throw ValidationError("fill spacing exceeds the mesh bounding box extent");
  }
  auto count = [&](Real e) { return static_cast<int>(std::floor(e / options.spacing + 1e-9)) + 1; };
  const GridSpec g{mesh.lower,        count(extent.x),  count(extent.y), count(extent.z),
                   options.spacing,   options.material, options.diameter};
  const InsideTester tester(mesh);
  // Classify first so an empty result leaves the store untouched.
  bool any = false;
  for (int k = 0; k < g.nz && !any; ++k) {
    for (int j = 0; j < g.ny && !any; ++j) {
      for (int i = 0; i < g.nx && !any; ++i) {
        any = tester.inside(g.origin + Vec3{i * g.spacing, j * g.spacing, k * g.spacing});
      }
    }
  }
  if (!any) throw ValidationError("mesh too small for spacing: no interior grid points");
  return build_grid(g, [&](const Vec3& p) { return tester.inside(p); }, store);
}

}  // namespace springmass
