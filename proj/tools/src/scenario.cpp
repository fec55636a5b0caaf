#include "springmass_tools/scenario.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>

#include "springmass/builder.hpp"
#include "springmass/errors.hpp"
#include "springmass/snapshot_io.hpp"

namespace springmass::tools {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
  throw ParseError("line " + std::to_string(line) + ": " + msg, line);
}

Real parse_real(const std::string& text, std::size_t line) {
  if (text.empty()) fail(line, "expected a number");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size() || errno == ERANGE) {
    fail(line, "not a number: '" + text + "'");
  }
  if (!std::isfinite(v)) fail(line, "number must be finite: '" + text + "'");
  return v;
}

long parse_int(const std::string& text, std::size_t line) {
  errno = 0;
  char* end = nullptr;
  const long v = std::strtol(text.c_str(), &end, 10);
  if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE) {
    fail(line, "not an integer: '" + text + "'");
  }
  return v;
}

std::vector<std::string> split_list(const std::string& text) {
  std::string copy = text;
  std::replace(copy.begin(), copy.end(), ',', ' ');
  std::istringstream in(copy);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

Vec3 parse_vec(const std::string& text, std::size_t line) {
  const auto parts = split_list(text);
  if (parts.size() != 3) fail(line, "expected three numbers, got '" + text + "'");
  return {parse_real(parts[0], line), parse_real(parts[1], line), parse_real(parts[2], line)};
}

bool parse_bool(const std::string& text, std::size_t line) {
  if (text == "true" || text == "yes" || text == "1") return true;
  if (text == "false" || text == "no" || text == "0") return false;
  fail(line, "expected true or false, got '" + text + "'");
}

int positive_int(const std::string& text, std::size_t line) {
  const long v = parse_int(text, line);
  if (v < 1 || v > 1'000'000) fail(line, "expected a positive integer, got '" + text + "'");
  return static_cast<int>(v);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& text) {
  std::filesystem::path p(text);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p;
}

using Setter = std::function<void(const std::string& value, std::size_t line)>;
using KeyTable = std::map<std::string, Setter, std::less<>>;

KeyTable body_keys(BodySpec& b, const std::filesystem::path& base) {
  return {
      {"kind",
       [&b](const std::string& v, std::size_t line) {
         if (v == "lattice") {
           b.kind = BodyKind::Lattice;
         } else if (v == "stl") {
           b.kind = BodyKind::StlFill;
         } else if (v == "cube_grid") {
           b.kind = BodyKind::CubeGrid;
         } else {
           fail(line, "body kind must be lattice, stl or cube_grid");
         }
       }},
      {"corner", [&b](const std::string& v, std::size_t l) { b.corner = parse_vec(v, l); }},
      {"size",
       [&b](const std::string& v, std::size_t line) {
         const auto parts = split_list(v);
         if (parts.size() != 3) fail(line, "size needs three node counts");
         for (int i = 0; i < 3; ++i) b.size[i] = positive_int(parts[i], line);
       }},
      {"spacing", [&b](const std::string& v, std::size_t l) { b.spacing = parse_real(v, l); }},
      {"diameter", [&b](const std::string& v, std::size_t l) { b.diameter = parse_real(v, l); }},
      {"youngs_modulus",
       [&b](const std::string& v, std::size_t l) { b.material.youngs_modulus = parse_real(v, l); }},
      {"density",
       [&b](const std::string& v, std::size_t l) { b.material.density = parse_real(v, l); }},
      {"yield_stress",
       [&b](const std::string& v, std::size_t l) { b.material.yield_stress = parse_real(v, l); }},
      {"mesh", [&b, base](const std::string& v, std::size_t) { b.mesh = resolve(base, v); }},
      {"cubes", [&b](const std::string& v, std::size_t l) { b.cubes = positive_int(v, l); }},
      {"gap", [&b](const std::string& v, std::size_t l) { b.gap = parse_real(v, l); }},
      {"connective_diameter",
       [&b](const std::string& v, std::size_t l) { b.connective_diameter = parse_real(v, l); }},
      {"connective_yield_stress",
       [&b](const std::string& v, std::size_t l) { b.connective_yield_stress = parse_real(v, l); }},
      {"fix",
       [&b](const std::string& v, std::size_t line) {
         if (v == "none") {
           b.fix_x_min = false;
         } else if (v == "x_min") {
           b.fix_x_min = true;
         } else {
           fail(line, "fix must be none or x_min");
         }
       }},
      {"load", [&b](const std::string& v, std::size_t l) { b.load = parse_vec(v, l); }},
      {"velocity", [&b](const std::string& v, std::size_t l) { b.velocity = parse_vec(v, l); }},
      {"swarm_gap", [&b](const std::string& v, std::size_t l) { b.swarm_gap = parse_real(v, l); }},
  };
}

KeyTable plane_keys(ContactPlane& p) {
  return {
      {"normal", [&p](const std::string& v, std::size_t l) { p.normal = parse_vec(v, l); }},
      {"offset", [&p](const std::string& v, std::size_t l) { p.offset = parse_real(v, l); }},
      {"stiffness", [&p](const std::string& v, std::size_t l) { p.stiffness = parse_real(v, l); }},
      {"mu_static", [&p](const std::string& v, std::size_t l) { p.mu_static = parse_real(v, l); }},
      {"mu_kinetic",
       [&p](const std::string& v, std::size_t l) { p.mu_kinetic = parse_real(v, l); }},
  };
}

KeyTable ball_keys(ContactBall& b) {
  return {
      {"center", [&b](const std::string& v, std::size_t l) { b.center = parse_vec(v, l); }},
      {"radius", [&b](const std::string& v, std::size_t l) { b.radius = parse_real(v, l); }},
      {"stiffness", [&b](const std::string& v, std::size_t l) { b.stiffness = parse_real(v, l); }},
  };
}

Backend parse_backend(const std::string& v, std::size_t line) {
  if (v == "serial") return Backend::Serial;
  if (v == "parallel") return Backend::Parallel;
  fail(line, "backend must be serial or parallel");
}

Accumulation parse_accumulation(const std::string& v, std::size_t line) {
  if (v == "linearizable") return Accumulation::Linearizable;
  if (v == "slotted") return Accumulation::Slotted;
  fail(line, "accumulation must be linearizable or slotted");
}

}  // namespace

const char* to_string(BodyKind kind) noexcept {
  switch (kind) {
    case BodyKind::Lattice: return "lattice";
    case BodyKind::StlFill: return "stl";
    case BodyKind::CubeGrid: return "cube_grid";
  }
  return "?";
}

void Scenario::validate() const {
  if (bodies.empty()) throw ValidationError("scenario defines no [body]");
  for (const BodySpec& b : bodies) {
    b.material.validate();
    if (!(b.spacing > 0.0)) throw ValidationError("body spacing must be positive");
    if (!(b.diameter >= 0.0)) throw ValidationError("body diameter must be non-negative");
    if (b.kind == BodyKind::StlFill && b.mesh.empty()) {
      throw ValidationError("stl body needs a mesh path");
    }
    if (b.kind == BodyKind::CubeGrid) {
      if (!(b.gap > 0.0)) throw ValidationError("cube_grid gap must be positive");
      if (!(b.connective_diameter > 0.0)) {
        throw ValidationError("connective_diameter must be positive");
      }
    }
    if (!(b.swarm_gap >= 0.0)) throw ValidationError("swarm_gap must be non-negative");
  }
  environment.validate();
  run.step.validate();
  if (!(run.duration >= 0.0)) throw ValidationError("duration must be non-negative");
  if (!(run.snapshot_every >= 0.0)) throw ValidationError("snapshot_every must be non-negative");
  if (topology.epochs < 1) throw ValidationError("topology epochs must be >= 1");
  if (!(topology.interval > 0.0)) throw ValidationError("topology interval must be positive");
  if (actuation.enabled) {
    ActuationParams p{actuation.worm.expansion, actuation.worm.omega, 0.0, actuation.worm.period,
                      actuation.worm.mode, nullptr};
    p.validate();
  }
}

Scenario parse_scenario(std::istream& in, const std::filesystem::path& base_dir) {
  Scenario sc;
  std::map<std::string, Setter, std::less<>> scenario_keys{
      {"name", [&sc](const std::string& v, std::size_t) { sc.name = v; }},
  };
  KeyTable env_keys{
      {"gravity",
       [&sc](const std::string& v, std::size_t l) { sc.environment.gravity = parse_vec(v, l); }},
      {"drag", [&sc](const std::string& v, std::size_t l) { sc.environment.drag = parse_real(v, l); }},
  };
  KeyTable act_keys{
      {"kind",
       [&sc](const std::string& v, std::size_t line) {
         if (v == "worm") {
           sc.actuation.enabled = true;
         } else if (v == "none") {
           sc.actuation.enabled = false;
         } else {
           fail(line, "actuation kind must be worm or none");
         }
       }},
      {"period",
       [&sc](const std::string& v, std::size_t l) { sc.actuation.worm.period = parse_real(v, l); }},
      {"omega",
       [&sc](const std::string& v, std::size_t l) { sc.actuation.worm.omega = parse_real(v, l); }},
      {"expansion",
       [&sc](const std::string& v, std::size_t l) {
         sc.actuation.worm.expansion = parse_real(v, l);
       }},
      {"mode",
       [&sc](const std::string& v, std::size_t line) {
         if (v == "wrapped") {
           sc.actuation.worm.mode = WaveMode::Wrapped;
         } else if (v == "quiescent") {
           sc.actuation.worm.mode = WaveMode::QuiescentBeforeOffset;
         } else {
           fail(line, "actuation mode must be wrapped or quiescent");
         }
       }},
  };
  KeyTable run_keys{
      {"dt", [&sc](const std::string& v, std::size_t l) { sc.run.step.dt = parse_real(v, l); }},
      {"duration",
       [&sc](const std::string& v, std::size_t l) { sc.run.duration = parse_real(v, l); }},
      {"backend",
       [&sc](const std::string& v, std::size_t l) { sc.run.step.backend = parse_backend(v, l); }},
      {"accumulation",
       [&sc](const std::string& v, std::size_t l) {
         sc.run.step.accumulation = parse_accumulation(v, l);
       }},
      {"workers",
       [&sc](const std::string& v, std::size_t l) {
         sc.run.step.workers = static_cast<unsigned>(positive_int(v, l));
       }},
      {"stick_velocity",
       [&sc](const std::string& v, std::size_t l) { sc.run.step.stick_velocity = parse_real(v, l); }},
      {"snapshot_every",
       [&sc](const std::string& v, std::size_t l) { sc.run.snapshot_every = parse_real(v, l); }},
      {"initial_state",
       [&sc, base_dir](const std::string& v, std::size_t) {
         sc.run.initial_state = resolve(base_dir, v);
       }},
  };
  KeyTable topo_keys{
      {"epochs",
       [&sc](const std::string& v, std::size_t l) { sc.topology.epochs = positive_int(v, l); }},
      {"interval",
       [&sc](const std::string& v, std::size_t l) { sc.topology.interval = parse_real(v, l); }},
  };
  KeyTable out_keys{
      {"dir", [&sc](const std::string& v, std::size_t) { sc.output.dir = v; }},
      {"snapshots",
       [&sc](const std::string& v, std::size_t l) { sc.output.snapshots = parse_bool(v, l); }},
      {"energy",
       [&sc](const std::string& v, std::size_t l) { sc.output.energy = parse_bool(v, l); }},
  };

  // Repeatable sections get a fresh table bound to a new element.
  KeyTable current = scenario_keys;
  std::string section = "scenario";
  std::map<std::string, bool, std::less<>> seen;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section == "body") {
        sc.bodies.emplace_back();
        current = body_keys(sc.bodies.back(), base_dir);
      } else if (section == "plane") {
        sc.environment.contacts.emplace_back(ContactPlane{});
        current = plane_keys(std::get<ContactPlane>(sc.environment.contacts.back()));
      } else if (section == "ball") {
        sc.environment.contacts.emplace_back(ContactBall{});
        current = ball_keys(std::get<ContactBall>(sc.environment.contacts.back()));
      } else {
        if (seen[section]) fail(line_no, "section [" + section + "] appears twice");
        seen[section] = true;
        if (section == "scenario") {
          current = scenario_keys;
        } else if (section == "environment") {
          current = env_keys;
        } else if (section == "actuation") {
          current = act_keys;
        } else if (section == "run") {
          current = run_keys;
        } else if (section == "topology") {
          current = topo_keys;
        } else if (section == "output") {
          current = out_keys;
        } else {
          fail(line_no, "unknown section [" + section + "]");
        }
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const auto it = current.find(key);
    if (it == current.end()) fail(line_no, "unknown key '" + key + "' in [" + section + "]");
    it->second(value, line_no);
  }
  sc.validate();
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file " + path.string(), 0);
  return parse_scenario(in, path.parent_path());
}

namespace {

std::uint64_t bytes_for(std::uint64_t masses, std::uint64_t springs) {
  // Store slot, slotted-accumulation scratch and one retained snapshot each.
  const std::uint64_t per_mass = 3 * (sizeof(Mass) + sizeof(SlotMeta)) + 32;
  const std::uint64_t per_spring = 3 * (sizeof(Spring) + sizeof(SlotMeta)) + 2 * sizeof(Vec3) + 16;
  return masses * per_mass + springs * per_spring;
}

std::uint64_t box_nodes(const std::array<int, 3>& n) {
  return std::uint64_t(n[0]) * std::uint64_t(n[1]) * std::uint64_t(n[2]);
}

void apply_boundary(const BodySpec& spec, const Body& body, ObjectStore& store, BuiltScene& out) {
  if (body.masses.empty()) return;
  Real lo = store.mass(body.masses.front()).origin.x;
  Real hi = lo;
  for (MassHandle h : body.masses) {
    const Real x = store.mass(h).origin.x;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  const Real eps = 1e-9 * spec.spacing;
  std::vector<MassHandle> tip;
  for (MassHandle h : body.masses) {
    Mass& m = store.mutable_mass(h);
    m.vel = spec.velocity;
    if (spec.fix_x_min && m.origin.x <= lo + eps) {
      m.fixed = true;
      m.vel = {};
      out.anchored.push_back(h);
    }
    if (m.origin.x >= hi - eps) tip.push_back(h);
  }
  if (spec.load == Vec3{}) return;
  const Vec3 share = spec.load / static_cast<Real>(tip.size());
  for (MassHandle h : tip) {
    store.mutable_mass(h).load = share;
    out.loaded.push_back(h);
  }
}

Body build_one(const BodySpec& spec, const Vec3& shift, ObjectStore& store) {
  if (spec.kind == BodyKind::StlFill) {
    TriMesh mesh = load_stl(spec.mesh);
    for (Triangle& t : mesh.triangles) {
      t.v0 += spec.corner + shift;
      t.v1 += spec.corner + shift;
      t.v2 += spec.corner + shift;
    }
    mesh.update_bounds();
    return fill_mesh(mesh, FillOptions{spec.spacing, spec.material, spec.diameter}, store);
  }
  LatticeSpec ls{spec.corner + shift, spec.size[0], spec.size[1], spec.size[2],
                 spec.spacing,        spec.material, spec.diameter};
  return build_lattice(ls, store);
}

// Facing nodes of neighbouring cubes, joined straight across the gap.
void join_cubes(const BodySpec& spec, const Body& left, const Body& right, ObjectStore& store,
                BuiltScene& out) {
  const int nx = spec.size[0];
  const int ny = spec.size[1];
  const int nz = spec.size[2];
  const Real k = derive_spring_constant(spec.material, spec.connective_diameter, spec.gap);
  const std::optional<Real> yield =
      spec.connective_yield_stress ? spec.connective_yield_stress : spec.material.yield_stress;
  for (int z = 0; z < nz; ++z) {
    for (int y = 0; y < ny; ++y) {
      // build_lattice orders nodes x-fastest.
      const std::size_t row = static_cast<std::size_t>(z * ny + y) * static_cast<std::size_t>(nx);
      Spring s;
      s.m1 = left.masses[row + static_cast<std::size_t>(nx - 1)];
      s.m2 = right.masses[row];
      s.rest_length = norm(store.mass(s.m2).pos - store.mass(s.m1).pos);
      s.k = k;
      s.diameter = spec.connective_diameter;
      s.yield_stress = yield;
      out.connective.push_back(store.create_spring(s));
    }
  }
}

}  // namespace

std::uint64_t estimate_scene_bytes(const Scenario& scenario, int copies) {
  std::uint64_t total = 0;
  for (const BodySpec& b : scenario.bodies) {
    const auto& n = b.size;
    std::uint64_t masses = box_nodes(n);
    std::uint64_t springs = lattice_spring_count(n[0], n[1], n[2]);
    std::uint64_t reps = static_cast<std::uint64_t>(copies);
    if (b.kind == BodyKind::StlFill) {
      // Bounding-box lattice is an upper bound on the filled one.
      const TriMesh mesh = load_stl(b.mesh);
      const Vec3 ext = mesh.upper - mesh.lower;
      const auto axis = [&](Real e) { return std::uint64_t(std::floor(e / b.spacing)) + 1; };
      masses = axis(ext.x) * axis(ext.y) * axis(ext.z);
      springs = lattice_spring_count(axis(ext.x), axis(ext.y), axis(ext.z));
    } else if (b.kind == BodyKind::CubeGrid) {
      reps = static_cast<std::uint64_t>(copies > 1 ? copies : b.cubes);
      springs += std::uint64_t(n[1]) * std::uint64_t(n[2]);
    }
    total += reps * bytes_for(masses, springs);
  }
  return total;
}

BuiltScene build_scene(const Scenario& scenario, ObjectStore& store, int copies) {
  if (copies < 1) throw ValidationError("copies must be >= 1");
  BuiltScene out;
  for (const BodySpec& spec : scenario.bodies) {
    if (spec.kind == BodyKind::CubeGrid) {
      const int cubes = copies > 1 ? copies : spec.cubes;
      const Real pitch = static_cast<Real>(spec.size[0] - 1) * spec.spacing + spec.gap;
      const std::size_t first = out.bodies.size();
      for (int i = 0; i < cubes; ++i) {
        out.bodies.push_back(build_one(spec, {pitch * i, 0.0, 0.0}, store));
        if (i > 0) join_cubes(spec, out.bodies[first + i - 1], out.bodies.back(), store, out);
      }
      // One traveling wave across the whole chain; connective springs stay
      // passive.
      Body chain;
      for (std::size_t i = first; i < out.bodies.size(); ++i) {
        apply_boundary(spec, out.bodies[i], store, out);
        const Body& b = out.bodies[i];
        chain.masses.insert(chain.masses.end(), b.masses.begin(), b.masses.end());
        chain.springs.insert(chain.springs.end(), b.springs.begin(), b.springs.end());
      }
      if (scenario.actuation.enabled) configure_worm(chain, store, scenario.actuation.worm);
      continue;
    }
    Real pitch_y = 0.0;
    for (int i = 0; i < copies; ++i) {
      Body body = build_one(spec, {0.0, pitch_y, 0.0}, store);
      if (body.masses.empty()) throw ValidationError("body produced no masses");
      Real hi = store.mass(body.masses.front()).pos.y;
      Real lo = hi;
      for (MassHandle h : body.masses) {
        hi = std::max(hi, store.mass(h).pos.y);
        lo = std::min(lo, store.mass(h).pos.y);
      }
      pitch_y += (hi - lo) + spec.swarm_gap;
      apply_boundary(spec, body, store, out);
      if (scenario.actuation.enabled) configure_worm(body, store, scenario.actuation.worm);
      out.bodies.push_back(std::move(body));
    }
  }
  if (!scenario.run.initial_state.empty()) {
    apply_snapshot_rows(store, read_snapshot_csv(scenario.run.initial_state));
  }
  return out;
}

}  // namespace springmass::tools
