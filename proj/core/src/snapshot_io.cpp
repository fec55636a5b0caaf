#include "springmass/snapshot_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "springmass/errors.hpp"

namespace springmass {
namespace {

constexpr const char* kHeader = "id,x,y,z,vx,vy,vz";

void append_real(std::string& line, Real v) {
  char buf[40];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  line.append(buf, static_cast<std::size_t>(n));
}

Real parse_real(std::string_view field, std::size_t line_no) {
  const std::string owned(field);
  char* end = nullptr;
  const Real v = std::strtod(owned.c_str(), &end);
  if (owned.empty() || end != owned.c_str() + owned.size()) {
    throw ParseError("malformed number '" + owned + "' in snapshot", line_no);
  }
  return v;
}

}  // namespace

void write_snapshot_csv(std::ostream& out, const Snapshot& snap) {
  out << kHeader << '\n';
  std::string line;
  for (const auto& r : snap.masses) {
    if (!r.alive) continue;
    line.clear();
    line += std::to_string(r.handle.slot);
    for (Real v : {r.state.pos.x, r.state.pos.y, r.state.pos.z, r.state.vel.x, r.state.vel.y,
                   r.state.vel.z}) {
      line += ',';
      append_real(line, v);
    }
    line += '\n';
    out << line;
  }
}

void write_snapshot_csv(const std::filesystem::path& path, const Snapshot& snap) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write snapshot file " + path.string());
  write_snapshot_csv(out, snap);
}

std::vector<SnapshotRow> read_snapshot_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line != kHeader) {
    throw ParseError("snapshot must start with header '" + std::string(kHeader) + "'", 1);
  }
  std::vector<SnapshotRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() != 7) throw ParseError("snapshot row must have 7 fields", line_no);
    SnapshotRow row;
    const auto id = fields[0];
    const auto [ptr, ec] = std::from_chars(id.data(), id.data() + id.size(), row.id);
    if (ec != std::errc{} || ptr != id.data() + id.size()) {
      throw ParseError("malformed id in snapshot", line_no);
    }
    row.pos = {parse_real(fields[1], line_no), parse_real(fields[2], line_no),
               parse_real(fields[3], line_no)};
    row.vel = {parse_real(fields[4], line_no), parse_real(fields[5], line_no),
               parse_real(fields[6], line_no)};
    rows.push_back(row);
  }
  return rows;
}

std::vector<SnapshotRow> read_snapshot_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open snapshot file " + path.string(), 0);
  return read_snapshot_csv(in);
}

void apply_snapshot_rows(ObjectStore& store, const std::vector<SnapshotRow>& rows) {
  for (const auto& row : rows) {
    if (row.id >= store.masses().slot_count()) {
      throw ValidationError("snapshot id " + std::to_string(row.id) + " has no mass slot");
    }
    const MassHandle h = store.masses().handle_at(row.id);
    store.set(h, MassField::Position, row.pos);
    store.set(h, MassField::Velocity, row.vel);
  }
}

}  // namespace springmass
