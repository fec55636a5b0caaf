#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "springmass/control.hpp"

namespace springmass {

/// One row of a trajectory snapshot file.
struct SnapshotRow {
  std::uint32_t id = 0;  // mass slot index
  Vec3 pos;
  Vec3 vel;
};

/// CSV with header `id,x,y,z,vx,vy,vz`, one row per live mass in slot order,
/// every real printed with 17 significant digits so it parses back exactly.
void write_snapshot_csv(std::ostream& out, const Snapshot& snap);
void write_snapshot_csv(const std::filesystem::path& path, const Snapshot& snap);

std::vector<SnapshotRow> read_snapshot_csv(std::istream& in);
std::vector<SnapshotRow> read_snapshot_csv(const std::filesystem::path& path);

/// Overwrites position and velocity of the masses named by `rows`. Every id
/// must refer to a live slot.
void apply_snapshot_rows(ObjectStore& store, const std::vector<SnapshotRow>& rows);

}  // namespace springmass
