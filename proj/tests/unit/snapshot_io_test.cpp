#include "springmass/snapshot_io.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"

namespace springmass {
namespace {

Snapshot random_snapshot(int n, unsigned seed) {
  ObjectStore store;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> u(-1e3, 1e3);
  for (int i = 0; i < n; ++i) {
    Mass m;
    m.pos = {u(rng), u(rng) * 1e-9, u(rng) * 1e12};
    m.vel = {u(rng) / 3.0, 0.1, -0.0};
    store.create_mass(m);
  }
  return capture_snapshot(store, 0.0, 0);
}

TEST(SnapshotIoTest, HeaderAndRowCount) {
  const Snapshot s = random_snapshot(3, 1);
  std::ostringstream out;
  write_snapshot_csv(out, s);
  std::istringstream lines(out.str());
  std::string header;
  std::getline(lines, header);
  EXPECT_EQ(header, "id,x,y,z,vx,vy,vz");
  int rows = 0;
  for (std::string l; std::getline(lines, l);) ++rows;
  EXPECT_EQ(rows, 3);
}

TEST(SnapshotIoTest, RoundTripIsExact) {
  const Snapshot s = random_snapshot(200, 2);
  std::stringstream io;
  write_snapshot_csv(io, s);
  const auto rows = read_snapshot_csv(io);
  ASSERT_EQ(rows.size(), s.masses.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].id, s.masses[i].handle.slot);
    EXPECT_EQ(rows[i].pos, s.masses[i].state.pos);
    EXPECT_EQ(rows[i].vel, s.masses[i].state.vel);
  }
}

TEST(SnapshotIoTest, DeadMassesAreOmitted) {
  ObjectStore store;
  const MassHandle a = store.create_mass(Mass{});
  store.create_mass(Mass{});
  store.delete_mass(a);
  std::ostringstream out;
  write_snapshot_csv(out, capture_snapshot(store, 0.0, 0));
  EXPECT_EQ(out.str(), "id,x,y,z,vx,vy,vz\n1,0,0,0,0,0,0\n");
}

TEST(SnapshotIoTest, ParseErrorsCarryLineNumber) {
  std::istringstream bad_header("id,x,y\n");
  EXPECT_THROW(read_snapshot_csv(bad_header), ParseError);
  std::istringstream bad_row("id,x,y,z,vx,vy,vz\n0,1,2,3,4,5,6\n1,1,2,zz,4,5,6\n");
  try {
    read_snapshot_csv(bad_row);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.location(), 3u);
  }
  std::istringstream short_row("id,x,y,z,vx,vy,vz\n0,1,2,3\n");
  EXPECT_THROW(read_snapshot_csv(short_row), ParseError);
}

TEST(SnapshotIoTest, ApplyRowsOverwritesState) {
  ObjectStore store;
  const MassHandle a = store.create_mass(Mass{});
  apply_snapshot_rows(store, {{a.slot, {1, 2, 3}, {4, 5, 6}}});
  EXPECT_EQ(store.mass(a).pos, (Vec3{1, 2, 3}));
  EXPECT_EQ(store.mass(a).vel, (Vec3{4, 5, 6}));
  EXPECT_THROW(apply_snapshot_rows(store, {{7, {}, {}}}), Error);
}

TEST(SnapshotIoTest, FileRoundTrip) {
  const auto dir = testing_support::scratch_dir("snapio");
  const Snapshot s = random_snapshot(20, 3);
  write_snapshot_csv(dir / "a.csv", s);
  const auto rows = read_snapshot_csv(dir / "a.csv");
  EXPECT_EQ(rows.size(), 20u);
  EXPECT_THROW(read_snapshot_csv(dir / "missing.csv"), Error);
}

}  // namespace
}  // namespace springmass
