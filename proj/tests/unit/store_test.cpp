#include "springmass/store.hpp"

#include <gtest/gtest.h>

#include <map>
#include <random>

namespace springmass {
namespace {

Mass at(Real x) {
  Mass m;
  m.pos = {x, 0, 0};
  return m;
}

Spring between(MassHandle a, MassHandle b) {
  Spring s;
  s.m1 = a;
  s.m2 = b;
  s.k = 10.0;
  return s;
}

TEST(StoreTest, CreateAndRead) {
  ObjectStore store;
  const MassHandle h = store.create_mass(at(1.5));
  EXPECT_TRUE(store.alive(h));
  EXPECT_EQ(store.mass(h).pos.x, 1.5);
  EXPECT_EQ(store.mass_count(), 1u);
}

TEST(StoreTest, CreateValidates) {
  ObjectStore store;
  Mass bad;
  bad.m = 0.0;
  EXPECT_THROW(store.create_mass(bad), ValidationError);
  const MassHandle a = store.create_mass(at(0));
  EXPECT_THROW(store.create_spring(between(a, a)), ValidationError);
  EXPECT_THROW(store.create_spring(between(a, MassHandle{7, 0})), StaleHandleError);
}

TEST(StoreTest, DeletedHandleIsStaleButReadableUntilReuse) {
  ObjectStore store;
  const MassHandle h = store.create_mass(at(2.0));
  EXPECT_EQ(store.delete_mass(h), DeleteStatus::Deleted);
  EXPECT_FALSE(store.alive(h));
  EXPECT_THROW(store.mass(h), StaleHandleError);
  const auto r = store.read(h);
  ASSERT_NE(r.value, nullptr);
  EXPECT_TRUE(r.stale);
  EXPECT_EQ(r.value->pos.x, 2.0);
  EXPECT_EQ(std::get<Vec3>(store.get(h, MassField::Position)).x, 2.0);
  EXPECT_EQ(store.delete_mass(h), DeleteStatus::Stale);
}

TEST(StoreTest, ReuseBumpsGeneration) {
  ObjectStore store;
  const MassHandle old = store.create_mass(at(1));
  store.delete_mass(old);
  const MassHandle fresh = store.create_mass(at(2));
  EXPECT_EQ(fresh.slot, old.slot);
  EXPECT_NE(fresh.generation, old.generation);
  EXPECT_FALSE(store.alive(old));
  EXPECT_EQ(store.read(old).value, nullptr);
  EXPECT_THROW(store.set(old, MassField::Velocity, Vec3{1, 0, 0}), StaleHandleError);
  EXPECT_EQ(store.mass(fresh).pos.x, 2.0);
}

TEST(StoreTest, PinKeepsSlotFromReuse) {
  ObjectStore store;
  const MassHandle h = store.create_mass(at(3));
  {
    auto pin = store.pin(h);
    store.delete_mass(h);
    const MassHandle other = store.create_mass(at(4));
    EXPECT_NE(other.slot, h.slot);
    EXPECT_EQ(store.read(h).value->pos.x, 3.0);
    EXPECT_THROW(store.compact(), StateError);
  }
  const MassHandle reuse = store.create_mass(at(5));
  EXPECT_EQ(reuse.slot, h.slot);
}

TEST(StoreTest, FieldSetValidatesAndRejectsWrongType) {
  ObjectStore store;
  const MassHandle h = store.create_mass(at(0));
  store.set(h, MassField::Mass, Real{2.5});
  EXPECT_EQ(store.mass(h).m, 2.5);
  EXPECT_THROW(store.set(h, MassField::Mass, Real{-1}), ValidationError);
  EXPECT_EQ(store.mass(h).m, 2.5);
  EXPECT_THROW(store.set(h, MassField::Mass, Vec3{}), ValidationError);
  store.set(h, MassField::Fixed, true);
  EXPECT_TRUE(std::get<bool>(store.get(h, MassField::Fixed)));

  const MassHandle g = store.create_mass(at(1));
  const SpringHandle s = store.create_spring(between(h, g));
  store.set(s, SpringField::Stiffness, Real{42});
  EXPECT_EQ(store.spring(s).k, 42.0);
  store.set(s, SpringField::YieldStress, std::optional<Real>{1e6});
  EXPECT_EQ(store.spring(s).yield_stress, 1e6);
  EXPECT_THROW(store.set(s, SpringField::RestLength, Real{0}), ValidationError);
}

TEST(StoreTest, LockedStoreRejectsWrites) {
  ObjectStore store;
  const MassHandle h = store.create_mass(at(0));
  store.lock_writes();
  EXPECT_THROW(store.create_mass(at(1)), StateError);
  EXPECT_THROW(store.delete_mass(h), StateError);
  EXPECT_THROW(store.set(h, MassField::Mass, Real{2}), StateError);
  EXPECT_NO_THROW(store.mass(h));
  store.unlock_writes();
  EXPECT_NO_THROW(store.create_mass(at(1)));
}

TEST(StoreTest, CompactRemapsAndDropsOrphanedSprings) {
  ObjectStore store;
  const MassHandle a = store.create_mass(at(0));
  const MassHandle b = store.create_mass(at(1));
  const MassHandle c = store.create_mass(at(2));
  const SpringHandle ab = store.create_spring(between(a, b));
  const SpringHandle bc = store.create_spring(between(b, c));
  store.delete_mass(a);
  const CompactionMap map = store.compact();
  EXPECT_EQ(store.mass_count(), 2u);
  EXPECT_EQ(store.spring_count(), 1u);
  EXPECT_FALSE(map.remap(a).has_value());
  EXPECT_FALSE(map.remap(ab).has_value());
  const auto nb = map.remap(b);
  const auto nbc = map.remap(bc);
  ASSERT_TRUE(nb && nbc);
  EXPECT_EQ(store.mass(*nb).pos.x, 1.0);
  EXPECT_EQ(store.spring(*nbc).m1, *nb);
  EXPECT_EQ(store.masses().slot_count(), 2u);
}

TEST(StoreTest, HandlesNotRemappedAfterCompactReadStale) {
  ObjectStore store;
  const MassHandle a = store.create_mass(at(0));
  const MassHandle b = store.create_mass(at(1));
  const MassHandle c = store.create_mass(at(2));
  store.delete_mass(a);
  const CompactionMap map = store.compact();
  // b moved into a's old slot; neither old handle may resolve to it.
  EXPECT_FALSE(store.alive(a));
  EXPECT_FALSE(store.alive(b));
  EXPECT_TRUE(store.read(b).value == nullptr || store.read(b).stale);
  EXPECT_EQ(store.mass(*map.remap(b)).pos.x, 1.0);
  EXPECT_EQ(store.mass(*map.remap(c)).pos.x, 2.0);
  // Regrowing into the truncated slot does not revive c's old handle.
  const MassHandle d = store.create_mass(at(3));
  EXPECT_EQ(d.slot, c.slot);
  EXPECT_FALSE(store.alive(c));
  EXPECT_TRUE(store.alive(d));
}

TEST(StoreTest, UnmovedHandlesSurviveCompact) {
  ObjectStore store;
  const MassHandle a = store.create_mass(at(0));
  const MassHandle b = store.create_mass(at(1));
  store.delete_mass(b);
  const CompactionMap map = store.compact();
  EXPECT_TRUE(store.alive(a));
  EXPECT_EQ(*map.remap(a), a);
  // A stale handle is not remapped onto whatever replaced it.
  const MassHandle stale{a.slot, a.generation + 7};
  EXPECT_FALSE(map.remap(stale).has_value());
}

TEST(StoreTest, GrowthIsGeometric) {
  ObjectStore store;
  std::size_t reallocations = 0;
  std::size_t cap = store.masses().capacity();
  for (int i = 0; i < 100000; ++i) {
    store.create_mass(at(i));
    if (store.masses().capacity() != cap) {
      ++reallocations;
      cap = store.masses().capacity();
    }
  }
  EXPECT_LE(reallocations, 14u);
}

TEST(StoreTest, CopyIsDeepAndDropsPins) {
  ObjectStore store;
  const MassHandle h = store.create_mass(at(1));
  auto pin = store.pin(h);
  ObjectStore copy(store);
  copy.mutable_mass(h).pos.x = 9.0;
  EXPECT_EQ(store.mass(h).pos.x, 1.0);
  EXPECT_FALSE(copy.masses().has_pins());
  EXPECT_NO_THROW(copy.compact());
}

TEST(StoreTest, GlobalConstraintsValidate) {
  ObjectStore store;
  EXPECT_THROW(store.add_global_constraint(LineConstraint{{0, 0, 0}}), ValidationError);
  store.add_global_constraint(PlaneConstraint{{0, 1, 0}});
  EXPECT_EQ(store.global_constraints().size(), 1u);
  store.clear_global_constraints();
  EXPECT_TRUE(store.global_constraints().empty());
}

// Random create/delete/read against a map-based model of what must resolve.
TEST(StoreTest, FuzzAgainstReferenceModel) {
  ObjectStore store;
  std::mt19937_64 rng(20240607);
  std::map<MassHandle, Real> live;
  std::vector<MassHandle> dead;
  Real next_id = 0.0;
  for (int op = 0; op < 20000; ++op) {
    const int kind = static_cast<int>(rng() % 10);
    if (kind < 5 || live.empty()) {
      const MassHandle h = store.create_mass(at(next_id));
      ASSERT_EQ(live.count(h), 0u);
      live[h] = next_id;
      next_id += 1.0;
    } else if (kind < 8) {
      auto it = live.begin();
      std::advance(it, static_cast<long>(rng() % live.size()));
      ASSERT_EQ(store.delete_mass(it->first), DeleteStatus::Deleted);
      dead.push_back(it->first);
      live.erase(it);
    } else if (!dead.empty()) {
      const MassHandle h = dead[rng() % dead.size()];
      ASSERT_FALSE(store.alive(h));
      ASSERT_EQ(store.delete_mass(h), DeleteStatus::Stale);
    }
  }
  ASSERT_EQ(store.mass_count(), live.size());
  for (const auto& [h, id] : live) ASSERT_EQ(store.mass(h).pos.x, id);
  for (MassHandle h : dead) ASSERT_FALSE(store.alive(h));
}

}  // namespace
}  // namespace springmass
