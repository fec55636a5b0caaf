#include "springmass/store.hpp"

#include <string>

namespace springmass {
namespace {

template <typename T>
const T& expect(const FieldValue& v, const char* field) {
  if (const T* p = std::get_if<T>(&v)) return *p;
  throw ValidationError(std::string("wrong value type for field ") + field);
}

}  // namespace

namespace {

template <typename Tag>
std::optional<Handle<Tag>> relocate(const std::vector<Relocation<Tag>>& moves, Handle<Tag> h) {
  if (h.slot >= moves.size()) return std::nullopt;
  const Relocation<Tag>& r = moves[h.slot];
  if (r.to.is_null() || r.generation != h.generation) return std::nullopt;
  return r.to;
}

}  // namespace

std::optional<MassHandle> CompactionMap::remap(MassHandle h) const noexcept {
  return relocate(masses, h);
}

std::optional<SpringHandle> CompactionMap::remap(SpringHandle h) const noexcept {
  return relocate(springs, h);
}

ObjectStore::ObjectStore(const ObjectStore& other)
    : masses_(other.masses_),
      springs_(other.springs_),
      global_constraints_(other.global_constraints_),
      topology_version_(other.topology_version_) {
  masses_.reset_pins();
  springs_.reset_pins();
}

ObjectStore& ObjectStore::operator=(const ObjectStore& other) {
  if (this == &other) return *this;
  require_unlocked("assign");
  if (masses_.has_pins() || springs_.has_pins()) {
    throw StateError("cannot overwrite a store with outstanding pins");
  }
  masses_ = other.masses_;
  springs_ = other.springs_;
  masses_.reset_pins();
  springs_.reset_pins();
  global_constraints_ = other.global_constraints_;
  topology_version_ = other.topology_version_ + 1;
  return *this;
}

void ObjectStore::require_unlocked(const char* op) const {
  if (writes_locked()) {
    throw StateError(std::string("store is locked by a running simulation; cannot ") + op +
                     " (queue a mutation instead)");
  }
}

MassHandle ObjectStore::create_mass(Mass m) {
  require_unlocked("create a mass");
  m.validate();
  m.origin = m.pos;
  ++topology_version_;
  return masses_.insert(std::move(m));
}

SpringHandle ObjectStore::create_spring(Spring s) {
  require_unlocked("create a spring");
  if (s.m1 == s.m2) throw ValidationError("spring endpoints must differ");
  if (!masses_.contains(s.m1) || !masses_.contains(s.m2)) {
    throw StaleHandleError("spring endpoint does not resolve to a live mass");
  }
  s.validate();
  ++topology_version_;
  return springs_.insert(std::move(s));
}

DeleteStatus ObjectStore::delete_mass(MassHandle h) {
  require_unlocked("delete a mass");
  const DeleteStatus st = masses_.erase(h);
  if (st == DeleteStatus::Deleted) ++topology_version_;
  return st;
}

DeleteStatus ObjectStore::delete_spring(SpringHandle h) {
  require_unlocked("delete a spring");
  const DeleteStatus st = springs_.erase(h);
  if (st == DeleteStatus::Deleted) ++topology_version_;
  return st;
}

void ObjectStore::invalidate_spring(std::uint32_t slot) noexcept {
  springs_.kill(slot);
  ++topology_version_;
}

const Mass& ObjectStore::mass(MassHandle h) const {
  if (const Mass* m = masses_.find(h)) return *m;
  throw StaleHandleError("mass handle is stale");
}

const Spring& ObjectStore::spring(SpringHandle h) const {
  if (const Spring* s = springs_.find(h)) return *s;
  throw StaleHandleError("spring handle is stale");
}

Mass& ObjectStore::mutable_mass(MassHandle h) {
  require_unlocked("modify a mass");
  if (Mass* m = masses_.find(h)) return *m;
  throw StaleHandleError("mass handle is stale");
}

Spring& ObjectStore::mutable_spring(SpringHandle h) {
  require_unlocked("modify a spring");
  if (Spring* s = springs_.find(h)) return *s;
  throw StaleHandleError("spring handle is stale");
}

FieldValue ObjectStore::get(MassHandle h, MassField field) const {
  const ReadResult<Mass> r = masses_.read(h);
  if (r.value == nullptr) throw StaleHandleError("mass slot has been reclaimed");
  const Mass& m = *r.value;
  switch (field) {
    case MassField::Position: return m.pos;
    case MassField::Velocity: return m.vel;
    case MassField::Force: return m.force;
    case MassField::Load: return m.load;
    case MassField::Mass: return m.m;
    case MassField::Fixed: return m.fixed;
  }
  throw ValidationError("unknown mass field");
}

FieldValue ObjectStore::get(SpringHandle h, SpringField field) const {
  const ReadResult<Spring> r = springs_.read(h);
  if (r.value == nullptr) throw StaleHandleError("spring slot has been reclaimed");
  const Spring& s = *r.value;
  switch (field) {
    case SpringField::Stiffness: return s.k;
    case SpringField::RestLength: return s.rest_length;
    case SpringField::Diameter: return s.diameter;
    case SpringField::YieldStress: return s.yield_stress;
    case SpringField::Actuation: return s.actuation;
  }
  throw ValidationError("unknown spring field");
}

void ObjectStore::set(MassHandle h, MassField field, const FieldValue& value) {
  Mass& target = mutable_mass(h);
  Mass m = target;
  switch (field) {
    case MassField::Position: m.pos = expect<Vec3>(value, "position"); break;
    case MassField::Velocity: m.vel = expect<Vec3>(value, "velocity"); break;
    case MassField::Force: m.force = expect<Vec3>(value, "force"); break;
    case MassField::Load: m.load = expect<Vec3>(value, "load"); break;
    case MassField::Mass: m.m = expect<Real>(value, "mass"); break;
    case MassField::Fixed: m.fixed = expect<bool>(value, "fixed"); break;
  }
  m.validate();
  target = std::move(m);
}

void ObjectStore::set(SpringHandle h, SpringField field, const FieldValue& value) {
  Spring& target = mutable_spring(h);
  Spring s = target;
  switch (field) {
    case SpringField::Stiffness: s.k = expect<Real>(value, "stiffness"); break;
    case SpringField::RestLength: s.rest_length = expect<Real>(value, "rest_length"); break;
    case SpringField::Diameter: s.diameter = expect<Real>(value, "diameter"); break;
    case SpringField::YieldStress:
      s.yield_stress = expect<std::optional<Real>>(value, "yield_stress");
      break;
    case SpringField::Actuation:
      s.actuation = expect<std::optional<ActuationParams>>(value, "actuation");
      break;
  }
  s.validate();
  target = std::move(s);
}

void ObjectStore::add_global_constraint(const LocalConstraint& c) {
  require_unlocked("add a global constraint");
  validate(c);
  global_constraints_.push_back(c);
}

void ObjectStore::clear_global_constraints() {
  require_unlocked("clear global constraints");
  global_constraints_.clear();
}

Pin<MassTag> ObjectStore::pin(MassHandle h) {
  masses_.pin(h);
  return Pin<MassTag>(this, h);
}

Pin<SpringTag> ObjectStore::pin(SpringHandle h) {
  springs_.pin(h);
  return Pin<SpringTag>(this, h);
}

CompactionMap ObjectStore::compact() {
  require_unlocked("compact");
  if (masses_.has_pins() || springs_.has_pins()) {
    throw StateError("cannot compact while pins are outstanding");
  }
  const auto spring_values = springs_.values();
  for (std::uint32_t i = 0; i < spring_values.size(); ++i) {
    const Spring& s = spring_values[i];
    if (springs_.alive_at(i) && (!masses_.contains(s.m1) || !masses_.contains(s.m2))) {
      springs_.kill(i);
    }
  }
  CompactionMap map;
  map.masses = masses_.compact();
  map.springs = springs_.compact();
  for (Spring& s : springs_.values()) {
    s.m1 = *map.remap(s.m1);
    s.m2 = *map.remap(s.m2);
  }
  ++topology_version_;
  return map;
}

}  // namespace springmass
