#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <type_traits>
#include <variant>
#include <vector>

#include "springmass/errors.hpp"
#include "springmass/types.hpp"

namespace springmass {

class Integrator;
class ObjectStore;

enum class DeleteStatus : std::uint8_t { Deleted, Stale };

/// Result of reading through a handle. `value` is null only when the slot has
/// been reclaimed and reused; otherwise it points at the live object or, for
/// a deleted one, its last-known state (with `stale` set). The pointer is
/// valid until the next structural mutation of the store.
template <typename T>
struct ReadResult {
  const T* value = nullptr;
  bool stale = false;
};

/// Where compaction moved the object that lived in one old slot.
template <typename Tag>
struct Relocation {
  std::uint32_t generation = 0;  // generation of the old slot
  Handle<Tag> to;                // null when the slot was reclaimed
};

/// Liveness bookkeeping for one slot, kept apart from the object bytes so
/// delete and handle checks touch a few bytes regardless of object size.
struct SlotMeta {
  std::uint32_t generation = 0;
  std::uint32_t pins = 0;
  bool alive = false;
};

/// Growable slot array with lazy deletion. Deleting marks the slot dead in
/// O(1) and leaves the object bytes in place so outstanding holders can still
/// read the last-known state. Dead slots return to the free list once no pin
/// references them; reuse bumps the generation.
template <typename T, typename Tag>
class SlotArray {
 public:
  using HandleType = Handle<Tag>;

  HandleType insert(T value) {
    if (!free_.empty()) {
      const std::uint32_t index = free_.back();
      free_.pop_back();
      SlotMeta& m = meta_[index];
      values_[index] = std::move(value);
      ++m.generation;
      m.alive = true;
      ++alive_;
      return {index, m.generation};
    }
    if (values_.size() == values_.capacity()) {
      const std::size_t cap = values_.empty() ? kInitialCapacity : values_.capacity() * 2;
      values_.reserve(cap);
      meta_.reserve(cap);
    }
    values_.push_back(std::move(value));
    meta_.push_back(SlotMeta{fresh_generation_, 0, true});
    ++alive_;
    return {static_cast<std::uint32_t>(values_.size() - 1), fresh_generation_};
  }

  DeleteStatus erase(HandleType h) noexcept {
    if (!contains(h)) return DeleteStatus::Stale;
    kill(h.slot);
    return DeleteStatus::Deleted;
  }

  /// Marks a live slot dead by index.
  void kill(std::uint32_t index) noexcept {
    SlotMeta& m = meta_[index];
    m.alive = false;
    --alive_;
    if (m.pins == 0) free_.push_back(index);
  }

  bool contains(HandleType h) const noexcept {
    if (h.slot >= meta_.size()) return false;
    const SlotMeta& m = meta_[h.slot];
    return m.alive && m.generation == h.generation;
  }

  T* find(HandleType h) noexcept { return contains(h) ? &values_[h.slot] : nullptr; }
  const T* find(HandleType h) const noexcept { return contains(h) ? &values_[h.slot] : nullptr; }

  ReadResult<T> read(HandleType h) const noexcept {
    if (h.slot >= meta_.size()) return {};
    const SlotMeta& m = meta_[h.slot];
    if (m.generation != h.generation) return {nullptr, true};
    return {&values_[h.slot], !m.alive};
  }

  void pin(HandleType h) {
    if (h.slot >= meta_.size() || meta_[h.slot].generation != h.generation) {
      throw StaleHandleError("cannot pin a reclaimed slot");
    }
    ++meta_[h.slot].pins;
  }
  void unpin(HandleType h) noexcept {
    SlotMeta& m = meta_[h.slot];
    if (--m.pins == 0 && !m.alive) free_.push_back(h.slot);
  }

  /// Drops all pin counts (used when copying into a store no Pin refers to).
  void reset_pins() {
    for (std::uint32_t i = 0; i < meta_.size(); ++i) {
      SlotMeta& m = meta_[i];
      if (m.pins == 0) continue;
      m.pins = 0;
      if (!m.alive) free_.push_back(i);
    }
  }

  HandleType handle_at(std::uint32_t index) const noexcept {
    return {index, meta_[index].generation};
  }

  /// Object bytes by slot index, dead slots included.
  std::span<T> values() noexcept { return values_; }
  std::span<const T> values() const noexcept { return values_; }
  std::span<const SlotMeta> meta() const noexcept { return meta_; }
  bool alive_at(std::uint32_t index) const noexcept { return meta_[index].alive; }

  std::size_t alive_count() const noexcept { return alive_; }
  std::size_t slot_count() const noexcept { return values_.size(); }
  std::size_t capacity() const noexcept { return values_.capacity(); }
  std::size_t free_count() const noexcept { return free_.size(); }
  bool has_pins() const noexcept {
    for (const SlotMeta& m : meta_) {
      if (m.pins != 0) return true;
    }
    return false;
  }

  /// Removes dead slots, preserving the relative order of survivors. Objects
  /// that move get a generation newer than any handle issued so far, so a
  /// handle that is not remapped reads as stale. Returns one entry per old
  /// slot: the live generation there and the object's new handle (null for
  /// reclaimed slots).
  std::vector<Relocation<Tag>> compact() {
    std::uint32_t newest = fresh_generation_;
    for (const SlotMeta& m : meta_) newest = std::max(newest, m.generation);
    fresh_generation_ = newest + 1;

    std::vector<Relocation<Tag>> moves(values_.size());
    std::vector<T> kept;
    std::vector<SlotMeta> kept_meta;
    kept.reserve(alive_);
    kept_meta.reserve(alive_);
    for (std::uint32_t i = 0; i < values_.size(); ++i) {
      moves[i].generation = meta_[i].generation;
      if (!meta_[i].alive) continue;
      const auto j = static_cast<std::uint32_t>(kept.size());
      SlotMeta m = meta_[i];
      if (j != i) m.generation = fresh_generation_;
      moves[i].to = {j, m.generation};
      kept.push_back(std::move(values_[i]));
      kept_meta.push_back(m);
    }
    values_ = std::move(kept);
    meta_ = std::move(kept_meta);
    free_.clear();
    return moves;
  }

 private:
  static constexpr std::size_t kInitialCapacity = 16;

  std::vector<T> values_;
  std::vector<SlotMeta> meta_;
  std::vector<std::uint32_t> free_;
  std::size_t alive_ = 0;
  // Generation for slots appended after the last compaction.
  std::uint32_t fresh_generation_ = 0;
};

using MassArray = SlotArray<Mass, MassTag>;
using SpringArray = SlotArray<Spring, SpringTag>;

/// Group of objects created together (a lattice, a filled mesh, ...).
struct Body {
  std::vector<MassHandle> masses;
  std::vector<SpringHandle> springs;
};

enum class MassField : std::uint8_t { Position, Velocity, Force, Load, Mass, Fixed };
enum class SpringField : std::uint8_t { Stiffness, RestLength, Diameter, YieldStress, Actuation };

using FieldValue =
    std::variant<Vec3, Real, bool, std::optional<Real>, std::optional<ActuationParams>>;

/// Translation table returned by ObjectStore::compact().
struct CompactionMap {
  std::vector<Relocation<MassTag>> masses;
  std::vector<Relocation<SpringTag>> springs;

  /// New handle for a handle that was live before compaction; nullopt for
  /// stale or reclaimed handles.

  std::optional<MassHandle> remap(MassHandle h) const noexcept;
  std::optional<SpringHandle> remap(SpringHandle h) const noexcept;
};

/// RAII reference count on a slot. While held, the slot is not reclaimed
/// after deletion, so its last-known state stays readable.
template <typename Tag>
class Pin {
 public:
  Pin() = default;
  Pin(const Pin&) = delete;
  Pin& operator=(const Pin&) = delete;
  Pin(Pin&& o) noexcept : store_(o.store_), handle_(o.handle_) { o.store_ = nullptr; }
  Pin& operator=(Pin&& o) noexcept {
    if (this != &o) {
      release();
      store_ = o.store_;
      handle_ = o.handle_;
      o.store_ = nullptr;
    }
    return *this;
  }
  ~Pin() { release(); }

  Handle<Tag> handle() const noexcept { return handle_; }

 private:
  friend class ObjectStore;
  Pin(ObjectStore* store, Handle<Tag> h) : store_(store), handle_(h) {}
  void release() noexcept;

  ObjectStore* store_ = nullptr;
  Handle<Tag> handle_;
};

/// Owns all masses and springs of a simulation plus the global constraints.
///
/// Single writer: while a controller runs the step loop it locks the store,
/// and every public mutator throws StateError until it is unlocked at a pause
/// point. Reads of a locked store are the caller's responsibility.
class ObjectStore {
 public:
  ObjectStore() = default;
  ObjectStore(const ObjectStore& other);
  ObjectStore& operator=(const ObjectStore& other);
  ObjectStore(ObjectStore&&) = delete;
  ObjectStore& operator=(ObjectStore&&) = delete;

  MassHandle create_mass(Mass m);
  SpringHandle create_spring(Spring s);
  DeleteStatus delete_mass(MassHandle h);
  DeleteStatus delete_spring(SpringHandle h);

  bool alive(MassHandle h) const noexcept { return masses_.contains(h); }
  bool alive(SpringHandle h) const noexcept { return springs_.contains(h); }

  ReadResult<Mass> read(MassHandle h) const noexcept { return masses_.read(h); }
  ReadResult<Spring> read(SpringHandle h) const noexcept { return springs_.read(h); }

  /// Live object or StaleHandleError.
  const Mass& mass(MassHandle h) const;
  const Spring& spring(SpringHandle h) const;

  /// Field access. get() on a deleted-but-unreclaimed handle returns the
  /// last-known value; set() on a stale handle throws.
  FieldValue get(MassHandle h, MassField field) const;
  FieldValue get(SpringHandle h, SpringField field) const;
  void set(MassHandle h, MassField field, const FieldValue& value);
  void set(SpringHandle h, SpringField field, const FieldValue& value);

  /// Direct mutable access for construction code. Throws when locked.
  Mass& mutable_mass(MassHandle h);
  Spring& mutable_spring(SpringHandle h);

  void add_global_constraint(const LocalConstraint& c);
  void clear_global_constraints();
  const std::vector<LocalConstraint>& global_constraints() const noexcept {
    return global_constraints_;
  }

  Pin<MassTag> pin(MassHandle h);
  Pin<SpringTag> pin(SpringHandle h);

  /// Reclaims dead slots, keeping iteration order. Springs whose endpoints
  /// are dead are invalidated first. Throws StateError when locked or when
  /// pins are outstanding.
  CompactionMap compact();

  std::size_t mass_count() const noexcept { return masses_.alive_count(); }
  std::size_t spring_count() const noexcept { return springs_.alive_count(); }
  const MassArray& masses() const noexcept { return masses_; }
  const SpringArray& springs() const noexcept { return springs_; }

  /// Bumped on every create/delete/compact; accumulators keyed on topology
  /// rebuild when it changes.
  std::uint64_t topology_version() const noexcept { return topology_version_; }

  void lock_writes() noexcept { locked_.store(true, std::memory_order_release); }
  void unlock_writes() noexcept { locked_.store(false, std::memory_order_release); }
  bool writes_locked() const noexcept { return locked_.load(std::memory_order_acquire); }

 private:
  friend class Integrator;
  template <typename Tag>
  friend class Pin;

  void require_unlocked(const char* op) const;
  /// Engine-side invalidation; legal while locked (the loop is the writer).
  void invalidate_spring(std::uint32_t slot) noexcept;
  MassArray& mutable_masses() noexcept { return masses_; }
  SpringArray& mutable_springs() noexcept { return springs_; }

  MassArray masses_;
  SpringArray springs_;
  std::vector<LocalConstraint> global_constraints_;
  std::uint64_t topology_version_ = 0;
  std::atomic<bool> locked_{false};
};

template <typename Tag>
void Pin<Tag>::release() noexcept {
  if (store_ == nullptr) return;
  if constexpr (std::is_same_v<Tag, MassTag>) {
    store_->masses_.unpin(handle_);
  } else {
    store_->springs_.unpin(handle_);
  }
  store_ = nullptr;
}

}  // namespace springmass
