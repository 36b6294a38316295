#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "qsqn/term.hpp"

namespace qsqn {

using Slot = std::uint32_t;
using TupleView = std::span<const TermId>;

/// Insertion-ordered collection of fixed-width term tuples with stable slots
/// and per-position indexes. Members live in one flat array; views handed out
/// by operator[] stay valid until the next insert. The indexes only narrow candidate lists; callers
/// still run the exact matching/unification test on each candidate.
/// A ground tuple must not be inserted twice while alive.
class TupleSet {
 public:
  TupleSet() = default;
  TupleSet(const TermStore& store, std::size_t width) : store_(&store), width_(width) {
    reset_index();
  }

  std::size_t width() const { return width_; }
  std::size_t size() const { return alive_count_; }
  bool empty() const { return alive_count_ == 0; }

  Slot insert(TupleView item);
  Slot insert(const Tuple& item) { return insert(TupleView(item)); }
  void erase(Slot s);
  bool alive(Slot s) const { return s < alive_.size() && alive_[s]; }
  TupleView operator[](Slot s) const { return {data_.data() + s * width_, width_}; }
  void clear();

  /// Alive slots in insertion order.
  std::vector<Slot> slots() const;
  template <typename F>
  void for_each(F&& f) const {
    for_each_from(0, f);
  }
  /// Slots are handed out in increasing order until clear().
  Slot end_slot() const { return static_cast<Slot>(alive_.size()); }
  template <typename F>
  void for_each_from(Slot first, F&& f) const {
    for (Slot s = first; s < alive_.size(); ++s)
      if (alive_[s]) f(s, (*this)[s]);
  }

  /// Members that could be more general than `x`.
  std::vector<Slot> generalizer_candidates(std::span<const TermId> x) const;
  /// Calls f on the same candidates as generalizer_candidates, in no
  /// particular order, until it returns true.
  template <typename F>
  bool any_generalizer(std::span<const TermId> x, F&& f) const {
    Lists c = generalizer_lists(x);
    if (c.exact && f(*c.exact)) return true;
    for (const std::vector<Slot>* l : {c.a, c.b})
      if (l)
        for (Slot s : *l)
          if (alive_[s] && f(s)) return true;
    return false;
  }
  /// Members that could be instances of `x`.
  std::vector<Slot> instance_candidates(std::span<const TermId> x) const;
  /// Members whose term at each probed position could unify with the probe.
  std::vector<Slot> unifiable_candidates(
      std::span<const std::pair<std::size_t, TermId>> probes) const;

 private:
  struct PositionIndex {
    std::unordered_map<TermId, std::vector<Slot>> ground;
    std::vector<Slot> non_ground;
  };

  struct Lists {
    std::optional<Slot> exact;  // ground member equal to x
    const std::vector<Slot>* a = nullptr;  // disjoint from each other and from exact
    const std::vector<Slot>* b = nullptr;
  };
  Lists generalizer_lists(std::span<const TermId> x) const;

  void reset_index();
  void index_slot(Slot s);
  const std::vector<PositionIndex>& all_index() const;
  void maybe_compact();
  std::vector<Slot> collect(std::initializer_list<const std::vector<Slot>*> lists) const;
  std::optional<Slot> find_ground(TupleView x) const;

  const TermStore* store_ = nullptr;
  std::size_t width_ = 0;
  std::vector<TermId> data_;
  std::vector<bool> alive_;
  std::size_t alive_count_ = 0;
  std::size_t dead_in_index_ = 0;

  // Over all members, and over non-ground members only. The first is built
  // on demand: many sets are only ever probed for generalizers.
  mutable std::vector<PositionIndex> all_;
  mutable Slot all_upto_ = 0;
  std::vector<PositionIndex> non_ground_members_;
  // hash of an alive ground member -> its slot
  std::unordered_multimap<std::size_t, Slot> ground_exact_;
  std::size_t non_ground_alive_ = 0;
};

/// Result of a subsumption-checked insertion.
struct InsertResult {
  bool inserted = false;
  Slot slot = 0;
  std::vector<Slot> removed;
};

/// Keeps `set` an antichain under the instance order: rejects `x` when some
/// member is more general, otherwise deletes every member that is an instance
/// of `x` and inserts it.
InsertResult insert_most_general(TupleSet& set, const TermStore& store, TupleView x);
inline InsertResult insert_most_general(TupleSet& set, const TermStore& store, const Tuple& x) {
  return insert_most_general(set, store, TupleView(x));
}

/// True iff some member of `set` is more general than (or a variant of) `x`.
bool subsumed_by_any(const TupleSet& set, const TermStore& store, std::span<const TermId> x);

}  // namespace qsqn
