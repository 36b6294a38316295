#pragma once

#include <cstdint>
#include <list>
#include <map>
#include <memory>
#include <span>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "qsqn/net.hpp"

namespace qsqn {

// ---------------------------------------------------------------------------
// Simulated secondary storage

using UnitId = std::uint32_t;

/// Counting model of paged relations under a fixed in-memory page budget with
/// LRU eviction. A unit is an EDB relation or a large net set; item k of a
/// unit lives on page k / capacity.
class RelationStore {
 public:
  RelationStore(std::size_t page_capacity = 64, std::size_t memory_pages = 8);

  UnitId unit(const std::string& name);
  std::optional<UnitId> find_unit(const std::string& name) const;
  const std::string& unit_name(UnitId u) const { return units_[u].name; }
  std::size_t unit_count() const { return units_.size(); }

  std::size_t page_of(std::size_t item) const { return item / capacity_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t budget() const { return budget_; }

  /// Reads items 0..n-1 of the unit (ceil(n / capacity) pages).
  void touch_prefix(UnitId u, std::size_t n);
  /// Reads the pages holding the given item positions.
  void touch_items(UnitId u, std::span<const std::uint32_t> items);
  void touch_page(UnitId u, std::size_t page);
  /// Makes the page holding `item` resident without counting a load when the
  /// page is new (growth allocates in memory).
  void write_item(UnitId u, std::size_t item);
  /// Declares items 0..n-1 as already stored (an EDB relation on disk), so
  /// their first read counts as a load.
  void preallocate(UnitId u, std::size_t n);
  /// Forgets every page of the unit (the unit was cleared).
  void drop_unit(UnitId u);

  bool resident(UnitId u, std::size_t page) const;
  std::size_t resident_pages() const { return lru_.size(); }

  std::uint64_t loads() const { return loads_; }
  std::uint64_t unloads() const { return unloads_; }
  std::uint64_t loads(UnitId u) const { return units_[u].loads; }
  std::uint64_t unloads(UnitId u) const { return units_[u].unloads; }

 private:
  struct Unit {
    std::string name;
    std::size_t pages_allocated = 0;
    std::uint64_t loads = 0;
    std::uint64_t unloads = 0;
  };
  using Key = std::uint64_t;
  static Key key(UnitId u, std::size_t page) { return (Key(u) << 40) | Key(page); }
  void bring_in(UnitId u, std::size_t page, bool count_load);

  std::size_t capacity_;
  std::size_t budget_;
  std::vector<Unit> units_;
  std::map<std::string, UnitId> by_name_;
  std::list<Key> lru_;  // front = most recently used
  std::unordered_map<Key, std::list<Key>::iterator> where_;
  std::uint64_t loads_ = 0;
  std::uint64_t unloads_ = 0;
};

/// Per-node modification timestamps; every event gets a new, larger stamp.
class ModificationClock {
 public:
  void resize(std::size_t nodes) { stamp_.resize(nodes, 0); }
  void touch(NodeId v) { stamp_[v] = ++now_; }
  std::uint64_t stamp(NodeId v) const { return stamp_[v]; }
  std::uint64_t now() const { return now_; }

 private:
  std::vector<std::uint64_t> stamp_;
  std::uint64_t now_ = 0;
};

// ---------------------------------------------------------------------------
// Strategies

/// What the disk-minimizing strategy knows about one active edge.
struct EdgeProfile {
  bool in_memory = false;            // every page the fire reads is resident
  std::size_t enabled_in_memory = 0; // follow-up edges firable from memory
  std::size_t items = 0;             // tuples/subqueries the fire processes
};

/// Read-only window on a running engine.
class EngineView {
 public:
  virtual ~EngineView() = default;
  virtual const NetStructure& net() const = 0;
  virtual const ModificationClock& clock() const = 0;
  virtual EdgeProfile profile(EdgeId e) const = 0;
};

enum class StrategyKind { fifo, depth_first, disk_min };

StrategyKind parse_strategy(std::string_view name);
const char* strategy_name(StrategyKind k);

class Strategy {
 public:
  virtual ~Strategy() = default;
  /// `active` is nonempty and sorted by edge id.
  virtual EdgeId select(const std::vector<EdgeId>& active, const EngineView& view) = 0;
  virtual void reset() {}
};

/// Oldest activation first; an edge that is selected and later becomes
/// active again joins the back of the queue.
class FifoStrategy : public Strategy {
 public:
  EdgeId select(const std::vector<EdgeId>& active, const EngineView& view) override;
  void reset() override;

 private:
  std::unordered_map<EdgeId, std::uint64_t> since_;
  std::uint64_t tick_ = 0;
};

class DepthFirstStrategy : public Strategy {
 public:
  EdgeId select(const std::vector<EdgeId>& active, const EngineView& view) override;
};

class DiskMinStrategy : public Strategy {
 public:
  struct Decision {
    EdgeId edge;
    bool in_memory;
    bool any_in_memory;  // some active edge was firable from memory
  };
  EdgeId select(const std::vector<EdgeId>& active, const EngineView& view) override;
  const std::vector<Decision>& log() const { return log_; }
  void reset() override { log_.clear(); }

 private:
  std::vector<Decision> log_;
};

std::unique_ptr<Strategy> make_strategy(StrategyKind k);

}  // namespace qsqn
