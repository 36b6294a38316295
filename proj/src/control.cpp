#include "qsqn/control.hpp"

#include <algorithm>
#include <stdexcept>
#include <tuple>

namespace qsqn {

RelationStore::RelationStore(std::size_t page_capacity, std::size_t memory_pages)
    : capacity_(std::max<std::size_t>(1, page_capacity)),
      budget_(std::max<std::size_t>(1, memory_pages)) {}

UnitId RelationStore::unit(const std::string& name) {
  auto it = by_name_.find(name);
  if (it != by_name_.end()) return it->second;
  UnitId u = static_cast<UnitId>(units_.size());
  units_.push_back({name});
  by_name_.emplace(name, u);
  return u;
}

std::optional<UnitId> RelationStore::find_unit(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

bool RelationStore::resident(UnitId u, std::size_t page) const {
  return where_.count(key(u, page)) > 0;
}

void RelationStore::bring_in(UnitId u, std::size_t page, bool count_load) {
  Key k = key(u, page);
  if (auto it = where_.find(k); it != where_.end()) {
    lru_.splice(lru_.begin(), lru_, it->second);
    return;
  }
  if (count_load) {
    ++loads_;
    ++units_[u].loads;
  }
  lru_.push_front(k);
  where_.emplace(k, lru_.begin());
  while (lru_.size() > budget_) {
    Key victim = lru_.back();
    lru_.pop_back();
    where_.erase(victim);
    ++unloads_;
    ++units_[static_cast<UnitId>(victim >> 40)].unloads;
  }
}

void RelationStore::touch_page(UnitId u, std::size_t page) {
  bool fresh = page >= units_[u].pages_allocated;
  if (fresh) units_[u].pages_allocated = page + 1;
  bring_in(u, page, !fresh);
}

void RelationStore::touch_prefix(UnitId u, std::size_t n) {
  for (std::size_t p = 0; p * capacity_ < n; ++p) touch_page(u, p);
}

void RelationStore::touch_items(UnitId u, std::span<const std::uint32_t> items) {
  std::size_t last = static_cast<std::size_t>(-1);
  for (std::uint32_t it : items) {
    std::size_t p = page_of(it);
    if (p != last) touch_page(u, p);
    last = p;
  }
}

void RelationStore::write_item(UnitId u, std::size_t item) { touch_page(u, page_of(item)); }

void RelationStore::preallocate(UnitId u, std::size_t n) {
  units_[u].pages_allocated = std::max(units_[u].pages_allocated, (n + capacity_ - 1) / capacity_);
}

void RelationStore::drop_unit(UnitId u) {
  for (std::size_t p = 0; p < units_[u].pages_allocated; ++p) {
    auto it = where_.find(key(u, p));
    if (it == where_.end()) continue;
    lru_.erase(it->second);
    where_.erase(it);
  }
  units_[u].pages_allocated = 0;
}

// ---------------------------------------------------------------------------

StrategyKind parse_strategy(std::string_view name) {
  if (name == "fifo") return StrategyKind::fifo;
  if (name == "depth-first" || name == "depth_first" || name == "dfs")
    return StrategyKind::depth_first;
  if (name == "disk-min" || name == "disk_min") return StrategyKind::disk_min;
  throw std::invalid_argument("unknown strategy: " + std::string(name));
}

const char* strategy_name(StrategyKind k) {
  switch (k) {
    case StrategyKind::fifo: return "fifo";
    case StrategyKind::depth_first: return "depth-first";
    case StrategyKind::disk_min: return "disk-min";
  }
  return "?";
}

void FifoStrategy::reset() {
  since_.clear();
  tick_ = 0;
}

EdgeId FifoStrategy::select(const std::vector<EdgeId>& active, const EngineView&) {
  // Forget edges that went inactive, stamp the newly active ones.
  for (auto it = since_.begin(); it != since_.end();) {
    if (!std::binary_search(active.begin(), active.end(), it->first))
      it = since_.erase(it);
    else
      ++it;
  }
  for (EdgeId e : active)
    if (!since_.count(e)) since_.emplace(e, ++tick_);
  EdgeId best = active.front();
  for (EdgeId e : active)
    if (since_[e] < since_[best]) best = e;  // stamps are unique
  since_.erase(best);
  return best;
}

EdgeId DepthFirstStrategy::select(const std::vector<EdgeId>& active, const EngineView& view) {
  const NetStructure& net = view.net();
  const ModificationClock& clock = view.clock();
  // Most recently modified node that has an active outgoing edge.
  NodeId v = net.edge(active.front()).from;
  for (EdgeId e : active) {
    NodeId u = net.edge(e).from;
    if (clock.stamp(u) > clock.stamp(v) || (clock.stamp(u) == clock.stamp(v) && u < v)) v = u;
  }
  std::vector<EdgeId> mine;
  for (EdgeId e : active)
    if (net.edge(e).from == v) mine.push_back(e);
  const NetNode& n = net.node(v);
  if (n.kind == NodeKind::ans) {
    // successor with the biggest modification timestamp
    EdgeId best = mine.front();
    for (EdgeId e : mine)
      if (clock.stamp(net.edge(e).to) > clock.stamp(net.edge(best).to)) best = e;
    return best;
  }
  if (n.kind == NodeKind::filter && n.idb) {
    for (EdgeId e : mine)
      if (net.edge(e).to == n.succ) return e;
  }
  // input_p: out edges are in clause order, so the first is the smallest index
  return mine.front();
}

EdgeId DiskMinStrategy::select(const std::vector<EdgeId>& active, const EngineView& view) {
  auto score = [&](const EdgeProfile& p) {
    return std::make_tuple(p.in_memory, p.enabled_in_memory > 0, p.enabled_in_memory, p.items);
  };
  EdgeId best = active.front();
  EdgeProfile best_p = view.profile(best);
  bool any = best_p.in_memory;
  for (std::size_t k = 1; k < active.size(); ++k) {
    EdgeProfile p = view.profile(active[k]);
    any = any || p.in_memory;
    if (score(p) > score(best_p)) {
      best = active[k];
      best_p = p;
    }
  }
  log_.push_back({best, best_p.in_memory, any});
  return best;
}

std::unique_ptr<Strategy> make_strategy(StrategyKind k) {
  switch (k) {
    case StrategyKind::fifo: return std::make_unique<FifoStrategy>();
    case StrategyKind::depth_first: return std::make_unique<DepthFirstStrategy>();
    case StrategyKind::disk_min: return std::make_unique<DiskMinStrategy>();
  }
  return nullptr;
}

}  // namespace qsqn
