#include "qsqn/tuple_set.hpp"

#include <algorithm>
#include <limits>

namespace qsqn {

namespace {

const std::vector<Slot> kEmpty;

const std::vector<Slot>& bucket(const std::unordered_map<TermId, std::vector<Slot>>& m,
                                TermId key) {
  auto it = m.find(key);
  return it == m.end() ? kEmpty : it->second;
}

}  // namespace

void TupleSet::reset_index() {
  all_.assign(width_, {});
  all_upto_ = 0;
  non_ground_members_.assign(width_, {});
  ground_exact_.clear();
  dead_in_index_ = 0;
}

void TupleSet::index_slot(Slot s) {
  TupleView t = (*this)[s];
  if (is_ground(*store_, t)) {
    ground_exact_.emplace(TupleHash{}(t), s);
    return;
  }
  for (std::size_t p = 0; p < width_; ++p) {
    if (store_->is_ground(t[p]))
      non_ground_members_[p].ground[t[p]].push_back(s);
    else
      non_ground_members_[p].non_ground.push_back(s);
  }
}

const std::vector<TupleSet::PositionIndex>& TupleSet::all_index() const {
  for (; all_upto_ < alive_.size(); ++all_upto_) {
    if (!alive_[all_upto_]) continue;
    TupleView t = (*this)[all_upto_];
    for (std::size_t p = 0; p < width_; ++p) {
      if (store_->is_ground(t[p]))
        all_[p].ground[t[p]].push_back(all_upto_);
      else
        all_[p].non_ground.push_back(all_upto_);
    }
  }
  return all_;
}

Slot TupleSet::insert(TupleView item) {
  Slot s = static_cast<Slot>(alive_.size());
  if (!data_.empty() && item.data() >= data_.data() && item.data() < data_.data() + data_.size()) {
    Tuple copy(item.begin(), item.end());
    data_.insert(data_.end(), copy.begin(), copy.end());
  } else {
    data_.insert(data_.end(), item.begin(), item.end());
  }
  alive_.push_back(true);
  ++alive_count_;
  if (!is_ground(*store_, item)) ++non_ground_alive_;
  index_slot(s);
  return s;
}

void TupleSet::erase(Slot s) {
  if (!alive(s)) return;
  alive_[s] = false;
  --alive_count_;
  ++dead_in_index_;
  if (TupleView t = (*this)[s]; is_ground(*store_, t)) {
    auto [lo, hi] = ground_exact_.equal_range(TupleHash{}(t));
    for (auto it = lo; it != hi; ++it)
      if (it->second == s) {
        ground_exact_.erase(it);
        break;
      }
  } else
    --non_ground_alive_;
  maybe_compact();
}

void TupleSet::clear() {
  data_.clear();
  alive_.clear();
  alive_count_ = 0;
  non_ground_alive_ = 0;
  reset_index();
}

void TupleSet::maybe_compact() {
  if (dead_in_index_ < 1024 || dead_in_index_ < alive_count_) return;
  reset_index();
  for (Slot s = 0; s < alive_.size(); ++s)
    if (alive_[s]) index_slot(s);
}

std::vector<Slot> TupleSet::slots() const {
  std::vector<Slot> out;
  out.reserve(alive_count_);
  for (Slot s = 0; s < alive_.size(); ++s)
    if (alive_[s]) out.push_back(s);
  return out;
}

std::vector<Slot> TupleSet::collect(
    std::initializer_list<const std::vector<Slot>*> lists) const {
  std::vector<Slot> out;
  for (const auto* l : lists)
    for (Slot s : *l)
      if (alive_[s]) out.push_back(s);
  if (lists.size() > 1) {
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  }
  return out;
}

std::optional<Slot> TupleSet::find_ground(TupleView x) const {
  auto [lo, hi] = ground_exact_.equal_range(TupleHash{}(x));
  for (auto it = lo; it != hi; ++it)
    if (std::ranges::equal((*this)[it->second], x)) return it->second;
  return std::nullopt;
}

TupleSet::Lists TupleSet::generalizer_lists(std::span<const TermId> x) const {
  Lists c;
  if (is_ground(*store_, x)) c.exact = find_ground(x);
  if (non_ground_alive_ == 0 || width_ == 0) return c;
  // Pick the position whose candidate lists are shortest.
  std::size_t best = std::numeric_limits<std::size_t>::max();
  std::size_t best_pos = 0;
  for (std::size_t p = 0; p < width_; ++p) {
    const auto& idx = non_ground_members_[p];
    std::size_t n = idx.non_ground.size();
    if (store_->is_ground(x[p])) n += bucket(idx.ground, x[p]).size();
    if (n < best) {
      best = n;
      best_pos = p;
    }
  }
  const auto& idx = non_ground_members_[best_pos];
  c.a = &idx.non_ground;
  if (store_->is_ground(x[best_pos])) c.b = &bucket(idx.ground, x[best_pos]);
  return c;
}

std::vector<Slot> TupleSet::generalizer_candidates(std::span<const TermId> x) const {
  std::vector<Slot> out;
  any_generalizer(x, [&](Slot s) {
    out.push_back(s);
    return false;
  });
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Slot> TupleSet::instance_candidates(std::span<const TermId> x) const {
  if (is_ground(*store_, x)) {
    std::vector<Slot> out;
    if (auto s = find_ground(x)) out.push_back(*s);
    return out;
  }
  const std::vector<Slot>* best = nullptr;
  for (std::size_t p = 0; p < width_; ++p) {
    if (!store_->is_ground(x[p])) continue;
    const auto& b = bucket(all_index()[p].ground, x[p]);
    if (!best || b.size() < best->size()) best = &b;
  }
  if (!best) return slots();
  return collect({best});
}

std::vector<Slot> TupleSet::unifiable_candidates(
    std::span<const std::pair<std::size_t, TermId>> probes) const {
  std::size_t best = std::numeric_limits<std::size_t>::max();
  const std::pair<std::size_t, TermId>* chosen = nullptr;
  for (const auto& probe : probes) {
    if (!store_->is_ground(probe.second)) continue;
    const auto& idx = all_index()[probe.first];
    std::size_t n = bucket(idx.ground, probe.second).size() + idx.non_ground.size();
    if (n < best) {
      best = n;
      chosen = &probe;
    }
  }
  if (!chosen) return slots();
  const auto& idx = all_[chosen->first];
  return collect({&bucket(idx.ground, chosen->second), &idx.non_ground});
}

// ---------------------------------------------------------------------------

bool subsumed_by_any(const TupleSet& set, const TermStore& store, std::span<const TermId> x) {
  return set.any_generalizer(x, [&](Slot s) { return matches(store, set[s], x); });
}

InsertResult insert_most_general(TupleSet& set, const TermStore& store, TupleView x) {
  InsertResult r;
  if (subsumed_by_any(set, store, x)) return r;
  for (Slot s : set.instance_candidates(x)) {
    if (matches(store, x, set[s])) {
      r.removed.push_back(s);
      set.erase(s);
    }
  }
  r.slot = set.insert(x);
  r.inserted = true;
  return r;
}

}  // namespace qsqn
