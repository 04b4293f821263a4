#include "parcover/intervals.hpp"

#include <algorithm>
#include <stdexcept>

namespace parcover {

IntervalSet IntervalSet::from_ids(std::span<const Id> ids) {
  std::vector<Id> sorted(ids.begin(), ids.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  IntervalSet out;
  for (Id id : sorted) {
    if (!out.ranges_.empty() && out.ranges_.back().hi + 1 == id)
      out.ranges_.back().hi = id;
    else
      out.ranges_.push_back({id, id});
  }
  return out;
}

IntervalSet IntervalSet::range(Id lo, Id hi) {
  IntervalSet out;
  if (lo <= hi) out.ranges_.push_back({lo, hi});
  return out;
}

IntervalSet IntervalSet::from_ranges(std::vector<Range> ranges) {
  std::erase_if(ranges, [](const Range& r) { return r.lo > r.hi; });
  std::sort(ranges.begin(), ranges.end(),
            [](const Range& a, const Range& b) { return a.lo < b.lo; });
  IntervalSet out;
  for (const Range& r : ranges) {
    if (!out.ranges_.empty() && r.lo <= out.ranges_.back().hi + 1)
      out.ranges_.back().hi = std::max(out.ranges_.back().hi, r.hi);
    else
      out.ranges_.push_back(r);
  }
  return out;
}

std::int64_t IntervalSet::count() const {
  std::int64_t n = 0;
  for (const Range& r : ranges_) n += r.hi - r.lo + 1;
  return n;
}

bool IntervalSet::contains(Id id) const {
  auto it = std::upper_bound(
      ranges_.begin(), ranges_.end(), id,
      [](Id v, const Range& r) { return v < r.lo; });
  if (it == ranges_.begin()) return false;
  --it;
  return id <= it->hi;
}

void IntervalSet::for_each(const std::function<void(Id)>& fn) const {
  for (const Range& r : ranges_)
    for (Id id = r.lo; id <= r.hi; ++id) fn(id);
}

std::vector<IntervalSet::Id> IntervalSet::to_ids() const {
  std::vector<Id> out;
  out.reserve(static_cast<std::size_t>(count()));
  for_each([&](Id id) { out.push_back(id); });
  return out;
}

bool IntervalSet::is_normalized() const {
  for (std::size_t i = 0; i < ranges_.size(); ++i) {
    if (ranges_[i].lo > ranges_[i].hi) return false;
    if (i > 0 && ranges_[i].lo <= ranges_[i - 1].hi + 1) return false;
  }
  return true;
}

Term IntervalSet::to_term() const {
  std::vector<Term> items;
  items.reserve(ranges_.size());
  for (const Range& r : ranges_) {
    std::vector<Term> args;
    args.reserve(2);
    args.push_back(Term::integer(r.lo));
    args.push_back(Term::integer(r.hi));
    items.push_back(Term::compound("r", std::move(args)));
  }
  return Term::list(std::move(items));
}

IntervalSet IntervalSet::from_term(const Term& t) {
  std::vector<Range> ranges;
  const Term* cell = &t;
  while (cell->is_cons()) {
    const Term& item = cell->args()[0];
    if (!item.is_functor("r", 2) || !item.args()[0].is_int() || !item.args()[1].is_int())
      throw std::invalid_argument("interval list items must be r(Lo,Hi)");
    ranges.push_back({item.args()[0].int_value(), item.args()[1].int_value()});
    cell = &cell->args()[1];
  }
  if (!cell->is_nil()) throw std::invalid_argument("interval list must be a proper list");
  return from_ranges(std::move(ranges));
}

IntervalSet set_union(const IntervalSet& a, const IntervalSet& b) {
  std::vector<IntervalSet::Range> merged;
  merged.reserve(a.ranges().size() + b.ranges().size());
  merged.insert(merged.end(), a.ranges().begin(), a.ranges().end());
  merged.insert(merged.end(), b.ranges().begin(), b.ranges().end());
  return IntervalSet::from_ranges(std::move(merged));
}

IntervalSet set_subtract(const IntervalSet& a, const IntervalSet& b) {
  std::vector<IntervalSet::Range> out;
  auto bit = b.ranges().begin();
  for (auto r : a.ranges()) {
    IntervalSet::Id lo = r.lo;
    while (bit != b.ranges().end() && bit->hi < lo) ++bit;
    auto cut = bit;
    while (cut != b.ranges().end() && cut->lo <= r.hi) {
      if (cut->lo > lo) out.push_back({lo, cut->lo - 1});
      lo = std::max(lo, cut->hi + 1);
      if (lo > r.hi) break;
      ++cut;
    }
    if (lo <= r.hi) out.push_back({lo, r.hi});
  }
  IntervalSet result;
  // already sorted, disjoint and non-adjacent: pieces of a normalized set
  result = IntervalSet::from_ranges(std::move(out));
  return result;
}

IntervalSet set_intersect(const IntervalSet& a, const IntervalSet& b) {
  std::vector<IntervalSet::Range> out;
  auto ai = a.ranges().begin();
  auto bi = b.ranges().begin();
  while (ai != a.ranges().end() && bi != b.ranges().end()) {
    IntervalSet::Id lo = std::max(ai->lo, bi->lo);
    IntervalSet::Id hi = std::min(ai->hi, bi->hi);
    if (lo <= hi) out.push_back({lo, hi});
    if (ai->hi < bi->hi)
      ++ai;
    else
      ++bi;
  }
  return IntervalSet::from_ranges(std::move(out));
}

}  // namespace parcover
