#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "parcover/term.hpp"

namespace parcover {

/// Normalized set of inclusive example-ID ranges. Ranges are kept sorted,
/// non-overlapping and non-adjacent (consecutive ranges (a,b),(c,d) satisfy
/// c > b + 1), so equal sets have equal representations.
class IntervalSet {
 public:
  using Id = std::int64_t;

  struct Range {
    Id lo;
    Id hi;
    friend bool operator==(const Range&, const Range&) = default;
  };

  IntervalSet() = default;

  static IntervalSet from_ids(std::span<const Id> ids);
  static IntervalSet from_ids(const std::vector<Id>& ids) {
    return from_ids(std::span<const Id>(ids));
  }
  /// Single inclusive range [lo, hi]; empty set when lo > hi.
  static IntervalSet range(Id lo, Id hi);
  /// Normalizes arbitrary (possibly overlapping, unsorted) ranges.
  static IntervalSet from_ranges(std::vector<Range> ranges);

  const std::vector<Range>& ranges() const { return ranges_; }
  bool empty() const { return ranges_.empty(); }
  std::int64_t count() const;
  bool contains(Id id) const;
  Id min() const { return ranges_.front().lo; }

  void for_each(const std::function<void(Id)>& fn) const;
  std::vector<Id> to_ids() const;

  bool is_normalized() const;

  /// Wire form: a list of r(Lo,Hi) terms.
  Term to_term() const;
  static IntervalSet from_term(const Term& t);

  friend bool operator==(const IntervalSet&, const IntervalSet&) = default;

 private:
  std::vector<Range> ranges_;
};

IntervalSet set_union(const IntervalSet& a, const IntervalSet& b);
IntervalSet set_subtract(const IntervalSet& a, const IntervalSet& b);
IntervalSet set_intersect(const IntervalSet& a, const IntervalSet& b);

}  // namespace parcover
