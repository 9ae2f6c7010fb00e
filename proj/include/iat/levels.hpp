#pragma once

// Superlevel sets of a density and the mass-quantile family B_s.
//
// For s in [0, 1], r(s) is the smallest threshold among the distinct cell
// values of psi on A (plus the sentinel 0) whose superlevel set [psi > r]
// carries at most (1 - s) of psi's mass on A. B_s = [psi > r(s)] ∩ A, except
// that an empty B_s is replaced by the argmax group (the cells attaining
// max psi), so |B_s| > 0 on the whole of [0, 1].

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <ostream>
#include <span>
#include <vector>

#include "iat/field.hpp"
#include "iat/field_io.hpp"

namespace iat {

struct QuantileLevel {
  double r = 0.0;              // threshold from the discrete rule
  double achieved_mass = 0.0;  // mass of [psi > r] ∩ A
  std::size_t count = 0;       // cells in B_s (after the argmax fallback)
  bool fallback = false;       // true when [psi > r] ∩ A was empty
};

/// Cells of a study region sorted by decreasing density, with prefix masses.
/// Every B_s is a prefix of `order()`; answering a level query costs a
/// binary search.
class LevelIndex {
 public:
  LevelIndex(const ScalarField& psi, const Region& study) : grid_(psi.grid()) {
    detail::require_same_grid(psi.grid(), study.grid(), "levels");
    order_.assign(study.cells().begin(), study.cells().end());
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t a, std::size_t b) { return psi[a] > psi[b]; });
    values_.resize(order_.size());
    prefix_mass_.assign(order_.size() + 1, 0.0);
    long double acc = 0.0L;
    for (std::size_t i = 0; i < order_.size(); ++i) {
      values_[i] = psi[order_[i]];
      acc += static_cast<long double>(std::max(values_[i], 0.0));
      prefix_mass_[i + 1] = static_cast<double>(acc) * grid_.cell_measure();
    }
    // Candidate thresholds, descending: every distinct nonnegative value,
    // then the sentinel 0. start = number of cells strictly above the value.
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (values_[i] < 0.0) break;
      if (i == 0 || values_[i] != values_[i - 1]) candidates_.push_back({values_[i], i});
    }
    const std::size_t positive = static_cast<std::size_t>(
        std::count_if(values_.begin(), values_.end(), [](double v) { return v > 0.0; }));
    if (candidates_.empty() || candidates_.back().value > 0.0) candidates_.push_back({0.0, positive});
    total_ = prefix_mass_[positive];
  }

  const GridSpec& grid() const { return grid_; }
  std::span<const std::size_t> order() const { return order_; }
  /// psi values along order().
  std::span<const double> sorted_values() const { return values_; }
  /// Mass of psi's positive part on A.
  double total_mass() const { return total_; }
  double max_value() const { return values_.empty() ? 0.0 : values_.front(); }

  /// Number of cells of A whose value attains the maximum.
  std::size_t argmax_count() const {
    return candidates_.size() > 1 ? candidates_[1].start : order_.size();
  }

  std::size_t count_above(double r) const {
    auto it = std::partition_point(values_.begin(), values_.end(), [&](double v) { return v > r; });
    return static_cast<std::size_t>(it - values_.begin());
  }

  double mass_above(double r) const { return prefix_mass_[count_above(r)]; }
  double prefix_mass(std::size_t count) const { return prefix_mass_[count]; }

  QuantileLevel quantile(double s) const {
    if (!(total_ > 0.0)) {
      throw Error("levels", ErrorCode::DegenerateDensity, "density has no positive mass on the study region");
    }
    if (!(s >= 0.0 && s <= 1.0)) throw Error("levels", ErrorCode::DomainError, "level s must lie in [0, 1]");
    const double target = (1.0 - s) * total_ + 1e-12 * total_;
    // masses P[start] increase along candidates_; find the last one within budget.
    std::size_t lo = 0;
    std::size_t hi = candidates_.size();
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      if (prefix_mass_[candidates_[mid].start] <= target) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    QuantileLevel q;
    q.r = candidates_[lo].value;
    q.count = candidates_[lo].start;
    q.achieved_mass = prefix_mass_[q.count];
    if (q.count == 0) {
      q.fallback = true;
      q.count = argmax_count();
    }
    return q;
  }

  /// Whether the cell at position `pos` of order() belongs to B_s.
  bool contains(double s, std::size_t pos) const { return group_end(pos) <= quantile(s).count; }

  /// t = sup{s in [0,1] : cell at position pos belongs to B_s}, by bisection.
  double exit_level(std::size_t pos, int iterations = 60) const {
    if (!contains(0.0, pos)) return 0.0;
    if (contains(1.0, pos)) return 1.0;
    double lo = 0.0;
    double hi = 1.0;
    for (int i = 0; i < iterations; ++i) {
      const double mid = 0.5 * (lo + hi);
      (contains(mid, pos) ? lo : hi) = mid;
    }
    return lo;
  }

  /// One past the last position holding the same value as `pos`.
  std::size_t group_end(std::size_t pos) const {
    const double v = values_[pos];
    auto it = std::partition_point(values_.begin() + static_cast<std::ptrdiff_t>(pos), values_.end(),
                                   [&](double x) { return x >= v; });
    return static_cast<std::size_t>(it - values_.begin());
  }

  Region prefix_region(std::size_t count) const {
    return Region(grid_, std::vector<std::size_t>(order_.begin(), order_.begin() + static_cast<std::ptrdiff_t>(count)));
  }

 private:
  struct Candidate {
    double value;
    std::size_t start;
  };

  GridSpec grid_;
  std::vector<std::size_t> order_;
  std::vector<double> values_;
  std::vector<double> prefix_mass_;
  std::vector<Candidate> candidates_;
  double total_ = 0.0;
};

/// {cells of A : psi(cell) > r}
inline Region superlevel(const ScalarField& psi, double r, const Region& study) {
  detail::require_same_grid(psi.grid(), study.grid(), "levels");
  std::vector<std::size_t> cells;
  for (auto c : study.cells()) {
    if (psi[c] > r) cells.push_back(c);
  }
  return Region(study.grid(), std::move(cells));
}

inline QuantileLevel quantile_level(const ScalarField& psi, double s, const Region& study) {
  return LevelIndex(psi, study).quantile(s);
}

inline Region mass_region(const ScalarField& psi, double s, const Region& study) {
  LevelIndex index(psi, study);
  return index.prefix_region(index.quantile(s).count);
}

enum class LevelSampling { riemann, midpoint };

struct LevelProfile {
  std::vector<double> s;
  std::vector<double> r;
  std::vector<Region> regions;
  std::vector<double> measures;
  std::vector<double> achieved_mass;
  std::vector<bool> fallback;
};

/// Samples the level family at s = i/N (riemann) or (i - 1/2)/N (midpoint).
inline LevelProfile build_profile(const ScalarField& psi, const Region& study, std::size_t n,
                                  LevelSampling sampling = LevelSampling::riemann) {
  if (n < 1) throw Error("levels", ErrorCode::DomainError, "profile needs at least one level");
  LevelIndex index(psi, study);
  LevelProfile p;
  for (std::size_t i = 1; i <= n; ++i) {
    const double s = sampling == LevelSampling::riemann
                         ? static_cast<double>(i) / static_cast<double>(n)
                         : (static_cast<double>(i) - 0.5) / static_cast<double>(n);
    const auto q = index.quantile(s);
    p.s.push_back(s);
    p.r.push_back(q.r);
    p.regions.push_back(index.prefix_region(q.count));
    p.measures.push_back(static_cast<double>(q.count) * psi.grid().cell_measure());
    p.achieved_mass.push_back(q.achieved_mass);
    p.fallback.push_back(q.fallback);
  }
  return p;
}

inline void write_profile_csv(std::ostream& out, const LevelProfile& p) {
  out << "s,r,measure,achieved_mass\n";
  for (std::size_t i = 0; i < p.s.size(); ++i) {
    out << io::format_double(p.s[i]) << ',' << io::format_double(p.r[i]) << ','
        << io::format_double(p.measures[i]) << ',' << io::format_double(p.achieved_mass[i]) << '\n';
  }
}

}  // namespace iat
