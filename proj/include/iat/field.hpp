#pragma once

// Regular-grid scalar fields, cell-set regions, and midpoint-rule integration.
//
// A grid of shape (k_1, ..., k_n) covers the box [origin, origin + k * spacing].
// Cell i has centre origin + (i + 1/2) * spacing; a cell belongs to a region as
// a whole, decided by its centre. Linear cell indices are row-major (last axis
// fastest).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "iat/detail/numeric.hpp"
#include "iat/error.hpp"

namespace iat {

using Point = std::vector<double>;

class GridSpec {
 public:
  GridSpec() = default;

  GridSpec(Point origin, std::vector<double> spacing, std::vector<std::size_t> shape)
      : origin_(std::move(origin)), spacing_(std::move(spacing)), shape_(std::move(shape)) {
    const std::size_t n = shape_.size();
    if (n == 0 || origin_.size() != n || spacing_.size() != n) {
      throw Error("field", ErrorCode::DomainError,
                  "grid origin, spacing and shape must share a nonzero dimension");
    }
    cell_measure_ = 1.0;
    for (std::size_t a = 0; a < n; ++a) {
      if (!(spacing_[a] > 0.0) || !std::isfinite(spacing_[a])) {
        throw Error("field", ErrorCode::DomainError, "grid spacing must be positive");
      }
      if (shape_[a] < 2) {
        throw Error("field", ErrorCode::DomainError, "grid shape entries must be >= 2");
      }
      if (!std::isfinite(origin_[a])) {
        throw Error("field", ErrorCode::DomainError, "grid origin must be finite");
      }
      cell_measure_ *= spacing_[a];
    }
    strides_.assign(n, 1);
    for (std::size_t a = n - 1; a > 0; --a) strides_[a - 1] = strides_[a] * shape_[a];
    size_ = strides_[0] * shape_[0];
  }

  /// The cube [lo, hi]^dim split into `cells` cells per axis.
  static GridSpec cube(std::size_t dim, double lo, double hi, std::size_t cells) {
    return GridSpec(Point(dim, lo), std::vector<double>(dim, (hi - lo) / static_cast<double>(cells)),
                    std::vector<std::size_t>(dim, cells));
  }

  std::size_t dim() const { return shape_.size(); }
  std::size_t size() const { return size_; }
  double cell_measure() const { return cell_measure_; }
  const Point& origin() const { return origin_; }
  const std::vector<double>& spacing() const { return spacing_; }
  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t stride(std::size_t axis) const { return strides_[axis]; }

  double upper(std::size_t axis) const {
    return origin_[axis] + spacing_[axis] * static_cast<double>(shape_[axis]);
  }

  std::size_t coordinate(std::size_t cell, std::size_t axis) const {
    return (cell / strides_[axis]) % shape_[axis];
  }

  void center_into(std::size_t cell, std::span<double> out) const {
    for (std::size_t a = 0; a < dim(); ++a) {
      out[a] = origin_[a] + (static_cast<double>(coordinate(cell, a)) + 0.5) * spacing_[a];
    }
  }

  Point center(std::size_t cell) const {
    Point p(dim());
    center_into(cell, p);
    return p;
  }

  std::size_t linear(std::span<const std::size_t> coords) const {
    std::size_t idx = 0;
    for (std::size_t a = 0; a < dim(); ++a) idx += coords[a] * strides_[a];
    return idx;
  }

  bool inside_box(std::span<const double> x) const {
    for (std::size_t a = 0; a < dim(); ++a) {
      if (x[a] < origin_[a] || x[a] > upper(a)) return false;
    }
    return true;
  }

  /// Cell whose closed box contains x (upper faces belong to the lower cell
  /// on the grid boundary only).
  std::optional<std::size_t> locate(std::span<const double> x) const {
    if (x.size() != dim() || !inside_box(x)) return std::nullopt;
    std::size_t idx = 0;
    for (std::size_t a = 0; a < dim(); ++a) {
      auto k = static_cast<std::size_t>(std::floor((x[a] - origin_[a]) / spacing_[a]));
      k = std::min(k, shape_[a] - 1);
      idx += k * strides_[a];
    }
    return idx;
  }

  friend bool operator==(const GridSpec& a, const GridSpec& b) {
    return a.origin_ == b.origin_ && a.spacing_ == b.spacing_ && a.shape_ == b.shape_;
  }

 private:
  Point origin_;
  std::vector<double> spacing_;
  std::vector<std::size_t> shape_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
  double cell_measure_ = 0.0;
};

class ScalarField {
 public:
  ScalarField() = default;
  ScalarField(GridSpec grid, std::vector<double> values)
      : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
      throw Error("field", ErrorCode::GridMismatch, "value count does not match grid size");
    }
  }

  explicit ScalarField(GridSpec grid, double fill = 0.0)
      : grid_(std::move(grid)), values_(grid_.size(), fill) {}

  /// Samples fn at every cell centre.
  template <class Fn>
  static ScalarField sample(const GridSpec& grid, Fn&& fn) {
    std::vector<double> values(grid.size());
    Point c(grid.dim());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      grid.center_into(i, c);
      values[i] = fn(std::span<const double>(c));
    }
    return ScalarField(grid, std::move(values));
  }

  const GridSpec& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t cell) const { return values_[cell]; }
  std::size_t size() const { return values_.size(); }

  double max() const { return *std::max_element(values_.begin(), values_.end()); }
  double min() const { return *std::min_element(values_.begin(), values_.end()); }

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

/// A set of grid cells, kept sorted and unique.
class Region {
 public:
  Region() = default;
  Region(GridSpec grid, std::vector<std::size_t> cells) : grid_(std::move(grid)), cells_(std::move(cells)) {
    std::sort(cells_.begin(), cells_.end());
    cells_.erase(std::unique(cells_.begin(), cells_.end()), cells_.end());
    if (!cells_.empty() && cells_.back() >= grid_.size()) {
      throw Error("field", ErrorCode::DomainError, "region cell index outside the grid");
    }
  }

  static Region full(const GridSpec& grid) {
    std::vector<std::size_t> all(grid.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return Region(grid, std::move(all));
  }
  static Region empty(const GridSpec& grid) { return Region(grid, {}); }

  /// Cells whose centre satisfies pred.
  template <class Pred>
  static Region where(const GridSpec& grid, Pred&& pred) {
    std::vector<std::size_t> cells;
    Point c(grid.dim());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      grid.center_into(i, c);
      if (pred(std::span<const double>(c))) cells.push_back(i);
    }
    return Region(grid, std::move(cells));
  }

  /// Cells where the field is nonzero.
  static Region support(const ScalarField& f) {
    std::vector<std::size_t> cells;
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (f[i] != 0.0) cells.push_back(i);
    }
    return Region(f.grid(), std::move(cells));
  }

  const GridSpec& grid() const { return grid_; }
  std::span<const std::size_t> cells() const { return cells_; }
  std::size_t count() const { return cells_.size(); }
  bool is_empty() const { return cells_.empty(); }

  bool contains(std::size_t cell) const {
    return std::binary_search(cells_.begin(), cells_.end(), cell);
  }
  bool subset_of(const Region& other) const {
    return std::includes(other.cells_.begin(), other.cells_.end(), cells_.begin(), cells_.end());
  }

  std::vector<std::uint8_t> mask() const {
    std::vector<std::uint8_t> m(grid_.size(), 0);
    for (auto c : cells_) m[c] = 1;
    return m;
  }

  friend bool operator==(const Region& a, const Region& b) {
    return a.grid_ == b.grid_ && a.cells_ == b.cells_;
  }

 private:
  GridSpec grid_;
  std::vector<std::size_t> cells_;
};

namespace detail {
inline void require_same_grid(const GridSpec& a, const GridSpec& b, std::string_view module) {
  if (!(a == b)) throw Error(module, ErrorCode::GridMismatch, "field and region live on different grids");
}
}  // namespace detail

inline double region_measure(const Region& b) {
  return static_cast<double>(b.count()) * b.grid().cell_measure();
}

/// Midpoint rule: sum of f over the cells of B times the cell measure.
inline double integrate(const ScalarField& f, const Region& b) {
  detail::require_same_grid(f.grid(), b.grid(), "field");
  detail::CompensatedSum acc;
  for (auto c : b.cells()) acc.add(f[c]);
  return acc.value() * f.grid().cell_measure();
}

inline double integrate(const ScalarField& f) {
  return detail::sum(f.values()) * f.grid().cell_measure();
}

inline double average(const ScalarField& f, const Region& b) {
  detail::require_same_grid(f.grid(), b.grid(), "field");
  if (b.is_empty()) throw Error("field", ErrorCode::EmptyRegion, "average over an empty region");
  return integrate(f, b) / region_measure(b);
}

/// Measure of the cell faces separating B from its complement (grid
/// boundary faces included). Exact for axis-aligned regions.
inline double region_perimeter(const Region& b) {
  const GridSpec& g = b.grid();
  if (b.is_empty()) return 0.0;
  const auto in = b.mask();
  double total = 0.0;
  for (std::size_t a = 0; a < g.dim(); ++a) {
    const double face = g.cell_measure() / g.spacing()[a];
    std::size_t faces = 0;
    for (auto c : b.cells()) {
      const std::size_t k = g.coordinate(c, a);
      if (k == 0 || !in[c - g.stride(a)]) ++faces;
      if (k + 1 == g.shape()[a] || !in[c + g.stride(a)]) ++faces;
    }
    total += face * static_cast<double>(faces);
  }
  return total;
}

/// Perimeter of every prefix of `order` (perimeters[k] is the perimeter of
/// the first k cells), computed incrementally.
inline std::vector<double> prefix_perimeters(const GridSpec& g, std::span<const std::size_t> order) {
  std::vector<double> out(order.size() + 1, 0.0);
  std::vector<std::uint8_t> in(g.size(), 0);
  double p = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::size_t c = order[i];
    for (std::size_t a = 0; a < g.dim(); ++a) {
      const double face = g.cell_measure() / g.spacing()[a];
      const std::size_t k = g.coordinate(c, a);
      const bool lo_in = k > 0 && in[c - g.stride(a)];
      const bool hi_in = k + 1 < g.shape()[a] && in[c + g.stride(a)];
      p += face * ((lo_in ? -1.0 : 1.0) + (hi_in ? -1.0 : 1.0));
    }
    in[c] = 1;
    out[i + 1] = p;
  }
  return out;
}

/// Cells whose centre lies strictly within distance s of x.
inline Region ball_region(std::span<const double> x, double s, const GridSpec& grid) {
  if (s < 0.0) throw Error("field", ErrorCode::DomainError, "ball radius must be nonnegative");
  const double s2 = s * s;
  return Region::where(grid, [&](std::span<const double> c) { return detail::norm_sq(c, x) < s2; });
}

/// Rescales f so that its grid integral is one.
inline ScalarField normalize(const ScalarField& f) {
  const double total = integrate(f);
  if (!(total > 0.0)) throw Error("field", ErrorCode::DegenerateDensity, "cannot normalise a field with nonpositive mass");
  std::vector<double> v(f.values().begin(), f.values().end());
  for (auto& x : v) x /= total;
  return ScalarField(f.grid(), std::move(v));
}

/// True when f is nonnegative and integrates to 1 within eps.
inline bool is_density(const ScalarField& f, double eps = 1e-3) {
  if (f.min() < 0.0) return false;
  return std::abs(integrate(f) - 1.0) <= eps;
}

/// Tensor-product quadratic (3-point Lagrange) interpolation about the
/// nearest cell centre. Reproduces polynomials of degree <= 2 per axis.
/// Axes with only two cells fall back to linear interpolation.
inline double interpolate(const ScalarField& f, std::span<const double> x) {
  const GridSpec& g = f.grid();
  if (x.size() != g.dim() || !g.inside_box(x)) {
    throw Error("field", ErrorCode::DomainExceeded, "interpolation point outside the grid");
  }
  const std::size_t n = g.dim();
  std::vector<std::size_t> base(n);
  std::vector<std::array<double, 3>> w(n);
  std::vector<std::size_t> width(n);
  for (std::size_t a = 0; a < n; ++a) {
    const double u = (x[a] - g.origin()[a]) / g.spacing()[a] - 0.5;  // in cell-centre units
    if (g.shape()[a] >= 3) {
      auto mid = static_cast<long long>(std::llround(u));
      mid = std::clamp<long long>(mid, 1, static_cast<long long>(g.shape()[a]) - 2);
      const double t = u - static_cast<double>(mid);
      base[a] = static_cast<std::size_t>(mid - 1);
      w[a] = {0.5 * t * (t - 1.0), (1.0 - t) * (1.0 + t), 0.5 * t * (t + 1.0)};
      width[a] = 3;
    } else {
      const double t = u;
      base[a] = 0;
      w[a] = {1.0 - t, t, 0.0};
      width[a] = 2;
    }
  }
  double acc = 0.0;
  std::vector<std::size_t> k(n, 0);
  while (true) {
    double weight = 1.0;
    std::size_t idx = 0;
    for (std::size_t a = 0; a < n; ++a) {
      weight *= w[a][k[a]];
      idx += (base[a] + k[a]) * g.stride(a);
    }
    acc += weight * f[idx];
    std::size_t a = n;
    while (a > 0) {
      --a;
      if (++k[a] < width[a]) break;
      k[a] = 0;
      if (a == 0) return acc;
    }
  }
}

/// Sorted distances from a point to every cell centre of the infinite
/// lattice that extends a grid, cached by the point's offset within its
/// cell. Used to measure balls that leave the grid (the field is extended by
/// zero). Thread-safe.
class LatticeBalls {
 public:
  explicit LatticeBalls(std::vector<double> spacing) : spacing_(std::move(spacing)) {}

  /// Ascending distances from x to lattice centres within `radius` (at least).
  std::shared_ptr<const std::vector<double>> distances(const GridSpec& grid, std::span<const double> x,
                                                       double radius) const {
    const std::size_t n = spacing_.size();
    std::vector<double> frac(n);
    std::vector<long long> key(n);
    for (std::size_t a = 0; a < n; ++a) {
      const double u = (x[a] - grid.origin()[a]) / spacing_[a] - 0.5;
      frac[a] = u - std::floor(u);
      key[a] = std::llround(frac[a] * 1e9);
      if (key[a] == 1000000000LL) {
        key[a] = 0;
        frac[a] = 0.0;
      } else {
        frac[a] = static_cast<double>(key[a]) * 1e-9;
      }
    }
    std::lock_guard lock(mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end() && it->second.radius >= radius) return it->second.sorted;
    const double target = std::max(radius, it != cache_.end() ? 1.5 * it->second.radius : radius);
    auto sorted = std::make_shared<std::vector<double>>(build(frac, target));
    cache_[key] = Entry{target, sorted};
    return sorted;
  }

 private:
  struct Entry {
    double radius;
    std::shared_ptr<const std::vector<double>> sorted;
  };

  std::vector<double> build(const std::vector<double>& frac, double radius) const {
    const std::size_t n = spacing_.size();
    std::vector<long long> lo(n), hi(n), k(n);
    for (std::size_t a = 0; a < n; ++a) {
      const auto reach = static_cast<long long>(std::ceil(radius / spacing_[a])) + 1;
      lo[a] = -reach;
      hi[a] = reach;
      k[a] = lo[a];
    }
    const double r2 = radius * radius;
    std::vector<double> out;
    while (true) {
      double d2 = 0.0;
      for (std::size_t a = 0; a < n; ++a) {
        const double d = (static_cast<double>(k[a]) - frac[a]) * spacing_[a];
        d2 += d * d;
      }
      if (d2 <= r2) out.push_back(std::sqrt(d2));
      std::size_t a = n;
      bool done = true;
      while (a > 0) {
        --a;
        if (++k[a] <= hi[a]) {
          done = false;
          break;
        }
        k[a] = lo[a];
      }
      if (done) break;
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  std::vector<double> spacing_;
  mutable std::mutex mutex_;
  mutable std::map<std::vector<long long>, Entry> cache_;
};

}  // namespace iat
