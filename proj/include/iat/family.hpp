#pragma once

// Nested region families B_{s,x} and weights lambda(s,x) for the integral
// average transform.
//
// Every family is written in sublevel form: B_{s,x} = {y : level_x(y) < s},
// which makes the family nested in s by construction. For a fixed x the grid
// cells are sorted by level once (a LevelOrder); each B_{s,x} is then a
// prefix of that order.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "iat/field.hpp"
#include "iat/levels.hpp"
#include "iat/pai.hpp"

namespace iat {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Grid cells sorted by their level for one centre x.
struct LevelOrder {
  std::vector<double> level;      // ascending
  std::vector<std::size_t> cell;  // cell[i] has level[i]
  double cell_measure = 0.0;
  /// Ascending levels of every point counted by the measure when the family
  /// extends past the grid (metric balls over the zero-extended field).
  /// Null means the measure counts grid cells only.
  std::shared_ptr<const std::vector<double>> measure_levels;

  std::size_t count_below(double s) const {
    return static_cast<std::size_t>(std::lower_bound(level.begin(), level.end(), s) - level.begin());
  }

  double measure_below(double s) const {
    if (measure_levels) {
      const auto& m = *measure_levels;
      return static_cast<double>(std::lower_bound(m.begin(), m.end(), s) - m.begin()) * cell_measure;
    }
    return static_cast<double>(count_below(s)) * cell_measure;
  }

  /// Levels at which the measure changes, ascending and distinct.
  std::vector<double> breakpoints() const {
    const auto& src = measure_levels ? *measure_levels : level;
    std::vector<double> out;
    for (double v : src) {
      if (!std::isfinite(v)) break;
      if (out.empty() || v != out.back()) out.push_back(v);
    }
    return out;
  }
};

namespace detail {
inline LevelOrder sort_levels(const GridSpec& grid, std::vector<double> levels) {
  LevelOrder o;
  o.cell_measure = grid.cell_measure();
  o.cell.resize(grid.size());
  std::iota(o.cell.begin(), o.cell.end(), std::size_t{0});
  std::stable_sort(o.cell.begin(), o.cell.end(), [&](std::size_t a, std::size_t b) { return levels[a] < levels[b]; });
  o.level.resize(grid.size());
  for (std::size_t i = 0; i < o.cell.size(); ++i) o.level[i] = levels[o.cell[i]];
  return o;
}
}  // namespace detail

/// Parameter range of a family.
struct ParameterDomain {
  double lo = 0.0;
  double hi = kInf;
};

/// Euclidean balls B_s(x) = {y : |y - x| < s}. With zero extension the ball
/// measure counts the whole cell-centre lattice, so balls may leave the grid.
class BallFamily {
 public:
  explicit BallFamily(bool zero_extension = true)
      : zero_extension_(zero_extension), lattice_(std::make_shared<LatticeSlot>()) {}

  ParameterDomain domain() const { return {0.0, kInf}; }
  bool zero_extension() const { return zero_extension_; }

  double level(std::span<const double> x, std::span<const double> y) const { return detail::distance(x, y); }

  LevelOrder order(const GridSpec& grid, std::span<const double> x) const {
    std::vector<double> lv(grid.size());
    Point c(grid.dim());
    double far = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      grid.center_into(i, c);
      lv[i] = detail::distance(c, x);
      far = std::max(far, lv[i]);
    }
    LevelOrder o = detail::sort_levels(grid, std::move(lv));
    if (zero_extension_) o.measure_levels = lattice_->get(grid.spacing()).distances(grid, x, far + extra_radius_);
    return o;
  }

  /// Lattice reach beyond the farthest grid cell, for s-grids that run past it.
  void set_extra_radius(double r) { extra_radius_ = r; }

 private:
  // Copies share one lattice cache.
  struct LatticeSlot {
    std::mutex mutex;
    std::vector<double> spacing;
    std::shared_ptr<LatticeBalls> balls;

    const LatticeBalls& get(const std::vector<double>& h) {
      std::lock_guard lock(mutex);
      if (!balls || spacing != h) {
        spacing = h;
        balls = std::make_shared<LatticeBalls>(h);
      }
      return *balls;
    }
  };

  bool zero_extension_;
  double extra_radius_ = 0.0;
  std::shared_ptr<LatticeSlot> lattice_;
};

/// The hot spots B_s of a prediction psi, re-indexed by sigma = 1 - s so that
/// the family grows with its parameter. The centre is implicit (argmax psi).
class SuperlevelFamily {
 public:
  SuperlevelFamily(const ScalarField& psi, const Region& study) : grid_(psi.grid()) {
    LevelIndex index(psi, study);
    levels_.assign(grid_.size(), kInf);
    // Exit levels are shared by all cells of a value group.
    const auto order = index.order();
    std::size_t pos = 0;
    while (pos < order.size()) {
      const std::size_t end = index.group_end(pos);
      const double t = index.exit_level(pos);
      for (std::size_t i = pos; i < end; ++i) levels_[order[i]] = t > 0.0 ? 1.0 - t : kInf;
      pos = end;
    }
  }

  ParameterDomain domain() const { return {0.0, 1.0}; }

  LevelOrder order(const GridSpec& grid, std::span<const double>) const {
    detail::require_same_grid(grid, grid_, "iat");
    return detail::sort_levels(grid, levels_);
  }

  /// sigma at which the cell enters the family (inf if never).
  double cell_level(std::size_t cell) const { return levels_[cell]; }

 private:
  GridSpec grid_;
  std::vector<double> levels_;
};

/// B_{s,x} = psi_x^{-1}((-inf, s)) for a user-supplied psi_x(y).
class SublevelFamily {
 public:
  using LevelFn = std::function<double(std::span<const double> x, std::span<const double> y)>;

  SublevelFamily(LevelFn fn, ParameterDomain domain) : fn_(std::move(fn)), domain_(domain) {}

  ParameterDomain domain() const { return domain_; }
  double level(std::span<const double> x, std::span<const double> y) const { return fn_(x, y); }

  LevelOrder order(const GridSpec& grid, std::span<const double> x) const {
    std::vector<double> lv(grid.size());
    Point c(grid.dim());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      grid.center_into(i, c);
      lv[i] = fn_(x, c);
    }
    return detail::sort_levels(grid, std::move(lv));
  }

 private:
  LevelFn fn_;
  ParameterDomain domain_;
};

/// A nonnegative two-point kernel K(y, x).
struct KernelSpec {
  std::function<double(std::span<const double> y, std::span<const double> x)> eval;
  bool symmetric = true;
  bool singular_at_diagonal = false;
  std::string name;

  double operator()(std::span<const double> y, std::span<const double> x) const { return eval(y, x); }

  /// Fundamental solution of -Laplace in R^n, n >= 3.
  static KernelSpec laplace(int n) {
    if (n < 3) throw Error("kernel", ErrorCode::DomainError, "laplace kernel needs n >= 3");
    const double c = 1.0 / (n * (n - 2) * detail::unit_ball_volume(n));
    return {[n, c](std::span<const double> y, std::span<const double> x) {
              const double r = detail::distance(y, x);
              return r > 0.0 ? c * std::pow(r, 2.0 - n) : kInf;
            },
            true, true, "laplace"};
  }

  static KernelSpec constant(double value) {
    return {[value](std::span<const double>, std::span<const double>) { return value; }, true, false, "constant"};
  }

  /// exp(-|y - x| / scale)
  static KernelSpec exponential(double scale) {
    return {[scale](std::span<const double> y, std::span<const double> x) {
              return std::exp(-detail::distance(y, x) / scale);
            },
            true, false, "exp"};
  }
};

/// B_{s,x} = {y : K(y,x) > s^(-1/q)}, the sublevel family of 1/K^q.
class KernelFamily {
 public:
  KernelFamily(KernelSpec kernel, double q) : kernel_(std::move(kernel)), q_(q) {
    if (!(q > 0.0)) throw Error("kernel", ErrorCode::DomainError, "kernel exponent q must be positive");
  }

  ParameterDomain domain() const { return {0.0, kInf}; }
  double q() const { return q_; }
  const KernelSpec& kernel() const { return kernel_; }

  double level(std::span<const double> x, std::span<const double> y) const {
    const double k = kernel_(y, x);
    if (k <= 0.0) return kInf;
    if (!std::isfinite(k)) return 0.0;
    return std::pow(k, -q_);
  }

  LevelOrder order(const GridSpec& grid, std::span<const double> x) const {
    std::vector<double> lv(grid.size());
    Point c(grid.dim());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      grid.center_into(i, c);
      lv[i] = level(x, c);
    }
    return detail::sort_levels(grid, std::move(lv));
  }

 private:
  KernelSpec kernel_;
  double q_;
};

/// Anything that can produce a LevelOrder for a centre and report its domain.
template <class F>
concept RegionFamily = requires(const F& f, const GridSpec& g, std::span<const double> x) {
  { f.order(g, x) } -> std::same_as<LevelOrder>;
  { f.domain() } -> std::same_as<ParameterDomain>;
};

using AnyFamily = std::variant<BallFamily, SuperlevelFamily, SublevelFamily, KernelFamily>;

namespace weight {
/// lambda = c
struct Constant {
  double value = 1.0;
};
/// lambda(s) = s / n: |B_s| / |∂B_s| for Euclidean balls in R^n.
struct Ball {
  int n = 3;
};
/// lambda(s) = |B_s| / (q s^(1/q + 1)), which pairs with KernelFamily.
struct KernelDerived {
  double q = 1.0;
};
/// A hot-spot penalty evaluated on the region itself.
struct Penalty {
  PenaltySpec spec;
  double study_measure = 0.0;
};
}  // namespace weight

using WeightSpec = std::variant<weight::Constant, weight::Ball, weight::KernelDerived, weight::Penalty>;

inline bool weight_needs_perimeter(const WeightSpec& w) {
  const auto* p = std::get_if<weight::Penalty>(&w);
  return p && needs_perimeter(p->spec);
}

/// lambda(s, x) given the measure (and, for penalties, the perimeter) of B_{s,x}.
inline double evaluate_weight(const WeightSpec& w, double s, double measure, double perimeter = 0.0) {
  struct Visitor {
    double s, measure, perimeter;
    double operator()(const weight::Constant& c) const { return c.value; }
    double operator()(const weight::Ball& b) const { return s >= 0.0 ? s / b.n : 0.0; }
    double operator()(const weight::KernelDerived& k) const {
      return s > 0.0 ? measure / (k.q * std::pow(s, 1.0 / k.q + 1.0)) : 0.0;
    }
    double operator()(const weight::Penalty& p) const {
      RegionStats st{measure, p.study_measure};
      st.perimeter = perimeter;
      return penalty_factor(p.spec, st);
    }
  };
  return std::visit(Visitor{s, measure, perimeter}, w);
}

/// Closed form of ∫_S^∞ lambda(s) / |B_s| ds in the continuum, for the
/// unbounded families that have one; a compactly supported f contributes
/// mass(f) times this once B_S covers its support.
template <class Family>
std::optional<double> tail_factor(const Family& family, const WeightSpec& w, double upper, std::size_t dim) {
  if constexpr (std::same_as<Family, BallFamily>) {
    const int n = static_cast<int>(dim);
    const double omega = detail::unit_ball_volume(n);
    if (const auto* b = std::get_if<weight::Ball>(&w)) {
      if (n >= 3) return std::pow(upper, 2.0 - n) / (n * (n - 2) * omega) * (n / static_cast<double>(b->n));
      return std::nullopt;
    }
    if (const auto* c = std::get_if<weight::Constant>(&w)) {
      if (n >= 2) return c->value * std::pow(upper, 1.0 - n) / ((n - 1) * omega);
    }
    return std::nullopt;
  } else if constexpr (std::same_as<Family, KernelFamily>) {
    if (const auto* k = std::get_if<weight::KernelDerived>(&w)) return std::pow(upper, -1.0 / k->q);
    return std::nullopt;
  } else {
    (void)family;
    (void)w;
    (void)upper;
    (void)dim;
    return std::nullopt;
  }
}

/// Quadrature nodes on the family parameter.
struct SGrid {
  std::vector<double> nodes;
  std::vector<double> weights;
  double lo = 0.0;
  double hi = 0.0;

  /// Midpoint rule with n equal panels on [lo, hi].
  static SGrid midpoint(double lo, double hi, std::size_t n) {
    if (n < 1 || !(hi > lo)) throw Error("iat", ErrorCode::DomainError, "s-grid needs hi > lo and n >= 1");
    SGrid g;
    g.lo = lo;
    g.hi = hi;
    const double h = (hi - lo) / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
      g.nodes.push_back(lo + (static_cast<double>(k) + 0.5) * h);
      g.weights.push_back(h);
    }
    return g;
  }

  /// Uniform panels on [lo, hi], with the first panel split geometrically
  /// (ratio 1/2) into `refine` panels that shrink toward lo.
  static SGrid hybrid(double lo, double hi, std::size_t n, std::size_t refine) {
    SGrid g = midpoint(lo, hi, n);
    if (refine == 0) return g;
    const double first = g.weights.front();
    g.nodes.erase(g.nodes.begin());
    g.weights.erase(g.weights.begin());
    std::vector<double> edges{lo + first};
    for (std::size_t k = 0; k < refine; ++k) edges.push_back(lo + (edges.back() - lo) * 0.5);
    edges.push_back(lo);
    std::reverse(edges.begin(), edges.end());
    std::vector<double> nodes, weights;
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
      nodes.push_back(0.5 * (edges[k] + edges[k + 1]));
      weights.push_back(edges[k + 1] - edges[k]);
    }
    nodes.insert(nodes.end(), g.nodes.begin(), g.nodes.end());
    weights.insert(weights.end(), g.weights.begin(), g.weights.end());
    g.nodes = std::move(nodes);
    g.weights = std::move(weights);
    return g;
  }
};

}  // namespace iat
