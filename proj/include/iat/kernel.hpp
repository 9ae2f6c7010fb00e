#pragma once

// Kernels behind averaged PAI and behind the integral average transform:
//
//   * the layered kernel K_psi(y) = ∫_0^1 lambda(B_s)/|B_s| 1_{B_s}(y) ds,
//     whose inner product with phi reproduces the averaged PAI;
//   * K(y, x) = ∫ lambda(s,x)/|B_{s,x}| 1_{B_{s,x}}(y) ds for any nested
//     family, and the converse construction of a family from a kernel.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "iat/family.hpp"
#include "iat/field.hpp"
#include "iat/levels.hpp"
#include "iat/pai.hpp"

namespace iat {

inline constexpr double kDefaultKernelCap = 1e6;

struct LayeredKernel {
  ScalarField values;                       // K_psi per cell, zero outside A
  ScalarField exit_levels;                  // t(y) per cell
  std::vector<std::size_t> singular_cells;  // cells whose integral hit the cap
  PenaltySpec penalty;
};

struct LayeredKernelOptions {
  double cap = kDefaultKernelCap;
  /// Observed density, read only by the hit-rate penalty.
  const ScalarField* observed = nullptr;
};

/// K_psi by midpoint quadrature in s. The exit levels t(y) partition [0, 1];
/// B_s is constant between consecutive exit levels, so the quadrature runs
/// cumulatively over that partition with max(1, ceil(s_panels * width))
/// panels per piece, which keeps K_psi monotone in psi.
inline LayeredKernel layered_kernel(const ScalarField& psi, const Region& study, const PenaltySpec& spec,
                                    std::size_t s_panels, const LayeredKernelOptions& opt = {}) {
  if (s_panels < 1) throw Error("kernel", ErrorCode::DomainError, "s_panels must be >= 1");
  const ScalarField& observed = opt.observed ? *opt.observed : psi;
  LevelPai levels(psi, observed, study, spec);
  const LevelIndex& index = levels.index();
  const auto order = index.order();

  // Value groups in order of increasing exit level (lowest psi first).
  struct Group {
    std::size_t begin, end;
    double t;
  };
  std::vector<Group> groups;
  for (std::size_t pos = 0; pos < order.size();) {
    const std::size_t end = index.group_end(pos);
    groups.push_back({pos, end, index.exit_level(pos)});
    pos = end;
  }
  std::reverse(groups.begin(), groups.end());

  std::vector<double> k(psi.size(), 0.0);
  std::vector<double> t_field(psi.size(), 0.0);
  LayeredKernel out{ScalarField(psi.grid()), ScalarField(psi.grid()), {}, spec};
  detail::CompensatedSum running;
  double t_prev = 0.0;
  bool capped = false;
  for (const auto& g : groups) {
    if (g.t > t_prev && !capped) {
      const double width = g.t - t_prev;
      const auto panels = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(width * static_cast<double>(s_panels))));
      const double h = width / static_cast<double>(panels);
      for (std::size_t j = 0; j < panels; ++j) {
        const double s = t_prev + (static_cast<double>(j) + 0.5) * h;
        running.add(h * levels.weight_over_measure(index.quantile(s).count));
      }
      t_prev = g.t;
    }
    double value = g.t > 0.0 ? running.value() : 0.0;
    if (value > opt.cap || capped) {
      capped = true;
      value = opt.cap;
    }
    for (std::size_t i = g.begin; i < g.end; ++i) {
      k[order[i]] = value;
      t_field[order[i]] = g.t;
      if (capped) out.singular_cells.push_back(order[i]);
    }
  }
  std::sort(out.singular_cells.begin(), out.singular_cells.end());
  out.values = ScalarField(psi.grid(), std::move(k));
  out.exit_levels = ScalarField(psi.grid(), std::move(t_field));
  return out;
}

/// Averaged PAI written as the inner product of phi with K_psi.
inline double pai_via_kernel(const ScalarField& psi, const ScalarField& phi, const Region& study,
                             const PenaltySpec& spec, std::size_t s_panels) {
  detail::require_same_grid(psi.grid(), phi.grid(), "kernel");
  LayeredKernelOptions opt;
  opt.observed = &phi;
  const auto lk = layered_kernel(psi, study, spec, s_panels, opt);
  detail::CompensatedSum acc;
  for (std::size_t i = 0; i < phi.size(); ++i) acc.add(phi[i] * lk.values[i]);
  const double inner = acc.value() * phi.grid().cell_measure();
  const double avg = average(phi, study);
  if (avg == 0.0) throw Error("kernel", ErrorCode::DegenerateDensity, "observed density has zero mass on the study region");
  return inner / avg;
}

/// Closed forms for the one-dimensional density
///   psi(x) = (p/2) (1 - |x|)^(p-1) on [-1, 1],
/// with A = [-1, 1] and unit penalty. For p = 1 psi is uniform and the
/// hot spot is all of A at every level.
class Example1 {
 public:
  explicit Example1(double p) : p_(p) {
    if (!(p >= 1.0)) throw Error("kernel", ErrorCode::DomainError, "Example 1 closed forms need p >= 1");
  }

  double p() const { return p_; }

  double density(double x) const {
    if (x < -1.0 || x >= 1.0) return 0.0;
    return 0.5 * p_ * std::pow(1.0 - std::abs(x), p_ - 1.0);
  }

  /// r(s) = (p/2) s^((p-1)/p)
  double level(double s) const {
    check_s(s);
    return 0.5 * p_ * std::pow(s, (p_ - 1.0) / p_);
  }

  /// |B_s| = 2 (1 - s^(1/p)); constant 2 for the uniform case.
  double measure(double s) const {
    check_s(s);
    if (p_ == 1.0) return 2.0;
    return 2.0 * (1.0 - std::pow(s, 1.0 / p_));
  }

  /// t(y) = (1 - |y|)^p
  double exit_level(double y) const {
    check_y(y);
    return std::pow(1.0 - std::abs(y), p_);
  }

  /// K(y) = ∫_0^t(y) ds / |B_s|, integrated numerically after the change of
  /// variables s = (1 - e^{-v})^p, which turns it into
  ///   ∫_0^{-ln|y|} (p/2) (1 - e^{-v})^(p-1) dv.
  double kernel(double y) const {
    check_y(y);
    const double ay = std::abs(y);
    if (ay == 0.0) throw Error("kernel", ErrorCode::SingularPoint, "layered kernel diverges at the maximum");
    if (p_ == 1.0) return 0.5 * exit_level(y);
    const double upper = -std::log(ay);
    const double p = p_;
    return detail::adaptive_simpson(
        [p](double v) { return 0.5 * p * std::pow(-std::expm1(-v), p - 1.0); }, 0.0, upper, 1e-13);
  }

  /// psi sampled on `cells` equal cells of [-1, 1].
  ScalarField sample(std::size_t cells) const {
    return ScalarField::sample(GridSpec::cube(1, -1.0, 1.0, cells),
                               [this](std::span<const double> x) { return density(x[0]); });
  }

 private:
  static void check_s(double s) {
    if (!(s >= 0.0 && s <= 1.0)) throw Error("kernel", ErrorCode::DomainError, "s must lie in [0, 1]");
  }
  static void check_y(double y) {
    if (!(std::abs(y) <= 1.0)) throw Error("kernel", ErrorCode::DomainError, "y must lie in [-1, 1]");
  }
  double p_;
};

struct KernelValue {
  double value = 0.0;
  bool capped = false;
};

/// K(., x) for every grid cell from one sweep over the family's breakpoints.
/// The integrand lambda(s)/|B_s| is integrated piecewise between consecutive
/// levels where the measure changes (3-point Gauss-Legendre on pieces refined
/// so that hi/lo <= 1.25), from each cell's own level up to `upper`; for
/// unbounded families an analytic tail beyond `upper` is added when
/// `with_tail` is set and a closed form exists.
class KernelColumn {
 public:
  template <RegionFamily Family>
  KernelColumn(const Family& family, const WeightSpec& weight, const GridSpec& grid, std::span<const double> x,
               double upper, bool with_tail = true, double cap = kDefaultKernelCap)
      : order_(family.order(grid, x)), cap_(cap) {
    const ParameterDomain dom = family.domain();
    upper_ = std::min(upper, dom.hi);
    if (!(upper_ > dom.lo) || !std::isfinite(upper_)) {
      throw Error("kernel", ErrorCode::DomainError, "kernel truncation must be finite and inside the family domain");
    }
    if (weight_needs_perimeter(weight)) {
      std::size_t finite = order_.count_below(kInf);
      perimeters_ = prefix_perimeters(grid, std::span(order_.cell).first(finite));
    }
    if (with_tail && std::isinf(dom.hi)) {
      bool extended = true;
      if constexpr (std::same_as<Family, BallFamily>) extended = family.zero_extension();
      if (extended && tail_factor(family, weight, upper_, grid.dim())) {
        const std::size_t dim = grid.dim();
        tail_fn_ = [family, weight, dim](double s) { return *tail_factor(family, weight, s, dim); };
        tail_ = tail_fn_(upper_);
      }
    }
    build(weight);
  }

  const LevelOrder& order() const { return order_; }
  double tail() const { return tail_; }
  double upper() const { return upper_; }

  /// K for a parameter level (the level at which the point enters B_{s,x}).
  KernelValue at_level(double level) const {
    if (!(level < upper_)) return clamp(tail_fn_ && std::isfinite(level) ? tail_fn_(level) : 0.0);
    // piece i spans [bp_[i], bp_[i+1]) with cumulative integral cum_[i] from bp_[i] to upper.
    auto it = std::upper_bound(bp_.begin(), bp_.end(), level);
    if (it == bp_.begin()) {
      // below the first breakpoint the family is empty, so the point's own
      // level cannot lie here; integrate from the first breakpoint.
      return clamp(cum_.empty() ? tail_ : cum_.front() + tail_);
    }
    const std::size_t i = static_cast<std::size_t>(it - bp_.begin()) - 1;
    const double b = i + 1 < bp_.size() ? bp_[i + 1] : upper_;
    const double partial = piece_integral(level, b, piece_measure_[i], piece_perimeter_[i]);
    const double rest = i + 1 < cum_.size() ? cum_[i + 1] : 0.0;
    return clamp(partial + rest + tail_);
  }

  KernelValue at_cell(std::size_t cell) const {
    if (inverse_.empty()) {
      inverse_.resize(order_.cell.size());
      for (std::size_t i = 0; i < order_.cell.size(); ++i) inverse_[order_.cell[i]] = i;
    }
    return at_level(order_.level[inverse_[cell]]);
  }

  /// K(., x) on the whole grid; cells that hit the cap are appended to `capped`.
  ScalarField field(const GridSpec& grid, std::vector<std::size_t>* capped = nullptr) const {
    std::vector<double> v(grid.size(), 0.0);
    for (std::size_t i = 0; i < order_.cell.size(); ++i) {
      const auto kv = at_level(order_.level[i]);
      v[order_.cell[i]] = kv.value;
      if (kv.capped && capped) capped->push_back(order_.cell[i]);
    }
    if (capped) std::sort(capped->begin(), capped->end());
    return ScalarField(grid, std::move(v));
  }

 private:
  KernelValue clamp(double v) const {
    if (v > cap_) return {cap_, true};
    return {v, false};
  }

  double piece_integral(double a, double b, double measure, double perimeter) const {
    if (!(b > a) || measure <= 0.0) return 0.0;
    static constexpr std::array<double, 3> xs{-0.7745966692414834, 0.0, 0.7745966692414834};
    static constexpr std::array<double, 3> ws{5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    const double max_width = (upper_ - lo_) / 256.0;
    double acc = 0.0;
    double lo = a;
    while (lo < b) {
      double hi = b;
      if (lo > 0.0) hi = std::min(hi, 1.25 * lo);
      hi = std::min(hi, lo + max_width);
      if (lo == 0.0) hi = std::min(hi, std::max(b * 1e-8, std::min(b, max_width)));
      if (!(hi > lo)) hi = b;
      const double c = 0.5 * (hi + lo);
      const double r = 0.5 * (hi - lo);
      for (std::size_t k = 0; k < 3; ++k) {
        const double s = c + r * xs[k];
        acc += r * ws[k] * evaluate_weight(weight_, s, measure, perimeter) / measure;
      }
      lo = hi;
    }
    return acc;
  }

  void build(const WeightSpec& weight) {
    weight_ = weight;
    bp_ = order_.breakpoints();
    lo_ = bp_.empty() ? 0.0 : bp_.front();
    while (!bp_.empty() && !(bp_.back() < upper_)) bp_.pop_back();
    const std::size_t m = bp_.size();
    piece_measure_.assign(m, 0.0);
    piece_perimeter_.assign(m, 0.0);
    cum_.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const double b = i + 1 < m ? bp_[i + 1] : upper_;
      const double mid = 0.5 * (bp_[i] + b);
      piece_measure_[i] = order_.measure_below(mid);
      if (!perimeters_.empty()) piece_perimeter_[i] = perimeters_[order_.count_below(mid)];
    }
    double acc = 0.0;
    for (std::size_t i = m; i-- > 0;) {
      const double b = i + 1 < m ? bp_[i + 1] : upper_;
      acc += piece_integral(bp_[i], b, piece_measure_[i], piece_perimeter_[i]);
      cum_[i] = acc;
    }
  }

  LevelOrder order_;
  WeightSpec weight_;
  double cap_;
  double upper_ = 0.0;
  double lo_ = 0.0;
  double tail_ = 0.0;
  std::function<double(double)> tail_fn_;
  std::vector<double> perimeters_;
  std::vector<double> bp_;
  std::vector<double> piece_measure_;
  std::vector<double> piece_perimeter_;
  std::vector<double> cum_;
  mutable std::vector<std::size_t> inverse_;
};

/// K(y, x) = ∫ lambda(s,x)/|B_{s,x}| 1_{B_{s,x}}(y) ds up to `upper` (plus the
/// analytic tail where one exists). y is mapped to the grid cell containing it.
template <RegionFamily Family>
KernelValue kernel_from_family(const Family& family, const WeightSpec& weight, const GridSpec& grid,
                               std::span<const double> x, std::span<const double> y, double upper,
                               double cap = kDefaultKernelCap) {
  const auto cell = grid.locate(y);
  if (!cell) throw Error("kernel", ErrorCode::DomainExceeded, "kernel evaluation point outside the grid");
  KernelColumn col(family, weight, grid, x, upper, true, cap);
  return col.at_cell(*cell);
}

/// Family B_{s,x} = [1/s < K(., x)^q] and weight lambda = |B_{s,x}| / (q s^(1/q+1)),
/// whose transform reproduces integration against K.
inline std::pair<KernelFamily, WeightSpec> family_from_kernel(const KernelSpec& kernel, double q) {
  if (!(q > 0.0)) throw Error("kernel", ErrorCode::DomainError, "kernel exponent q must be positive");
  return {KernelFamily(kernel, q), WeightSpec{weight::KernelDerived{q}}};
}

}  // namespace iat
