#pragma once

// The integral average transform
//
//   u(x) = ∫ lambda(s, x) ⨍_{B_{s,x}} f ds
//
// for a nested family B_{s,x} and weight lambda, evaluated by quadrature on
// an s-grid, and its kernel form u(x) = ∫ f(y) K(y, x) dy.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "iat/detail/numeric.hpp"
#include "iat/family.hpp"
#include "iat/field.hpp"
#include "iat/kernel.hpp"

namespace iat {

struct TransformResult {
  double value = 0.0;
  double tail = 0.0;               // analytic contribution beyond the s-grid
  std::size_t skipped_empty = 0;   // nodes where B_{s,x} had zero measure
  bool tail_applied = false;
};

struct TransformOptions {
  /// Add the closed-form tail for unbounded families once B_{hi,x} covers supp f.
  bool analytic_tail = true;
};

namespace detail {

inline void check_sgrid(const SGrid& g, const ParameterDomain& dom) {
  if (g.nodes.empty() || g.nodes.size() != g.weights.size()) {
    throw Error("iat", ErrorCode::DomainError, "s-grid has no nodes or mismatched weights");
  }
  for (std::size_t k = 0; k < g.nodes.size(); ++k) {
    if (k > 0 && !(g.nodes[k] > g.nodes[k - 1])) {
      throw Error("iat", ErrorCode::FamilyNotNested, "s-grid nodes must increase strictly");
    }
    if (g.nodes[k] < dom.lo || g.nodes[k] > dom.hi || g.weights[k] < 0.0) {
      throw Error("iat", ErrorCode::DomainError, "s-grid leaves the family's parameter domain");
    }
  }
}

inline void check_order(const LevelOrder& o) {
  if (!std::is_sorted(o.level.begin(), o.level.end())) {
    throw Error("iat", ErrorCode::FamilyNotNested, "family levels are not ordered");
  }
  if (o.measure_levels && !std::is_sorted(o.measure_levels->begin(), o.measure_levels->end())) {
    throw Error("iat", ErrorCode::FamilyNotNested, "family measure is not monotone");
  }
}

/// Whether every cell where f is nonzero lies in B_{s,x}.
inline bool covers_support(const ScalarField& f, const LevelOrder& o, double s) {
  for (std::size_t i = o.count_below(s); i < o.cell.size(); ++i) {
    if (f[o.cell[i]] != 0.0) return false;
  }
  return true;
}

template <class Family>
bool has_extended_measure(const Family& family) {
  if constexpr (std::same_as<Family, BallFamily>) {
    return family.zero_extension();
  } else {
    (void)family;
    return true;
  }
}

}  // namespace detail

template <RegionFamily Family>
TransformResult transform(const ScalarField& f, const Family& family, const WeightSpec& weight,
                          std::span<const double> x, const SGrid& sgrid, const TransformOptions& opt = {}) {
  const ParameterDomain dom = family.domain();
  detail::check_sgrid(sgrid, dom);
  const LevelOrder o = family.order(f.grid(), x);
  detail::check_order(o);

  const double h = f.grid().cell_measure();
  std::vector<double> prefix(o.cell.size() + 1, 0.0);
  detail::CompensatedSum run;
  for (std::size_t i = 0; i < o.cell.size(); ++i) {
    run.add(f[o.cell[i]]);
    prefix[i + 1] = run.value() * h;
  }
  std::vector<double> perimeters;
  if (weight_needs_perimeter(weight)) perimeters = prefix_perimeters(f.grid(), o.cell);

  TransformResult res;
  detail::CompensatedSum acc;
  for (std::size_t k = 0; k < sgrid.nodes.size(); ++k) {
    const double s = sgrid.nodes[k];
    const double measure = o.measure_below(s);
    if (measure <= 0.0) {
      ++res.skipped_empty;
      continue;
    }
    const std::size_t count = o.count_below(s);
    const double lambda = evaluate_weight(weight, s, measure, perimeters.empty() ? 0.0 : perimeters[count]);
    acc.add(sgrid.weights[k] * lambda * prefix[count] / measure);
  }
  if (res.skipped_empty == sgrid.nodes.size()) {
    throw Error("iat", ErrorCode::EmptyFamily, "every sampled region of the family is empty");
  }
  if (opt.analytic_tail && std::isinf(dom.hi) && detail::has_extended_measure(family) &&
      detail::covers_support(f, o, sgrid.hi)) {
    if (auto t = tail_factor(family, weight, sgrid.hi, f.grid().dim())) {
      res.tail = prefix.back() * *t;
      res.tail_applied = true;
    }
  }
  res.value = acc.value() + res.tail;
  return res;
}

inline TransformResult transform(const ScalarField& f, const AnyFamily& family, const WeightSpec& weight,
                                 std::span<const double> x, const SGrid& sgrid, const TransformOptions& opt = {}) {
  return std::visit([&](const auto& fam) { return transform(f, fam, weight, x, sgrid, opt); }, family);
}

/// The transform evaluated at every cell centre.
template <class Family>
ScalarField transform_field(const ScalarField& f, const Family& family, const WeightSpec& weight, const SGrid& sgrid,
                            unsigned threads = 1, const TransformOptions& opt = {}) {
  const GridSpec& g = f.grid();
  std::vector<double> out(g.size(), 0.0);
  detail::parallel_for(g.size(), threads, [&](std::size_t i) {
    const Point x = g.center(i);
    out[i] = transform(f, family, weight, x, sgrid, opt).value;
  });
  return ScalarField(g, std::move(out));
}

/// The kernel the s-grid quadrature actually integrates against:
/// K_d(y) = Σ_k w_k lambda_k / |B_k| over the nodes with y ∈ B_k.
template <RegionFamily Family>
ScalarField discrete_kernel(const GridSpec& grid, const Family& family, const WeightSpec& weight,
                            std::span<const double> x, const SGrid& sgrid) {
  detail::check_sgrid(sgrid, family.domain());
  const LevelOrder o = family.order(grid, x);
  detail::check_order(o);
  std::vector<double> perimeters;
  if (weight_needs_perimeter(weight)) perimeters = prefix_perimeters(grid, o.cell);
  // contribution of node k lands on the first count_below(s_k) cells; sum from the top.
  std::vector<double> add(o.cell.size() + 1, 0.0);
  for (std::size_t k = 0; k < sgrid.nodes.size(); ++k) {
    const double s = sgrid.nodes[k];
    const double measure = o.measure_below(s);
    if (measure <= 0.0) continue;
    const std::size_t count = o.count_below(s);
    add[count] += sgrid.weights[k] * evaluate_weight(weight, s, measure, perimeters.empty() ? 0.0 : perimeters[count]) /
                  measure;
  }
  std::vector<double> k(grid.size(), 0.0);
  double running = 0.0;
  for (std::size_t i = o.cell.size(); i-- > 0;) {
    running += add[i + 1];
    k[o.cell[i]] = running;
  }
  return ScalarField(grid, std::move(k));
}

struct KernelEquivalence {
  double lhs = 0.0;
  double rhs = 0.0;
  double rel_err = 0.0;
};

inline double relative_error(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale > 0.0 ? std::abs(a - b) / scale : 0.0;
}

/// lhs: the transform; rhs: Σ_y f(y) K(y, x) |cell| with K from the family's
/// exact piecewise s-integral over the same range [lo, hi] (plus the same tail).
template <RegionFamily Family>
KernelEquivalence verify_kernel_equivalence(const ScalarField& f, const Family& family, const WeightSpec& weight,
                                            std::span<const double> x, const SGrid& sgrid,
                                            const TransformOptions& opt = {}) {
  KernelEquivalence out;
  const auto t = transform(f, family, weight, x, sgrid, opt);
  out.lhs = t.value;
  KernelColumn column(family, weight, f.grid(), x, sgrid.hi, t.tail_applied);
  const ScalarField k = column.field(f.grid());
  detail::CompensatedSum acc;
  for (std::size_t i = 0; i < f.size(); ++i) acc.add(f[i] * k[i]);
  out.rhs = acc.value() * f.grid().cell_measure();
  out.rel_err = relative_error(out.lhs, out.rhs);
  return out;
}

inline KernelEquivalence verify_kernel_equivalence(const ScalarField& f, const AnyFamily& family,
                                                   const WeightSpec& weight, std::span<const double> x,
                                                   const SGrid& sgrid, const TransformOptions& opt = {}) {
  return std::visit([&](const auto& fam) { return verify_kernel_equivalence(f, fam, weight, x, sgrid, opt); }, family);
}

}  // namespace iat
