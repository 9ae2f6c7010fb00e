#pragma once

// Hit rate, prediction accuracy index (PAI), penalised PAI, and the PAI
// averaged over the mass-quantile hot spots B_s of a prediction.

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "iat/field.hpp"
#include "iat/levels.hpp"

namespace iat {

namespace penalty {
/// lambda = 1
struct Unit {};
/// lambda = (|B|/|A|)^(1 - alpha)
struct AreaPower {
  double alpha = 1.0;
};
/// AreaPower with alpha set to the region's own hit rate.
struct HitRatePower {};
/// lambda = |B| / |∂B|
struct PerimeterRatio {};
}  // namespace penalty

using PenaltySpec = std::variant<penalty::Unit, penalty::AreaPower, penalty::HitRatePower, penalty::PerimeterRatio>;

/// What a penalty may look at. Perimeter and hit rate are only read by the
/// kinds that need them.
struct RegionStats {
  double measure = 0.0;
  double study_measure = 0.0;
  double hit_rate = std::numeric_limits<double>::quiet_NaN();
  double perimeter = std::numeric_limits<double>::quiet_NaN();
};

inline bool needs_perimeter(const PenaltySpec& p) { return std::holds_alternative<penalty::PerimeterRatio>(p); }
inline bool needs_hit_rate(const PenaltySpec& p) { return std::holds_alternative<penalty::HitRatePower>(p); }

inline double penalty_factor(const PenaltySpec& spec, const RegionStats& b) {
  struct Visitor {
    const RegionStats& b;
    double operator()(const penalty::Unit&) const { return 1.0; }
    double operator()(const penalty::AreaPower& a) const {
      return std::pow(b.measure / b.study_measure, 1.0 - a.alpha);
    }
    double operator()(const penalty::HitRatePower&) const {
      if (std::isnan(b.hit_rate)) {
        throw Error("pai", ErrorCode::DomainError, "hit-rate penalty needs an observed density");
      }
      return std::pow(b.measure / b.study_measure, 1.0 - b.hit_rate);
    }
    double operator()(const penalty::PerimeterRatio&) const {
      if (!(b.perimeter > 0.0)) {
        throw Error("pai", ErrorCode::DegeneratePenalty, "perimeter penalty on a region with zero perimeter");
      }
      return b.measure / b.perimeter;
    }
  };
  return std::visit(Visitor{b}, spec);
}

inline std::string describe(const PenaltySpec& spec) {
  struct Visitor {
    std::string operator()(const penalty::Unit&) const { return "unit"; }
    std::string operator()(const penalty::AreaPower& a) const { return "area:" + io::format_double(a.alpha); }
    std::string operator()(const penalty::HitRatePower&) const { return "hitrate"; }
    std::string operator()(const penalty::PerimeterRatio&) const { return "perimeter"; }
  };
  return std::visit(Visitor{}, spec);
}

/// PAI from a hit rate and a volume fraction.
inline double pai_from_rates(double hit_rate, double volume_fraction) {
  if (!(volume_fraction > 0.0)) throw Error("pai", ErrorCode::EmptyRegion, "PAI of a region with zero measure");
  return hit_rate / volume_fraction;
}

namespace detail {
inline void check_hot_spot(const ScalarField& phi, const Region& b, const Region& study) {
  iat::detail::require_same_grid(phi.grid(), b.grid(), "pai");
  iat::detail::require_same_grid(phi.grid(), study.grid(), "pai");
  if (!b.subset_of(study)) throw Error("pai", ErrorCode::DomainError, "hot spot is not contained in the study region");
}
inline double study_mass(const ScalarField& phi, const Region& study) {
  const double m = integrate(phi, study);
  if (m == 0.0) throw Error("pai", ErrorCode::DegenerateDensity, "observed density has zero mass on the study region");
  return m;
}
}  // namespace detail

/// Fraction of phi's mass on A that falls in B.
inline double hit_rate(const ScalarField& phi, const Region& b, const Region& study) {
  detail::check_hot_spot(phi, b, study);
  return integrate(phi, b) / detail::study_mass(phi, study);
}

/// Hit rate over volume fraction.
inline double pai(const ScalarField& phi, const Region& b, const Region& study) {
  const double h = hit_rate(phi, b, study);
  if (b.is_empty()) throw Error("pai", ErrorCode::EmptyRegion, "PAI of a region with zero measure");
  return pai_from_rates(h, region_measure(b) / region_measure(study));
}

/// The same index written as the ratio of averages of phi on B and on A.
inline double pai_average_form(const ScalarField& phi, const Region& b, const Region& study) {
  detail::check_hot_spot(phi, b, study);
  if (b.is_empty()) throw Error("pai", ErrorCode::EmptyRegion, "PAI of a region with zero measure");
  const double avg_a = average(phi, study);
  if (avg_a == 0.0) throw Error("pai", ErrorCode::DegenerateDensity, "observed density has zero mass on the study region");
  return average(phi, b) / avg_a;
}

inline double ppai(const ScalarField& phi, const Region& b, const Region& study, const PenaltySpec& spec) {
  const double base = pai(phi, b, study);
  RegionStats stats{region_measure(b), region_measure(study)};
  if (needs_hit_rate(spec)) stats.hit_rate = hit_rate(phi, b, study);
  if (needs_perimeter(spec)) stats.perimeter = region_perimeter(b);
  return penalty_factor(spec, stats) * base;
}

/// PPAI of the prediction's hot spot B_s.
inline double level_pai(const ScalarField& psi, const ScalarField& phi, const Region& study, double s,
                        const PenaltySpec& spec) {
  iat::detail::require_same_grid(psi.grid(), phi.grid(), "pai");
  return ppai(phi, mass_region(psi, s, study), study, spec);
}

/// Evaluates p(s; psi, phi) for many s against one LevelIndex, reading
/// hot-spot masses of phi from prefix sums along the level order.
class LevelPai {
 public:
  LevelPai(const ScalarField& psi, const ScalarField& phi, const Region& study, PenaltySpec spec)
      : index_(psi, study), spec_(std::move(spec)) {
    iat::detail::require_same_grid(psi.grid(), phi.grid(), "pai");
    const GridSpec& g = psi.grid();
    study_measure_ = region_measure(study);
    study_mass_ = detail::study_mass(phi, study);
    phi_prefix_.assign(index_.order().size() + 1, 0.0);
    iat::detail::CompensatedSum acc;
    for (std::size_t i = 0; i < index_.order().size(); ++i) {
      acc.add(phi[index_.order()[i]]);
      phi_prefix_[i + 1] = acc.value() * g.cell_measure();
    }
    if (needs_perimeter(spec_)) perimeters_ = prefix_perimeters(g, index_.order());
  }

  const LevelIndex& index() const { return index_; }
  double study_measure() const { return study_measure_; }
  double study_mass() const { return study_mass_; }

  /// lambda(B) / |B| for the hot spot made of the first `count` cells.
  double weight_over_measure(std::size_t count) const {
    const double measure = static_cast<double>(count) * index_.grid().cell_measure();
    return penalty_factor(spec_, stats(count)) / measure;
  }

  RegionStats stats(std::size_t count) const {
    RegionStats st{static_cast<double>(count) * index_.grid().cell_measure(), study_measure_};
    if (needs_hit_rate(spec_)) st.hit_rate = phi_prefix_[count] / study_mass_;
    if (needs_perimeter(spec_)) st.perimeter = perimeters_[count];
    return st;
  }

  double at(double s) const {
    const std::size_t count = index_.quantile(s).count;
    const double measure = static_cast<double>(count) * index_.grid().cell_measure();
    const double pai = (phi_prefix_[count] / study_mass_) / (measure / study_measure_);
    return penalty_factor(spec_, stats(count)) * pai;
  }

 private:
  LevelIndex index_;
  PenaltySpec spec_;
  double study_measure_ = 0.0;
  double study_mass_ = 0.0;
  std::vector<double> phi_prefix_;
  std::vector<double> perimeters_;
};

enum class PaiQuadrature { riemann_P_N, quadrature_P };

struct PaiReport {
  std::vector<double> s;       // i/N, i = 1..N
  std::vector<double> p_of_s;  // p(i/N)
  double P_N = 0.0;            // (1/N) sum p(i/N)
  double P_2N = 0.0;
  double P_4N = 0.0;
  double P = 0.0;              // midpoint rule on [0,1] with N panels
  double bound = 0.0;          // max phi on A / average of phi on A
  bool divergence_suspected = false;
  PaiQuadrature mode = PaiQuadrature::quadrature_P;

  /// The value selected by `mode`.
  double value() const { return mode == PaiQuadrature::riemann_P_N ? P_N : P; }
};

inline PaiReport average_pai(const ScalarField& psi, const ScalarField& phi, const Region& study, std::size_t n,
                             const PenaltySpec& spec, PaiQuadrature mode = PaiQuadrature::quadrature_P) {
  if (n < 1) throw Error("pai", ErrorCode::DomainError, "average PAI needs N >= 1");
  LevelPai levels(psi, phi, study, spec);
  PaiReport rep;
  rep.mode = mode;
  auto riemann = [&](std::size_t m, bool keep) {
    iat::detail::CompensatedSum acc;
    for (std::size_t i = 1; i <= m; ++i) {
      const double s = static_cast<double>(i) / static_cast<double>(m);
      const double p = levels.at(s);
      if (keep) {
        rep.s.push_back(s);
        rep.p_of_s.push_back(p);
      }
      acc.add(p);
    }
    return acc.value() / static_cast<double>(m);
  };
  rep.P_N = riemann(n, true);
  rep.P_2N = riemann(2 * n, false);
  rep.P_4N = riemann(4 * n, false);
  iat::detail::CompensatedSum mid;
  for (std::size_t i = 1; i <= n; ++i) {
    mid.add(levels.at((static_cast<double>(i) - 0.5) / static_cast<double>(n)));
  }
  rep.P = mid.value() / static_cast<double>(n);
  double max_phi = -std::numeric_limits<double>::infinity();
  for (auto c : study.cells()) max_phi = std::max(max_phi, phi[c]);
  rep.bound = max_phi / (levels.study_mass() / levels.study_measure());
  const double g1 = std::abs(rep.P_2N - rep.P_N);
  const double g2 = std::abs(rep.P_4N - rep.P_2N);
  rep.divergence_suspected = g1 > 0.0 && g2 >= g1;
  return rep;
}

}  // namespace iat
