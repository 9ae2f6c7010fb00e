#pragma once

// Poisson's equation -Δu = f through ball averages of the forcing:
//
//   u(x) = ∫_0^∞ (s/n) ⨍_{B_s(x)} f ds          (n >= 3, f compactly supported)
//
// with the truncated kernel K_R for n = 2, the mean value identity
// u(x0) = ⨍_{∂B_R(x0)} u + ∫_0^R (s/n) ⨍_{B_s(x0)} f ds, and half-space
// Dirichlet solutions by cutting reflected balls or by odd extension.
//
// Ball averages extend f by zero outside its grid and measure balls by
// counting centres of the grid's infinite cell lattice.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "iat/detail/numeric.hpp"
#include "iat/error.hpp"
#include "iat/field.hpp"

namespace iat {

/// Fundamental solution of -Δ: |x-y|^(2-n) / (n(n-2)ω_n) for n >= 3,
/// -ln|x-y| / (2π) for n = 2.
inline double fundamental_solution(int n, std::span<const double> x, std::span<const double> y) {
  if (n < 2) throw Error("poisson", ErrorCode::DomainError, "fundamental solution needs n >= 2");
  const double r = detail::distance(x, y);
  if (r == 0.0) throw Error("poisson", ErrorCode::SingularPoint, "fundamental solution evaluated at x = y");
  if (n == 2) return -std::log(r) / (2.0 * std::numbers::pi);
  return std::pow(r, 2.0 - n) / (n * (n - 2) * detail::unit_ball_volume(n));
}

/// C_n(R) with K_R = C_n(R) + G inside the ball of radius R.
inline double truncation_constant(int n, double radius) {
  if (n < 2 || !(radius > 0.0)) throw Error("poisson", ErrorCode::DomainError, "truncation constant needs n >= 2, R > 0");
  if (n == 2) return std::log(radius) / (2.0 * std::numbers::pi);
  return -std::pow(radius, 2.0 - n) / (n * (n - 2) * detail::unit_ball_volume(n));
}

/// K_R(y, x) = ∫_{|x-y|}^R ds / (n ω_n s^(n-1)); zero beyond R.
inline double truncated_kernel(int n, double radius, std::span<const double> x, std::span<const double> y) {
  if (n < 2 || !(radius > 0.0)) throw Error("poisson", ErrorCode::DomainError, "truncated kernel needs n >= 2, R > 0");
  const double r = detail::distance(x, y);
  if (r == 0.0) throw Error("poisson", ErrorCode::SingularPoint, "truncated kernel evaluated at x = y");
  if (r >= radius) return 0.0;
  if (n == 2) return std::log(radius / r) / (2.0 * std::numbers::pi);
  return (std::pow(radius, 2.0 - n) - std::pow(r, 2.0 - n)) / (n * (2 - n) * detail::unit_ball_volume(n));
}

/// A forcing term with support inside the ball of radius R0 about `center`.
class PoissonProblem {
 public:
  /// Relative size below which f counts as zero outside the support ball.
  static constexpr double kSupportTolerance = 1e-10;

  PoissonProblem(ScalarField forcing, Point center, double support_radius)
      : f_(std::move(forcing)), center_(std::move(center)), r0_(support_radius) {
    const GridSpec& g = f_.grid();
    if (g.dim() < 2) throw Error("poisson", ErrorCode::DomainError, "Poisson problems need n >= 2");
    if (center_.size() != g.dim()) throw Error("poisson", ErrorCode::GridMismatch, "support centre has wrong dimension");
    if (!(r0_ > 0.0)) throw Error("poisson", ErrorCode::DomainError, "support radius must be positive");
    double scale = 0.0;
    for (double v : f_.values()) scale = std::max(scale, std::abs(v));
    Point c(g.dim());
    for (std::size_t i = 0; i < g.size(); ++i) {
      g.center_into(i, c);
      if (detail::distance(c, center_) > r0_ && std::abs(f_[i]) > kSupportTolerance * scale) {
        throw Error("poisson", ErrorCode::SupportViolation, "forcing is nonzero outside its stated support ball");
      }
    }
    mass_ = integrate(f_);
  }

  const ScalarField& forcing() const { return f_; }
  const Point& center() const { return center_; }
  double support_radius() const { return r0_; }
  double mass() const { return mass_; }
  int dim() const { return static_cast<int>(f_.grid().dim()); }

 private:
  ScalarField f_;
  Point center_;
  double r0_;
  double mass_ = 0.0;
};

struct MeanValueResult {
  double lhs = 0.0;      // u(x0)
  double rhs = 0.0;      // sphere + forcing
  double sphere = 0.0;   // average of u over ∂B_R(x0)
  double forcing = 0.0;  // ∫_0^R (s/n) ⨍_{B_s(x0)} f ds
  double rel_err = 0.0;
  std::size_t samples = 0;
};

/// Solves for one forcing term. Holds the lattice-distance cache, so repeated
/// solves at points sharing a cell offset reuse one sorted lattice.
class PoissonSolver {
 public:
  explicit PoissonSolver(PoissonProblem problem)
      : problem_(std::move(problem)),
        lattice_(std::make_unique<LatticeBalls>(problem_.forcing().grid().spacing())),
        extension_(std::make_unique<ExtensionSlot>()) {}

  const PoissonProblem& problem() const { return problem_; }

  /// ⨍_{B_s(x)} f over the zero-extended field; when the discrete ball is
  /// empty, the average over the nearest cell centres.
  double ball_average(std::span<const double> x, double s) const {
    if (!(s > 0.0)) throw Error("poisson", ErrorCode::DomainError, "ball radius must be positive");
    const ScalarField& f = problem_.forcing();
    const GridSpec& g = f.grid();
    const auto lat = lattice_->distances(g, x, s);
    const auto count = static_cast<std::size_t>(std::lower_bound(lat->begin(), lat->end(), s) - lat->begin());
    if (count == 0) return nearest_average(f, *lattice_, x, std::nullopt);
    detail::CompensatedSum acc;
    Point c(g.dim());
    for (std::size_t i = 0; i < g.size(); ++i) {
      g.center_into(i, c);
      if (detail::distance(c, x) < s) acc.add(f[i]);
    }
    return acc.value() / static_cast<double>(count);
  }

  /// ∫_0^R (s/n) ⨍_{B_s(x)} f ds, no tail. Valid for n >= 2.
  double truncated(std::span<const double> x, double radius, std::size_t panels) const {
    const double needed = problem_.support_radius() + detail::distance(x, problem_.center());
    if (radius < needed * (1.0 - 1e-12)) {
      throw Error("poisson", ErrorCode::TruncationTooSmall, "truncation radius does not cover the support from x");
    }
    return ball_integral(problem_.forcing(), *lattice_, x, radius, panels, std::nullopt);
  }

  /// ∫_0^R (s/n) ⨍_{B_s(x)} f ds without checking that R covers the support.
  double ball_integral(std::span<const double> x, double radius, std::size_t panels) const {
    return ball_integral(problem_.forcing(), *lattice_, x, radius, panels, std::nullopt);
  }

  /// Free-space solution, n >= 3: the ball integral up to R* = R0 + |x - c|
  /// plus the closed-form remainder M R*^(2-n) / (n(n-2)ω_n).
  double free_space(std::span<const double> x, std::size_t panels) const {
    const int n = problem_.dim();
    if (n < 3) throw Error("poisson", ErrorCode::TruncationRequired, "n = 2 needs a truncation radius");
    const double r_star = problem_.support_radius() + detail::distance(x, problem_.center());
    return truncated(x, r_star, panels) + problem_.mass() * tail(n, r_star);
  }

  /// Half-space solution: only cells inside B_s(x) but outside the reflected
  /// ball B_s(x*) contribute, x* = x - 2 x_n e_n.
  double half_space_cut(std::span<const double> x, std::size_t panels) const {
    check_half_space(x);
    const Point mirror = reflect(x);
    const double upper = problem_.support_radius() + detail::distance(mirror, problem_.center());
    return ball_integral(problem_.forcing(), *lattice_, x, upper, panels, std::optional<Point>(mirror));
  }

  /// Half-space solution as the free-space solution of the odd extension Ef
  /// on a grid doubled across y_n = 0, over the same s-range as the cut form.
  double half_space_extension(std::span<const double> x, std::size_t panels) const {
    check_half_space(x);
    const auto& ext = extension();
    const Point mirror = reflect(x);
    const double upper = problem_.support_radius() + detail::distance(mirror, problem_.center());
    const int n = problem_.dim();
    return ball_integral(ext.field, *ext.lattice, x, upper, panels, std::nullopt) + ext.mass * tail(n, upper);
  }

  /// The odd extension Ef(y) = f(y) for y_n > 0, -f(y*) for y_n < 0, 0 on y_n = 0.
  const ScalarField& odd_extension() const { return extension().field; }

 private:
  struct Extension {
    ScalarField field;
    std::unique_ptr<LatticeBalls> lattice;
    double mass = 0.0;
  };
  struct ExtensionSlot {
    std::once_flag once;
    std::unique_ptr<Extension> value;
  };

  static double tail(int n, double radius) {
    return std::pow(radius, 2.0 - n) / (n * (n - 2) * detail::unit_ball_volume(n));
  }

  // Limit of the ball average as s -> 0+: f averaged over the nearest cell
  // centres (the containing cell unless x is equidistant from several).
  // With a cut centre, centres at least as near the cut centre drop out.
  static double nearest_average(const ScalarField& f, const LatticeBalls& lattice, std::span<const double> x,
                                const std::optional<Point>& cut) {
    const GridSpec& g = f.grid();
    double reach = 0.0;
    for (double h : g.spacing()) reach += h * h;
    const auto lat = lattice.distances(g, x, std::sqrt(reach));
    const double rho = lat->front() * (1.0 + 1e-12);
    const auto shell = static_cast<std::size_t>(std::upper_bound(lat->begin(), lat->end(), rho) - lat->begin());
    detail::CompensatedSum acc;
    Point c(g.dim());
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (f[i] == 0.0) continue;
      g.center_into(i, c);
      if (detail::distance(c, x) > rho) continue;
      if (cut && detail::distance(c, *cut) <= rho) continue;
      acc.add(f[i]);
    }
    return acc.value() / static_cast<double>(shell);
  }

  static Point reflect(std::span<const double> x) {
    Point m(x.begin(), x.end());
    m.back() = -m.back();
    return m;
  }

  void check_half_space(std::span<const double> x) const {
    if (problem_.dim() < 3) throw Error("poisson", ErrorCode::DomainError, "half-space solvers need n >= 3");
    if (x.size() != static_cast<std::size_t>(problem_.dim()) || x.back() < 0.0) {
      throw Error("poisson", ErrorCode::DomainError, "half-space evaluation point must satisfy x_n >= 0");
    }
    const ScalarField& f = problem_.forcing();
    const GridSpec& g = f.grid();
    const std::size_t last = g.dim() - 1;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double yn = g.origin()[last] + (static_cast<double>(g.coordinate(i, last)) + 0.5) * g.spacing()[last];
      if (yn <= 0.0 && f[i] != 0.0) {
        throw Error("poisson", ErrorCode::SupportViolation, "forcing must vanish on and below y_n = 0");
      }
    }
  }

  const Extension& extension() const {
    std::call_once(extension_->once, [this] { extension_->value = std::make_unique<Extension>(build_extension()); });
    return *extension_->value;
  }

  // Cell centres must map onto cell centres under y_n -> -y_n, i.e. the
  // lower face of the grid sits at an integer multiple of h_n / 2.
  Extension build_extension() const {
    const ScalarField& f = problem_.forcing();
    const GridSpec& g = f.grid();
    const std::size_t last = g.dim() - 1;
    const double h = g.spacing()[last];
    const double half_steps = 2.0 * g.origin()[last] / h;
    if (std::abs(half_steps - std::round(half_steps)) > 1e-9) {
      throw Error("poisson", ErrorCode::DomainError, "grid is not symmetric under reflection in y_n = 0");
    }
    const double top = g.upper(last);
    if (!(top > 0.0)) throw Error("poisson", ErrorCode::SupportViolation, "grid lies below y_n = 0");
    std::vector<double> origin = g.origin();
    std::vector<std::size_t> shape = g.shape();
    origin[last] = -top;
    shape[last] = static_cast<std::size_t>(std::llround(2.0 * top / h));
    GridSpec eg(origin, g.spacing(), shape);
    std::vector<double> v(eg.size(), 0.0);
    Point c(eg.dim());
    for (std::size_t i = 0; i < eg.size(); ++i) {
      eg.center_into(i, c);
      const double yn = c[last];
      if (std::abs(yn) < 1e-9 * h) continue;
      double sign = 1.0;
      if (yn < 0.0) {
        c[last] = -yn;
        sign = -1.0;
      }
      if (const auto cell = g.locate(c)) v[i] = sign * f[*cell];
    }
    Extension e{ScalarField(eg, std::move(v)), std::make_unique<LatticeBalls>(eg.spacing()), 0.0};
    e.mass = integrate(e.field);
    return e;
  }

  // Midpoint panels on (0, upper]. A cell at distance d from x enters B_s(x)
  // at the first node s_k > d; with a cut centre it leaves again at the
  // first node s_k > d* (distance to the cut centre).
  static double ball_integral(const ScalarField& f, const LatticeBalls& lattice, std::span<const double> x,
                              double upper, std::size_t panels, const std::optional<Point>& cut) {
    if (panels < 1) throw Error("poisson", ErrorCode::DomainError, "s_panels must be >= 1");
    if (!(upper > 0.0)) return 0.0;
    const GridSpec& g = f.grid();
    const int n = static_cast<int>(g.dim());
    const double ds = upper / static_cast<double>(panels);
    auto node = [&](std::size_t k) { return (static_cast<double>(k) + 0.5) * ds; };
    auto first_above = [&](double d) {
      const double guess = std::floor(d / ds - 0.5) + 1.0;
      auto k = static_cast<std::size_t>(std::clamp(guess, 0.0, static_cast<double>(panels)));
      while (k > 0 && node(k - 1) > d) --k;
      while (k < panels && !(node(k) > d)) ++k;
      return k;
    };
    std::vector<double> diff(panels + 1, 0.0);
    Point c(g.dim());
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (f[i] == 0.0) continue;
      g.center_into(i, c);
      const std::size_t enter = first_above(detail::distance(c, x));
      if (cut) {
        const std::size_t leave = first_above(detail::distance(c, *cut));
        if (leave <= enter) continue;
        diff[leave] -= f[i];
      }
      diff[enter] += f[i];
    }
    const auto lat = lattice.distances(g, x, upper);
    const double near = nearest_average(f, lattice, x, cut);
    std::size_t inside = 0;
    detail::CompensatedSum running;
    detail::CompensatedSum acc;
    for (std::size_t k = 0; k < panels; ++k) {
      const double s = node(k);
      running.add(diff[k]);
      while (inside < lat->size() && (*lat)[inside] < s) ++inside;
      const double avg = inside == 0 ? near : running.value() / static_cast<double>(inside);
      acc.add(s / n * avg);
    }
    return acc.value() * ds;
  }

  PoissonProblem problem_;
  std::unique_ptr<LatticeBalls> lattice_;
  std::unique_ptr<ExtensionSlot> extension_;
};

inline double ball_average_forcing(const PoissonProblem& problem, std::span<const double> x, double s) {
  return PoissonSolver(problem).ball_average(x, s);
}

inline double solve_free_space(const PoissonProblem& problem, std::span<const double> x, std::size_t s_panels) {
  return PoissonSolver(problem).free_space(x, s_panels);
}

inline double solve_truncated(const PoissonProblem& problem, std::span<const double> x, double radius,
                              std::size_t s_panels) {
  return PoissonSolver(problem).truncated(x, radius, s_panels);
}

inline double solve_half_space_cut(const PoissonProblem& problem, std::span<const double> x, std::size_t s_panels) {
  return PoissonSolver(problem).half_space_cut(x, s_panels);
}

inline double solve_half_space_extension(const PoissonProblem& problem, std::span<const double> x,
                                         std::size_t s_panels) {
  return PoissonSolver(problem).half_space_extension(x, s_panels);
}

/// Σ f(y) (G(x, y) - G(x*, y)) |cell|, the half-space Green function applied
/// directly. Cells at x itself are skipped.
inline double green_difference(const PoissonProblem& problem, std::span<const double> x) {
  const ScalarField& f = problem.forcing();
  const GridSpec& g = f.grid();
  const int n = problem.dim();
  Point mirror(x.begin(), x.end());
  mirror.back() = -mirror.back();
  detail::CompensatedSum acc;
  Point c(g.dim());
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (f[i] == 0.0) continue;
    g.center_into(i, c);
    if (detail::distance(c, x) == 0.0) continue;
    acc.add(f[i] * (fundamental_solution(n, x, c) - fundamental_solution(n, mirror, c)));
  }
  return acc.value() * g.cell_measure();
}

/// Σ f(y) G(x, y) |cell|, skipping the cell at x itself.
inline double green_convolution(const ScalarField& f, std::span<const double> x) {
  const GridSpec& g = f.grid();
  const int n = static_cast<int>(g.dim());
  detail::CompensatedSum acc;
  Point c(g.dim());
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (f[i] == 0.0) continue;
    g.center_into(i, c);
    if (detail::distance(c, x) == 0.0) continue;
    acc.add(f[i] * fundamental_solution(n, x, c));
  }
  return acc.value() * g.cell_measure();
}

/// Second-order central-difference Laplacian of a callable at x with step h.
template <class Fn>
double laplacian_fd(Fn&& u, std::span<const double> x, double h) {
  if (!(h > 0.0)) throw Error("poisson", ErrorCode::DomainError, "finite-difference step must be positive");
  Point p(x.begin(), x.end());
  const double centre = u(std::span<const double>(p));
  double acc = 0.0;
  for (std::size_t a = 0; a < p.size(); ++a) {
    p[a] = x[a] + h;
    const double up = u(std::span<const double>(p));
    p[a] = x[a] - h;
    const double down = u(std::span<const double>(p));
    p[a] = x[a];
    acc += up - 2.0 * centre + down;
  }
  return acc / (h * h);
}

/// The same stencil on a sampled field, read through quadratic interpolation.
inline double laplacian_fd(const ScalarField& u, std::span<const double> x, double h) {
  const GridSpec& g = u.grid();
  if (x.size() != g.dim()) throw Error("poisson", ErrorCode::GridMismatch, "stencil point has wrong dimension");
  Point p(x.begin(), x.end());
  for (std::size_t a = 0; a < g.dim(); ++a) {
    for (double sgn : {-1.0, 1.0}) {
      p[a] = x[a] + sgn * h;
      if (!g.inside_box(p)) throw Error("poisson", ErrorCode::DomainExceeded, "stencil leaves the grid");
    }
    p[a] = x[a];
  }
  return laplacian_fd([&](std::span<const double> y) { return interpolate(u, y); }, x, h);
}

/// Unit directions expanded by their signed-permutation orbit, so that odd
/// moments up to degree 3 cancel exactly in the sphere average.
inline std::vector<Point> sphere_directions(std::size_t dim, std::size_t samples, std::uint64_t seed) {
  if (dim < 1) throw Error("poisson", ErrorCode::DomainError, "sphere sampling needs n >= 1");
  std::vector<std::size_t> perm(dim);
  std::size_t orbit = std::size_t{1} << dim;
  for (std::size_t k = 2; k <= dim; ++k) orbit *= k;
  const std::size_t base = std::max<std::size_t>(1, (samples + orbit - 1) / orbit);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<Point> out;
  out.reserve(base * orbit);
  Point v(dim);
  for (std::size_t b = 0; b < base; ++b) {
    double len = 0.0;
    while (!(len > 1e-12)) {
      for (auto& c : v) c = normal(rng);
      len = detail::norm(v);
    }
    for (auto& c : v) c /= len;
    for (std::size_t i = 0; i < dim; ++i) perm[i] = i;
    do {
      for (std::size_t signs = 0; signs < (std::size_t{1} << dim); ++signs) {
        Point d(dim);
        for (std::size_t a = 0; a < dim; ++a) d[a] = ((signs >> a) & 1U ? -1.0 : 1.0) * v[perm[a]];
        out.push_back(std::move(d));
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  return out;
}

/// u(x0) against ⨍_{∂B_R(x0)} u + ∫_0^R (s/n) ⨍_{B_s(x0)} f ds. The sphere
/// average samples u by quadratic interpolation; `samples` is rounded up to a
/// whole number of symmetry orbits.
inline MeanValueResult mean_value_identity(const ScalarField& u, const ScalarField& f, std::span<const double> x0,
                                           double radius, std::size_t panels, std::size_t samples = 10000,
                                           std::uint64_t seed = 42) {
  detail::require_same_grid(u.grid(), f.grid(), "poisson");
  const GridSpec& g = u.grid();
  if (!(radius > 0.0)) throw Error("poisson", ErrorCode::DomainError, "mean value radius must be positive");
  if (x0.size() != g.dim()) throw Error("poisson", ErrorCode::GridMismatch, "centre has wrong dimension");
  Point p(x0.begin(), x0.end());
  for (std::size_t a = 0; a < g.dim(); ++a) {
    for (double sgn : {-1.0, 1.0}) {
      p[a] = x0[a] + sgn * radius;
      if (!g.inside_box(p)) throw Error("poisson", ErrorCode::DomainExceeded, "ball leaves the grid");
    }
    p[a] = x0[a];
  }
  MeanValueResult r;
  r.lhs = interpolate(u, x0);
  const auto dirs = sphere_directions(g.dim(), samples, seed);
  detail::CompensatedSum acc, magnitude;
  for (const auto& d : dirs) {
    for (std::size_t a = 0; a < g.dim(); ++a) p[a] = x0[a] + radius * d[a];
    const double v = interpolate(u, p);
    acc.add(v);
    magnitude.add(std::abs(v));
  }
  r.samples = dirs.size();
  r.sphere = acc.value() / static_cast<double>(dirs.size());

  // f is only read inside B_R(x0), which lies in the grid.
  Point centre(x0.begin(), x0.end());
  PoissonProblem local(f, centre, std::numeric_limits<double>::infinity());
  r.forcing = PoissonSolver(std::move(local)).ball_integral(x0, radius, panels);
  r.rhs = r.sphere + r.forcing;
  // |u| averaged over the sphere keeps the scale honest where u(x0) = 0.
  const double scale = std::max({std::abs(r.lhs), std::abs(r.sphere), std::abs(r.forcing),
                                 magnitude.value() / static_cast<double>(dirs.size())});
  r.rel_err = scale > 0.0 ? std::abs(r.lhs - r.rhs) / scale : 0.0;
  return r;
}

}  // namespace iat
