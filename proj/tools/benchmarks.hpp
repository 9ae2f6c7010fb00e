#pragma once

// Closed-form datasets used by the CLI `generate` command, the tests, and the
// acceptance run.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>

#include "iat/iat.hpp"

namespace iat::bench {

/// psi(x) = (p/2)(1 - |x|)^(p-1) on [-1, 1]
inline ScalarField example1(double p, std::size_t cells) { return Example1(p).sample(cells); }

/// u = exp(-|x|^2), f = -Δu = (6 - 4|x|^2) exp(-|x|^2) in R^3.
inline double gaussian_solution(std::span<const double> x) {
  double r2 = 0.0;
  for (double v : x) r2 += v * v;
  return std::exp(-r2);
}
inline double gaussian_forcing(std::span<const double> x) {
  double r2 = 0.0;
  for (double v : x) r2 += v * v;
  return (6.0 - 4.0 * r2) * std::exp(-r2);
}
inline constexpr double kGaussianHalfWidth = 4.0;
inline constexpr double kGaussianSupport = 6.0;

/// f on [-4, 4]^3 with `cells` cells per axis.
inline ScalarField gaussian3d(std::size_t cells) {
  return ScalarField::sample(GridSpec::cube(3, -kGaussianHalfWidth, kGaussianHalfWidth, cells), gaussian_forcing);
}

/// u = -|x|^2 and f = 2n on [-2, 2]^n.
inline GridSpec quadratic_grid(std::size_t dim, std::size_t cells) { return GridSpec::cube(dim, -2.0, 2.0, cells); }
inline ScalarField quadratic_forcing(std::size_t dim, std::size_t cells) {
  return ScalarField(quadratic_grid(dim, cells), 2.0 * static_cast<double>(dim));
}
inline ScalarField quadratic_solution(std::size_t dim, std::size_t cells) {
  return ScalarField::sample(quadratic_grid(dim, cells), [](std::span<const double> x) {
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    return -r2;
  });
}

/// u = x1^2 - x2^2 on [-2, 2]^3; harmonic.
inline ScalarField harmonic_solution(std::size_t cells) {
  return ScalarField::sample(GridSpec::cube(3, -2.0, 2.0, cells),
                             [](std::span<const double> x) { return x[0] * x[0] - x[1] * x[1]; });
}

inline constexpr double kBumpWidth = 0.15;
inline constexpr double kSharpWidth = 0.03;

/// Normalised Gaussian mixture on [-1, 1] with equal peaks at -1/2 and 1/2.
inline ScalarField two_bump(std::size_t cells) {
  const auto g = GridSpec::cube(1, -1.0, 1.0, cells);
  return normalize(ScalarField::sample(g, [](std::span<const double> x) {
    const double a = (x[0] - 0.5) / kBumpWidth;
    const double b = (x[0] + 0.5) / kBumpWidth;
    return std::exp(-0.5 * a * a) + std::exp(-0.5 * b * b);
  }));
}

/// A narrow normalised Gaussian at 1/2: a confident prediction that sees
/// only one of the two bumps.
inline ScalarField sharp_prediction(std::size_t cells) {
  const auto g = GridSpec::cube(1, -1.0, 1.0, cells);
  return normalize(ScalarField::sample(g, [](std::span<const double> x) {
    const double a = (x[0] - 0.5) / kSharpWidth;
    return std::exp(-0.5 * a * a);
  }));
}

struct Benchmark {
  std::string name;
  ScalarField primary;                   // density or forcing
  std::optional<ScalarField> companion;  // exact solution or sharp prediction
  std::string description;
};

/// name: example1:<p> (or example1:p=<p>), gaussian3d, quadratic, two_bump.
inline Benchmark generate(const std::string& name, std::size_t resolution, std::size_t dim = 3) {
  if (resolution < 2) throw Error("cli", ErrorCode::DomainError, "resolution must be >= 2");
  if (name.rfind("example1", 0) == 0) {
    std::string arg = name.size() > 8 && name[8] == ':' ? name.substr(9) : "2";
    if (arg.rfind("p=", 0) == 0) arg = arg.substr(2);
    const double p = io::detail::parse_double(arg, 0);
    return {name, example1(p, resolution), std::nullopt,
            "psi(x) = (p/2)(1-|x|)^(p-1) on [-1,1], p = " + io::format_double(p)};
  }
  if (name == "gaussian3d") {
    const auto f = gaussian3d(resolution);
    return {name, f, ScalarField::sample(f.grid(), gaussian_solution),
            "f = (6-4|x|^2)exp(-|x|^2) on [-4,4]^3; companion u = exp(-|x|^2)"};
  }
  if (name == "quadratic") {
    if (dim < 2) throw Error("cli", ErrorCode::DomainError, "quadratic benchmark needs dim >= 2");
    return {name, quadratic_forcing(dim, resolution), quadratic_solution(dim, resolution),
            "f = 2n on [-2,2]^n; companion u = -|x|^2"};
  }
  if (name == "two_bump") {
    return {name, two_bump(resolution), sharp_prediction(resolution),
            "phi = normalised Gaussians (sigma 0.15) at -1/2 and 1/2 on [-1,1]; companion: sharp Gaussian "
            "(sigma 0.03) at 1/2"};
  }
  throw Error("cli", ErrorCode::ParseError, "unknown benchmark '" + name + "'");
}

}  // namespace iat::bench
