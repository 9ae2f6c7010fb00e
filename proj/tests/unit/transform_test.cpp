#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "benchmarks.hpp"
#include "iat/transform.hpp"

using namespace iat;

namespace {

// Sum of a few random Gaussian bumps inside [-0.6, 0.6]^dim.
ScalarField random_smooth(const GridSpec& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> c(-0.6, 0.6), a(0.2, 1.0), w(4.0, 12.0);
  struct Bump {
    Point c;
    double a, w;
  };
  std::vector<Bump> bumps;
  for (int k = 0; k < 3; ++k) {
    Point p(g.dim());
    for (auto& v : p) v = c(rng);
    bumps.push_back({p, a(rng), w(rng)});
  }
  return ScalarField::sample(g, [&](std::span<const double> x) {
    double v = 0.0;
    for (const auto& b : bumps) {
      double r2 = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) r2 += (x[i] - b.c[i]) * (x[i] - b.c[i]);
      v += b.a * std::exp(-b.w * r2);
    }
    return v;
  });
}

}  // namespace

TEST(Transform, ZeroWeightGivesZero) {
  const auto g = GridSpec::cube(2, -1.0, 1.0, 20);
  const ScalarField f(g, 2.0);
  const auto sg = SGrid::midpoint(0.0, 2.0, 50);
  EXPECT_EQ(transform(f, BallFamily{}, weight::Constant{0.0}, Point{0.05, 0.05}, sg).value, 0.0);
  const auto u = transform_field(f, BallFamily{}, weight::Constant{0.0}, sg, 2);
  EXPECT_EQ(u.max(), 0.0);
}

TEST(Transform, ConstantFieldOnUnitInterval) {
  const auto psi = Example1(2.0).sample(200);
  const Region a = Region::full(psi.grid());
  const ScalarField f(psi.grid(), 3.5);
  const SuperlevelFamily fam(psi, a);
  const auto sg = SGrid::midpoint(0.0, 1.0, 100);
  const auto u = transform_field(f, fam, weight::Constant{1.0}, sg);
  for (double v : u.values()) EXPECT_NEAR(v, 3.5, 1e-12);
}

TEST(Transform, LinearInForcing) {
  const auto g = GridSpec::cube(2, -1.0, 1.0, 24);
  std::mt19937_64 rng(1);
  const auto f1 = random_smooth(g, rng);
  const auto f2 = random_smooth(g, rng);
  std::vector<double> comb(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) comb[i] = 2.0 * f1[i] - 0.5 * f2[i];
  const ScalarField f3(g, comb);
  const auto sg = SGrid::hybrid(0.0, 3.0, 60, 6);
  const Point x{0.1, -0.2};
  const BallFamily fam;
  const double a = transform(f1, fam, weight::Ball{2}, x, sg).value;
  const double b = transform(f2, fam, weight::Ball{2}, x, sg).value;
  const double c = transform(f3, fam, weight::Ball{2}, x, sg).value;
  EXPECT_NEAR(c, 2.0 * a - 0.5 * b, 1e-12 * (std::abs(a) + std::abs(b)));
}

TEST(Transform, NonnegativeForcingGivesNonnegativeResult) {
  const auto g = GridSpec::cube(2, -1.0, 1.0, 16);
  std::mt19937_64 rng(2);
  const auto f = random_smooth(g, rng);
  const auto sg = SGrid::midpoint(0.0, 3.0, 40);
  const auto u = transform_field(f, BallFamily{}, weight::Ball{2}, sg, 3);
  for (double v : u.values()) EXPECT_GE(v, 0.0);
}

TEST(Transform, DiscreteFubiniSwapIsExact) {
  const auto g = GridSpec::cube(3, -1.0, 1.0, 12);
  std::mt19937_64 rng(3);
  const auto f = random_smooth(g, rng);
  const Point x{0.11, -0.07, 0.2};
  const auto sg = SGrid::hybrid(0.0, 4.0, 80, 5);
  const auto check = [&](const auto& family, const WeightSpec& w) {
    TransformOptions opt;
    opt.analytic_tail = false;
    const double lhs = transform(f, family, w, x, sg, opt).value;
    const auto k = discrete_kernel(g, family, w, x, sg);
    double rhs = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) rhs += f[i] * k[i];
    rhs *= g.cell_measure();
    EXPECT_NEAR(lhs, rhs, 1e-10 * std::abs(lhs));
  };
  check(BallFamily{}, weight::Ball{3});
  check(BallFamily(false), weight::Constant{1.0});
  check(KernelFamily(KernelSpec::exponential(0.5), 1.0), weight::KernelDerived{1.0});
  check(BallFamily{}, weight::Penalty{penalty::PerimeterRatio{}, 8.0});
}

TEST(KernelEquivalence, ZeroForcing) {
  const auto g = GridSpec::cube(3, -1.0, 1.0, 8);
  const ScalarField f(g, 0.0);
  const auto r = verify_kernel_equivalence(f, BallFamily{}, weight::Ball{3}, Point{0.0, 0.0, 0.0},
                                           SGrid::midpoint(0.0, 4.0, 40));
  EXPECT_EQ(r.lhs, 0.0);
  EXPECT_EQ(r.rhs, 0.0);
  EXPECT_EQ(r.rel_err, 0.0);
}

TEST(KernelEquivalence, SuperlevelFamilyOnExample1) {
  const auto psi = Example1(2.0).sample(200);
  const Region a = Region::full(psi.grid());
  const SuperlevelFamily fam(psi, a);
  const auto r = verify_kernel_equivalence(psi, fam, weight::Constant{1.0}, Point{0.0}, SGrid::midpoint(0.0, 1.0, 200));
  EXPECT_LE(r.rel_err, 1e-2);
  EXPECT_GT(r.lhs, 0.0);
}

TEST(KernelEquivalence, RandomSmoothForcingOnBuiltInFamilies) {
  const auto g = GridSpec::cube(3, -1.0, 1.0, 16);
  std::mt19937_64 rng(4);
  const auto psi = random_smooth(g, rng);
  const SuperlevelFamily superlevel(psi, Region::full(g));
  const auto [kfam, kw] = family_from_kernel(KernelSpec::exponential(0.5), 1.0);
  const Point x{0.0625, -0.0625, 0.0625};
  for (int trial = 0; trial < 5; ++trial) {
    const auto f = random_smooth(g, rng);
    const auto ball = verify_kernel_equivalence(f, BallFamily{}, weight::Ball{3}, x, SGrid::hybrid(0.0, 4.0, 400, 8));
    EXPECT_LE(ball.rel_err, 1e-2) << trial;
    const auto sl = verify_kernel_equivalence(f, superlevel, weight::Constant{1.0}, x, SGrid::midpoint(0.0, 1.0, 400));
    EXPECT_LE(sl.rel_err, 1e-2) << trial;
    const auto kr = verify_kernel_equivalence(f, kfam, kw, x, SGrid::hybrid(0.0, 50.0, 2000, 12));
    EXPECT_LE(kr.rel_err, 1e-2) << trial;
  }
}

TEST(Transform, AnyFamilyDispatch) {
  const auto g = GridSpec::cube(2, -1.0, 1.0, 10);
  const ScalarField f(g, 1.0);
  const AnyFamily fam = BallFamily(false);
  const auto sg = SGrid::midpoint(0.0, 1.0, 10);
  EXPECT_NEAR(transform(f, fam, weight::Constant{1.0}, Point{0.1, 0.1}, sg).value, 1.0, 1e-12);
}

TEST(Transform, UnsortedSGridIsNotNested) {
  const auto g = GridSpec::cube(2, -1.0, 1.0, 10);
  const ScalarField f(g, 1.0);
  SGrid sg = SGrid::midpoint(0.0, 1.0, 4);
  std::swap(sg.nodes[1], sg.nodes[2]);
  try {
    transform(f, BallFamily{}, weight::Constant{1.0}, Point{0.0, 0.0}, sg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FamilyNotNested);
  }
}

TEST(Transform, NonNestedCustomFamilyIsRejected) {
  struct Shuffled {
    ParameterDomain domain() const { return {0.0, 1.0}; }
    LevelOrder order(const GridSpec& g, std::span<const double>) const {
      LevelOrder o;
      o.cell_measure = g.cell_measure();
      for (std::size_t i = 0; i < g.size(); ++i) {
        o.cell.push_back(i);
        o.level.push_back(i % 2 ? 0.2 : 0.8);
      }
      return o;
    }
  };
  const auto g = GridSpec::cube(1, 0.0, 1.0, 6);
  try {
    transform(ScalarField(g, 1.0), Shuffled{}, weight::Constant{1.0}, Point{0.5}, SGrid::midpoint(0.0, 1.0, 4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FamilyNotNested);
  }
}

TEST(Transform, AllEmptyFamily) {
  const auto g = GridSpec::cube(2, -1.0, 1.0, 10);
  const ScalarField f(g, 1.0);
  // every node lies below the distance to the nearest cell centre
  try {
    transform(f, BallFamily(false), weight::Constant{1.0}, Point{0.0, 0.0}, SGrid::midpoint(0.0, 0.05, 5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyFamily);
  }
}

TEST(Transform, SGridOutsideDomain) {
  const auto psi = Example1(2.0).sample(20);
  const SuperlevelFamily fam(psi, Region::full(psi.grid()));
  EXPECT_THROW(transform(psi, fam, weight::Constant{1.0}, Point{0.0}, SGrid::midpoint(0.0, 2.0, 4)), Error);
}

TEST(Transform, BallFamilyReproducesGreenConvolution) {
  const auto f = bench::gaussian3d(32);
  const auto sg = SGrid::hybrid(0.0, 7.0, 700, 6);
  const Point x{0.125, 0.125, 0.125};
  const double u = transform(f, BallFamily{}, weight::Ball{3}, x, sg).value;
  EXPECT_NEAR(u, bench::gaussian_solution(x), 0.02 * bench::gaussian_solution(x));
}
