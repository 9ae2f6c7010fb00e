#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "iat/kernel.hpp"
#include "iat/levels.hpp"

using namespace iat;

namespace {
// Brute-force threshold search: largest region [psi > v] over every cell
// value v whose mass stays within (1 - s) of the total.
std::size_t brute_force_count(const ScalarField& psi, double s) {
  double total = 0.0;
  for (double v : psi.values()) total += std::max(v, 0.0);
  total *= psi.grid().cell_measure();
  std::size_t best = 0;
  for (double v : psi.values()) {
    double mass = 0.0;
    std::size_t count = 0;
    for (double w : psi.values()) {
      if (w > v) {
        mass += w;
        ++count;
      }
    }
    if (mass * psi.grid().cell_measure() <= (1.0 - s) * total * (1.0 + 1e-12)) best = std::max(best, count);
  }
  return best;
}
}  // namespace

class Example1Levels : public ::testing::TestWithParam<double> {};

TEST_P(Example1Levels, ThresholdAndMeasureMatchClosedForms) {
  const double p = GetParam();
  const std::size_t cells = 10000;
  const Example1 ex(p);
  const auto psi = ex.sample(cells);
  const Region a = Region::full(psi.grid());
  const LevelIndex index(psi, a);
  const double h = psi.grid().spacing()[0];
  for (int k = 1; k <= 9; ++k) {
    const double s = k / 10.0;
    const auto q = index.quantile(s);
    const double edge = 1.0 - std::pow(s, 1.0 / p);
    const double slope = 0.5 * p * (p - 1.0) * std::pow(1.0 - edge, p - 2.0);
    EXPECT_NEAR(static_cast<double>(q.count) * h, ex.measure(s), 2.0 * h) << "s=" << s;
    EXPECT_NEAR(q.r, ex.level(s), 2.0 * h * slope + 1e-12) << "s=" << s;
    EXPECT_FALSE(q.fallback);
  }
}

INSTANTIATE_TEST_SUITE_P(Powers, Example1Levels, ::testing::Values(1.5, 2.0, 3.0));

TEST(Levels, WorkedValueQuarterLevel) {
  const Example1 ex(2.0);
  EXPECT_DOUBLE_EQ(ex.level(0.25), 0.5);
  EXPECT_DOUBLE_EQ(ex.measure(0.25), 1.0);
  const auto psi = ex.sample(10000);
  const auto q = quantile_level(psi, 0.25, Region::full(psi.grid()));
  EXPECT_NEAR(q.r, 0.5, 2e-4);
  EXPECT_NEAR(static_cast<double>(q.count) * psi.grid().spacing()[0], 1.0, 4e-4);
}

TEST(Levels, AgreesWithBruteForceSearch) {
  const auto g = GridSpec::cube(1, -1.0, 1.0, 101);
  const auto psi = ScalarField::sample(g, [](std::span<const double> x) { return std::exp(-4.0 * x[0] * x[0]) + 0.1 * x[0] + 0.2; });
  const LevelIndex index(psi, Region::full(g));
  for (double s : {0.05, 0.3, 0.5, 0.77, 0.95}) {
    const auto q = index.quantile(s);
    const std::size_t expect = brute_force_count(psi, s);
    if (expect == 0) {
      EXPECT_TRUE(q.fallback);
    } else {
      EXPECT_EQ(q.count, expect) << s;
    }
  }
}

TEST(Levels, UniformDensityFallsBackToWholeRegion) {
  const auto g = GridSpec::cube(1, 0.0, 2.0, 50);
  const ScalarField psi(g, 0.5);
  const Region a = Region::full(g);
  for (double s : {0.0, 0.3, 0.999, 1.0}) {
    const Region b = mass_region(psi, s, a);
    EXPECT_EQ(b, a) << s;
  }
  EXPECT_TRUE(quantile_level(psi, 0.5, a).fallback);
}

TEST(Levels, ZeroLevelIsWholeSupport) {
  const auto g = GridSpec::cube(1, 0.0, 1.0, 10);
  const auto psi = ScalarField::sample(g, [](std::span<const double> x) { return x[0] < 0.5 ? 1.0 : 0.0; });
  const Region b = mass_region(psi, 0.0, Region::full(g));
  EXPECT_EQ(b.count(), 5u);
}

TEST(Levels, Errors) {
  const auto g = GridSpec::cube(1, 0.0, 1.0, 10);
  const ScalarField zero(g, 0.0);
  try {
    quantile_level(zero, 0.5, Region::full(g));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateDensity);
  }
  const ScalarField one(g, 1.0);
  EXPECT_THROW(quantile_level(one, 1.5, Region::full(g)), Error);
  EXPECT_THROW(quantile_level(one, -0.1, Region::full(g)), Error);
  const auto other = GridSpec::cube(1, 0.0, 1.0, 11);
  EXPECT_THROW(quantile_level(one, 0.5, Region::full(other)), Error);
}

TEST(Levels, RegionsAreNestedAndShrink) {
  const auto psi = Example1(2.5).sample(500);
  const Region a = Region::full(psi.grid());
  const auto prof = build_profile(psi, a, 40);
  for (std::size_t i = 1; i < prof.regions.size(); ++i) {
    EXPECT_TRUE(prof.regions[i].subset_of(prof.regions[i - 1]));
    EXPECT_LE(prof.measures[i], prof.measures[i - 1]);
    EXPECT_GE(prof.r[i], prof.r[i - 1]);
  }
}

TEST(Levels, SingleLevelProfileSitsAtOne) {
  const auto psi = Example1(2.0).sample(100);
  const auto prof = build_profile(psi, Region::full(psi.grid()), 1);
  ASSERT_EQ(prof.s.size(), 1u);
  EXPECT_DOUBLE_EQ(prof.s[0], 1.0);
  EXPECT_GT(prof.measures[0], 0.0);
  std::ostringstream out;
  write_profile_csv(out, prof);
  EXPECT_EQ(out.str().substr(0, 27), "s,r,measure,achieved_mass\n1");
}

TEST(Levels, ExitLevelMatchesMassAbove) {
  const auto psi = Example1(2.0).sample(400);
  const LevelIndex index(psi, Region::full(psi.grid()));
  const double total = index.total_mass();
  for (std::size_t pos = 0; pos < index.order().size(); pos += 37) {
    const double t = index.exit_level(pos);
    const std::size_t end = index.group_end(pos);
    const double expect = pos < index.argmax_count() ? 1.0 : 1.0 - index.prefix_mass(end) / total;
    EXPECT_NEAR(t, expect, 1e-9) << pos;
  }
}

TEST(Levels, SuperlevelSet) {
  const auto g = GridSpec::cube(1, 0.0, 1.0, 10);
  const auto psi = ScalarField::sample(g, [](std::span<const double> x) { return x[0]; });
  EXPECT_EQ(superlevel(psi, 0.5, Region::full(g)).count(), 5u);
}
