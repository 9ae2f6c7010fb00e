#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>

#include "iat/kernel.hpp"
#include "iat/pai.hpp"

using namespace iat;

TEST(Pai, WorkedArithmetic) {
  EXPECT_EQ(pai_from_rates(0.5, 0.5), 1.0);
  EXPECT_EQ(pai_from_rates(0.8, 0.2), 4.0);
  EXPECT_THROW(pai_from_rates(0.5, 0.0), Error);
}

TEST(Pai, Example1CentralHalf) {
  const auto psi = Example1(2.0).sample(1000);
  const auto g = psi.grid();
  const Region a = Region::full(g);
  const Region b = Region::where(g, [](std::span<const double> x) { return std::abs(x[0]) < 0.5; });
  EXPECT_NEAR(hit_rate(psi, b, a), 0.75, 1e-6);
  EXPECT_NEAR(pai(psi, b, a), 1.5, 1e-5);
  EXPECT_NEAR(pai_average_form(psi, b, a), pai(psi, b, a), 1e-12);
}

TEST(Pai, AverageFormEqualsRatioFormOnRandomRegions) {
  const auto g = GridSpec::cube(2, 0.0, 1.0, 20);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(g.size());
  for (auto& x : v) x = u(rng);
  const ScalarField phi(g, v);
  const Region a = Region::where(g, [](std::span<const double> x) { return x[0] + x[1] < 1.5; });
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::size_t> cells;
    for (auto c : a.cells()) {
      if (u(rng) < 0.3) cells.push_back(c);
    }
    const Region b(g, cells);
    if (b.is_empty()) continue;
    EXPECT_NEAR(pai(phi, b, a), pai_average_form(phi, b, a), 1e-12);
  }
}

TEST(Pai, HotSpotOutsideStudyRegionIsRejected) {
  const auto g = GridSpec::cube(1, 0.0, 1.0, 10);
  const ScalarField phi(g, 1.0);
  const Region a(g, {0, 1, 2});
  const Region b(g, {2, 3});
  EXPECT_THROW(pai(phi, b, a), Error);
  EXPECT_THROW(pai(ScalarField(g, 0.0), Region(g, {1}), a), Error);
}

TEST(Pai, AreaPowerPenalty) {
  const auto g = GridSpec::cube(1, 0.0, 1.0, 10);
  std::vector<double> v(10, 0.0);
  v[0] = 8.0;
  v[1] = 8.0;
  for (std::size_t i = 2; i < 10; ++i) v[i] = 0.5;
  const ScalarField phi(g, v);
  const Region a = Region::full(g);
  const Region b(g, {0, 1});
  EXPECT_NEAR(hit_rate(phi, b, a), 0.8, 1e-12);
  EXPECT_NEAR(pai(phi, b, a), 4.0, 1e-12);
  EXPECT_NEAR(ppai(phi, b, a, penalty::AreaPower{0.5}), 4.0 * std::sqrt(0.2), 1e-12);
  EXPECT_NEAR(ppai(phi, b, a, penalty::AreaPower{1.0}), 4.0, 1e-12);
  EXPECT_NEAR(ppai(phi, b, a, penalty::HitRatePower{}), 4.0 * std::pow(0.2, 0.2), 1e-12);
  EXPECT_NEAR(ppai(phi, b, a, penalty::PerimeterRatio{}), 4.0 * 0.2 / 2.0, 1e-12);
}

TEST(Pai, PerimeterPenaltyNeedsPerimeter) {
  try {
    penalty_factor(penalty::PerimeterRatio{}, RegionStats{1.0, 1.0, 0.5, 0.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegeneratePenalty);
  }
  EXPECT_THROW(penalty_factor(penalty::HitRatePower{}, RegionStats{1.0, 1.0}), Error);
}

TEST(Pai, LevelPaiMatchesDirectEvaluation) {
  const auto psi = Example1(3.0).sample(300);
  const auto phi = ScalarField::sample(psi.grid(), [](std::span<const double> x) { return 1.0 + x[0]; });
  const Region a = Region::full(psi.grid());
  for (const PenaltySpec spec : {PenaltySpec{penalty::Unit{}}, PenaltySpec{penalty::AreaPower{0.3}},
                                 PenaltySpec{penalty::HitRatePower{}}, PenaltySpec{penalty::PerimeterRatio{}}}) {
    const LevelPai lp(psi, phi, a, spec);
    for (double s : {0.1, 0.5, 0.9, 1.0}) {
      EXPECT_NEAR(lp.at(s), level_pai(psi, phi, a, s, spec), 1e-10) << describe(spec) << " s=" << s;
    }
  }
}

// P(psi, psi) = ∫_0^1 (1 - s)/(1 - s^(1/p)) ds, computed independently at 30 digits.
struct AveragedCase {
  double p;
  double expected;
};

void PrintTo(const AveragedCase& c, std::ostream* os) { *os << "p=" << c.p; }

class Example1Averaged : public ::testing::TestWithParam<AveragedCase> {};

TEST_P(Example1Averaged, MatchesHighPrecisionIntegral) {
  const auto [p, expected] = GetParam();
  const auto psi = Example1(p).sample(4000);
  const Region a = Region::full(psi.grid());
  const auto rep = average_pai(psi, psi, a, 400, penalty::Unit{});
  EXPECT_NEAR(rep.P, expected, 3e-3 * expected);
  EXPECT_NEAR(rep.P_N, expected, 5e-3 * expected);
  EXPECT_LE(rep.P, rep.bound);
  EXPECT_FALSE(rep.divergence_suspected);
  EXPECT_EQ(rep.s.size(), 400u);
  EXPECT_DOUBLE_EQ(rep.s.back(), 1.0);
}

INSTANTIATE_TEST_SUITE_P(Powers, Example1Averaged,
                         ::testing::Values(AveragedCase{1.5, 1.3294415416798359}, AveragedCase{2.0, 5.0 / 3.0},
                                           AveragedCase{3.0, 2.35}),
                         [](const auto& info) { return "p" + std::to_string(static_cast<int>(info.param.p * 10)); });

TEST(Pai, UniformPredictionScoresOne) {
  const auto g = GridSpec::cube(2, 0.0, 1.0, 16);
  const ScalarField psi(g, 1.0);
  const Region a = Region::full(g);
  const auto rep = average_pai(psi, psi, a, 10, penalty::Unit{}, PaiQuadrature::riemann_P_N);
  EXPECT_EQ(rep.P_N, 1.0);
  EXPECT_EQ(rep.value(), 1.0);
}

TEST(Pai, AveragedPaiIsBoundedByPeakOverMean) {
  const auto g = GridSpec::cube(1, -1.0, 1.0, 200);
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> a(g.size()), b(g.size());
    for (auto& x : a) x = u(rng);
    for (auto& x : b) x = u(rng);
    const ScalarField psi(g, a), phi(g, b);
    const auto rep = average_pai(psi, phi, Region::full(g), 50, penalty::Unit{});
    EXPECT_LE(rep.P, rep.bound + 1e-12);
    EXPECT_LE(rep.P_N, rep.bound + 1e-12);
  }
}

TEST(Pai, NeedsAtLeastOneLevel) {
  const auto psi = Example1(2.0).sample(10);
  EXPECT_THROW(average_pai(psi, psi, Region::full(psi.grid()), 0, penalty::Unit{}), Error);
}
