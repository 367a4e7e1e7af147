#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hmm_spde/spectral.hpp"
#include "test_util.hpp"

using namespace hmm_spde;

namespace {
constexpr double pi2 = std::numbers::pi * std::numbers::pi;
}

TEST(OperatorSpec, LaplacianEigenvalues) {
  const auto op = OperatorSpec::laplacian(3);
  ASSERT_EQ(op.mode_count(), 3u);
  EXPECT_DOUBLE_EQ(op.eigenvalue(1), pi2);
  EXPECT_DOUBLE_EQ(op.eigenvalue(2), 4 * pi2);
  EXPECT_DOUBLE_EQ(op.eigenvalue(3), 9 * pi2);
  EXPECT_NEAR(op.eigenvalue(1), 9.8696, 1e-4);
  EXPECT_NEAR(op.eigenvalue(2), 39.4784, 1e-4);
  EXPECT_NEAR(op.eigenvalue(3), 88.8264, 1e-4);

  const auto one = OperatorSpec::laplacian(1);
  EXPECT_DOUBLE_EQ(one.smallest(), pi2);
}

TEST(OperatorSpec, RejectsBadSpectra) {
  EXPECT_THROW(OperatorSpec::laplacian(0), std::invalid_argument);
  EXPECT_THROW(OperatorSpec({}), std::invalid_argument);
  EXPECT_THROW(OperatorSpec({1.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(OperatorSpec({2.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(OperatorSpec({0.0, 1.0}), std::invalid_argument);
}

TEST(Resolvent, ExamplesAndErrors) {
  const auto op = OperatorSpec::laplacian(8);
  const auto f = test::random_field(8, 3);
  EXPECT_EQ(apply_resolvent(f, 0.0, op), f);

  const auto e1 = SpectralField::basis(8, 1);
  EXPECT_NEAR(apply_resolvent(e1, 1.0 / pi2, op)[0], 0.5, 1e-15);
  EXPECT_THROW(apply_resolvent(e1, -1e-3, op), std::invalid_argument);
  EXPECT_THROW(apply_resolvent(SpectralField(7), 0.1, op), std::invalid_argument);
}

TEST(Resolvent, ContractivityProperty) {
  const auto op = OperatorSpec::laplacian(31);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> step(0.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto v = test::random_field(31, 100 + trial);
    const double tau = trial == 0 ? 0.0 : step(rng);
    const double bound = v.norm() / (1.0 + op.smallest() * tau);
    EXPECT_LE(apply_resolvent(v, tau, op).norm(), bound * (1.0 + 1e-15));
  }
}

TEST(Semigroup, ExamplesAndErrors) {
  const auto op = OperatorSpec::laplacian(5);
  const auto f = test::random_field(5, 4);
  EXPECT_EQ(apply_semigroup(f, 0.0, op), f);
  const auto e1 = SpectralField::basis(5, 1);
  EXPECT_NEAR(apply_semigroup(e1, std::log(2.0) / pi2, op)[0], 0.5, 1e-15);
  EXPECT_THROW(apply_semigroup(e1, -0.1, op), std::invalid_argument);
}

TEST(Semigroup, CompositionProperty) {
  const auto op = OperatorSpec::laplacian(31);
  for (int trial = 0; trial < 50; ++trial) {
    const auto v = test::random_field(31, trial);
    const double s = 0.001 * (trial + 1), t = 0.0007 * (trial + 3);
    const auto once = apply_semigroup(v, s + t, op);
    const auto twice = apply_semigroup(apply_semigroup(v, s, op), t, op);
    EXPECT_LE(distance(once, twice), 1e-12 * std::max(1.0, v.norm()));
  }
}

TEST(Semigroup, ResolventIsSecondOrderAccurateOverOneStep) {
  // |1/(1 + lambda dt) - exp(-lambda dt)| for e_1, slope fitted over three steps.
  const double lambda = pi2;
  std::vector<double> logs, logerr;
  for (double dt : {1e-3, 5e-4, 2.5e-4}) {
    logs.push_back(std::log(dt));
    logerr.push_back(std::log(std::abs(1.0 / (1.0 + lambda * dt) - std::exp(-lambda * dt))));
  }
  const double slope = (logerr.back() - logerr.front()) / (logs.back() - logs.front());
  EXPECT_NEAR(slope, 2.0, 0.05);
}

TEST(FractionalNorm, Examples) {
  const auto op = OperatorSpec::laplacian(4);
  EXPECT_NEAR(fractional_norm(SpectralField::basis(4, 1), 0.5, op), std::numbers::pi, 1e-14);
  const auto f = test::random_field(4, 9);
  EXPECT_NEAR(fractional_norm(f, 0.0, op), f.norm(), 1e-15);
  SpectralField e2 = 3.0 * SpectralField::basis(4, 2);
  EXPECT_NEAR(fractional_norm(e2, -1.0, op), 3.0 / (4.0 * pi2), 1e-15);
  EXPECT_NEAR(1.0 / (4.0 * pi2), 0.02533, 1e-5);
  EXPECT_THROW(fractional_norm(f, 1.5, op), std::invalid_argument);
}

TEST(SineTransform, BasisValuesOnGrid) {
  const auto g = to_grid(SpectralField::basis(3, 1));
  ASSERT_EQ(g.size(), 3u);
  EXPECT_NEAR(g.values[0], 1.0, 1e-15);
  EXPECT_NEAR(g.values[1], std::numbers::sqrt2, 1e-15);
  EXPECT_NEAR(g.values[2], 1.0, 1e-15);
}

TEST(SineTransform, ZeroMapsToZero) {
  const auto g = to_grid(SpectralField(9));
  for (double v : g.values) EXPECT_EQ(v, 0.0);
  const auto f = to_spectral(GridField{std::vector<double>(9, 0.0)});
  EXPECT_EQ(f.norm(), 0.0);
}

TEST(SineTransform, RoundTripAndParseval) {
  for (std::size_t k : {1u, 2u, 7u, 63u, 128u}) {
    for (int trial = 0; trial < 5; ++trial) {
      const auto f = test::random_field(k, 1000 * k + trial);
      const auto g = to_grid(f);
      const auto back = to_spectral(g);
      EXPECT_LE(distance(back, f), 1e-12 * f.norm()) << "K=" << k;
      double l2 = 0.0;
      for (double v : g.values) l2 += v * v;
      EXPECT_NEAR(std::sqrt(l2 * g.weight()), f.norm(), 1e-12 * f.norm());
    }
  }
}

TEST(SineTransform, MatchesDirectEvaluation) {
  const std::size_t k = 17;
  const auto f = test::random_field(k, 5);
  const auto g = to_grid(f);
  for (std::size_t i = 0; i < k; ++i) {
    const double xi = static_cast<double>(i + 1) / (k + 1);
    double direct = 0.0;
    for (std::size_t m = 1; m <= k; ++m) direct += f[m - 1] * std::numbers::sqrt2 * std::sin(m * std::numbers::pi * xi);
    EXPECT_NEAR(g.values[i], direct, 1e-13);
  }
}

TEST(SpectralField, ArithmeticAndNorm) {
  SpectralField a({3.0, 4.0});
  EXPECT_DOUBLE_EQ(a.norm(), 5.0);
  EXPECT_DOUBLE_EQ(SpectralField(2).norm(), 0.0);
  const auto b = a + 2.0 * a;
  EXPECT_DOUBLE_EQ(b[0], 9.0);
  EXPECT_DOUBLE_EQ(inner(a, b), 75.0);
  EXPECT_THROW(a += SpectralField(3), std::invalid_argument);
  EXPECT_THROW(SpectralField::basis(3, 0), std::invalid_argument);
}
