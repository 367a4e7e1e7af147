#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hmm_spde/microsolver.hpp"
#include "hmm_spde/stats.hpp"
#include "test_util.hpp"

using namespace hmm_spde;

namespace {
constexpr double pi2 = std::numbers::pi * std::numbers::pi;

CoefficientSpec identity_f() {
  CoefficientSpec s = preset_p1();
  s.f = [](double, double, double y) { return y; };
  s.sup_f = INFINITY;
  return s;
}
}  // namespace

TEST(ContractionFactor, Examples) {
  EXPECT_NEAR(contraction_factor(0.1, 0.0, pi2), 1.0 / (1.0 + 2.0 * pi2 * 0.1), 1e-15);
  EXPECT_NEAR(contraction_factor(0.1, 0.0, pi2), 0.3363, 1e-4);
  EXPECT_NEAR(contraction_factor(0.1, 1.0, pi2), 1.1 / (1.0 + 0.1 * (2.0 * pi2 - 1.0)), 1e-15);
  EXPECT_NEAR(contraction_factor(0.1, 1.0, pi2), 0.3827, 1e-4);
}

TEST(ContractionFactor, MonotoneToOneAsTauShrinks) {
  double prev = 0.0;
  for (double tau = 1.0; tau > 1e-7; tau /= 3.0) {
    const double rho = contraction_factor(tau, 2.0, pi2);
    EXPECT_GT(rho, prev);
    EXPECT_LT(rho, 1.0);
    prev = rho;
  }
  EXPECT_GT(prev, 0.9999);
}

TEST(ContractionFactor, Errors) {
  EXPECT_THROW(contraction_factor(0.1, pi2, pi2), DissipativityError);
  EXPECT_THROW(contraction_factor(0.1, 20.0, pi2), DissipativityError);
  EXPECT_THROW(contraction_factor(0.0, 1.0, pi2), std::invalid_argument);
  EXPECT_NEAR(std::exp(-2.0 * 0.1 * contraction_rate(0.1, 1.0, pi2)), contraction_factor(0.1, 1.0, pi2), 1e-15);
}

TEST(StationaryVariance, MatchesFixedPointIteration) {
  const auto op = OperatorSpec::laplacian(4);
  EXPECT_NEAR(stationary_variance_linear(1, 0.01, op), 0.048278, 1e-6);
  for (std::size_t k = 1; k <= 4; ++k) {
    for (double tau : {0.001, 0.01, 0.3}) {
      for (double damping : {0.0, 1.0}) {
        const double a = 1.0 / (1.0 + tau * op.eigenvalue(k)), b = 1.0 - tau * damping;
        double v = 0.0;
        for (int it = 0; it < 200000; ++it) v = a * a * (b * b * v + tau);
        EXPECT_NEAR(stationary_variance_linear(k, tau, op, damping), v, 1e-14);
      }
    }
  }
  EXPECT_THROW(stationary_variance_linear(1, 0.0, op), std::invalid_argument);
}

TEST(StationaryVariance, ContinuousLimit) {
  const auto op = OperatorSpec::laplacian(3);
  for (std::size_t k = 1; k <= 3; ++k)
    EXPECT_NEAR(stationary_variance_linear(k, 1e-9, op) * 2.0 * op.eigenvalue(k), 1.0, 1e-6);
}

TEST(MicroStep, PureResolvent) {
  const auto op = OperatorSpec::laplacian(6);
  const double tau = 1.0 / pi2;
  MicroState s{SpectralField::basis(6, 1), SpectralField(6), tau, 0};
  const auto next = micro_step(s, NoiseIncrement{SpectralField(6), tau}, preset_p1(), op);
  EXPECT_NEAR(next.y[0], 0.5, 1e-15);
  EXPECT_EQ(next.step_index, 1u);
}

TEST(MicroStep, PerModeAr1) {
  const auto op = OperatorSpec::laplacian(10);
  const double tau = 0.02;
  const auto y = test::random_field(10, 1);
  MicroState s{y, test::random_field(10, 2), tau, 0};
  const auto noise = draw_increment(derive_key(1, 0, 1, 1), tau, 10);
  const auto next = micro_step(s, noise, preset_p1(), op);
  for (std::size_t k = 0; k < 10; ++k) {
    const double a = 1.0 / (1.0 + tau * op.eigenvalue(k + 1));
    EXPECT_NEAR(next.y[k], a * (y[k] + noise.field[k]), 1e-15);
  }
}

TEST(MicroStep, Errors) {
  const auto op = OperatorSpec::laplacian(4);
  MicroState s{SpectralField(4), SpectralField(4), 0.01, 0};
  EXPECT_THROW(micro_step(s, NoiseIncrement{SpectralField(5), 0.01}, preset_p1(), op), std::invalid_argument);
  EXPECT_THROW(micro_step(s, NoiseIncrement{SpectralField(4), 0.02}, preset_p1(), op), std::invalid_argument);
}

TEST(MicroStep, PathwiseContractionEveryStep) {
  const std::size_t k = 31;
  const auto op = OperatorSpec::laplacian(k);
  const auto spec = preset_p2();
  for (double tau : {0.01, 0.1}) {
    const double rho = contraction_factor(tau, spec.lipschitz_g_y, op.smallest());
    for (std::uint64_t pair = 0; pair < 4; ++pair) {
      const auto x = test::random_field(k, 900 + pair);
      MicroSolver solver(spec, op, tau, x);
      auto y1 = test::random_field(k, 10 + pair, 4.0), y2 = test::random_field(k, 20 + pair, 4.0);
      const double r0 = distance(y1, y2);
      double r2 = r0 * r0;
      for (std::uint64_t m = 1; m <= 500; ++m) {
        const auto key = derive_key(5, 0, m, pair + 1);
        solver.step(y1.coeffs(), key);
        solver.step(y2.coeffs(), key);
        const double next = distance(y1, y2);
        // Roundoff floor of the transforms.
        const double floor = 1e-14 * (y1.norm() + y2.norm() + 1.0);
        ASSERT_LE(next * next, rho * r2 + floor * floor) << "tau=" << tau << " m=" << m;
        ASSERT_LE(next, std::pow(rho, m / 2.0) * r0 + 10.0 * floor);
        r2 = next * next;
      }
    }
  }
}

TEST(MicroStep, BoundedDriftDecomposition) {
  // Y = w + D with w the G = 0 path on the same noise from 0:
  // |D_m| <= |D_0| (1 + mu tau)^-m + sup_g / mu.
  const std::size_t k = 31;
  const auto op = OperatorSpec::laplacian(k);
  const auto spec = preset_p2();
  const auto zero_g = preset_p1();
  const double tau = 0.05;
  const auto x = test::random_field(k, 7);
  MicroSolver full(spec, op, tau, x), linear(zero_g, op, tau, x);
  auto y = test::random_field(k, 8, 10.0);
  SpectralField w(k);
  const double d0 = y.norm();
  for (std::uint64_t m = 1; m <= 2000; ++m) {
    const auto key = derive_key(11, 0, m, 1);
    full.step(y.coeffs(), key);
    linear.step(w.coeffs(), key);
    const double bound = d0 * std::pow(1.0 + op.smallest() * tau, -static_cast<double>(m)) + spec.sup_g / op.smallest();
    ASSERT_LE(distance(y, w), bound + 1e-12) << "m=" << m;
  }
}

TEST(MicroStep, LinearLawAtFixedSteps) {
  const std::size_t k = 4, paths = 20000;
  const auto op = OperatorSpec::laplacian(k);
  const double tau = 0.01;
  const auto spec = preset_p1();
  MicroSolver solver(spec, op, tau, SpectralField(k));
  std::vector<std::vector<RunningStats>> stats(3, std::vector<RunningStats>(k));
  const std::uint64_t checkpoints[] = {1, 10, 100};
  for (std::uint64_t p = 0; p < paths; ++p) {
    SpectralField y(k);
    std::size_t c = 0;
    for (std::uint64_t m = 1; m <= 100; ++m) {
      solver.step(y.coeffs(), derive_key(21, 0, m, p + 1));
      if (m == checkpoints[c]) {
        for (std::size_t i = 0; i < k; ++i) stats[c][i].add(y[i]);
        ++c;
      }
    }
  }
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < k; ++i) {
      const double v = transient_variance_linear(i + 1, tau, checkpoints[c], op);
      const double a = 1.0 / (1.0 + tau * op.eigenvalue(i + 1));
      double oracle = 0.0;
      for (std::uint64_t m = 0; m < checkpoints[c]; ++m) oracle = a * a * (oracle + tau);
      EXPECT_NEAR(v, oracle, 1e-15);
      EXPECT_NEAR(stats[c][i].variance(), v, 4.5 * v * std::sqrt(2.0 / paths)) << "m=" << checkpoints[c] << " k=" << i + 1;
      EXPECT_NEAR(stats[c][i].mean(), 0.0, 4.5 * std::sqrt(v / paths));
    }
  }
}

TEST(MicroStep, SecondMomentStaysBounded) {
  const std::size_t k = 15;
  const auto op = OperatorSpec::laplacian(k);
  const auto spec = preset_p2();
  MicroSolver solver(spec, op, 0.05, test::random_field(k, 1));
  auto y = test::random_field(k, 2, 5.0);
  RunningStats late;
  for (std::uint64_t m = 1; m <= 20000; ++m) {
    solver.step(y.coeffs(), derive_key(3, 0, m, 1));
    if (m > 1000) late.add(y.norm_squared());
  }
  // Bounded by the stationary OU trace plus the drift offset.
  double ou = 0.0;
  for (std::size_t i = 1; i <= k; ++i) ou += stationary_variance_linear(i, 0.05, op);
  const double offset = spec.sup_g / op.smallest();
  EXPECT_LT(late.mean(), 2.0 * (ou + offset * offset));
}

TEST(RunMicro, ZeroStepsReturnsStart) {
  const auto op = OperatorSpec::laplacian(5);
  const auto y0 = test::random_field(5, 1);
  const auto run = run_micro(preset_p1(), op, 0.01, y0, SpectralField(5), 0, derive_key(1, 0, 0, 1));
  EXPECT_EQ(run.final_state.y, y0);
  EXPECT_TRUE(run.average_empty());
}

TEST(RunMicro, DeterministicInKeys) {
  const auto op = OperatorSpec::laplacian(7);
  const auto key = derive_key(4, 2, 0, 3);
  const auto a = run_micro(preset_p2(), op, 0.02, SpectralField(7), SpectralField(7), 50, key);
  const auto b = run_micro(preset_p2(), op, 0.02, SpectralField(7), SpectralField(7), 50, key);
  EXPECT_EQ(a.final_state.y, b.final_state.y);
  EXPECT_EQ(a.f_average, b.f_average);
  EXPECT_EQ(a.window_count, 50u);
  const auto c = run_micro(preset_p2(), op, 0.02, SpectralField(7), SpectralField(7), 50, key, 11);
  EXPECT_EQ(c.window_count, 40u);
  EXPECT_EQ(c.final_state.y, a.final_state.y);
}

TEST(RunMicro, MatchesStepByStep) {
  const auto op = OperatorSpec::laplacian(7);
  const auto spec = preset_p2();
  const auto key = derive_key(4, 0, 5, 2);
  const auto x = test::random_field(7, 3);
  const auto run = run_micro(spec, op, 0.02, SpectralField(7), x, 20, key);
  MicroState s{SpectralField(7), x, 0.02, 0};
  SpectralField avg(7);
  for (std::uint64_t m = 1; m <= 20; ++m) {
    auto k = key;
    k.micro_step = key.micro_step + m;
    s = micro_step(s, draw_increment(k, 0.02, 7), spec, op);
    avg += eval_F(spec, x, s.y);
  }
  avg *= 1.0 / 20.0;
  EXPECT_LE(distance(run.final_state.y, s.y), 1e-14);
  EXPECT_LE(distance(run.f_average, avg), 1e-14);
}

TEST(RunMicro, IdentityAverageCentred) {
  const std::size_t k = 6;
  const std::uint64_t steps = 200000, warmup = 500;
  const double tau = 0.01;
  const auto op = OperatorSpec::laplacian(k);
  const auto run = run_micro(identity_f(), op, tau, SpectralField(k), SpectralField(k), steps, derive_key(8, 0, 0, 1), warmup);
  const double n = static_cast<double>(run.window_count);
  for (std::size_t i = 0; i < k; ++i) {
    const double a = 1.0 / (1.0 + tau * op.eigenvalue(i + 1));
    const double sd = std::sqrt(stationary_variance_linear(i + 1, tau, op) * (1.0 + a) / (1.0 - a) / n);
    EXPECT_LT(std::abs(run.f_average[i]), 4.0 * sd) << "mode " << i + 1;
  }
}
