#pragma once

// Fast-scale semi-implicit Euler scheme with the slow component frozen:
//   y' = R_tau (y + tau G(x, y) + sqrt(tau) zeta),   R_tau = (I - tau B)^{-1}.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "hmm_spde/coefficients.hpp"
#include "hmm_spde/noise.hpp"
#include "hmm_spde/spectral.hpp"

namespace hmm_spde {

class DissipativityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// rho = (1 + tau L_g) / (1 + tau (2 mu - L_g)); |r_{m+1}|^2 <= rho |r_m|^2 for
/// two fast trajectories driven by the same noise.
inline double contraction_factor(double tau, double lipschitz_g, double mu) {
  if (!(tau > 0.0)) throw std::invalid_argument("contraction_factor: tau must be positive");
  if (!(lipschitz_g >= 0.0)) throw std::invalid_argument("contraction_factor: L_g must be nonnegative");
  if (!(lipschitz_g < mu)) throw DissipativityError("strict dissipativity violated: L_g >= mu");
  return (1.0 + tau * lipschitz_g) / (1.0 + tau * (2.0 * mu - lipschitz_g));
}

/// Exponential rate c with rho = exp(-2 c tau).
inline double contraction_rate(double tau, double lipschitz_g, double mu) {
  return -std::log(contraction_factor(tau, lipschitz_g, mu)) / (2.0 * tau);
}

/// Stationary variance of mode k (1-based) for the scheme with G(x,y) = -damping*y.
/// Recursion y' = a (b y + sqrt(tau) z), a = 1/(1+tau mu_k), b = 1 - tau*damping,
/// so v = a^2 tau / (1 - a^2 b^2); damping = 0 gives 1/(2 mu_k + tau mu_k^2).
inline double stationary_variance_linear(std::size_t k, double tau, const OperatorSpec& op_b, double damping = 0.0) {
  if (!(tau > 0.0)) throw std::invalid_argument("stationary_variance_linear: tau must be positive");
  const double mu = op_b.eigenvalue(k);
  if (damping == 0.0) return 1.0 / (2.0 * mu + tau * mu * mu);
  const double a = 1.0 / (1.0 + tau * mu);
  const double b = 1.0 - tau * damping;
  const double ab2 = a * a * b * b;
  if (!(ab2 < 1.0)) throw DissipativityError("stationary_variance_linear: recursion is not contracting");
  return a * a * tau / (1.0 - ab2);
}

/// Variance of mode k after m steps from a deterministic start (linear G).
inline double transient_variance_linear(std::size_t k, double tau, std::uint64_t m, const OperatorSpec& op_b,
                                        double damping = 0.0) {
  const double a = 1.0 / (1.0 + tau * op_b.eigenvalue(k));
  const double b2 = std::pow(a * (1.0 - tau * damping), 2);
  return stationary_variance_linear(k, tau, op_b, damping) * (1.0 - std::pow(b2, static_cast<double>(m)));
}

struct MicroState {
  SpectralField y;
  SpectralField frozen_x;
  double tau = 0.0;
  std::uint64_t step_index = 0;
};

/// Stepping engine for one frozen slow state. Holds scratch buffers, so one
/// instance per concurrently advanced replica.
class MicroSolver {
 public:
  MicroSolver(const CoefficientSpec& spec, const OperatorSpec& op_b, double tau, const SpectralField& frozen_x)
      : spec_(&spec),
        k_(op_b.mode_count()),
        tau_(tau),
        noise_scale_(std::sqrt(tau)),
        factors_(resolvent_factors(tau, op_b)),
        transform_(&sine_transform(op_b.mode_count())),
        x_grid_(k_),
        y_grid_(k_),
        work_grid_(k_),
        work_(k_) {
    if (!(tau > 0.0)) throw std::invalid_argument("MicroSolver: tau must be positive");
    if (frozen_x.size() != k_) throw std::invalid_argument("MicroSolver: frozen x has wrong mode count");
    transform_->to_grid(frozen_x.coeffs(), x_grid_);
  }

  std::size_t mode_count() const { return k_; }
  double tau() const { return tau_; }

  /// One step with an explicit noise vector (already scaled: N(0, tau) per mode).
  void step(std::span<double> y, std::span<const double> scaled_noise) {
    if (y.size() != k_ || scaled_noise.size() != k_) throw std::invalid_argument("MicroSolver::step: mode count mismatch");
    if (!spec_->g_is_zero) {
      transform_->to_grid(y, y_grid_);
      for (std::size_t i = 0; i < k_; ++i) work_grid_[i] = spec_->g(GridField::point(i, k_), x_grid_[i], y_grid_[i]);
      transform_->to_spectral(work_grid_, work_);
      for (std::size_t k = 0; k < k_; ++k) y[k] += tau_ * work_[k];
    }
    for (std::size_t k = 0; k < k_; ++k) y[k] = factors_[k] * (y[k] + scaled_noise[k]);
  }

  /// One step with the noise vector drawn from key.
  void step(std::span<double> y, const NoiseStreamKey& key) {
    fill_gaussian(key, noise_scale_, noise_);
    step(y, noise_);
  }

  /// F(frozen_x, y) on the collocation grid, accumulated into acc.
  void accumulate_f_grid(std::span<const double> y, std::span<double> acc) {
    transform_->to_grid(y, y_grid_);
    for (std::size_t i = 0; i < k_; ++i) acc[i] += spec_->f(GridField::point(i, k_), x_grid_[i], y_grid_[i]);
  }

  const SineTransform& transform() const { return *transform_; }

 private:
  const CoefficientSpec* spec_;
  std::size_t k_;
  double tau_;
  double noise_scale_;
  std::vector<double> factors_;
  const SineTransform* transform_;
  std::vector<double> x_grid_, y_grid_, work_grid_, work_;
  std::vector<double> noise_ = std::vector<double>(k_);
};

/// Functional single step: noise.field must carry N(0, tau) coefficients.
inline MicroState micro_step(const MicroState& state, const NoiseIncrement& noise, const CoefficientSpec& spec,
                             const OperatorSpec& op_b) {
  if (state.y.size() != op_b.mode_count() || noise.field.size() != op_b.mode_count())
    throw std::invalid_argument("micro_step: mode count mismatch");
  if (std::abs(noise.dt - state.tau) > 1e-15 * state.tau)
    throw std::invalid_argument("micro_step: noise increment must have variance tau");
  MicroSolver solver(spec, op_b, state.tau, state.frozen_x);
  MicroState next = state;
  solver.step(next.y.coeffs(), noise.field.coeffs());
  ++next.step_index;
  return next;
}

struct MicroRun {
  MicroState final_state;
  SpectralField f_average;   // average of F(frozen_x, Y_m) over the window
  std::uint64_t window_count = 0;
  bool average_empty() const { return window_count == 0; }
};

/// Advances `steps` micro steps from y0. Step m+1 consumes the key
/// key_base with micro_step = key_base.micro_step + m + 1. The window averages
/// F(frozen_x, Y_m) over m in [warmup, steps].
inline MicroRun run_micro(const CoefficientSpec& spec, const OperatorSpec& op_b, double tau, const SpectralField& y0,
                          const SpectralField& frozen_x, std::uint64_t steps, const NoiseStreamKey& key_base,
                          std::uint64_t warmup = 1) {
  MicroSolver solver(spec, op_b, tau, frozen_x);
  const std::size_t k = op_b.mode_count();
  MicroRun run{MicroState{y0, frozen_x, tau, 0}, SpectralField(k), 0};
  std::vector<double> acc(k, 0.0);
  auto& y = run.final_state.y;
  if (warmup == 0) {
    solver.accumulate_f_grid(y.coeffs(), acc);
    ++run.window_count;
  }
  NoiseStreamKey key = key_base;
  for (std::uint64_t m = 1; m <= steps; ++m) {
    key.micro_step = key_base.micro_step + m;
    solver.step(y.coeffs(), key);
    if (m >= warmup) {
      solver.accumulate_f_grid(y.coeffs(), acc);
      ++run.window_count;
    }
  }
  run.final_state.step_index = steps;
  if (run.window_count > 0) {
    const double inv = 1.0 / static_cast<double>(run.window_count);
    for (double& v : acc) v *= inv;
    solver.transform().to_spectral(acc, run.f_average.coeffs());
  }
  return run;
}

}  // namespace hmm_spde
