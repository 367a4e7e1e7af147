#pragma once

// Baseline: the coupled slow-fast system integrated with one small step dt.
//   X' = S_dt (X + dt F(X, Y))
//   Y' = R_{dt/eps} (Y + (dt/eps) G(X, Y) + sqrt(dt/eps) zeta)
// Both updates read the pre-step (X, Y).

#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hmm_spde/coefficients.hpp"
#include "hmm_spde/noise.hpp"
#include "hmm_spde/spectral.hpp"

namespace hmm_spde {

struct DirectState {
  SpectralField x;
  SpectralField y;
  double t = 0.0;
  std::uint64_t steps_taken = 0;
};

/// Stepping engine with cached factors and scratch space.
class DirectSolver {
 public:
  DirectSolver(const CoefficientSpec& spec, const OperatorSpec& op_a, const OperatorSpec& op_b, double dt,
               double epsilon)
      : spec_(&spec),
        k_(op_a.mode_count()),
        dt_(dt),
        tau_(dt / epsilon),
        slow_factors_(resolvent_factors(dt, op_a)),
        fast_factors_(resolvent_factors(dt / epsilon, op_b)),
        transform_(&sine_transform(op_a.mode_count())),
        xg_(k_), yg_(k_), fg_(k_), gg_(k_), fs_(k_), gs_(k_), noise_(k_) {
    if (!(dt > 0.0) || !(epsilon > 0.0)) throw std::invalid_argument("DirectSolver: need dt > 0 and epsilon > 0");
    if (op_b.mode_count() != k_) throw std::invalid_argument("DirectSolver: A and B must share K");
  }

  double tau() const { return tau_; }

  /// noise: N(0, dt/eps) per mode.
  void step(DirectState& s, std::span<const double> noise) {
    if (s.x.size() != k_ || s.y.size() != k_ || noise.size() != k_) throw std::invalid_argument("direct_step: mode count mismatch");
    transform_->to_grid(s.x.coeffs(), xg_);
    transform_->to_grid(s.y.coeffs(), yg_);
    for (std::size_t i = 0; i < k_; ++i) {
      const double xi = GridField::point(i, k_);
      fg_[i] = spec_->f(xi, xg_[i], yg_[i]);
      gg_[i] = spec_->g_is_zero ? 0.0 : spec_->g(xi, xg_[i], yg_[i]);
    }
    transform_->to_spectral(fg_, fs_);
    if (!spec_->g_is_zero) transform_->to_spectral(gg_, gs_);
    for (std::size_t k = 0; k < k_; ++k) {
      s.x[k] = slow_factors_[k] * (s.x[k] + dt_ * fs_[k]);
      const double g = spec_->g_is_zero ? 0.0 : tau_ * gs_[k];
      s.y[k] = fast_factors_[k] * (s.y[k] + g + noise[k]);
    }
    s.t += dt_;
    ++s.steps_taken;
  }

  void step(DirectState& s, const NoiseStreamKey& key) {
    fill_gaussian(key, std::sqrt(tau_), noise_);
    step(s, noise_);
  }

 private:
  const CoefficientSpec* spec_;
  std::size_t k_;
  double dt_, tau_;
  std::vector<double> slow_factors_, fast_factors_;
  const SineTransform* transform_;
  std::vector<double> xg_, yg_, fg_, gg_, fs_, gs_, noise_;
};

inline DirectState direct_step(const DirectState& state, const CoefficientSpec& spec, const OperatorSpec& op_a,
                               const OperatorSpec& op_b, double dt, double epsilon, const NoiseIncrement& noise) {
  if (std::abs(noise.dt - dt / epsilon) > 1e-15 * (dt / epsilon))
    throw std::invalid_argument("direct_step: noise increment must have variance dt/epsilon");
  DirectSolver solver(spec, op_a, op_b, dt, epsilon);
  DirectState next = state;
  solver.step(next, noise.field.coeffs());
  return next;
}

struct DirectResult {
  std::vector<SpectralField> trajectory;  // X at t = 0, record_every*dt, ...; always ends with X(T)
  DirectState final_state;
  std::uint64_t cost = 0;  // micro steps taken
};

struct DirectOptions {
  std::uint64_t record_every = 0;  // 0: only X_0 and X(T)
  std::function<void(const std::string&)> warn = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
};

/// ceil(T/dt) steps; the last step is not shortened, so the final time is steps*dt.
inline DirectResult run_direct(const SpectralField& x0, const SpectralField& y0, const CoefficientSpec& spec,
                               const OperatorSpec& op_a, const OperatorSpec& op_b, double epsilon, double dt,
                               double horizon, std::uint64_t seed, const DirectOptions& options = {}) {
  if (!(horizon >= 0.0)) throw std::invalid_argument("run_direct: T must be nonnegative");
  DirectSolver solver(spec, op_a, op_b, dt, epsilon);
  if (solver.tau() > 0.5 && options.warn) options.warn("dt/epsilon > 0.5: the direct scheme does not resolve the fast scale");
  const auto steps = static_cast<std::uint64_t>(std::ceil(horizon / dt * (1.0 - 1e-12)));
  DirectResult result;
  result.final_state = DirectState{x0, y0, 0.0, 0};
  result.trajectory.push_back(x0);
  for (std::uint64_t m = 0; m < steps; ++m) {
    solver.step(result.final_state, derive_key(seed, 0, m + 1, 1, 0, Stream::direct));
    if (options.record_every && (m + 1) % options.record_every == 0 && m + 1 != steps)
      result.trajectory.push_back(result.final_state.x);
  }
  if (steps > 0) result.trajectory.push_back(result.final_state.x);
  result.cost = steps;
  return result;
}

}  // namespace hmm_spde
