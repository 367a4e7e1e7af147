#pragma once

// Heterogeneous multiscale driver. Each macro step freezes X_n, advances M
// fast replicas m_0 = n_T + N - 1 micro steps from their carried state,
// averages F(X_n, Y_{n,m,j}) over m in [n_T, n_T + N - 1] and all j, and
// takes one semi-implicit Euler step of the slow equation with that estimate.

#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hmm_spde/coefficients.hpp"
#include "hmm_spde/microsolver.hpp"
#include "hmm_spde/noise.hpp"
#include "hmm_spde/parallel.hpp"
#include "hmm_spde/spectral.hpp"

namespace hmm_spde {

struct HmmParams {
  double epsilon = 1e-3;
  double macro_dt = 0.01;  // Delta t
  double micro_dt = 1e-5;  // delta t
  double horizon = 1.0;    // T
  std::uint64_t window = 1;     // N
  std::uint64_t replicas = 1;   // M
  std::uint64_t warmup = 1;     // n_T
  double tau_max = 1.0;

  double tau() const { return micro_dt / epsilon; }
  std::uint64_t macro_steps() const {  // n_0 = floor(T / Delta t)
    return static_cast<std::uint64_t>(std::floor(horizon / macro_dt * (1.0 + 1e-12)));
  }
  std::uint64_t micro_steps_per_macro() const { return warmup + window - 1; }  // m_0

  void validate() const {
    if (!(epsilon > 0.0)) throw std::invalid_argument("HmmParams: epsilon must be positive");
    if (!(macro_dt > 0.0)) throw std::invalid_argument("HmmParams: macro dt must be positive");
    if (!(micro_dt > 0.0)) throw std::invalid_argument("HmmParams: micro dt must be positive");
    if (!(horizon >= 0.0)) throw std::invalid_argument("HmmParams: T must be nonnegative");
    if (window < 1) throw std::invalid_argument("HmmParams: N must be >= 1");
    if (replicas < 1) throw std::invalid_argument("HmmParams: M must be >= 1");
    if (warmup < 1) throw std::invalid_argument("HmmParams: n_T must be >= 1");
    if (!(tau() <= tau_max)) throw std::invalid_argument("HmmParams: tau = delta t / epsilon exceeds tau_max");
  }
};

struct CostReport {
  std::uint64_t total_micro_steps = 0;
  double cost_per_unit_time = 0.0;  // M m_0 / Delta t
  std::optional<double> direct_cost_per_unit_time;
};

struct HmmState {
  SpectralField x;
  std::vector<SpectralField> micro_states;  // carried Y_{n,m_0,j}
  std::uint64_t n = 0;
  std::uint64_t cost_counter = 0;
};

struct HmmOptions {
  /// Testing aid: every replica consumes replica 1's keys.
  bool share_replica_noise = false;
  KeyAudit* audit = nullptr;
  std::size_t max_threads = 0;
  std::function<void(const std::string&)> warn = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
};

/// Returns Ftilde_n and advances micro_states to Y_{n,m_0,j}.
inline SpectralField estimate_ftilde(const CoefficientSpec& spec, const OperatorSpec& op_b, const SpectralField& x_frozen,
                                     std::vector<SpectralField>& micro_states, const HmmParams& params,
                                     std::uint64_t seed, std::uint64_t macro_index, const HmmOptions& options = {}) {
  const std::size_t k = op_b.mode_count();
  const std::uint64_t m0 = params.micro_steps_per_macro();
  if (params.replicas < 1 || params.window < 1 || params.warmup < 1)
    throw std::invalid_argument("estimate_ftilde: need M >= 1, N >= 1, n_T >= 1");
  if (micro_states.size() != params.replicas) throw std::invalid_argument("estimate_ftilde: need one carried state per replica");
  if (x_frozen.size() != k) throw std::invalid_argument("estimate_ftilde: mode count mismatch");

  // Replicas are reduced in fixed chunks so the sum order does not depend on threads.
  constexpr std::size_t chunk = 64;
  const std::size_t replicas = params.replicas;
  const std::size_t chunks = (replicas + chunk - 1) / chunk;
  std::vector<std::vector<double>> partial(chunks, std::vector<double>(k, 0.0));

  parallel_for(
      chunks,
      [&](std::size_t c) {
        MicroSolver solver(spec, op_b, params.tau(), x_frozen);
        auto& acc = partial[c];
        const std::size_t end = std::min(replicas, (c + 1) * chunk);
        for (std::size_t r = c * chunk; r < end; ++r) {
          const std::uint64_t j = options.share_replica_noise ? 1 : r + 1;
          auto& y = micro_states[r];
          if (y.size() != k) throw std::invalid_argument("estimate_ftilde: carried state has wrong mode count");
          for (std::uint64_t m = 0; m < m0; ++m) {
            const auto key = derive_key(seed, macro_index, m + 1, j, m0, Stream::micro);
            if (options.audit) options.audit->record(key);
            solver.step(y.coeffs(), key);
            if (m + 1 >= params.warmup) solver.accumulate_f_grid(y.coeffs(), acc);
          }
        }
      },
      options.max_threads);

  std::vector<double> total(k, 0.0);
  for (const auto& p : partial)
    for (std::size_t i = 0; i < k; ++i) total[i] += p[i];
  const double inv = 1.0 / (static_cast<double>(params.replicas) * static_cast<double>(params.window));
  for (double& v : total) v *= inv;
  SpectralField out(k);
  sine_transform(k).to_spectral(total, out.coeffs());
  return out;
}

/// X_{n+1} = S_dt X_n + dt S_dt Ftilde_n.
inline SpectralField macro_step(const SpectralField& x, const OperatorSpec& op_a, double macro_dt,
                                const SpectralField& ftilde) {
  return apply_resolvent(x + macro_dt * ftilde, macro_dt, op_a);
}

struct HmmResult {
  std::vector<SpectralField> trajectory;  // X_0 .. X_{n_0}
  std::vector<SpectralField> micro_states;
  CostReport cost;
};

/// Checks (SD) or (WD); throws DissipativityError when neither holds.
inline void require_dissipativity(const CoefficientSpec& spec, const OperatorSpec& op_b, const HmmOptions& options) {
  if (check_strict_dissipativity(spec, op_b).holds) return;
  if (check_weak_dissipativity(spec, op_b).holds) {
    if (options.warn) options.warn("only weak dissipativity holds; the discrete invariant law may not be unique");
    return;
  }
  throw DissipativityError("coefficients satisfy neither strict nor weak dissipativity");
}

inline HmmResult run_hmm(const SpectralField& x0, const SpectralField& y0, const CoefficientSpec& spec,
                         const OperatorSpec& op_a, const OperatorSpec& op_b, const HmmParams& params, std::uint64_t seed,
                         const HmmOptions& options = {}) {
  params.validate();
  if (x0.size() != op_a.mode_count() || y0.size() != op_b.mode_count() || op_a.mode_count() != op_b.mode_count())
    throw std::invalid_argument("run_hmm: mode count mismatch");
  require_dissipativity(spec, op_b, options);

  const std::uint64_t n0 = params.macro_steps();
  HmmState state{x0, std::vector<SpectralField>(params.replicas, y0), 0, 0};
  HmmResult result;
  result.trajectory.reserve(n0 + 1);
  result.trajectory.push_back(state.x);
  for (std::uint64_t n = 0; n < n0; ++n) {
    const auto ftilde = estimate_ftilde(spec, op_b, state.x, state.micro_states, params, seed, n, options);
    state.x = macro_step(state.x, op_a, params.macro_dt, ftilde);
    state.cost_counter += params.replicas * params.micro_steps_per_macro();
    ++state.n;
    result.trajectory.push_back(state.x);
  }
  result.micro_states = std::move(state.micro_states);
  result.cost.total_micro_steps = state.cost_counter;
  result.cost.cost_per_unit_time =
      static_cast<double>(params.replicas * params.micro_steps_per_macro()) / params.macro_dt;
  return result;
}

// ---------------------------------------------------------------------------
// Parameter selection for a target tolerance.

enum class Regime { strong, weak };

inline Regime parse_regime(const std::string& s) {
  if (s == "strong") return Regime::strong;
  if (s == "weak") return Regime::weak;
  throw std::invalid_argument("regime must be 'strong' or 'weak', got: " + s);
}

/// Which of N, M absorbs the Monte-Carlo budget in the strong regime.
enum class StrongBranch { single_replica, single_window };

struct ParamChoice {
  double r = 0.0;
  double kappa = 0.0;
  double horizon = 1.0;
  /// Exponential relaxation rate in the weak-regime warm-up; 1 when unset.
  std::optional<double> c_hat;
  StrongBranch branch = StrongBranch::single_replica;
};

namespace detail {
// Ceiling that ignores floating-point fuzz just above an integer.
inline std::uint64_t ceil_count(double x) {
  const double c = std::ceil(x * (1.0 - 1e-12));
  return c < 1.0 ? 1 : static_cast<std::uint64_t>(c);
}
}  // namespace detail

inline HmmParams choose_params(double tol, double epsilon, Regime regime, const ParamChoice& choice = {}) {
  if (!(tol > 0.0 && tol < 1.0)) throw std::invalid_argument("choose_params: tol must lie in (0,1)");
  if (!(epsilon > 0.0)) throw std::invalid_argument("choose_params: epsilon must be positive");
  const double r = choice.r, kappa = choice.kappa;
  const double r_max = regime == Regime::strong ? 0.5 : 1.0;
  if (!(r >= 0.0 && r < r_max)) throw std::invalid_argument("choose_params: r out of range for this regime");
  if (!(kappa >= 0.0 && kappa < 0.5)) throw std::invalid_argument("choose_params: kappa must lie in [0, 1/2)");

  const double dt_exp = 1.0 / (1.0 - r);
  const double tau_exp = 1.0 / (0.5 - kappa);
  HmmParams p;
  p.epsilon = epsilon;
  p.horizon = choice.horizon;
  p.macro_dt = std::pow(tol, dt_exp);
  const double tau = std::pow(tol, tau_exp);
  p.micro_dt = epsilon * tau;
  const double log_inv_tol = std::log(1.0 / tol);
  if (regime == Regime::strong) {
    p.warmup = detail::ceil_count(log_inv_tol / tau);
    if (choice.branch == StrongBranch::single_replica) {
      p.replicas = 1;
      p.window = detail::ceil_count(std::pow(tol, -2.0 + dt_exp - tau_exp));
    } else {
      p.window = 1;
      p.replicas = detail::ceil_count(std::pow(tol, dt_exp - 2.0));
    }
  } else {
    const double c = choice.c_hat.value_or(1.0);
    if (!(c > 0.0)) throw std::invalid_argument("choose_params: c_hat must be positive");
    p.replicas = 1;
    p.window = 1;
    p.warmup = detail::ceil_count(log_inv_tol / (tau * c));
  }
  return p;
}

/// Micro steps per unit time of a direct scheme reaching tol:
/// strong eps^{-1} tol^{-1/(1/4-kappa)}, weak eps^{-1} tol^{-1/(1/2-kappa)}.
inline double direct_cost_per_unit_time(double tol, double epsilon, Regime regime, double kappa = 0.0) {
  const double order = regime == Regime::strong ? 0.25 - kappa : 0.5 - kappa;
  if (!(order > 0.0)) throw std::invalid_argument("direct_cost: kappa too large for this regime");
  return std::pow(tol, -1.0 / order) / epsilon;
}

inline double hmm_cost_per_unit_time(const HmmParams& p) {
  return static_cast<double>(p.replicas * p.micro_steps_per_macro()) / p.macro_dt;
}

/// HMM cost over direct cost. Not clamped: values above 1 are reported as is.
inline double cost_compare(const HmmParams& params, double tol, double epsilon, Regime regime, double kappa = 0.0) {
  return hmm_cost_per_unit_time(params) / direct_cost_per_unit_time(tol, epsilon, regime, kappa);
}

}  // namespace hmm_spde
