#pragma once

// Averaged coefficient Fbar(x) = int F(x, y) mu^x(dy) and the deterministic
// averaged scheme Xbar_{n+1} = S_dt Xbar_n + dt S_dt Fbar(Xbar_n).

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "hmm_spde/coefficients.hpp"
#include "hmm_spde/microsolver.hpp"
#include "hmm_spde/noise.hpp"
#include "hmm_spde/quadrature.hpp"
#include "hmm_spde/spectral.hpp"

namespace hmm_spde {

enum class MeasureKind {
  gaussian_nu,       ///< N(0, (-B)^{-1}/2), the invariant law for G = 0
  gaussian_shifted,  ///< N(0, (c - B)^{-1}/2), the invariant law for G = -c y
  gaussian_scheme,   ///< exact stationary law of the tau-discretised linear scheme
  sampled,           ///< only reachable by simulation
};

/// Centered Gaussian law on the truncated space, diagonal in the sine basis.
struct InvariantMeasureSpec {
  MeasureKind kind = MeasureKind::gaussian_nu;
  std::vector<double> variances;  // per mode, 0-based

  static InvariantMeasureSpec nu(const OperatorSpec& op_b) {
    InvariantMeasureSpec m{MeasureKind::gaussian_nu, std::vector<double>(op_b.mode_count())};
    for (std::size_t k = 0; k < m.variances.size(); ++k) m.variances[k] = 1.0 / (2.0 * op_b.eigenvalues()[k]);
    return m;
  }
  static InvariantMeasureSpec shifted(const OperatorSpec& op_b, double damping) {
    InvariantMeasureSpec m{MeasureKind::gaussian_shifted, std::vector<double>(op_b.mode_count())};
    for (std::size_t k = 0; k < m.variances.size(); ++k)
      m.variances[k] = 1.0 / (2.0 * (op_b.eigenvalues()[k] + damping));
    return m;
  }
  /// Stationary law of the micro scheme at step tau with G = -damping * y.
  static InvariantMeasureSpec scheme(const OperatorSpec& op_b, double tau, double damping = 0.0) {
    InvariantMeasureSpec m{MeasureKind::gaussian_scheme, std::vector<double>(op_b.mode_count())};
    for (std::size_t k = 0; k < m.variances.size(); ++k)
      m.variances[k] = stationary_variance_linear(k + 1, tau, op_b, damping);
    return m;
  }

  bool gaussian() const { return kind != MeasureKind::sampled; }
  std::size_t mode_count() const { return variances.size(); }
};

/// sigma^2(xi) = sum_k 2 sin^2(k pi xi) var_k.
inline double pointwise_variance(const InvariantMeasureSpec& measure, double xi) {
  if (!measure.gaussian()) throw std::invalid_argument("pointwise_variance: measure is not Gaussian");
  double s = 0.0;
  for (std::size_t k = 0; k < measure.variances.size(); ++k) {
    const double e = std::sin(static_cast<double>(k + 1) * std::numbers::pi * xi);
    s += 2.0 * e * e * measure.variances[k];
  }
  return s;
}

/// sigma^2 at every collocation point.
inline std::vector<double> grid_variances(const InvariantMeasureSpec& measure) {
  if (!measure.gaussian()) throw std::invalid_argument("grid_variances: measure is not Gaussian");
  const std::size_t k = measure.mode_count();
  const auto& t = sine_transform(k);
  std::vector<double> out(k, 0.0);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t m = 0; m < k; ++m) out[i] += t.basis_value(i, m) * t.basis_value(i, m) * measure.variances[m];
  return out;
}

using FbarProvider = std::function<SpectralField(const SpectralField&)>;

/// Fbar for a Gaussian fast law, evaluated pointwise on the grid by
/// Gauss-Hermite quadrature. Caches the rule and the grid variances.
class GaussianFbar {
 public:
  GaussianFbar(const CoefficientSpec& spec, const InvariantMeasureSpec& measure, std::size_t quad_order = 40)
      : spec_(spec), variances_(grid_variances(measure)), rule_(gauss_hermite(quad_order)) {}

  SpectralField operator()(const SpectralField& x) const {
    if (x.size() != variances_.size()) throw std::invalid_argument("GaussianFbar: mode count mismatch");
    const std::size_t k = x.size();
    const auto xg = to_grid(x);
    GridField out{std::vector<double>(k)};
    for (std::size_t i = 0; i < k; ++i) {
      const double xi = GridField::point(i, k);
      const double xv = xg.values[i];
      out.values[i] = rule_.gaussian_expectation([&](double y) { return spec_.f(xi, xv, y); }, 0.0, variances_[i]);
    }
    return to_spectral(out);
  }

  const std::vector<double>& variances() const { return variances_; }

 private:
  CoefficientSpec spec_;
  std::vector<double> variances_;
  GaussHermiteRule rule_;
};

inline SpectralField fbar_gaussian(const CoefficientSpec& spec, const SpectralField& x,
                                   const InvariantMeasureSpec& measure, std::size_t quad_order = 40) {
  return GaussianFbar(spec, measure, quad_order)(x);
}

struct SampledFbarOptions {
  double tau = 0.01;
  std::uint64_t warmup = 1000;
  std::uint64_t window = 100000;
  std::uint64_t batches = 50;
  std::uint64_t seed = 1;
};

struct SampledFbar {
  SpectralField value;
  SpectralField stderr_modes;
  GridField grid_value;
  GridField grid_stderr;
};

/// Long single-chain time average of F(x, Y_m) with batch-means standard errors.
inline SampledFbar fbar_sampled(const CoefficientSpec& spec, const OperatorSpec& op_b, const SpectralField& x,
                                const SampledFbarOptions& opt, const SpectralField* y0 = nullptr) {
  if (opt.window == 0) throw std::invalid_argument("fbar_sampled: window must be positive");
  if (opt.batches < 2 || opt.window % opt.batches != 0)
    throw std::invalid_argument("fbar_sampled: window must split into >= 2 equal batches");
  const std::size_t k = op_b.mode_count();
  MicroSolver solver(spec, op_b, opt.tau, x);
  SpectralField y = y0 ? *y0 : SpectralField(k);
  auto key = derive_key(opt.seed, 0, 0, 1, 0, Stream::sampling);
  std::uint64_t m = 0;
  for (; m < opt.warmup; ++m) {
    key.micro_step = m + 1;
    solver.step(y.coeffs(), key);
  }
  const std::uint64_t batch_len = opt.window / opt.batches;
  std::vector<double> acc(k), grid_sum(k, 0.0), grid_sumsq(k, 0.0), spec_b(k), mode_sum(k, 0.0), mode_sumsq(k, 0.0);
  for (std::uint64_t b = 0; b < opt.batches; ++b) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::uint64_t s = 0; s < batch_len; ++s, ++m) {
      key.micro_step = m + 1;
      solver.step(y.coeffs(), key);
      solver.accumulate_f_grid(y.coeffs(), acc);
    }
    for (double& v : acc) v /= static_cast<double>(batch_len);
    solver.transform().to_spectral(acc, spec_b);
    for (std::size_t i = 0; i < k; ++i) {
      grid_sum[i] += acc[i];
      grid_sumsq[i] += acc[i] * acc[i];
      mode_sum[i] += spec_b[i];
      mode_sumsq[i] += spec_b[i] * spec_b[i];
    }
  }
  const double nb = static_cast<double>(opt.batches);
  auto finish = [nb](double sum, double sumsq, double& mean, double& se) {
    mean = sum / nb;
    const double var = std::max(0.0, (sumsq - nb * mean * mean) / (nb - 1.0));
    se = std::sqrt(var / nb);
  };
  SampledFbar out{SpectralField(k), SpectralField(k), GridField{std::vector<double>(k)}, GridField{std::vector<double>(k)}};
  for (std::size_t i = 0; i < k; ++i) {
    finish(grid_sum[i], grid_sumsq[i], out.grid_value.values[i], out.grid_stderr.values[i]);
    finish(mode_sum[i], mode_sumsq[i], out.value[i], out.stderr_modes[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------

struct AveragedState {
  SpectralField xbar;
  std::uint64_t n = 0;
  double dt = 0.0;
};

/// Xbar_{n+1} = S_dt Xbar_n + dt S_dt Fbar(Xbar_n).
inline AveragedState averaged_step(const AveragedState& state, const OperatorSpec& op_a, const FbarProvider& fbar) {
  if (!(state.dt > 0.0)) throw std::invalid_argument("averaged_step: dt must be positive");
  SpectralField rhs = state.xbar + state.dt * fbar(state.xbar);
  return {apply_resolvent(std::move(rhs), state.dt, op_a), state.n + 1, state.dt};
}

inline std::uint64_t step_count(double horizon, double dt) {
  if (!(dt > 0.0) || !(horizon >= 0.0)) throw std::invalid_argument("step_count: need dt > 0 and T >= 0");
  const double r = horizon / dt;
  const double n = std::round(r);
  if (std::abs(r - n) > 1e-9 * std::max(1.0, r)) throw std::invalid_argument("step_count: T is not a multiple of dt");
  return static_cast<std::uint64_t>(n);
}

/// Trajectory Xbar_0..Xbar_steps.
inline std::vector<SpectralField> run_averaged(const SpectralField& x0, const OperatorSpec& op_a,
                                               const FbarProvider& fbar, double dt, std::uint64_t steps) {
  std::vector<SpectralField> traj;
  traj.reserve(steps + 1);
  AveragedState s{x0, 0, dt};
  traj.push_back(s.xbar);
  for (std::uint64_t n = 0; n < steps; ++n) {
    s = averaged_step(s, op_a, fbar);
    traj.push_back(s.xbar);
  }
  return traj;
}

struct ReferenceSolution {
  SpectralField value;
  double fine_dt = 0.0;
  /// |X(fine_dt) - X(2 fine_dt)|, an upper estimate of the change when halving fine_dt.
  double richardson_change = 0.0;
};

/// Fine-step averaged scheme standing in for the exact averaged flow at T.
inline ReferenceSolution reference_solution(const SpectralField& x0, const OperatorSpec& op_a,
                                            const FbarProvider& fbar, double horizon, double fine_dt) {
  const auto n = step_count(horizon, fine_dt);
  auto fine = run_averaged(x0, op_a, fbar, fine_dt, n).back();
  double change = 0.0;
  if (n % 2 == 0 && n > 0) change = distance(fine, run_averaged(x0, op_a, fbar, 2.0 * fine_dt, n / 2).back());
  return {std::move(fine), fine_dt, change};
}

}  // namespace hmm_spde
