#pragma once

// Convergence and cost experiments. Each returns a RateReport: one row per
// sweep point (value, error estimate, Monte-Carlo standard error, samples)
// and a fitted slope with a 95% interval per metric.
//
// The strong and weak HMM experiments compare against the averaged scheme run
// with the same macro step, so the averaging error and the macro discretisation
// error drop out and only the estimator error remains.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hmm_spde/averaging.hpp"
#include "hmm_spde/coefficients.hpp"
#include "hmm_spde/direct.hpp"
#include "hmm_spde/hmm.hpp"
#include "hmm_spde/microsolver.hpp"
#include "hmm_spde/spectral.hpp"
#include "hmm_spde/stats.hpp"

namespace hmm_spde {

// ---------------------------------------------------------------------------
// Test functionals

enum class FunctionalKind { cos_inner, exp_neg_norm2, mode_projection };

struct TestFunctional {
  FunctionalKind kind = FunctionalKind::cos_inner;
  SpectralField direction;  // h

  double operator()(const SpectralField& x) const {
    switch (kind) {
      case FunctionalKind::cos_inner: return std::cos(inner(x, direction));
      case FunctionalKind::exp_neg_norm2: return std::exp(-x.norm_squared());
      case FunctionalKind::mode_projection: return inner(x, direction);
    }
    throw std::logic_error("unknown functional");
  }

  /// Bounded with bounded first and second derivatives.
  bool smooth_bounded() const { return kind != FunctionalKind::mode_projection; }
};

inline TestFunctional cos_inner(SpectralField h) { return {FunctionalKind::cos_inner, std::move(h)}; }
inline TestFunctional mode_projection(std::size_t modes, std::size_t k) {
  return {FunctionalKind::mode_projection, SpectralField::basis(modes, k)};
}

/// x0 = e_1 + 0.5 e_2, the slow initial datum used by every experiment.
inline SpectralField default_initial_slow(std::size_t modes) {
  SpectralField x(modes);
  x[0] = 1.0;
  if (modes > 1) x[1] = 0.5;
  return x;
}

// ---------------------------------------------------------------------------
// Reports

struct RateRow {
  std::string metric;
  double value = 0.0;
  double error = 0.0;
  double mc_stderr = 0.0;
  std::uint64_t n_samples = 0;
};

enum class FitScale { log_log, semi_log };

struct RateFit {
  std::string metric;
  FitScale scale = FitScale::log_log;
  LinearFit fit;
  std::size_t rows_used = 0;
};

struct RateReport {
  std::string experiment;
  std::string sweep_variable;
  std::vector<RateRow> rows;
  std::vector<RateFit> fits;
  std::map<std::string, double> reference;
  double runtime_seconds = 0.0;

  const RateFit& fit(const std::string& metric) const {
    for (const auto& f : fits)
      if (f.metric == metric) return f;
    throw std::out_of_range("no fit for metric " + metric);
  }
  std::vector<RateRow> rows_for(const std::string& metric) const {
    std::vector<RateRow> out;
    for (const auto& r : rows)
      if (r.metric == metric) out.push_back(r);
    return out;
  }
};

/// Fits log(error) against log(value) (or against value for semi_log), using
/// only rows whose Monte-Carlo error is below a third of the estimate.
inline RateFit fit_rows(const std::vector<RateRow>& rows, const std::string& metric, FitScale scale) {
  std::vector<double> xs, ys;
  for (const auto& r : rows) {
    if (r.metric != metric || !(r.error > 0.0) || !(r.mc_stderr < r.error / 3.0)) continue;
    xs.push_back(scale == FitScale::log_log ? std::log(r.value) : r.value);
    ys.push_back(std::log(r.error));
  }
  return {metric, scale, fit_line(xs, ys), xs.size()};
}

/// Fixed schema: experiment,metric,value,error,mc_stderr,n_samples.
inline std::string to_csv(const RateReport& report) {
  std::ostringstream os;
  os.precision(17);
  os << "experiment,metric,value,error,mc_stderr,n_samples\n";
  for (const auto& r : report.rows)
    os << report.experiment << ',' << r.metric << ',' << r.value << ',' << r.error << ',' << r.mc_stderr << ','
       << r.n_samples << '\n';
  return os.str();
}

namespace detail {
class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline double log_inverse_resolvent(double step, double eigenvalue) { return std::log1p(step * eigenvalue); }
}  // namespace detail

/// Problem set-up shared by the experiments.
struct ProblemChoice {
  std::string preset = "p1";
  PresetOptions options;
  std::optional<CoefficientSpec> custom;  // overrides preset when set

  CoefficientSpec coefficients() const { return custom ? *custom : preset_by_name(preset, options); }
  /// G = -damping * y for the presets with linear fast drift; empty otherwise.
  std::optional<double> linear_damping() const {
    if (custom) return custom->g_is_zero ? std::optional<double>(0.0) : std::nullopt;
    if (preset == "p1") return 0.0;
    if (preset == "p3") return options.damping;
    return std::nullopt;
  }
};

/// Fbar against the exact stationary law of the tau-scheme (linear fast drift only).
inline GaussianFbar scheme_fbar(const ProblemChoice& problem, const OperatorSpec& op_b, double tau,
                                std::size_t quad_order = 40) {
  const auto damping = problem.linear_damping();
  if (!damping) throw std::invalid_argument("experiment needs a linear fast drift (p1 or p3)");
  return GaussianFbar(problem.coefficients(), InvariantMeasureSpec::scheme(op_b, tau, *damping), quad_order);
}

/// Fbar against the continuous invariant law (linear fast drift only).
inline GaussianFbar exact_fbar(const ProblemChoice& problem, const OperatorSpec& op_b, std::size_t quad_order = 40) {
  const auto damping = problem.linear_damping();
  if (!damping) throw std::invalid_argument("experiment needs a linear fast drift (p1 or p3)");
  const auto measure =
      *damping == 0.0 ? InvariantMeasureSpec::nu(op_b) : InvariantMeasureSpec::shifted(op_b, *damping);
  return GaussianFbar(problem.coefficients(), measure, quad_order);
}

// ---------------------------------------------------------------------------
// Strong error of the HMM estimator versus the replica count M.

struct StrongSweepConfig {
  ProblemChoice problem;
  std::size_t modes = 63;
  double horizon = 0.5;
  double macro_dt = 0.05;
  double tau = 0.02;
  double epsilon = 1e-3;
  std::uint64_t window = 1;
  std::uint64_t warmup = 50;
  std::vector<std::uint64_t> replicas = {1, 4, 16, 64};
  std::size_t seeds = 64;
  std::uint64_t seed = 1;
};

/// E|X_{n_0} - Xbar_{n_0}| with Xbar driven by Fbar under the tau-scheme law.
inline RateReport strong_error_experiment(const StrongSweepConfig& cfg) {
  detail::Stopwatch clock;
  const auto op = OperatorSpec::laplacian(cfg.modes);
  const auto spec = cfg.problem.coefficients();
  const auto oracle = scheme_fbar(cfg.problem, op, cfg.tau);
  const auto x0 = default_initial_slow(cfg.modes);
  const SpectralField y0(cfg.modes);

  HmmParams p;
  p.epsilon = cfg.epsilon;
  p.micro_dt = cfg.tau * cfg.epsilon;
  p.macro_dt = cfg.macro_dt;
  p.horizon = cfg.horizon;
  p.window = cfg.window;
  p.warmup = cfg.warmup;
  const auto xbar = run_averaged(x0, op, oracle, cfg.macro_dt, p.macro_steps()).back();

  RateReport report{"strong_m", "M", {}, {}, {}, 0.0};
  HmmOptions quiet;
  quiet.warn = nullptr;
  for (const auto m : cfg.replicas) {
    p.replicas = m;
    RunningStats err;
    for (std::size_t s = 0; s < cfg.seeds; ++s) {
      const auto run = run_hmm(x0, y0, spec, op, op, p, cfg.seed + s, quiet);
      err.add(distance(run.trajectory.back(), xbar));
    }
    report.rows.push_back({"strong_error", static_cast<double>(m), err.mean(), err.stderr_of_mean(), err.count()});
  }
  report.fits.push_back(fit_rows(report.rows, "strong_error", FitScale::log_log));
  report.reference["expected_slope"] = -0.5;
  report.runtime_seconds = clock.seconds();
  return report;
}

// ---------------------------------------------------------------------------
// Warm-up bias of the estimator versus n_T.

struct WarmupBiasConfig {
  ProblemChoice problem;
  std::size_t modes = 63;
  double tau = 0.02;
  double epsilon = 1e-3;
  double displacement = 2.0;  // Y_{0,0} = displacement * e_1
  std::vector<std::uint64_t> warmups = {4, 6, 8, 10, 12};
  std::size_t samples = 16384;
  std::uint64_t seed = 1;
};

/// Bias of <Ftilde_0 - Fbar(x0), e_1> with N = M = 1, averaged over samples.
inline RateReport warmup_bias_experiment(const WarmupBiasConfig& cfg) {
  detail::Stopwatch clock;
  const auto op = OperatorSpec::laplacian(cfg.modes);
  const auto spec = cfg.problem.coefficients();
  const auto x0 = default_initial_slow(cfg.modes);
  const double target = scheme_fbar(cfg.problem, op, cfg.tau)(x0)[0];
  const auto y_start = cfg.displacement * SpectralField::basis(cfg.modes, 1);

  RateReport report{"strong_nt", "n_T", {}, {}, {}, 0.0};
  HmmParams p;
  p.epsilon = cfg.epsilon;
  p.micro_dt = cfg.tau * cfg.epsilon;
  p.window = 1;
  p.replicas = 1;
  for (const auto nt : cfg.warmups) {
    p.warmup = nt;
    RunningStats bias;
    for (std::size_t s = 0; s < cfg.samples; ++s) {
      std::vector<SpectralField> states{y_start};
      bias.add(estimate_ftilde(spec, op, x0, states, p, cfg.seed + s, 0)[0] - target);
    }
    report.rows.push_back({"ftilde_bias", static_cast<double>(nt), std::abs(bias.mean()), bias.stderr_of_mean(),
                           bias.count()});
  }
  report.fits.push_back(fit_rows(report.rows, "ftilde_bias", FitScale::semi_log));
  report.reference["expected_rate"] = 2.0 * detail::log_inverse_resolvent(cfg.tau, op.smallest());
  report.runtime_seconds = clock.seconds();
  return report;
}

// ---------------------------------------------------------------------------
// Weak error of the HMM scheme.

enum class WeakSweep { tau, warmup };

struct WeakSweepConfig {
  ProblemChoice problem{"p3", {}, std::nullopt};
  std::size_t modes = 63;
  double horizon = 0.5;
  double macro_dt = 0.05;
  double epsilon = 1e-3;
  WeakSweep sweep = WeakSweep::tau;
  std::vector<double> taus = {0.04, 0.02, 0.01, 0.005};
  double relax_time = 5.0;   // n_T = ceil(relax_time / tau) in the tau sweep
  double window_time = 2.0;  // N = ceil(window_time / tau)
  // warm-up sweep (fixed tau = taus.front(), N = 1, displaced fast start)
  std::vector<std::uint64_t> warmups = {2, 4, 6, 8};
  double displacement = 0.0;
  std::optional<TestFunctional> functional;  // default: cos(<x, 10 e_1>)
  std::size_t seeds = 32;
  std::uint64_t seed = 1;
};

/// |E Phi(X_{n_0}) - Phi(Xbar_{n_0})| with Xbar driven by the exact averaged
/// coefficient, so the tau-dependence of the fast invariant law is exposed.
inline RateReport weak_error_experiment(const WeakSweepConfig& cfg) {
  detail::Stopwatch clock;
  const auto op = OperatorSpec::laplacian(cfg.modes);
  const auto spec = cfg.problem.coefficients();
  const auto x0 = default_initial_slow(cfg.modes);
  const auto phi = cfg.functional ? *cfg.functional : cos_inner(10.0 * SpectralField::basis(cfg.modes, 1));
  const auto y0 = cfg.displacement * SpectralField::basis(cfg.modes, 1);

  HmmParams p;
  p.epsilon = cfg.epsilon;
  p.macro_dt = cfg.macro_dt;
  p.horizon = cfg.horizon;
  p.replicas = 1;
  HmmOptions quiet;
  quiet.warn = nullptr;

  const bool tau_sweep = cfg.sweep == WeakSweep::tau;
  RateReport report{"weak_" + std::string(tau_sweep ? "tau" : "nt"), tau_sweep ? "tau" : "n_T", {}, {}, {}, 0.0};
  const std::size_t points = tau_sweep ? cfg.taus.size() : cfg.warmups.size();
  for (std::size_t i = 0; i < points; ++i) {
    const double tau = tau_sweep ? cfg.taus[i] : cfg.taus.front();
    p.micro_dt = tau * cfg.epsilon;
    if (tau_sweep) {
      p.warmup = detail::ceil_count(cfg.relax_time / tau);
      p.window = detail::ceil_count(cfg.window_time / tau);
    } else {
      p.warmup = cfg.warmups[i];
      p.window = 1;
    }
    // The warm-up sweep isolates the n_T bias, so it compares to the tau-law.
    const FbarProvider oracle =
        tau_sweep ? FbarProvider(exact_fbar(cfg.problem, op)) : FbarProvider(scheme_fbar(cfg.problem, op, tau));
    const double target = phi(run_averaged(x0, op, oracle, cfg.macro_dt, p.macro_steps()).back());
    RunningStats values;
    for (std::size_t s = 0; s < cfg.seeds; ++s)
      values.add(phi(run_hmm(x0, y0, spec, op, op, p, cfg.seed + s, quiet).trajectory.back()) - target);
    report.rows.push_back({"weak_error", tau_sweep ? tau : static_cast<double>(cfg.warmups[i]),
                           std::abs(values.mean()), values.stderr_of_mean(), values.count()});
  }
  report.fits.push_back(fit_rows(report.rows, "weak_error", tau_sweep ? FitScale::log_log : FitScale::semi_log));
  if (tau_sweep)
    report.reference["expected_slope"] = 0.5;
  else
    report.reference["expected_rate"] = 2.0 * detail::log_inverse_resolvent(cfg.taus.front(), op.smallest());
  report.runtime_seconds = clock.seconds();
  return report;
}

// ---------------------------------------------------------------------------
// Invariant-law discrepancy of the fast scheme (exact, no sampling).

struct InvariantTauConfig {
  std::size_t modes = 4095;
  std::vector<double> taus = {1e-2, 1e-3, 1e-4, 1e-5};
};

/// sum_k (1/(2 mu_k) - v_k(tau)): trace of the covariance gap between the
/// continuous invariant law and the stationary law of the scheme, G = 0.
inline double invariant_trace_error(const OperatorSpec& op_b, double tau) {
  double s = 0.0;
  for (std::size_t k = 1; k <= op_b.mode_count(); ++k) {
    const double mu = op_b.eigenvalue(k);
    s += 1.0 / (2.0 * mu) - stationary_variance_linear(k, tau, op_b);
  }
  return s;
}

inline RateReport invariant_law_tau_sweep(const InvariantTauConfig& cfg) {
  detail::Stopwatch clock;
  const auto op = OperatorSpec::laplacian(cfg.modes);
  RateReport report{"invariant_tau", "tau", {}, {}, {}, 0.0};
  for (const double tau : cfg.taus) report.rows.push_back({"trace_error", tau, invariant_trace_error(op, tau), 0.0, 0});
  report.fits.push_back(fit_rows(report.rows, "trace_error", FitScale::log_log));
  report.reference["expected_slope"] = 0.5;
  report.runtime_seconds = clock.seconds();
  return report;
}

// ---------------------------------------------------------------------------
// Averaging principle, measured with the direct solver.

struct AveragingConfig {
  ProblemChoice problem;
  std::size_t modes = 15;
  double horizon = 0.5;
  std::vector<double> epsilons = {1e-1, 3e-2, 1e-2};
  double tau_direct = 1e-3;  // dt = tau_direct * epsilon
  double reference_dt_divisor = 4096.0;
  std::optional<TestFunctional> functional;  // default: cos(<x, 10 e_1>)
  std::size_t seeds = 32;
  std::uint64_t seed = 1;
};

inline RateReport averaging_experiment(const AveragingConfig& cfg) {
  detail::Stopwatch clock;
  const auto op = OperatorSpec::laplacian(cfg.modes);
  const auto spec = cfg.problem.coefficients();
  const auto x0 = default_initial_slow(cfg.modes);
  const SpectralField y0(cfg.modes);
  const auto phi = cfg.functional ? *cfg.functional : cos_inner(10.0 * SpectralField::basis(cfg.modes, 1));
  const auto ref = reference_solution(x0, op, exact_fbar(cfg.problem, op), cfg.horizon,
                                      cfg.horizon / cfg.reference_dt_divisor);
  const double phi_ref = phi(ref.value);

  RateReport report{"averaging", "epsilon", {}, {}, {}, 0.0};
  DirectOptions quiet;
  quiet.warn = nullptr;
  for (const double eps : cfg.epsilons) {
    const double dt = cfg.tau_direct * eps;
    RunningStats strong, weak;
    for (std::size_t s = 0; s < cfg.seeds; ++s) {
      const auto run = run_direct(x0, y0, spec, op, op, eps, dt, cfg.horizon, cfg.seed + s, quiet);
      strong.add(distance(run.final_state.x, ref.value));
      weak.add(phi(run.final_state.x) - phi_ref);
    }
    report.rows.push_back({"strong_error", eps, strong.mean(), strong.stderr_of_mean(), strong.count()});
    report.rows.push_back({"weak_error", eps, std::abs(weak.mean()), weak.stderr_of_mean(), weak.count()});
  }
  report.fits.push_back(fit_rows(report.rows, "strong_error", FitScale::log_log));
  report.fits.push_back(fit_rows(report.rows, "weak_error", FitScale::log_log));
  report.reference["expected_strong_slope"] = 0.5;
  report.reference["expected_weak_slope"] = 1.0;
  report.reference["reference_richardson_change"] = ref.richardson_change;
  report.runtime_seconds = clock.seconds();
  return report;
}

// ---------------------------------------------------------------------------
// Order of the deterministic averaged scheme.

struct MacroOrderConfig {
  ProblemChoice problem;
  std::size_t modes = 63;
  double horizon = 0.5;
  std::vector<std::uint64_t> divisions = {8, 16, 32, 64, 128};  // Delta t = T / d
  double fine_factor = 64.0;  // reference step = smallest Delta t / fine_factor
  bool zero_forcing = false;  // Fbar = 0; reference is the exact semigroup
};

/// |sum_k x_k ((1 + lambda_k dt)^{-n} - exp(-lambda_k n dt)) e_k|.
inline double resolvent_semigroup_gap(const SpectralField& x0, const OperatorSpec& op_a, double dt, std::uint64_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < x0.size(); ++k) {
    const double lam = op_a.eigenvalues()[k];
    const double d = x0[k] * (std::pow(1.0 + lam * dt, -static_cast<double>(n)) - std::exp(-lam * dt * static_cast<double>(n)));
    s += d * d;
  }
  return std::sqrt(s);
}

inline RateReport macro_order_experiment(const MacroOrderConfig& cfg) {
  detail::Stopwatch clock;
  const auto op = OperatorSpec::laplacian(cfg.modes);
  const auto x0 = default_initial_slow(cfg.modes);
  FbarProvider fbar;
  if (cfg.zero_forcing)
    fbar = [k = cfg.modes](const SpectralField&) { return SpectralField(k); };
  else
    fbar = exact_fbar(cfg.problem, op);

  RateReport report{"macro_order", "dt", {}, {}, {}, 0.0};
  std::uint64_t finest = 0;
  for (auto d : cfg.divisions) finest = std::max(finest, d);
  SpectralField reference;
  if (cfg.zero_forcing) {
    reference = apply_semigroup(x0, cfg.horizon, op);
  } else {
    const auto ref = reference_solution(x0, op, fbar, cfg.horizon, cfg.horizon / (static_cast<double>(finest) * cfg.fine_factor));
    reference = ref.value;
    report.reference["reference_richardson_change"] = ref.richardson_change;
  }
  double coarsest_error = 0.0;
  for (const auto d : cfg.divisions) {
    const double dt = cfg.horizon / static_cast<double>(d);
    const double err = distance(run_averaged(x0, op, fbar, dt, d).back(), reference);
    coarsest_error = std::max(coarsest_error, err);
    report.rows.push_back({"deterministic_error", dt, err, 0.0, 0});
    if (cfg.zero_forcing) report.rows.push_back({"closed_form", dt, resolvent_semigroup_gap(x0, op, dt, d), 0.0, 0});
  }
  if (!cfg.zero_forcing && coarsest_error > 0.0)
    report.reference["richardson_ratio"] = report.reference["reference_richardson_change"] / coarsest_error;
  report.fits.push_back(fit_rows(report.rows, "deterministic_error", FitScale::log_log));
  report.reference["expected_slope"] = 1.0;
  report.runtime_seconds = clock.seconds();
  return report;
}

}  // namespace hmm_spde
