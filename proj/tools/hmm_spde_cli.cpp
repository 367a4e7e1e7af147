// hmm-spde: command-line front end for the multiscale solver and experiments.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "hmm_spde/hmm_spde.hpp"
#include "report_json.hpp"

namespace fs = std::filesystem;
using namespace hmm_spde;

namespace {

struct CommonFlags {
  std::string problem = "p1";
  std::size_t modes = 63;
  double horizon = 1.0;
  double epsilon = 1e-3;
  double tol = 0.1;
  std::string regime = "weak";
  double r = 0.0;
  double kappa = 0.0;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  double alpha = 2.0;
  double damping = 1.0;

  void add_to(CLI::App& app) {
    app.add_option("--problem", problem, "Coefficient preset")->check(CLI::IsMember({"p1", "p2", "p3"}));
    app.add_option("--K", modes, "Number of sine modes")->check(CLI::PositiveNumber);
    app.add_option("--T", horizon, "Final time");
    app.add_option("--epsilon", epsilon, "Time-scale separation");
    app.add_option("--tol", tol, "Target tolerance used to choose parameters");
    app.add_option("--regime", regime, "Error regime for parameter choice")->check(CLI::IsMember({"strong", "weak"}));
    app.add_option("--r", r, "Rate loss exponent r");
    app.add_option("--kappa", kappa, "Rate loss exponent kappa");
    app.add_option("--seed", seed, "Master seed");
    app.add_option("--out-dir", out_dir, "Output directory");
    app.add_option("--alpha", alpha, "p2: g = alpha sin(y)");
    app.add_option("--damping", damping, "p3: g = -damping y");
  }

  CoefficientSpec coefficients() const { return preset_by_name(problem, {alpha, damping}); }
};

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::string trajectory_csv(const std::vector<SpectralField>& traj, double dt) {
  std::ostringstream os;
  os.precision(17);
  os << "n,t";
  const std::size_t k = traj.empty() ? 0 : traj.front().size();
  for (std::size_t m = 1; m <= k; ++m) os << ",mode_" << m;
  os << '\n';
  for (std::size_t n = 0; n < traj.size(); ++n) {
    os << n << ',' << static_cast<double>(n) * dt;
    for (std::size_t m = 0; m < k; ++m) os << ',' << traj[n][m];
    os << '\n';
  }
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heterogeneous multiscale solver for slow-fast stochastic reaction-diffusion equations"};
  app.require_subcommand(1);

  // hmm run ---------------------------------------------------------------
  auto* hmm = app.add_subcommand("hmm", "Multiscale solver");
  hmm->require_subcommand(1);
  auto* hmm_run = hmm->add_subcommand("run", "Run the HMM scheme and write trajectory + cost");
  CommonFlags hflags;
  hflags.add_to(*hmm_run);
  std::optional<double> h_dt, h_ddt;
  std::optional<std::uint64_t> h_n, h_m, h_nt;
  std::optional<double> h_chat;
  hmm_run->add_option("--dt", h_dt, "Macro step (overrides --tol choice)");
  hmm_run->add_option("--ddt", h_ddt, "Micro step");
  hmm_run->add_option("--N", h_n, "Averaging window");
  hmm_run->add_option("--M", h_m, "Replica count");
  hmm_run->add_option("--nT", h_nt, "Warm-up micro steps (>= 1)");
  hmm_run->add_option("--c-hat", h_chat, "Relaxation rate for the weak-regime warm-up");

  // direct run ------------------------------------------------------------
  auto* direct = app.add_subcommand("direct", "Direct stiff solver");
  direct->require_subcommand(1);
  auto* direct_run = direct->add_subcommand("run", "Run the coupled scheme at one small step");
  CommonFlags dflags;
  dflags.add_to(*direct_run);
  std::optional<double> d_ddt;
  std::uint64_t d_record = 0;
  direct_run->add_option("--ddt", d_ddt, "Step size (default: direct-scheme choice for --tol)");
  direct_run->add_option("--record-every", d_record, "Record X every this many steps (0: endpoints only)");

  // fbar ------------------------------------------------------------------
  auto* fbar = app.add_subcommand("fbar", "Averaged coefficient on the collocation grid at x0 = e_1 + 0.5 e_2");
  CommonFlags fflags;
  fflags.add_to(*fbar);
  std::string f_method = "auto";
  std::string f_law = "continuous";
  double f_tau = 0.01;
  std::uint64_t f_window = 100000, f_warmup = 1000, f_order = 40;
  fbar->add_option("--method", f_method, "gaussian | sampled | auto")->check(CLI::IsMember({"auto", "gaussian", "sampled"}));
  fbar->add_option("--law", f_law, "Gaussian law: continuous | scheme")->check(CLI::IsMember({"continuous", "scheme"}));
  fbar->add_option("--tau", f_tau, "Effective micro step for sampling / scheme law");
  fbar->add_option("--window", f_window, "Sampled window length");
  fbar->add_option("--warmup", f_warmup, "Sampled warm-up length");
  fbar->add_option("--order", f_order, "Gauss-Hermite order");

  // rates -----------------------------------------------------------------
  auto* rates = app.add_subcommand("rates", "Convergence-rate experiments");
  std::string experiment;
  std::optional<std::size_t> r_seeds;
  std::uint64_t r_seed = 1;
  std::string r_out = ".";
  rates->add_option("--experiment", experiment, "Experiment name")
      ->required()
      ->check(CLI::IsMember({"strong_m", "strong_nt", "weak_tau", "invariant_tau", "averaging", "macro_order"}));
  rates->add_option("--seeds", r_seeds, "Monte-Carlo samples per point");
  rates->add_option("--seed", r_seed, "Master seed");
  rates->add_option("--out-dir", r_out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*hmm_run) {
      const auto spec = hflags.coefficients();
      const auto op = OperatorSpec::laplacian(hflags.modes);
      const auto regime = parse_regime(hflags.regime);
      ParamChoice choice{hflags.r, hflags.kappa, hflags.horizon, h_chat, StrongBranch::single_replica};
      if (!choice.c_hat && regime == Regime::weak && check_strict_dissipativity(spec, op).holds) {
        const double tau = std::pow(hflags.tol, 1.0 / (0.5 - hflags.kappa));
        choice.c_hat = contraction_rate(tau, spec.lipschitz_g_y, op.smallest());
      }
      auto params = choose_params(hflags.tol, hflags.epsilon, regime, choice);
      if (h_dt) params.macro_dt = *h_dt;
      if (h_ddt) params.micro_dt = *h_ddt;
      if (h_n) params.window = *h_n;
      if (h_m) params.replicas = *h_m;
      if (h_nt) params.warmup = *h_nt;
      const auto x0 = default_initial_slow(hflags.modes);
      const auto result = run_hmm(x0, SpectralField(hflags.modes), spec, op, op, params, hflags.seed);
      const fs::path dir(hflags.out_dir);
      write_file(dir / "hmm_trajectory.csv", trajectory_csv(result.trajectory, params.macro_dt));
      nlohmann::json cost = {{"solver", "hmm"},
                             {"problem", hflags.problem},
                             {"K", hflags.modes},
                             {"seed", hflags.seed},
                             {"params", cli::to_json(params)},
                             {"total_micro_steps", result.cost.total_micro_steps},
                             {"expected_micro_steps", params.macro_steps() * params.replicas * params.micro_steps_per_macro()},
                             {"cost_per_unit_time", result.cost.cost_per_unit_time},
                             {"direct_cost_per_unit_time", direct_cost_per_unit_time(hflags.tol, hflags.epsilon, regime, hflags.kappa)},
                             {"cost_ratio", cost_compare(params, hflags.tol, hflags.epsilon, regime, hflags.kappa)}};
      write_file(dir / "hmm_cost.json", cost.dump(2) + "\n");
      std::cout << cost.dump(2) << '\n';
    } else if (*direct_run) {
      const auto spec = dflags.coefficients();
      const auto op = OperatorSpec::laplacian(dflags.modes);
      const auto regime = parse_regime(dflags.regime);
      const double order = regime == Regime::strong ? 0.25 - dflags.kappa : 0.5 - dflags.kappa;
      const double dt = d_ddt ? *d_ddt : dflags.epsilon * std::pow(dflags.tol, 1.0 / order);
      const auto x0 = default_initial_slow(dflags.modes);
      DirectOptions opt;
      opt.record_every = d_record;
      const auto result = run_direct(x0, SpectralField(dflags.modes), spec, op, op, dflags.epsilon, dt, dflags.horizon,
                                     dflags.seed, opt);
      const fs::path dir(dflags.out_dir);
      const double record_dt = d_record ? dt * static_cast<double>(d_record) : dflags.horizon;
      auto csv = trajectory_csv(result.trajectory, record_dt);
      write_file(dir / "direct_trajectory.csv", csv);
      nlohmann::json cost = {{"solver", "direct"},
                             {"problem", dflags.problem},
                             {"K", dflags.modes},
                             {"seed", dflags.seed},
                             {"epsilon", dflags.epsilon},
                             {"dt", dt},
                             {"T", dflags.horizon},
                             {"total_micro_steps", result.cost},
                             {"cost_per_unit_time", 1.0 / dt}};
      write_file(dir / "direct_cost.json", cost.dump(2) + "\n");
      std::cout << cost.dump(2) << '\n';
    } else if (*fbar) {
      const auto spec = fflags.coefficients();
      const auto op = OperatorSpec::laplacian(fflags.modes);
      const auto x0 = default_initial_slow(fflags.modes);
      std::string method = f_method;
      ProblemChoice problem{fflags.problem, {fflags.alpha, fflags.damping}, std::nullopt};
      if (method == "auto") method = problem.linear_damping() ? "gaussian" : "sampled";
      std::vector<double> values, errors(fflags.modes, 0.0);
      if (method == "gaussian") {
        const auto fb = f_law == "scheme" ? scheme_fbar(problem, op, f_tau, f_order) : exact_fbar(problem, op, f_order);
        values = to_grid(fb(x0)).values;
      } else {
        require_dissipativity(spec, op, {});
        SampledFbarOptions opt;
        opt.tau = f_tau;
        opt.window = f_window;
        opt.warmup = f_warmup;
        opt.seed = fflags.seed;
        const auto s = fbar_sampled(spec, op, x0, opt);
        values = s.grid_value.values;
        errors = s.grid_stderr.values;
      }
      std::ostringstream os;
      os.precision(17);
      os << "xi,fbar_value,stderr_or_zero\n";
      for (std::size_t i = 0; i < values.size(); ++i)
        os << GridField::point(i, fflags.modes) << ',' << values[i] << ',' << errors[i] << '\n';
      write_file(fs::path(fflags.out_dir) / "fbar.csv", os.str());
      std::cout << os.str();
    } else if (*rates) {
      RateReport report;
      if (experiment == "strong_m") {
        StrongSweepConfig c;
        if (r_seeds) c.seeds = *r_seeds;
        c.seed = r_seed;
        report = strong_error_experiment(c);
      } else if (experiment == "strong_nt") {
        WarmupBiasConfig c;
        if (r_seeds) c.samples = *r_seeds;
        c.seed = r_seed;
        report = warmup_bias_experiment(c);
      } else if (experiment == "weak_tau") {
        WeakSweepConfig c;
        if (r_seeds) c.seeds = *r_seeds;
        c.seed = r_seed;
        report = weak_error_experiment(c);
      } else if (experiment == "invariant_tau") {
        report = invariant_law_tau_sweep({});
      } else if (experiment == "averaging") {
        AveragingConfig c;
        if (r_seeds) c.seeds = *r_seeds;
        c.seed = r_seed;
        report = averaging_experiment(c);
      } else {
        report = macro_order_experiment({});
      }
      const fs::path dir(r_out);
      write_file(dir / (experiment + ".csv"), to_csv(report));
      const auto j = cli::to_json(report);
      write_file(dir / (experiment + ".json"), j.dump(2) + "\n");
      std::cout << to_csv(report);
      for (const auto& f : report.fits)
        std::cout << f.metric << ": slope " << f.fit.slope << " [" << f.fit.ci_low << ", " << f.fit.ci_high << "] from "
                  << f.rows_used << " rows\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
