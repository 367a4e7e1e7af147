// Runs the multiscale scheme on preset p1 and compares it with the averaged
// scheme driven by the Gaussian-quadrature coefficient.

#include <iostream>

#include "hmm_spde/hmm_spde.hpp"

int main() {
  using namespace hmm_spde;
  constexpr std::size_t modes = 63;
  const auto op = OperatorSpec::laplacian(modes);
  const auto spec = preset_p1();
  const auto x0 = default_initial_slow(modes);

  HmmParams p;
  p.epsilon = 1e-4;
  p.micro_dt = 0.02 * p.epsilon;  // tau = 0.02
  p.macro_dt = 0.05;
  p.horizon = 0.5;
  p.window = 20;
  p.replicas = 8;
  p.warmup = 50;

  const auto hmm = run_hmm(x0, SpectralField(modes), spec, op, op, p, /*seed=*/7);
  const GaussianFbar fbar(spec, InvariantMeasureSpec::scheme(op, p.tau()));
  const auto avg = run_averaged(x0, op, fbar, p.macro_dt, p.macro_steps());

  std::cout << "n  t      |X_n|      |Xbar_n|   |X_n - Xbar_n|\n";
  for (std::size_t n = 0; n < hmm.trajectory.size(); ++n)
    std::cout << n << "  " << n * p.macro_dt << "  " << hmm.trajectory[n].norm() << "  " << avg[n].norm() << "  "
              << distance(hmm.trajectory[n], avg[n]) << '\n';
  std::cout << "micro steps: " << hmm.cost.total_micro_steps << " (cost per unit time " << hmm.cost.cost_per_unit_time
            << ")\n";
}
