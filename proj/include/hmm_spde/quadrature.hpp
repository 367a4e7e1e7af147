#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace hmm_spde {

/// Gauss-Hermite rule for the weight exp(-t^2) on the real line.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t order() const { return nodes.size(); }

  /// E[phi(Z)] for Z ~ N(mean, variance).
  template <class Fn>
  double gaussian_expectation(Fn&& phi, double mean, double variance) const {
    const double scale = std::sqrt(2.0 * variance);
    double s = 0.0;
    for (std::size_t q = 0; q < nodes.size(); ++q) s += weights[q] * phi(mean + scale * nodes[q]);
    return s / std::sqrt(std::numbers::pi);
  }
};

/// Nodes by Newton iteration on the orthonormal Hermite recurrence, with the
/// usual asymptotic initial guesses for the largest roots.
inline GaussHermiteRule gauss_hermite(std::size_t n) {
  if (n == 0) throw std::invalid_argument("gauss_hermite: order must be positive");
  constexpr double pim4 = 0.7511255444649425;  // pi^{-1/4}
  constexpr int max_iter = 100;
  GaussHermiteRule rule{std::vector<double>(n), std::vector<double>(n)};
  const double dn = static_cast<double>(n);
  const std::size_t half = (n + 1) / 2;
  double z = 0.0;
  for (std::size_t i = 0; i < half; ++i) {
    if (i == 0)
      z = std::sqrt(2.0 * dn + 1.0) - 1.85575 * std::pow(2.0 * dn + 1.0, -0.16667);
    else if (i == 1)
      z -= 1.14 * std::pow(dn, 0.426) / z;
    else if (i == 2)
      z = 1.86 * z - 0.86 * rule.nodes[0];
    else if (i == 3)
      z = 1.91 * z - 0.91 * rule.nodes[1];
    else
      z = 2.0 * z - rule.nodes[i - 2];
    double pp = 0.0;
    int it = 0;
    for (; it < max_iter; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        const double dj = static_cast<double>(j);
        p1 = z * std::sqrt(2.0 / (dj + 1.0)) * p2 - std::sqrt(dj / (dj + 1.0)) * p3;
      }
      pp = std::sqrt(2.0 * dn) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    if (it == max_iter) throw std::runtime_error("gauss_hermite: Newton iteration did not converge");
    rule.nodes[i] = z;
    rule.nodes[n - 1 - i] = -z;
    rule.weights[i] = rule.weights[n - 1 - i] = 2.0 / (pp * pp);
  }
  return rule;
}

}  // namespace hmm_spde
