#pragma once

// Nemytskii reaction terms F(x,y)(xi) = f(xi, x(xi), y(xi)) and the
// dissipativity checks the fast equation needs.

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "hmm_spde/spectral.hpp"

namespace hmm_spde {

using PointwiseFn = std::function<double(double xi, double x, double y)>;

/// Pointwise reaction data. Bounds are declared by the author of the
/// coefficients and spot-checked by validate_coefficients().
struct CoefficientSpec {
  std::string name;
  PointwiseFn f;
  PointwiseFn g;
  std::optional<PointwiseFn> potential;  // u with g = du/dy
  double sup_f = 0.0;
  double sup_g = 0.0;  // may be +inf for unbounded g
  double lipschitz_g_y = 0.0;
  double lipschitz_f_x = 0.0;  // sup |df/dx|
  bool g_is_zero = false;

  bool g_bounded() const { return std::isfinite(sup_g); }
};

namespace detail {
// Grid evaluation shared by F and G; xg and yg are nodal values.
inline void apply_pointwise(const PointwiseFn& fn, std::span<const double> xg, std::span<const double> yg,
                            std::span<double> out) {
  const std::size_t k = out.size();
  for (std::size_t i = 0; i < k; ++i) out[i] = fn(GridField::point(i, k), xg[i], yg[i]);
}

inline SpectralField eval_nemytskii(const PointwiseFn& fn, const SpectralField& x, const SpectralField& y) {
  if (x.size() != y.size()) throw std::invalid_argument("Nemytskii evaluation: mode count mismatch");
  const auto xg = to_grid(x);
  const auto yg = to_grid(y);
  GridField out{std::vector<double>(x.size())};
  apply_pointwise(fn, xg.values, yg.values, out.values);
  return to_spectral(out);
}
}  // namespace detail

inline SpectralField eval_F(const CoefficientSpec& spec, const SpectralField& x, const SpectralField& y) {
  return detail::eval_nemytskii(spec.f, x, y);
}

inline SpectralField eval_G(const CoefficientSpec& spec, const SpectralField& x, const SpectralField& y) {
  if (spec.g_is_zero) {
    if (x.size() != y.size()) throw std::invalid_argument("Nemytskii evaluation: mode count mismatch");
    return SpectralField(x.size());
  }
  return detail::eval_nemytskii(spec.g, x, y);
}

struct StrictDissipativity {
  bool holds = false;
  double margin = 0.0;  // mu - L_g
};

/// (SD): L_g < mu, the smallest eigenvalue of -B.
inline StrictDissipativity check_strict_dissipativity(const CoefficientSpec& spec, const OperatorSpec& op_b) {
  const double margin = op_b.smallest() - spec.lipschitz_g_y;
  return {margin > 0.0, margin};
}

/// Certificate (c, C) for <By + G(x,y), y> <= -c|y|^2 + C.
struct WeakDissipativity {
  bool holds = false;
  double c = 0.0;
  double big_c = 0.0;
  bool via_strict = false;  // certified through L_g < mu rather than boundedness
};

/// Bounded g gives (mu/2, sup_g^2/(2 mu)). Unbounded g falls back to (SD):
/// with m = mu - L_g and g0 = sup |g(xi,x,0)| the certificate is (m/2, g0^2/(2m)).
/// g0 is taken from g_at_zero_bound, which defaults to 0.
inline WeakDissipativity check_weak_dissipativity(const CoefficientSpec& spec, const OperatorSpec& op_b,
                                                  double g_at_zero_bound = 0.0) {
  const double mu = op_b.smallest();
  if (spec.g_is_zero) return {true, mu / 2.0, 0.0, false};
  if (spec.g_bounded()) return {true, mu / 2.0, spec.sup_g * spec.sup_g / (2.0 * mu), false};
  const auto sd = check_strict_dissipativity(spec, op_b);
  if (!sd.holds) return {};
  return {true, sd.margin / 2.0, g_at_zero_bound * g_at_zero_bound / (2.0 * sd.margin), true};
}

struct CoefficientValidation {
  bool ok = true;
  std::vector<std::string> problems;
  double max_abs_f = 0.0;
  double max_abs_g = 0.0;
  double max_abs_g_at_zero = 0.0;
  double max_potential_mismatch = 0.0;
};

/// Spot-checks declared bounds on random (xi, x, y) in [0,1] x [-R,R]^2.
inline CoefficientValidation validate_coefficients(const CoefficientSpec& spec, double radius = 5.0,
                                                   std::size_t samples = 1000, std::uint64_t seed = 12345) {
  CoefficientValidation v;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> box(-radius, radius);
  constexpr double fd_step = 1e-5;
  constexpr double slack = 1e-12;
  for (std::size_t s = 0; s < samples; ++s) {
    const double xi = unit(rng), x = box(rng), y = box(rng);
    const double fv = spec.f(xi, x, y);
    const double gv = spec.g_is_zero ? 0.0 : spec.g(xi, x, y);
    v.max_abs_f = std::max(v.max_abs_f, std::abs(fv));
    v.max_abs_g = std::max(v.max_abs_g, std::abs(gv));
    if (!spec.g_is_zero) v.max_abs_g_at_zero = std::max(v.max_abs_g_at_zero, std::abs(spec.g(xi, x, 0.0)));
    if (!spec.g_is_zero) {
      const double dgdy = (spec.g(xi, x, y + fd_step) - spec.g(xi, x, y - fd_step)) / (2.0 * fd_step);
      if (std::abs(dgdy) > spec.lipschitz_g_y * (1.0 + 1e-6) + 1e-8) {
        v.ok = false;
        v.problems.push_back("|dg/dy| exceeds declared lipschitz_g_y");
        break;
      }
    }
    if (spec.potential) {
      const auto& u = *spec.potential;
      const double dudy = (u(xi, x, y + fd_step) - u(xi, x, y - fd_step)) / (2.0 * fd_step);
      v.max_potential_mismatch = std::max(v.max_potential_mismatch, std::abs(dudy - gv));
    }
  }
  if (v.max_abs_f > spec.sup_f + slack) {
    v.ok = false;
    v.problems.push_back("|f| exceeds declared sup_f");
  }
  if (v.max_abs_g > spec.sup_g + slack) {
    v.ok = false;
    v.problems.push_back("|g| exceeds declared sup_g");
  }
  if (v.max_potential_mismatch > 1e-6) {
    v.ok = false;
    v.problems.push_back("du/dy does not match g");
  }
  return v;
}

// ---------------------------------------------------------------------------
// Bundled problems. All share the slow reaction
//   f(xi, x, y) = cos(y) sin(pi xi) / (1 + x^2),
// which is bounded by 1 with |df/dx| <= 3 sqrt(3) / 8.

struct PresetOptions {
  double alpha = 2.0;   // P2: g = alpha sin(y), needs alpha < pi^2
  double damping = 1.0; // P3: g = -damping * y
};

namespace detail {
inline double bump(double x) { return 1.0 / (1.0 + x * x); }
inline constexpr double bump_lipschitz = 0.649519052838329;  // 3 sqrt(3) / 8

inline CoefficientSpec slow_reaction_base(std::string name) {
  CoefficientSpec s;
  s.name = std::move(name);
  s.f = [](double xi, double x, double y) { return std::cos(y) * std::sin(std::numbers::pi * xi) * bump(x); };
  s.sup_f = 1.0;
  s.lipschitz_f_x = bump_lipschitz;
  return s;
}
}  // namespace detail

/// P1: g = 0. The fast process is Ornstein-Uhlenbeck.
inline CoefficientSpec preset_p1() {
  auto s = detail::slow_reaction_base("p1");
  s.g = [](double, double, double) { return 0.0; };
  s.potential = [](double, double, double) { return 0.0; };
  s.g_is_zero = true;
  return s;
}

/// P2: g = alpha sin(y), L_g = alpha.
inline CoefficientSpec preset_p2(const PresetOptions& opt = {}) {
  auto s = detail::slow_reaction_base("p2");
  const double a = opt.alpha;
  s.g = [a](double, double, double y) { return a * std::sin(y); };
  s.potential = [a](double, double, double y) { return -a * std::cos(y); };
  s.sup_g = std::abs(a);
  s.lipschitz_g_y = std::abs(a);
  return s;
}

/// P3: g = -c y (unbounded, strictly dissipative). Invariant law is Gaussian.
inline CoefficientSpec preset_p3(const PresetOptions& opt = {}) {
  auto s = detail::slow_reaction_base("p3");
  const double c = opt.damping;
  s.g = [c](double, double, double y) { return -c * y; };
  s.potential = [c](double, double, double y) { return -0.5 * c * y * y; };
  s.sup_g = std::numeric_limits<double>::infinity();
  s.lipschitz_g_y = std::abs(c);
  return s;
}

inline CoefficientSpec preset_by_name(const std::string& name, const PresetOptions& opt = {}) {
  if (name == "p1") return preset_p1();
  if (name == "p2") return preset_p2(opt);
  if (name == "p3") return preset_p3(opt);
  throw std::invalid_argument("unknown problem preset: " + name);
}

}  // namespace hmm_spde
