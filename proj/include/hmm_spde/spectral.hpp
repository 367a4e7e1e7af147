#pragma once

// Truncated sine-basis representation of fields on (0,1) with homogeneous
// Dirichlet conditions, and diagonal linear operators acting mode by mode.
//
// Mode k (1-based) is the orthonormal function e_k(xi) = sqrt(2) sin(k pi xi).
// Coefficient vectors are stored 0-based: coeffs[k-1] multiplies e_k.

#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hmm_spde {

/// Coefficients of a field in the orthonormal sine basis.
class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(std::size_t mode_count) : coeffs_(mode_count, 0.0) {}
  explicit SpectralField(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {}

  /// The field e_k (k is 1-based).
  static SpectralField basis(std::size_t mode_count, std::size_t k) {
    if (k == 0 || k > mode_count) throw std::invalid_argument("basis: mode index out of range");
    SpectralField f(mode_count);
    f.coeffs_[k - 1] = 1.0;
    return f;
  }

  std::size_t size() const { return coeffs_.size(); }
  double& operator[](std::size_t i) { return coeffs_[i]; }
  double operator[](std::size_t i) const { return coeffs_[i]; }
  /// Coefficient of mode k, 1-based.
  double mode(std::size_t k) const { return coeffs_.at(k - 1); }

  std::span<double> coeffs() { return coeffs_; }
  std::span<const double> coeffs() const { return coeffs_; }
  const std::vector<double>& vector() const { return coeffs_; }

  double norm_squared() const {
    double s = 0.0;
    for (double c : coeffs_) s += c * c;
    return s;
  }
  double norm() const { return std::sqrt(norm_squared()); }

  SpectralField& operator+=(const SpectralField& o) {
    check_same(o);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
    return *this;
  }
  SpectralField& operator-=(const SpectralField& o) {
    check_same(o);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
    return *this;
  }
  SpectralField& operator*=(double s) {
    for (double& c : coeffs_) c *= s;
    return *this;
  }
  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(double s, SpectralField a) { return a *= s; }
  friend SpectralField operator*(SpectralField a, double s) { return a *= s; }
  friend bool operator==(const SpectralField&, const SpectralField&) = default;

 private:
  void check_same(const SpectralField& o) const {
    if (o.size() != size()) throw std::invalid_argument("SpectralField: mode count mismatch");
  }
  std::vector<double> coeffs_;
};

inline double inner(const SpectralField& a, const SpectralField& b) {
  if (a.size() != b.size()) throw std::invalid_argument("inner: mode count mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double distance(const SpectralField& a, const SpectralField& b) { return (a - b).norm(); }

/// Nodal values at the interior collocation points xi_i = i/(K+1), i = 1..K.
struct GridField {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  static double point(std::size_t i, std::size_t mode_count) {
    return static_cast<double>(i + 1) / static_cast<double>(mode_count + 1);
  }
  /// Quadrature weight h = 1/(K+1) of the collocation grid.
  double weight() const { return 1.0 / static_cast<double>(values.size() + 1); }
};

/// Dense DST-I on the collocation grid. The matrix S_ik = sqrt(2) sin(k pi xi_i)
/// satisfies S^T S = (K+1) I, so to_spectral = h S^T inverts to_grid = S exactly.
class SineTransform {
 public:
  explicit SineTransform(std::size_t mode_count) : k_(mode_count), matrix_(mode_count * mode_count) {
    if (mode_count == 0) throw std::invalid_argument("SineTransform: K must be >= 1");
    const double n1 = static_cast<double>(k_ + 1);
    // sin(pi * p / (K+1)) for p reduced mod 2(K+1) keeps the argument small.
    const std::size_t period = 2 * (k_ + 1);
    for (std::size_t i = 0; i < k_; ++i)
      for (std::size_t k = 0; k < k_; ++k) {
        const std::size_t p = ((i + 1) * (k + 1)) % period;
        matrix_[i * k_ + k] = std::numbers::sqrt2 * std::sin(std::numbers::pi * static_cast<double>(p) / n1);
      }
  }

  std::size_t mode_count() const { return k_; }
  /// Value of e_k at grid point i (both 0-based).
  double basis_value(std::size_t i, std::size_t k) const { return matrix_[i * k_ + k]; }

  void to_grid(std::span<const double> coeffs, std::span<double> values) const {
    check(coeffs.size(), values.size());
    for (std::size_t i = 0; i < k_; ++i) {
      const double* row = &matrix_[i * k_];
      double s = 0.0;
      for (std::size_t k = 0; k < k_; ++k) s += row[k] * coeffs[k];
      values[i] = s;
    }
  }

  void to_spectral(std::span<const double> values, std::span<double> coeffs) const {
    check(coeffs.size(), values.size());
    const double h = 1.0 / static_cast<double>(k_ + 1);
    std::fill(coeffs.begin(), coeffs.end(), 0.0);
    for (std::size_t i = 0; i < k_; ++i) {
      const double* row = &matrix_[i * k_];
      const double v = values[i] * h;
      for (std::size_t k = 0; k < k_; ++k) coeffs[k] += row[k] * v;
    }
  }

 private:
  void check(std::size_t a, std::size_t b) const {
    if (a != k_ || b != k_) throw std::invalid_argument("SineTransform: size mismatch");
  }
  std::size_t k_;
  std::vector<double> matrix_;
};

/// Shared, immutable transform for a given K. Thread-safe.
inline const SineTransform& sine_transform(std::size_t mode_count) {
  static std::mutex mutex;
  static std::map<std::size_t, std::unique_ptr<const SineTransform>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[mode_count];
  if (!slot) slot = std::make_unique<const SineTransform>(mode_count);
  return *slot;
}

inline GridField to_grid(const SpectralField& field) {
  GridField g{std::vector<double>(field.size())};
  sine_transform(field.size()).to_grid(field.coeffs(), g.values);
  return g;
}

inline SpectralField to_spectral(const GridField& grid) {
  SpectralField f(grid.size());
  sine_transform(grid.size()).to_spectral(grid.values, f.coeffs());
  return f;
}

/// Eigen-data of a negative definite diagonal operator: -A e_k = eigenvalue_k e_k.
class OperatorSpec {
 public:
  explicit OperatorSpec(std::vector<double> eigenvalues) : eigenvalues_(std::move(eigenvalues)) {
    if (eigenvalues_.empty()) throw std::invalid_argument("OperatorSpec: empty spectrum");
    for (std::size_t k = 0; k < eigenvalues_.size(); ++k) {
      if (!(eigenvalues_[k] > 0.0)) throw std::invalid_argument("OperatorSpec: eigenvalues must be positive");
      if (k > 0 && !(eigenvalues_[k] > eigenvalues_[k - 1]))
        throw std::invalid_argument("OperatorSpec: eigenvalues must be strictly increasing");
    }
  }

  /// Dirichlet Laplacian on (0,1): eigenvalues pi^2 k^2, k = 1..K.
  static OperatorSpec laplacian(std::size_t mode_count) {
    if (mode_count == 0) throw std::invalid_argument("laplacian: K must be >= 1");
    std::vector<double> ev(mode_count);
    constexpr double pi2 = std::numbers::pi * std::numbers::pi;
    for (std::size_t k = 1; k <= mode_count; ++k) ev[k - 1] = pi2 * static_cast<double>(k * k);
    return OperatorSpec(std::move(ev));
  }

  std::size_t mode_count() const { return eigenvalues_.size(); }
  double eigenvalue(std::size_t k) const { return eigenvalues_.at(k - 1); }  // 1-based
  const std::vector<double>& eigenvalues() const { return eigenvalues_; }
  /// Smallest eigenvalue (lambda for A, mu for B).
  double smallest() const { return eigenvalues_.front(); }

 private:
  std::vector<double> eigenvalues_;
};

namespace detail {
inline void check_modes(const SpectralField& f, const OperatorSpec& op) {
  if (f.size() != op.mode_count()) throw std::invalid_argument("mode count mismatch between field and operator");
}
}  // namespace detail

/// Per-mode multipliers 1/(1 + step * eigenvalue_k) of (I - step A)^{-1}.
inline std::vector<double> resolvent_factors(double step, const OperatorSpec& op) {
  if (!(step >= 0.0)) throw std::invalid_argument("resolvent: step must be nonnegative");
  std::vector<double> a(op.mode_count());
  for (std::size_t k = 0; k < a.size(); ++k) a[k] = 1.0 / (1.0 + step * op.eigenvalues()[k]);
  return a;
}

inline SpectralField apply_resolvent(SpectralField field, double step, const OperatorSpec& op) {
  detail::check_modes(field, op);
  const auto a = resolvent_factors(step, op);
  for (std::size_t k = 0; k < a.size(); ++k) field[k] *= a[k];
  return field;
}

inline SpectralField apply_semigroup(SpectralField field, double t, const OperatorSpec& op) {
  detail::check_modes(field, op);
  if (!(t >= 0.0)) throw std::invalid_argument("semigroup: time must be nonnegative");
  for (std::size_t k = 0; k < field.size(); ++k) field[k] *= std::exp(-op.eigenvalues()[k] * t);
  return field;
}

/// |x|_{(-A)^a} for a in [-1, 1].
inline double fractional_norm(const SpectralField& field, double a, const OperatorSpec& op) {
  detail::check_modes(field, op);
  if (!(a >= -1.0 && a <= 1.0)) throw std::invalid_argument("fractional_norm: exponent must lie in [-1,1]");
  double s = 0.0;
  for (std::size_t k = 0; k < field.size(); ++k) {
    const double w = std::pow(op.eigenvalues()[k], a);
    s += w * w * field[k] * field[k];
  }
  return std::sqrt(s);
}

}  // namespace hmm_spde
