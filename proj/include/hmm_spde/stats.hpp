#pragma once

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace hmm_spde {

/// Welford running mean / variance.
class RunningStats {
 public:
  void add(double v) {
    ++n_;
    const double d = v - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (v - mean_);
  }
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double stddev() const { return std::sqrt(variance()); }
  double stderr_of_mean() const { return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Mean and batch-means standard error of a correlated series.
struct BatchMeans {
  double mean = 0.0;
  double stderr_of_mean = 0.0;
};

inline BatchMeans batch_means(std::span<const double> series, std::size_t batches) {
  if (batches < 2 || series.size() < batches) throw std::invalid_argument("batch_means: need >= 2 batches");
  const std::size_t len = series.size() / batches;
  RunningStats s;
  for (std::size_t b = 0; b < batches; ++b) {
    double sum = 0.0;
    for (std::size_t i = b * len; i < (b + 1) * len; ++i) sum += series[i];
    s.add(sum / static_cast<double>(len));
  }
  return {s.mean(), s.stderr_of_mean()};
}

struct LinearFit {
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double slope_stderr = std::numeric_limits<double>::quiet_NaN();
  double ci_low = std::numeric_limits<double>::quiet_NaN();   // 95%
  double ci_high = std::numeric_limits<double>::quiet_NaN();
  std::size_t points = 0;

  bool valid() const { return points >= 2 && std::isfinite(slope); }
};

/// Ordinary least squares y = a + b x with a 95% Student-t interval on b.
/// Two points give a zero-width interval.
inline LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_line: size mismatch");
  LinearFit fit;
  fit.points = x.size();
  if (x.size() < 2) return fit;
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) return fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (x.size() == 2) {
    fit.slope_stderr = 0.0;
    fit.ci_low = fit.ci_high = fit.slope;
    return fit;
  }
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    sse += r * r;
  }
  fit.slope_stderr = std::sqrt(sse / (n - 2.0) / sxx);
  const boost::math::students_t dist(n - 2.0);
  const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
  fit.ci_low = fit.slope - t * fit.slope_stderr;
  fit.ci_high = fit.slope + t * fit.slope_stderr;
  return fit;
}

}  // namespace hmm_spde
