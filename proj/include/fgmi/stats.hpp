#pragma once

// Small statistics toolbox shared by the library and the test suites:
// running mean/stderr, chi-square and KS tail probabilities, and a
// least-squares slope with confidence interval.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace fgmi {

struct Accumulator {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double stderr_mean() const {
    return n > 1 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
  }
};

namespace detail {

inline double ln_gamma(double x) { return std::lgamma(x); }

// regularized lower incomplete gamma P(a,x) by series
inline double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - ln_gamma(a));
}

// regularized upper incomplete gamma Q(a,x) by continued fraction
inline double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - ln_gamma(a)) * h;
}

}  // namespace detail

// Q(a,x) = P[Gamma(a) > x], the chi-square tail with a = df/2, x = stat/2
inline double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q: bad arguments");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
  return detail::gamma_q_cf(a, x);
}

inline double chi_square_tail(double stat, double dof) {
  return gamma_q(dof / 2.0, stat / 2.0);
}

// Pearson test of observed counts against expected counts (same total)
inline double chi_square_p_value(const std::vector<double>& observed,
                                 const std::vector<double>& expected) {
  if (observed.size() != expected.size() || observed.empty())
    throw std::invalid_argument("chi_square_p_value: size mismatch");
  double stat = 0.0;
  std::size_t dof = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (expected[i] <= 0.0) {
      if (observed[i] > 0.0) return 0.0;
      continue;
    }
    const double d = observed[i] - expected[i];
    stat += d * d / expected[i];
    ++dof;
  }
  if (dof <= 1) return 1.0;
  return chi_square_tail(stat, static_cast<double>(dof - 1));
}

// two-sample chi-square over shared categories
inline double chi_square_two_sample_p(const std::vector<double>& a,
                                      const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("chi_square_two_sample_p: size mismatch");
  double na = 0.0, nb = 0.0;
  for (double v : a) na += v;
  for (double v : b) nb += v;
  if (na <= 0.0 || nb <= 0.0) return 1.0;
  const double ka = std::sqrt(nb / na), kb = std::sqrt(na / nb);
  double stat = 0.0;
  std::size_t cells = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double tot = a[i] + b[i];
    if (tot <= 0.0) continue;
    const double d = ka * a[i] - kb * b[i];
    stat += d * d / tot;
    ++cells;
  }
  if (cells <= 1) return 1.0;
  return chi_square_tail(stat, static_cast<double>(cells - 1));
}

// Kolmogorov tail Q_KS(lambda) = 2 sum_j (-1)^{j-1} exp(-2 j^2 lambda^2)
inline double kolmogorov_tail(double lambda) {
  if (lambda <= 0.0) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += sign * term;
    sign = -sign;
    if (term < 1e-12) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

// two-sample KS p-value (asymptotic)
inline double ks_two_sample_p(std::vector<double> x, std::vector<double> y) {
  if (x.empty() || y.empty()) return 1.0;
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  const double ne = std::sqrt(nx * ny / (nx + ny));
  return kolmogorov_tail((ne + 0.12 + 0.11 / ne) * d);
}

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double ci_low = 0.0;   // 95% interval
  double ci_high = 0.0;
};

inline SlopeFit least_squares_slope(const std::vector<double>& x,
                                    const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3)
    throw std::invalid_argument("least_squares_slope: need >= 3 points");
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
  if (sxx == 0.0) throw std::invalid_argument("least_squares_slope: degenerate x");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    sse += r * r;
  }
  const double s2 = sse / (n - 2.0);
  fit.slope_stderr = std::sqrt(s2 / sxx);
  fit.ci_low = fit.slope - 1.959963984540054 * fit.slope_stderr;
  fit.ci_high = fit.slope + 1.959963984540054 * fit.slope_stderr;
  return fit;
}

}  // namespace fgmi
