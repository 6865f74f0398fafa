#pragma once

// Self-contained special functions: log-gamma, the regularized incomplete
// gamma function and its inverse, and chi-square cdf/quantile wrappers.
//
// The incomplete gamma uses the classic series / continued-fraction split at
// x = a + 1 (Lentz's method for the continued fraction) and targets ~1e-14
// relative accuracy, comfortably inside the 1e-12 budget the chi-square
// quantile routines are specified to.

#include <cmath>
#include <limits>
#include <stdexcept>

namespace stosearch {

// Log of the gamma function for x > 0 (Lanczos, g = 7, 9 terms).
inline double log_gamma(double x) {
  if (!(x > 0.0)) throw std::invalid_argument("log_gamma: x must be > 0");
  static constexpr double kCoeff[9] = {
      0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
      771.32342877765313,      -176.61502916214059,   12.507343278686905,
      -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
  if (x < 0.5) {
    // Reflection keeps the Lanczos argument in its accurate range.
    constexpr double kPi = 3.141592653589793238462643383279503;
    return std::log(kPi / std::sin(kPi * x)) - log_gamma(1.0 - x);
  }
  const double z = x - 1.0;
  double a = kCoeff[0];
  for (int i = 1; i < 9; ++i) a += kCoeff[i] / (z + static_cast<double>(i));
  const double t = z + 7.5;
  return 0.9189385332046727417803297364056176 + (z + 0.5) * std::log(t) - t +
         std::log(a);
}

namespace detail {

// Series for P(a, x), valid and fast for x < a + 1.
inline double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double term = sum;
  for (int i = 0; i < 10000; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - log_gamma(a));
}

// Continued fraction for Q(a, x) (modified Lentz), for x >= a + 1.
inline double gamma_q_cf(double a, double x) {
  constexpr double kTiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - log_gamma(a));
}

}  // namespace detail

// Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a).
inline double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0)) throw std::invalid_argument("regularized_gamma_p: a <= 0");
  if (x < 0.0) throw std::invalid_argument("regularized_gamma_p: x < 0");
  if (x == 0.0) return 0.0;
  return x < a + 1.0 ? detail::gamma_p_series(a, x)
                     : 1.0 - detail::gamma_q_cf(a, x);
}

inline double regularized_gamma_q(double a, double x) {
  if (!(a > 0.0)) throw std::invalid_argument("regularized_gamma_q: a <= 0");
  if (x < 0.0) throw std::invalid_argument("regularized_gamma_q: x < 0");
  if (x == 0.0) return 1.0;
  return x < a + 1.0 ? 1.0 - detail::gamma_p_series(a, x)
                     : detail::gamma_q_cf(a, x);
}

// Inverse of P(a, .): the p-quantile of Gamma(a, 1). Wilson-Hilferty start,
// then safeguarded Newton (bisection bracket is maintained throughout).
inline double inverse_gamma_p(double a, double p) {
  if (!(a > 0.0)) throw std::invalid_argument("inverse_gamma_p: a <= 0");
  if (!(p >= 0.0 && p < 1.0))
    throw std::invalid_argument("inverse_gamma_p: p outside [0, 1)");
  if (p == 0.0) return 0.0;

  const double z = [&] {
    // Acklam-style rational approximation of the standard normal quantile;
    // only a starting value, so modest accuracy is fine.
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
      const double r = 0.180625 - q * q;
      return q * (2.506628 + r * (9.623447 + r * 20.209708)) /
             (1.0 + r * (3.838366 + r * 4.864658));
    }
    double r = std::sqrt(-std::log(p < 0.5 ? p : 1.0 - p));
    double v = (2.321213 + r * (4.850141 + r * 1.775454)) /
               (1.0 + r * (2.607718 + r * 0.606522));
    v = v * r - 2.0 / (r + 1.0);  // crude tail correction
    return p < 0.5 ? -v : v;
  }();
  const double wh = 1.0 - 1.0 / (9.0 * a) + z / (3.0 * std::sqrt(a));
  double x = a * wh * wh * wh;
  if (!(x > 0.0) || !std::isfinite(x)) x = a;

  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 200; ++it) {
    const double f = regularized_gamma_p(a, x) - p;
    if (f > 0.0)
      hi = x;
    else
      lo = x;
    const double logpdf = (a - 1.0) * std::log(x) - x - log_gamma(a);
    double step = f * std::exp(-logpdf);
    double xn = x - step;
    if (!(xn > lo && (xn < hi))) {
      xn = std::isfinite(hi) ? 0.5 * (lo + hi) : x * 2.0;
    }
    if (std::abs(xn - x) <= 1e-14 * std::abs(x)) {
      x = xn;
      break;
    }
    x = xn;
  }
  return x;
}

inline double chi_square_cdf(double x, int k) {
  if (k < 1) throw std::invalid_argument("chi_square_cdf: k < 1");
  if (x < 0.0) return 0.0;
  return regularized_gamma_p(0.5 * static_cast<double>(k), 0.5 * x);
}

inline double chi_square_quantile(double p, int k) {
  if (k < 1) throw std::invalid_argument("chi_square_quantile: k < 1");
  return 2.0 * inverse_gamma_p(0.5 * static_cast<double>(k), p);
}

inline double chi_square_median(int k) { return chi_square_quantile(0.5, k); }

}  // namespace stosearch
