#include "jsdmi/scalar_bound.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <cmath>
#include <cstdint>
#include <string>

namespace jsdmi {

namespace {

void require_finite_nonnegative(double y, const char* what) {
  if (!std::isfinite(y) || y < 0.0) {
    throw std::domain_error(std::string(what) + ": argument must be finite and >= 0, got " +
                            std::to_string(y));
  }
}

}  // namespace

BernoulliParam::BernoulliParam(double p) : p_(p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::domain_error("Bernoulli parameter must lie in [0, 1], got " + std::to_string(p));
  }
}

double xlogx_over_y(double x, double y) noexcept {
  if (x == 0.0) return 0.0;
  return x * std::log(x / y);
}

double logit(double p) noexcept { return std::log(p) - std::log1p(-p); }

double bernoulli_kl(BernoulliParam mu, BernoulliParam nu) {
  const double m = mu, n = nu;
  if (m == n) return 0.0;
  if (n == 0.0 || n == 1.0) return kInfinity;
  return xlogx_over_y(m, n) + xlogx_over_y(1.0 - m, 1.0 - n);
}

double bernoulli_js(BernoulliParam mu, BernoulliParam nu) {
  const double m = mu, n = nu;
  if (m == n) return 0.0;
  const double s = m + n;
  const double t = 2.0 - m - n;
  const double value = kLog2 + 0.5 * (xlogx_over_y(m, s) + xlogx_over_y(n, s)) +
                       0.5 * (xlogx_over_y(1.0 - m, t) + xlogx_over_y(1.0 - n, t));
  // Rounding can push a near-diagonal value a hair below zero.
  return value < 0.0 ? 0.0 : value;
}

double xi_inverse_complement(double y) {
  require_finite_nonnegative(y, "xi_inverse");
  const double z = std::exp(-y);
  return 0.5 * ((1.0 + z) * std::log1p(z) + y * z);
}

double xi_inverse(double y) { return kLog2 - xi_inverse_complement(y); }

double xi_from_complement(double c, const XiSolverOptions& options) {
  if (!std::isfinite(c) || c <= 0.0 || c > kLog2) {
    throw std::domain_error("xi: complement log2 - x must lie in (0, log 2], got " +
                            std::to_string(c));
  }
  if (c == kLog2) return 0.0;

  // g is decreasing in y: g(0) = log2 - c > 0, g(inf) = -c < 0.
  auto g = [c](double y) { return xi_inverse_complement(y) - c; };

  double hi = options.initial_upper;
  double g_hi = g(hi);
  while (g_hi > 0.0) {
    if (hi >= options.upper_cap) {
      throw ConvergenceError("xi: bracket expansion exceeded cap " +
                             std::to_string(options.upper_cap));
    }
    hi = std::min(2.0 * hi, options.upper_cap);
    g_hi = g(hi);
  }
  if (g_hi == 0.0) return hi;

  std::uintmax_t iterations = static_cast<std::uintmax_t>(options.max_iterations);
  const auto [a, b] = boost::math::tools::toms748_solve(
      g, 0.0, hi, g(0.0), g_hi, boost::math::tools::eps_tolerance<double>(52), iterations);
  const double y = 0.5 * (a + b);
  if (iterations >= static_cast<std::uintmax_t>(options.max_iterations) &&
      std::abs(g(y)) > options.x_tolerance) {
    throw ConvergenceError("xi: no convergence after " + std::to_string(options.max_iterations) +
                           " iterations");
  }
  if (std::abs(g(y)) > options.x_tolerance) {
    throw ConvergenceError("xi: residual above tolerance");
  }
  return y;
}

double xi(double x, const XiSolverOptions& options) {
  if (!(x >= 0.0 && x < kLog2)) {
    throw std::domain_error("xi: argument must lie in [0, log 2), got " + std::to_string(x));
  }
  if (x == 0.0) return 0.0;
  // log2 - x is exact for x >= log2 / 2 (Sterbenz) and otherwise carries one
  // rounding at the scale of log 2, the same as evaluating xi_inverse directly.
  return xi_from_complement(kLog2 - x, options);
}

double xi_inverse_derivative(double y) {
  require_finite_nonnegative(y, "xi_inverse_derivative");
  // log(1 + e^y) = y + log1p(e^-y), stable for large y.
  const double z = std::exp(-y);
  return 0.5 * z * (y + std::log1p(z));
}

double xi_derivative(double x) {
  if (!(x > 0.0 && x < kLog2)) {
    throw std::domain_error("xi_derivative: argument must lie in (0, log 2), got " +
                            std::to_string(x));
  }
  return 1.0 / xi_inverse_derivative(xi(x));
}

double xi_approx(double x) {
  if (!(x >= 0.0 && x < kLog2)) {
    throw std::domain_error("xi_approx: argument must lie in [0, log 2), got " +
                            std::to_string(x));
  }
  return kXiApproxScale * logit(0.5 * (x / kLog2 + 1.0));
}

double ce_gap_estimate(double i_ce, double delta) {
  require_finite_nonnegative(i_ce, "ce_gap_estimate (i_ce)");
  if (!(delta >= 0.0) || !std::isfinite(delta)) {
    throw std::domain_error("ce_gap_estimate: delta must be finite and >= 0");
  }
  if (delta == 0.0) return 0.0;
  return delta / xi_inverse_derivative(i_ce);
}

}  // namespace jsdmi
