#pragma once

// Optimal lower bound of KL divergence in terms of JS divergence.
//
// The bound function Xi maps a JSD value x in [0, log 2) to the smallest KL
// divergence compatible with it. It has no closed form; its inverse does:
//
//   Xi^{-1}(y) = JSD(B(1) || B(e^{-y}))
//              = log 2 - 1/2 [ (1 + e^{-y}) log(1 + e^{-y}) + y e^{-y} ].
//
// Xi itself is evaluated with a bracketed Brent root-finder on Xi^{-1}.
//
// All divergences are in nats. Every function here is pure and thread-safe.

#include <limits>
#include <numbers>
#include <stdexcept>

namespace jsdmi {

inline constexpr double kLog2 = std::numbers::ln2;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Thrown when the Xi root-finder fails to bracket or converge.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Probability parameter of a Bernoulli distribution, validated on construction.
class BernoulliParam {
 public:
  BernoulliParam(double p);  // NOLINT: implicit by intent, values are plain probabilities
  double value() const noexcept { return p_; }
  operator double() const noexcept { return p_; }  // NOLINT

 private:
  double p_;
};

/// A (JSD, KLD) pair; kld may be +inf on the lower edge of the joint range.
struct BoundValue {
  double jsd = 0.0;
  double kld = 0.0;
};

/// x log(x / y) with 0 log(0 / y) = 0.
double xlogx_over_y(double x, double y) noexcept;

/// log(p / (1 - p)).
double logit(double p) noexcept;

/// KL(B(mu) || B(nu)). Returns +inf when nu is 0 or 1 and mu != nu.
double bernoulli_kl(BernoulliParam mu, BernoulliParam nu);

/// JSD(B(mu) || B(nu)); finite on the whole unit square, symmetric.
double bernoulli_js(BernoulliParam mu, BernoulliParam nu);

/// Closed-form inverse of the bound. Requires finite y >= 0.
double xi_inverse(double y);

/// log 2 - xi_inverse(y), evaluated without cancellation. Accurate to full
/// relative precision even when xi_inverse(y) rounds to log 2.
double xi_inverse_complement(double y);

/// Solver settings for xi(). Defaults follow the reference algorithm: start
/// from the bracket [0, 100] and double the upper end while it is too small.
struct XiSolverOptions {
  double initial_upper = 100.0;
  double upper_cap = 1e6;
  double x_tolerance = 1e-12;
  int max_iterations = 200;
};

/// The bound Xi(x) for 0 <= x < log 2. Bracketed TOMS 748 solve on xi_inverse.
double xi(double x, const XiSolverOptions& options = {});

/// Xi evaluated from the complement c = log 2 - x, c in (0, log 2].
/// Resolves large y that a double x next to log 2 cannot represent.
double xi_from_complement(double c, const XiSolverOptions& options = {});

/// d/dy xi_inverse(y) = 1/2 e^{-y} log(1 + e^y).
double xi_inverse_derivative(double y);

/// Xi'(x) = 1 / xi_inverse_derivative(Xi(x)) for 0 < x < log 2.
double xi_derivative(double x);

/// Scale of the logit approximation of Xi.
inline constexpr double kXiApproxScale = 1.15;

/// 1.15 * logit((x / log 2 + 1) / 2). Smooth surrogate for Xi on [0, log 2).
double xi_approx(double x);

/// First-order gap between Xi(I_JS) and I_CE for a discriminator whose
/// posterior is off by delta nats of expected KL: delta * Xi'(xi_inverse(i_ce)).
double ce_gap_estimate(double i_ce, double delta);

}  // namespace jsdmi
