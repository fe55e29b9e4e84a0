#pragma once

// The Bernoulli joint-range map phi(mu, nu) = (JSD, KLD) on the lower triangle
// Omega = {(mu, nu) in [0,1] x (0,1] : nu <= mu}, its Jacobian, and grid
// certification that det J < 0 on the interior of Omega.

#include <cstddef>
#include <vector>

#include "jsdmi/scalar_bound.hpp"

namespace jsdmi {

struct BernoulliPoint {
  double mu = 0.0;
  double nu = 0.0;

  /// Validates membership in Omega (nu in (0,1], nu <= mu <= 1).
  static BernoulliPoint in_triangle(double mu, double nu);
  /// Validates membership in the open interior 0 < nu < mu < 1.
  static BernoulliPoint interior(double mu, double nu);
};

struct JacobianEval {
  double djs_dmu = 0.0;
  double djs_dnu = 0.0;
  double dkl_dmu = 0.0;
  double dkl_dnu = 0.0;
  double det = 0.0;
};

BoundValue phi(const BernoulliPoint& p);

/// Closed-form Jacobian of phi. Throws std::domain_error off the interior.
JacobianEval jacobian(const BernoulliPoint& p);

struct CertificationFailure {
  double mu;
  double nu;
  double det;
};

struct CertificationReport {
  std::size_t grid_per_axis = 0;
  std::size_t checked = 0;
  double max_det = -kInfinity;
  double margin = 0.0;
  bool pass = false;
  std::vector<CertificationFailure> failures;  // row-major order (mu, then nu)
};

/// Evaluates det J on the cell-centred lattice mu_i = (i + 1/2)/N,
/// nu_j = (j + 1/2)/N restricted to nu_j < mu_i. Every point keeps a distance
/// of at least 1/(2N) from the boundary of Omega. Passes iff max det < -margin.
/// Work is split over `workers` threads (0 = hardware concurrency); the
/// result does not depend on the worker count.
CertificationReport certify_conjecture(std::size_t grid_per_axis, double margin = 0.0,
                                       unsigned workers = 1);

/// n points (xi_inverse(y), y) of the lower envelope with y log-spaced on
/// [1e-4, 50].
std::vector<BoundValue> boundary_curve(std::size_t n);

}  // namespace jsdmi
