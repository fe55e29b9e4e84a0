#include "jsdmi/joint_range.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <thread>

namespace jsdmi {

BernoulliPoint BernoulliPoint::in_triangle(double mu, double nu) {
  if (!(nu > 0.0 && nu <= 1.0 && nu <= mu && mu <= 1.0)) {
    throw std::domain_error("point (" + std::to_string(mu) + ", " + std::to_string(nu) +
                            ") is outside the lower triangle");
  }
  return {mu, nu};
}

BernoulliPoint BernoulliPoint::interior(double mu, double nu) {
  if (!(nu > 0.0 && nu < mu && mu < 1.0)) {
    throw std::domain_error("point (" + std::to_string(mu) + ", " + std::to_string(nu) +
                            ") is not interior to the lower triangle");
  }
  return {mu, nu};
}

BoundValue phi(const BernoulliPoint& p) {
  return {bernoulli_js(p.mu, p.nu), bernoulli_kl(p.mu, p.nu)};
}

JacobianEval jacobian(const BernoulliPoint& p) {
  const double mu = p.mu, nu = p.nu;
  if (!(nu > 0.0 && nu < mu && mu < 1.0)) {
    throw std::domain_error("jacobian: point must satisfy 0 < nu < mu < 1");
  }
  const double m = 0.5 * (mu + nu);
  const double l_mu = logit(mu), l_nu = logit(nu), l_m = logit(m);

  JacobianEval j;
  j.djs_dmu = 0.5 * (l_mu - l_m);
  j.djs_dnu = 0.5 * (l_nu - l_m);
  j.dkl_dmu = l_mu - l_nu;
  j.dkl_dnu = -(mu / nu - (1.0 - mu) / (1.0 - nu));
  j.det = j.djs_dmu * j.dkl_dnu - j.djs_dnu * j.dkl_dmu;
  return j;
}

namespace {

struct RowRangeResult {
  std::size_t checked = 0;
  double max_det = -kInfinity;
  std::vector<CertificationFailure> failures;
};

RowRangeResult certify_rows(std::size_t n, std::size_t row_begin, std::size_t row_end,
                            double margin) {
  RowRangeResult r;
  const double h = 1.0 / static_cast<double>(n);
  for (std::size_t i = row_begin; i < row_end; ++i) {
    const double mu = (static_cast<double>(i) + 0.5) * h;
    for (std::size_t k = 0; k < i; ++k) {
      const double nu = (static_cast<double>(k) + 0.5) * h;
      const double det = jacobian({mu, nu}).det;
      ++r.checked;
      r.max_det = std::max(r.max_det, det);
      if (!(det < -margin)) r.failures.push_back({mu, nu, det});
    }
  }
  return r;
}

}  // namespace

CertificationReport certify_conjecture(std::size_t grid_per_axis, double margin,
                                       unsigned workers) {
  if (grid_per_axis < 2) throw std::invalid_argument("certify: grid_per_axis must be >= 2");
  if (!(margin >= 0.0)) throw std::invalid_argument("certify: margin must be >= 0");
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, grid_per_axis));

  // Row i holds i points; split rows so each chunk carries a similar load.
  std::vector<std::size_t> bounds{0};
  const double total = 0.5 * static_cast<double>(grid_per_axis) * (grid_per_axis - 1);
  for (unsigned w = 1; w < workers; ++w) {
    const double target = total * w / workers;
    bounds.push_back(static_cast<std::size_t>(std::sqrt(2.0 * target)));
  }
  bounds.push_back(grid_per_axis);

  std::vector<RowRangeResult> parts(workers);
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        parts[w] = certify_rows(grid_per_axis, bounds[w], bounds[w + 1], margin);
      });
    }
  }

  CertificationReport report;
  report.grid_per_axis = grid_per_axis;
  report.margin = margin;
  for (auto& part : parts) {
    report.checked += part.checked;
    report.max_det = std::max(report.max_det, part.max_det);
    report.failures.insert(report.failures.end(), part.failures.begin(), part.failures.end());
  }
  report.pass = report.checked > 0 && report.failures.empty();
  return report;
}

std::vector<BoundValue> boundary_curve(std::size_t n) {
  if (n < 2) throw std::invalid_argument("boundary_curve: n must be >= 2");
  const double lo = std::log(1e-4), hi = std::log(50.0);
  std::vector<BoundValue> curve;
  curve.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double y = std::exp(lo + (hi - lo) * static_cast<double>(i) / (n - 1));
    curve.push_back({xi_inverse(y), y});
  }
  return curve;
}

}  // namespace jsdmi
