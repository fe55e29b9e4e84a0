#include "jsdmi/discrete_exact.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>

#include "jsdmi/scalar_bound.hpp"

namespace jsdmi {

namespace {

void require_mass_one(double total, const char* what) {
  if (std::abs(total - 1.0) > kProbabilitySumTolerance) {
    throw std::invalid_argument(std::string(what) + " must sum to 1, got " +
                                std::to_string(total));
  }
}

// Binary entropy in nats.
double h2(double q) { return -xlogx_over_y(q, 1.0) - xlogx_over_y(1.0 - q, 1.0); }

}  // namespace

ProbVector::ProbVector(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw std::invalid_argument("ProbVector: empty");
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw std::invalid_argument("ProbVector: entries must be finite and >= 0");
    }
  }
  require_mass_one(std::accumulate(probs_.begin(), probs_.end(), 0.0), "ProbVector");
}

ProbVector ProbVector::uniform(std::size_t k) {
  if (k == 0) throw std::invalid_argument("ProbVector::uniform: k must be >= 1");
  return ProbVector(std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

JointTable::JointTable(Eigen::MatrixXd table) : table_(std::move(table)) {
  if (table_.size() == 0) throw std::invalid_argument("JointTable: empty");
  if (!table_.allFinite() || (table_.array() < 0.0).any()) {
    throw std::invalid_argument("JointTable: entries must be finite and >= 0");
  }
  require_mass_one(table_.sum(), "JointTable");
}

ProbVector JointTable::marginal_u() const {
  Eigen::VectorXd rows = table_.rowwise().sum();
  // Each marginal inherits the table's mass; renormalize against drift.
  rows /= rows.sum();
  return ProbVector(std::vector<double>(rows.data(), rows.data() + rows.size()));
}

ProbVector JointTable::marginal_v() const {
  Eigen::RowVectorXd cols = table_.colwise().sum();
  cols /= cols.sum();
  return ProbVector(std::vector<double>(cols.data(), cols.data() + cols.size()));
}

Eigen::MatrixXd JointTable::product_of_marginals() const {
  const auto pu = marginal_u().values();
  const auto pv = marginal_v().values();
  Eigen::Map<const Eigen::VectorXd> u(pu.data(), static_cast<Eigen::Index>(pu.size()));
  Eigen::Map<const Eigen::VectorXd> v(pv.data(), static_cast<Eigen::Index>(pv.size()));
  return u * v.transpose();
}

JointTable make_alpha_family(std::size_t k, double alpha) {
  if (k < 2) throw std::invalid_argument("alpha family: k must be >= 2");
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("alpha family: alpha must lie in [0, 1]");
  }
  const auto n = static_cast<Eigen::Index>(k);
  const double kd = static_cast<double>(k);
  Eigen::MatrixXd t = Eigen::MatrixXd::Constant(n, n, (1.0 - alpha) / (kd * kd));
  t.diagonal().array() += alpha / kd;
  return JointTable(std::move(t));
}

std::vector<CellClass> alpha_family_cells(std::size_t k, double alpha) {
  if (k < 2) throw std::invalid_argument("alpha family: k must be >= 2");
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("alpha family: alpha must lie in [0, 1]");
  }
  const double kd = static_cast<double>(k);
  const double product = 1.0 / (kd * kd);
  const double off = (1.0 - alpha) * product;
  return {{kd, off + alpha / kd, product}, {kd * kd - kd, off, product}};
}

std::vector<CellClass> cells_of(const JointTable& j) {
  const Eigen::MatrixXd prod = j.product_of_marginals();
  std::vector<CellClass> cells;
  cells.reserve(static_cast<std::size_t>(j.matrix().size()));
  for (Eigen::Index c = 0; c < j.cols(); ++c) {
    for (Eigen::Index r = 0; r < j.rows(); ++r) cells.push_back({1.0, j(r, c), prod(r, c)});
  }
  return cells;
}

double exact_mi(std::span<const CellClass> cells) {
  double total = 0.0;
  for (const auto& c : cells) {
    if (c.joint == 0.0) continue;
    if (c.product == 0.0) return kInfinity;
    total += c.count * xlogx_over_y(c.joint, c.product);
  }
  return std::max(total, 0.0);
}

double exact_mi(const JointTable& j) { return exact_mi(cells_of(j)); }

double exact_jsinfo(std::span<const CellClass> cells) {
  double total = 0.0;
  for (const auto& c : cells) {
    const double m = 0.5 * (c.joint + c.product);
    if (m == 0.0) continue;
    total += c.count * 0.5 * (xlogx_over_y(c.joint, m) + xlogx_over_y(c.product, m));
  }
  return std::clamp(total, 0.0, kLog2);
}

double exact_jsinfo(const JointTable& j) { return exact_jsinfo(cells_of(j)); }

Eigen::MatrixXd exact_posterior(const JointTable& j) {
  const Eigen::MatrixXd prod = j.product_of_marginals();
  Eigen::MatrixXd q(j.rows(), j.cols());
  for (Eigen::Index c = 0; c < j.cols(); ++c) {
    for (Eigen::Index r = 0; r < j.rows(); ++r) {
      const double s = j(r, c) + prod(r, c);
      q(r, c) = s == 0.0 ? 0.5 : j(r, c) / s;
    }
  }
  return q;
}

double mi_from_posterior(const JointTable& j) {
  const Eigen::MatrixXd q = exact_posterior(j);
  double total = 0.0;
  for (Eigen::Index c = 0; c < j.cols(); ++c) {
    for (Eigen::Index r = 0; r < j.rows(); ++r) {
      const double p = j(r, c);
      if (p == 0.0) continue;
      if (q(r, c) == 1.0) return kInfinity;
      total += p * logit(q(r, c));
    }
  }
  return total;
}

CeIdentities optimal_ce_and_identities(const JointTable& j) {
  const Eigen::MatrixXd prod = j.product_of_marginals();
  const Eigen::MatrixXd q = exact_posterior(j);
  double h = 0.0;
  for (Eigen::Index c = 0; c < j.cols(); ++c) {
    for (Eigen::Index r = 0; r < j.rows(); ++r) {
      const double m = 0.5 * (j(r, c) + prod(r, c));
      if (m == 0.0) continue;
      h += m * h2(q(r, c));
    }
  }
  return {h, h, kLog2 - h};
}

double expected_cross_entropy(const JointTable& j, const Eigen::MatrixXd& q) {
  if (q.rows() != j.rows() || q.cols() != j.cols()) {
    throw std::invalid_argument("expected_cross_entropy: posterior shape mismatch");
  }
  const Eigen::MatrixXd prod = j.product_of_marginals();
  double total = 0.0;
  for (Eigen::Index c = 0; c < j.cols(); ++c) {
    for (Eigen::Index r = 0; r < j.rows(); ++r) {
      const double p = j(r, c), pp = prod(r, c), qq = q(r, c);
      if (p > 0.0) total -= 0.5 * p * std::log(qq);
      if (pp > 0.0) total -= 0.5 * pp * std::log1p(-qq);
    }
  }
  return total;
}

double posterior_kl_gap(const JointTable& j, const Eigen::MatrixXd& q) {
  if (q.rows() != j.rows() || q.cols() != j.cols()) {
    throw std::invalid_argument("posterior_kl_gap: posterior shape mismatch");
  }
  const Eigen::MatrixXd prod = j.product_of_marginals();
  const Eigen::MatrixXd post = exact_posterior(j);
  double total = 0.0;
  for (Eigen::Index c = 0; c < j.cols(); ++c) {
    for (Eigen::Index r = 0; r < j.rows(); ++r) {
      const double m = 0.5 * (j(r, c) + prod(r, c));
      if (m == 0.0) continue;
      total += m * bernoulli_kl(post(r, c), q(r, c));
    }
  }
  return total;
}

std::vector<TightnessRow> tightness_sweep(std::span<const std::size_t> ks,
                                          std::span<const double> alphas, unsigned workers) {
  if (ks.empty() || alphas.empty()) {
    throw std::invalid_argument("tightness_sweep: ks and alphas must be non-empty");
  }
  std::vector<TightnessRow> rows(ks.size() * alphas.size());
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, ks.size()));

  auto fill = [&](std::size_t ki) {
    for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
      const auto cells = alpha_family_cells(ks[ki], alphas[ai]);
      TightnessRow& row = rows[ki * alphas.size() + ai];
      row.k = ks[ki];
      row.alpha = alphas[ai];
      row.mi = exact_mi(cells);
      row.jsinfo = exact_jsinfo(cells);
      row.bound = xi(row.jsinfo);
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t ki = w; ki < ks.size(); ki += workers) fill(ki);
      });
    }
  }
  return rows;
}

}  // namespace jsdmi
