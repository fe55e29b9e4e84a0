#pragma once

// Exact information quantities for finite joint distributions.
//
// A joint table p(u, v) is compared with the product of its marginals
// p(u) p(v). Under the balanced mixture with a fair label Z (Z = 1 for joint
// draws), the Bayes posterior is p(z = 1 | u, v) = p / (p + p_u p_v), and
//
//   I(U;V)    = E_p[ logit p(z = 1 | u, v) ]
//   I_JS(U;V) = log 2 - H(Z | U, V).
//
// The functions below compute each side exactly so those identities, and the
// bound Xi(I_JS) <= I, can be checked to rounding precision.

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <vector>

namespace jsdmi {

inline constexpr double kProbabilitySumTolerance = 1e-12;

/// Categorical distribution; entries >= 0 summing to 1 within 1e-12.
class ProbVector {
 public:
  explicit ProbVector(std::vector<double> probs);
  static ProbVector uniform(std::size_t k);

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  const std::vector<double>& values() const noexcept { return probs_; }

 private:
  std::vector<double> probs_;
};

/// k_u x k_v joint probability table; nonnegative, total mass 1 within 1e-12.
class JointTable {
 public:
  explicit JointTable(Eigen::MatrixXd table);

  const Eigen::MatrixXd& matrix() const noexcept { return table_; }
  Eigen::Index rows() const noexcept { return table_.rows(); }
  Eigen::Index cols() const noexcept { return table_.cols(); }
  double operator()(Eigen::Index u, Eigen::Index v) const { return table_(u, v); }

  ProbVector marginal_u() const;
  ProbVector marginal_v() const;
  /// p(u) p(v) as a matrix.
  Eigen::MatrixXd product_of_marginals() const;

 private:
  Eigen::MatrixXd table_;
};

/// A group of `count` cells sharing the same joint and product mass. Tables
/// with repeated structure (the alpha family has two distinct cell values)
/// are summarized this way so large k stays cheap.
struct CellClass {
  double count = 1.0;
  double joint = 0.0;
  double product = 0.0;
};

/// (1 - alpha) P_U (x) P_V + alpha diag(P_U) with uniform P_U = P_V over k.
JointTable make_alpha_family(std::size_t k, double alpha);
/// The same family as two cell classes (diagonal, off-diagonal).
std::vector<CellClass> alpha_family_cells(std::size_t k, double alpha);

std::vector<CellClass> cells_of(const JointTable& j);

/// KL(p_UV || p_U p_V). +inf if some joint cell is positive where the product is zero.
double exact_mi(const JointTable& j);
double exact_mi(std::span<const CellClass> cells);

/// JSD(p_UV || p_U p_V), in [0, log 2].
double exact_jsinfo(const JointTable& j);
double exact_jsinfo(std::span<const CellClass> cells);

/// Cellwise p / (p + p_u p_v). Cells where both masses vanish carry no
/// information and are set to 1/2.
Eigen::MatrixXd exact_posterior(const JointTable& j);

/// E_p[logit(posterior)], skipping zero-mass joint cells.
double mi_from_posterior(const JointTable& j);

struct CeIdentities {
  double l_ce_star = 0.0;     // cross-entropy of the Bayes discriminator
  double h_z_given_uv = 0.0;  // H(Z | U, V) under the balanced mixture
  double i_js = 0.0;          // log 2 - H(Z | U, V)
};

CeIdentities optimal_ce_and_identities(const JointTable& j);

/// Expected cross-entropy of an arbitrary discriminator posterior q(z=1|u,v)
/// under the balanced mixture: 1/2 E_p[-log q] + 1/2 E_{p_u p_v}[-log(1 - q)].
double expected_cross_entropy(const JointTable& j, const Eigen::MatrixXd& q);

/// delta = E_m[ KL(p(z|u,v) || q(z|u,v)) ], the excess of the cross-entropy
/// over H(Z | U, V).
double posterior_kl_gap(const JointTable& j, const Eigen::MatrixXd& q);

struct TightnessRow {
  std::size_t k = 0;
  double alpha = 0.0;
  double mi = 0.0;
  double jsinfo = 0.0;
  double bound = 0.0;  // xi(jsinfo)
};

/// Rows in (k, alpha) order. Work is spread over `workers` threads
/// (0 = hardware concurrency); output order is fixed.
std::vector<TightnessRow> tightness_sweep(std::span<const std::size_t> ks,
                                          std::span<const double> alphas, unsigned workers = 1);

}  // namespace jsdmi
