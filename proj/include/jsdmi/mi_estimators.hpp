#pragma once

// Mutual-information objectives computed from discriminator scores under the
// joint architecture: a batch of b samples gives b^2 pairs (u_i, v_j); the
// diagonal pairs are joint draws and the b(b-1) off-diagonal pairs stand in
// for the product of marginals.

#include <Eigen/Core>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "jsdmi/neural_net.hpp"
#include "jsdmi/synth_data.hpp"

namespace jsdmi {

enum class Estimator { jsd_lb, mine, nwj, cpc, smile, two_step };

std::string_view to_string(Estimator e);
Estimator parse_estimator(std::string_view name);

/// The objective whose loss drives training for an estimator. SMILE and the
/// two-step estimator are read off a discriminator trained with jsd_lb.
Estimator training_objective(Estimator e);

/// b x b score matrix with (i, j) = T(u_i, v_j).
class PairedScores {
 public:
  explicit PairedScores(Eigen::MatrixXd all);
  /// Builds the matrix from b joint scores and b(b-1) marginal scores listed
  /// row by row, skipping the diagonal.
  static PairedScores from_split(const Eigen::VectorXd& joint, const Eigen::VectorXd& marginal);

  Eigen::Index batch_size() const noexcept { return all_.rows(); }
  const Eigen::MatrixXd& all() const noexcept { return all_; }
  Eigen::VectorXd joint_scores() const;
  Eigen::VectorXd marginal_scores() const;
  Eigen::Index joint_count() const noexcept { return all_.rows(); }
  Eigen::Index marginal_count() const noexcept { return all_.rows() * (all_.rows() - 1); }

 private:
  Eigen::MatrixXd all_;
};

/// Objective value with its gradient with respect to every score.
struct ScoredObjective {
  double value = 0.0;
  Eigen::MatrixXd grad;  // b x b
};

/// Scores of all b^2 pairs of a batch. Requires b >= 2.
PairedScores split_pairs(const SampleBatch& batch, const DiscriminatorNet& net);

/// L_CE = 1/2 mean_joint softplus(-s) + 1/2 mean_marg softplus(s).
ScoredObjective ce_loss(const PairedScores& s);

struct JsdLowerReport {
  double jsd_lower = 0.0;  // max(0, log 2 - L_CE)
  double i_ce = 0.0;       // xi(jsd_lower)
  bool clamped = false;
};

JsdLowerReport jsd_lb_report(double l_ce);

/// Donsker-Varadhan: mean_joint s - log mean_marg exp(s).
ScoredObjective mine_objective(const PairedScores& s);
/// mean_joint s - mean_marg exp(s - 1).
ScoredObjective nwj_objective(const PairedScores& s);
/// mean_i [ s_ii - log mean_j exp(s_ij) ]; never exceeds log b.
ScoredObjective cpc_objective(const PairedScores& s);
/// mean_joint s - log mean_marg clip(exp(s), e^-tau, e^tau).
ScoredObjective smile_objective(const PairedScores& s, double tau);

inline constexpr double kTwoStepEpsilon = 1e-6;
inline constexpr double kDefaultSmileTau = 1.0;

/// mean_joint logit(clamp(sigmoid(s), eps, 1 - eps)).
double two_step_estimate(const PairedScores& s, double eps = kTwoStepEpsilon);
/// Weighted form sum_i w_i logit(clamp(sigmoid(s_i))) / sum_i w_i for exact
/// expectations; entries with zero weight are skipped.
double two_step_estimate(const Eigen::VectorXd& joint_scores, const Eigen::VectorXd& weights,
                         double eps = kTwoStepEpsilon);

/// Value and score gradient of the training loss for a trainable objective:
/// L_CE for jsd_lb, the negated bound for mine, nwj and cpc.
ScoredObjective training_loss(const PairedScores& s, Estimator objective,
                              double smile_tau = kDefaultSmileTau);

struct StepEstimate {
  Estimator estimator = Estimator::jsd_lb;
  double objective = 0.0;    // the trained lower-bound value
  double mi_estimate = 0.0;  // the reported MI number
  bool diverged = false;
};

struct StepResult {
  double loss = 0.0;
  bool diverged = false;
  std::vector<StepEstimate> estimates;
};

struct TrainOptions {
  Estimator objective = Estimator::jsd_lb;
  /// Estimators to report. Must all share `objective` as training objective.
  std::vector<Estimator> report;
  double smile_tau = kDefaultSmileTau;
};

/// Buffers reused by train_step across iterations.
struct TrainWorkspace {
  PairwiseCache cache;
  BackwardWorkspace backward;
  MlpParams grads;
  MlpParams backup;
  AdamState state_backup;
};

/// Scores the batch, reports the requested estimates for the current
/// parameters, backpropagates the loss and applies one Adam step. A
/// non-finite loss or parameter marks the step as diverged and leaves the
/// network untouched.
StepResult train_step(DiscriminatorNet& net, AdamState& state, const SampleBatch& batch,
                      const TrainOptions& options);
StepResult train_step(DiscriminatorNet& net, AdamState& state, const SampleBatch& batch,
                      const TrainOptions& options, TrainWorkspace& ws);

}  // namespace jsdmi
