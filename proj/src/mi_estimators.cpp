#include "jsdmi/mi_estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "jsdmi/scalar_bound.hpp"

namespace jsdmi {

namespace {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log sum exp over the off-diagonal entries of m.
double offdiag_logsumexp(const Eigen::MatrixXd& m) {
  const Eigen::Index b = m.rows();
  double peak = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < b; ++j) {
    for (Eigen::Index i = 0; i < b; ++i) {
      if (i != j) peak = std::max(peak, m(i, j));
    }
  }
  if (!std::isfinite(peak)) return peak;
  double sum = 0.0;
  for (Eigen::Index j = 0; j < b; ++j) {
    for (Eigen::Index i = 0; i < b; ++i) {
      if (i != j) sum += std::exp(m(i, j) - peak);
    }
  }
  return peak + std::log(sum);
}

double mean_joint(const PairedScores& s) { return s.all().diagonal().mean(); }

}  // namespace

std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::jsd_lb: return "jsd_lb";
    case Estimator::mine: return "mine";
    case Estimator::nwj: return "nwj";
    case Estimator::cpc: return "cpc";
    case Estimator::smile: return "smile";
    case Estimator::two_step: return "two_step";
  }
  return "jsd_lb";
}

Estimator parse_estimator(std::string_view name) {
  for (Estimator e : {Estimator::jsd_lb, Estimator::mine, Estimator::nwj, Estimator::cpc,
                      Estimator::smile, Estimator::two_step}) {
    if (name == to_string(e)) return e;
  }
  throw std::invalid_argument("unknown estimator '" + std::string(name) + "'");
}

Estimator training_objective(Estimator e) {
  switch (e) {
    case Estimator::smile:
    case Estimator::two_step: return Estimator::jsd_lb;
    default: return e;
  }
}

PairedScores::PairedScores(Eigen::MatrixXd all) : all_(std::move(all)) {
  if (all_.rows() != all_.cols()) throw std::invalid_argument("PairedScores: matrix must be square");
  if (all_.rows() < 2) throw std::invalid_argument("PairedScores: batch size must be >= 2");
}

PairedScores PairedScores::from_split(const Eigen::VectorXd& joint,
                                      const Eigen::VectorXd& marginal) {
  const Eigen::Index b = joint.size();
  if (b < 2 || marginal.size() != b * (b - 1)) {
    throw std::invalid_argument("PairedScores: need b >= 2 joint and b(b-1) marginal scores");
  }
  Eigen::MatrixXd all(b, b);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < b; ++i) {
    for (Eigen::Index j = 0; j < b; ++j) all(i, j) = i == j ? joint(i) : marginal(k++);
  }
  return PairedScores(std::move(all));
}

Eigen::VectorXd PairedScores::joint_scores() const { return all_.diagonal(); }

Eigen::VectorXd PairedScores::marginal_scores() const {
  const Eigen::Index b = all_.rows();
  Eigen::VectorXd out(b * (b - 1));
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < b; ++i) {
    for (Eigen::Index j = 0; j < b; ++j) {
      if (i != j) out(k++) = all_(i, j);
    }
  }
  return out;
}

PairedScores split_pairs(const SampleBatch& batch, const DiscriminatorNet& net) {
  if (batch.size() < 2) throw std::invalid_argument("split_pairs: batch size must be >= 2");
  return PairedScores(forward_all_pairs(net, batch.u, batch.v).scores);
}

ScoredObjective ce_loss(const PairedScores& s) {
  const Eigen::Index b = s.batch_size();
  const double nj = static_cast<double>(s.joint_count());
  const double nm = static_cast<double>(s.marginal_count());
  ScoredObjective out{0.0, Eigen::MatrixXd(b, b)};
  double joint_sum = 0.0, marg_sum = 0.0;
  for (Eigen::Index j = 0; j < b; ++j) {
    for (Eigen::Index i = 0; i < b; ++i) {
      const double x = s.all()(i, j);
      if (i == j) {
        joint_sum += softplus(-x);
        out.grad(i, j) = -0.5 * sigmoid(-x) / nj;
      } else {
        marg_sum += softplus(x);
        out.grad(i, j) = 0.5 * sigmoid(x) / nm;
      }
    }
  }
  out.value = 0.5 * joint_sum / nj + 0.5 * marg_sum / nm;
  return out;
}

JsdLowerReport jsd_lb_report(double l_ce) {
  if (!(l_ce >= 0.0)) throw std::domain_error("jsd_lb_report: cross-entropy must be >= 0");
  JsdLowerReport r;
  if (l_ce >= kLog2) {
    r.clamped = l_ce > kLog2;
    return r;
  }
  r.jsd_lower = kLog2 - l_ce;
  // The complement l_ce is known exactly, so evaluate xi from it directly.
  r.i_ce = xi_from_complement(l_ce);
  return r;
}

ScoredObjective mine_objective(const PairedScores& s) {
  const Eigen::Index b = s.batch_size();
  const double nm = static_cast<double>(s.marginal_count());
  const double lse = offdiag_logsumexp(s.all());
  ScoredObjective out{mean_joint(s) - (lse - std::log(nm)), Eigen::MatrixXd(b, b)};
  for (Eigen::Index j = 0; j < b; ++j) {
    for (Eigen::Index i = 0; i < b; ++i) {
      out.grad(i, j) = i == j ? 1.0 / static_cast<double>(b) : -std::exp(s.all()(i, j) - lse);
    }
  }
  return out;
}

ScoredObjective nwj_objective(const PairedScores& s) {
  const Eigen::Index b = s.batch_size();
  const double nm = static_cast<double>(s.marginal_count());
  ScoredObjective out{0.0, Eigen::MatrixXd(b, b)};
  double partition = 0.0;
  for (Eigen::Index j = 0; j < b; ++j) {
    for (Eigen::Index i = 0; i < b; ++i) {
      if (i == j) {
        out.grad(i, j) = 1.0 / static_cast<double>(b);
      } else {
        const double e = std::exp(s.all()(i, j) - 1.0);
        partition += e;
        out.grad(i, j) = -e / nm;
      }
    }
  }
  out.value = mean_joint(s) - partition / nm;
  return out;
}

ScoredObjective cpc_objective(const PairedScores& s) {
  const Eigen::Index b = s.batch_size();
  const double bd = static_cast<double>(b);
  ScoredObjective out{0.0, Eigen::MatrixXd(b, b)};
  double total = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto row = s.all().row(i);
    const double peak = row.maxCoeff();
    const double lse = peak + std::log((row.array() - peak).exp().sum());
    total += row(i) - (lse - std::log(bd));
    for (Eigen::Index j = 0; j < b; ++j) {
      const double softmax = std::exp(row(j) - lse);
      out.grad(i, j) = ((i == j ? 1.0 : 0.0) - softmax) / bd;
    }
  }
  out.value = total / bd;
  return out;
}

ScoredObjective smile_objective(const PairedScores& s, double tau) {
  if (!(tau >= 0.0)) throw std::domain_error("smile: tau must be >= 0");
  const Eigen::Index b = s.batch_size();
  const double nm = static_cast<double>(s.marginal_count());
  const Eigen::MatrixXd clipped = s.all().cwiseMax(-tau).cwiseMin(tau);
  const double lse = offdiag_logsumexp(clipped);
  ScoredObjective out{mean_joint(s) - (lse - std::log(nm)), Eigen::MatrixXd(b, b)};
  for (Eigen::Index j = 0; j < b; ++j) {
    for (Eigen::Index i = 0; i < b; ++i) {
      if (i == j) {
        out.grad(i, j) = 1.0 / static_cast<double>(b);
      } else {
        const double x = s.all()(i, j);
        const bool inside = x > -tau && x < tau;
        out.grad(i, j) = inside ? -std::exp(clipped(i, j) - lse) : 0.0;
      }
    }
  }
  return out;
}

double two_step_estimate(const PairedScores& s, double eps) {
  const Eigen::VectorXd joint = s.joint_scores();
  return two_step_estimate(joint, Eigen::VectorXd::Ones(joint.size()), eps);
}

double two_step_estimate(const Eigen::VectorXd& joint_scores, const Eigen::VectorXd& weights,
                         double eps) {
  if (joint_scores.size() != weights.size() || joint_scores.size() == 0) {
    throw std::invalid_argument("two_step_estimate: scores and weights must match and be non-empty");
  }
  if (!(eps > 0.0 && eps < 0.5)) throw std::domain_error("two_step_estimate: eps must be in (0, 1/2)");
  const double hi = logit(1.0 - eps);
  const double lo = logit(eps);
  double total = 0.0, mass = 0.0;
  for (Eigen::Index i = 0; i < joint_scores.size(); ++i) {
    if (weights(i) == 0.0) continue;
    total += weights(i) * std::clamp(joint_scores(i), lo, hi);
    mass += weights(i);
  }
  return total / mass;
}

ScoredObjective training_loss(const PairedScores& s, Estimator objective, double smile_tau) {
  switch (objective) {
    case Estimator::jsd_lb: return ce_loss(s);
    case Estimator::mine:
    case Estimator::nwj:
    case Estimator::cpc:
    case Estimator::smile: {
      ScoredObjective o = objective == Estimator::mine  ? mine_objective(s)
                          : objective == Estimator::nwj ? nwj_objective(s)
                          : objective == Estimator::cpc ? cpc_objective(s)
                                                        : smile_objective(s, smile_tau);
      o.value = -o.value;
      o.grad = -o.grad;
      return o;
    }
    case Estimator::two_step: break;
  }
  throw std::invalid_argument("two_step is not a trainable objective");
}

StepResult train_step(DiscriminatorNet& net, AdamState& state, const SampleBatch& batch,
                      const TrainOptions& options) {
  TrainWorkspace ws;
  return train_step(net, state, batch, options, ws);
}

StepResult train_step(DiscriminatorNet& net, AdamState& state, const SampleBatch& batch,
                      const TrainOptions& options, TrainWorkspace& ws) {
  if (batch.size() < 2) throw std::invalid_argument("train_step: batch size must be >= 2");
  if (static_cast<std::size_t>(2 * batch.dim()) != net.input_dim()) {
    throw std::invalid_argument("train_step: batch dimension does not match the network");
  }
  for (Estimator e : options.report) {
    if (training_objective(e) != options.objective) {
      throw std::invalid_argument("train_step: estimator '" + std::string(to_string(e)) +
                                  "' is not produced by objective '" +
                                  std::string(to_string(options.objective)) + "'");
    }
  }

  forward_all_pairs(net, batch.u, batch.v, ws.cache);
  const PairedScores scores(ws.cache.scores);
  const ScoredObjective loss = training_loss(scores, options.objective, options.smile_tau);

  StepResult result;
  result.loss = loss.value;
  result.diverged = !std::isfinite(loss.value) || !loss.grad.allFinite();

  for (Estimator e : options.report) {
    StepEstimate est{e, 0.0, 0.0, result.diverged};
    if (!result.diverged) {
      if (options.objective == Estimator::jsd_lb) {
        const JsdLowerReport r = jsd_lb_report(loss.value);
        est.objective = r.jsd_lower;
        est.mi_estimate = e == Estimator::jsd_lb     ? r.i_ce
                          : e == Estimator::two_step ? two_step_estimate(scores)
                                                     : smile_objective(scores, options.smile_tau).value;
      } else {
        est.objective = -loss.value;
        est.mi_estimate = -loss.value;
      }
    } else {
      est.objective = est.mi_estimate = std::numeric_limits<double>::quiet_NaN();
    }
    result.estimates.push_back(est);
  }
  if (result.diverged) return result;

  backward_all_pairs(net, ws.cache, loss.grad, ws.grads, ws.backward);
  const MlpParams& grads = ws.grads;
  if (!grads.all_finite()) {
    result.diverged = true;
    for (auto& e : result.estimates) e.diverged = true;
    return result;
  }
  ws.backup = net.params;
  ws.state_backup = state;
  adam_step(net.params, grads, state);
  if (!net.params.all_finite()) {
    net.params = ws.backup;
    state = ws.state_backup;
    result.diverged = true;
    for (auto& e : result.estimates) e.diverged = true;
  }
  return result;
}

}  // namespace jsdmi
