#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "jsdmi/mi_estimators.hpp"
#include "jsdmi/scalar_bound.hpp"

using namespace jsdmi;

namespace {

Eigen::MatrixXd saturated(Eigen::Index b, double joint, double marginal) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(b, b, marginal);
  m.diagonal().setConstant(joint);
  return m;
}

Eigen::MatrixXd random_scores(Rng& rng, Eigen::Index b, double scale) {
  Eigen::MatrixXd m(b, b);
  for (Eigen::Index i = 0; i < b; ++i) {
    for (Eigen::Index j = 0; j < b; ++j) m(i, j) = scale * rng.normal();
  }
  return m;
}

// Central differences of an objective with respect to each score.
template <class F>
void expect_gradient(const Eigen::MatrixXd& scores, F objective, double tol) {
  const ScoredObjective o = objective(PairedScores(scores));
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
      Eigen::MatrixXd up = scores, down = scores;
      up(i, j) += h;
      down(i, j) -= h;
      const double fd = (objective(PairedScores(up)).value - objective(PairedScores(down)).value) / (2 * h);
      EXPECT_NEAR(o.grad(i, j), fd, tol) << i << "," << j;
    }
  }
}

SampleBatch small_batch(std::size_t b, std::size_t d, std::uint64_t seed) {
  Rng rng(seed, 1);
  return sample_joint({d, rho_for_mi(2.0, d), Transform::identity}, b, rng);
}

}  // namespace

TEST(EstimatorNames, RoundTripAndObjectives) {
  for (Estimator e : {Estimator::jsd_lb, Estimator::mine, Estimator::nwj, Estimator::cpc,
                      Estimator::smile, Estimator::two_step}) {
    EXPECT_EQ(parse_estimator(to_string(e)), e);
  }
  EXPECT_THROW(parse_estimator("infonce"), std::invalid_argument);
  EXPECT_EQ(training_objective(Estimator::smile), Estimator::jsd_lb);
  EXPECT_EQ(training_objective(Estimator::two_step), Estimator::jsd_lb);
  EXPECT_EQ(training_objective(Estimator::mine), Estimator::mine);
  EXPECT_EQ(training_objective(Estimator::cpc), Estimator::cpc);
}

TEST(PairedScores, SplitRoundTrip) {
  Eigen::MatrixXd m(3, 3);
  m << 1, 2, 3, 4, 5, 6, 7, 8, 9;
  const PairedScores s(m);
  EXPECT_EQ(s.joint_scores(), Eigen::Vector3d(1, 5, 9));
  Eigen::VectorXd marg(6);
  marg << 2, 3, 4, 6, 7, 8;
  EXPECT_EQ(s.marginal_scores(), marg);
  EXPECT_EQ(s.marginal_count(), 6);
  EXPECT_EQ(PairedScores::from_split(s.joint_scores(), marg).all(), m);
  EXPECT_THROW(PairedScores(Eigen::MatrixXd(1, 1)), std::invalid_argument);
  EXPECT_THROW(PairedScores(Eigen::MatrixXd(2, 3)), std::invalid_argument);
}

TEST(CeLoss, KnownValues) {
  EXPECT_NEAR(ce_loss(PairedScores(Eigen::MatrixXd::Zero(4, 4))).value, kLog2, 1e-15);
  EXPECT_NEAR(ce_loss(PairedScores(saturated(8, 20.0, -20.0))).value, 2.0611536203143807e-9, 1e-22);
}

TEST(CeLoss, GradientMatchesFiniteDifferences) {
  Rng rng(1);
  expect_gradient(random_scores(rng, 5, 2.0), [](const PairedScores& s) { return ce_loss(s); }, 1e-8);
}

TEST(JsdLbReport, ClampsAndMapsThroughXi) {
  const JsdLowerReport zero = jsd_lb_report(kLog2);
  EXPECT_EQ(zero.jsd_lower, 0.0);
  EXPECT_EQ(zero.i_ce, 0.0);
  EXPECT_FALSE(zero.clamped);
  const JsdLowerReport above = jsd_lb_report(1.0);
  EXPECT_EQ(above.i_ce, 0.0);
  EXPECT_TRUE(above.clamped);
  const JsdLowerReport mid = jsd_lb_report(kLog2 - 0.29495534894279933);
  EXPECT_NEAR(mid.i_ce, 1.0, 1e-9);
  // A nearly perfect classifier still reports a finite, large value.
  const JsdLowerReport sharp = jsd_lb_report(2.0611536203143807e-9);
  EXPECT_TRUE(std::isfinite(sharp.i_ce));
  EXPECT_GT(sharp.i_ce, 15.0);
  EXPECT_GT(sharp.i_ce, jsd_lb_report(1e-6).i_ce);
  EXPECT_THROW(jsd_lb_report(-1.0), std::domain_error);
}

TEST(Mine, KnownValuesAndGradient) {
  EXPECT_NEAR(mine_objective(PairedScores(Eigen::MatrixXd::Zero(5, 5))).value, 0.0, 1e-15);
  EXPECT_NEAR(mine_objective(PairedScores(saturated(4, 3.0, 1.0))).value, 2.0, 1e-14);
  Rng rng(2);
  expect_gradient(random_scores(rng, 4, 1.5), [](const PairedScores& s) { return mine_objective(s); },
                  1e-8);
}

TEST(Nwj, KnownValuesAndGradient) {
  EXPECT_NEAR(nwj_objective(PairedScores(Eigen::MatrixXd::Constant(3, 3, 1.0))).value, 0.0, 1e-15);
  EXPECT_NEAR(nwj_objective(PairedScores(saturated(4, 3.0, 1.0))).value, 2.0, 1e-15);
  Rng rng(3);
  expect_gradient(random_scores(rng, 4, 1.5), [](const PairedScores& s) { return nwj_objective(s); },
                  1e-8);
}

TEST(Nwj, NeverExceedsMine) {
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const PairedScores s(random_scores(rng, 6, 3.0));
    EXPECT_LE(nwj_objective(s).value, mine_objective(s).value + 1e-12);
  }
}

TEST(Cpc, CappedAtLogB) {
  EXPECT_NEAR(cpc_objective(PairedScores(saturated(64, 50.0, -50.0))).value, 4.1588830833596719,
              1e-12);
  EXPECT_NEAR(cpc_objective(PairedScores(Eigen::MatrixXd::Zero(7, 7))).value, 0.0, 1e-15);
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    EXPECT_LE(cpc_objective(PairedScores(random_scores(rng, 8, 10.0))).value, std::log(8.0) + 1e-12);
  }
  expect_gradient(random_scores(rng, 4, 1.5), [](const PairedScores& s) { return cpc_objective(s); },
                  1e-8);
}

TEST(Smile, LimitsInTau) {
  Rng rng(6);
  for (int i = 0; i < 50; ++i) {
    const PairedScores s(random_scores(rng, 5, 2.0));
    EXPECT_NEAR(smile_objective(s, 1000.0).value, mine_objective(s).value, 1e-12);
    EXPECT_NEAR(smile_objective(s, 0.0).value, s.joint_scores().mean(), 1e-12);
  }
  EXPECT_THROW(smile_objective(PairedScores(Eigen::MatrixXd::Zero(2, 2)), -1.0), std::domain_error);
  expect_gradient(random_scores(rng, 4, 0.4),
                  [](const PairedScores& s) { return smile_objective(s, 1.0); }, 1e-8);
}

TEST(TwoStep, ClampsAtEpsilon) {
  const double cap = std::log((1.0 - kTwoStepEpsilon) / kTwoStepEpsilon);
  EXPECT_NEAR(two_step_estimate(PairedScores(saturated(3, 100.0, 0.0))), cap, 1e-9);
  EXPECT_NEAR(two_step_estimate(PairedScores(saturated(3, -100.0, 0.0))), -cap, 1e-9);
  EXPECT_NEAR(two_step_estimate(PairedScores(saturated(3, 1.5, 9.0))), 1.5, 1e-12);
  const Eigen::Vector3d joint(1.0, 2.0, 50.0);
  EXPECT_NEAR(two_step_estimate(joint, Eigen::Vector3d(1.0, 3.0, 0.0)), 1.75, 1e-12);
  EXPECT_THROW(two_step_estimate(joint, Eigen::Vector2d(1.0, 1.0)), std::invalid_argument);
  EXPECT_THROW(two_step_estimate(joint, Eigen::Vector3d::Ones(), 0.5), std::domain_error);
}

TEST(TrainingLoss, SignsAndTwoStepRejected) {
  Rng rng(7);
  const PairedScores s(random_scores(rng, 4, 1.0));
  EXPECT_EQ(training_loss(s, Estimator::jsd_lb).value, ce_loss(s).value);
  EXPECT_EQ(training_loss(s, Estimator::mine).value, -mine_objective(s).value);
  EXPECT_EQ(training_loss(s, Estimator::cpc).grad, -cpc_objective(s).grad);
  EXPECT_THROW(training_loss(s, Estimator::two_step), std::invalid_argument);
}

TEST(TrainStep, ReportsAndUpdates) {
  Rng rng(8);
  DiscriminatorNet net = init_discriminator(2, rng, 16);
  const DiscriminatorNet before = net;
  AdamState state = AdamState::for_params(net.params);
  const SampleBatch batch = small_batch(8, 2, 1);
  const TrainOptions opts{Estimator::jsd_lb, {Estimator::jsd_lb, Estimator::smile, Estimator::two_step}};
  const StepResult r = train_step(net, state, batch, opts);
  EXPECT_FALSE(r.diverged);
  ASSERT_EQ(r.estimates.size(), 3u);
  const PairedScores s = split_pairs(batch, before);
  EXPECT_NEAR(r.loss, ce_loss(s).value, 1e-14);
  EXPECT_NEAR(r.estimates[0].mi_estimate, jsd_lb_report(r.loss).i_ce, 1e-14);
  EXPECT_NEAR(r.estimates[1].mi_estimate, smile_objective(s, kDefaultSmileTau).value, 1e-14);
  EXPECT_NEAR(r.estimates[2].mi_estimate, two_step_estimate(s), 1e-14);
  EXPECT_EQ(state.step, 1u);
  EXPECT_NE(net.params.w1, before.params.w1);
}

TEST(TrainStep, LearnsOnEasyTask) {
  Rng rng(9);
  DiscriminatorNet net = init_discriminator(1, rng, 32);
  AdamState state = AdamState::for_params(net.params);
  TrainWorkspace ws;
  const TrainOptions opts{Estimator::jsd_lb, {Estimator::jsd_lb}};
  Rng data(9, 1);
  const GaussianTaskSpec spec{1, rho_for_mi(1.0, 1), Transform::identity};
  double first = 0.0, last = 0.0;
  for (int it = 0; it < 400; ++it) {
    const StepResult r = train_step(net, state, sample_joint(spec, 32, data), opts, ws);
    if (it < 20) first += r.loss / 20;
    if (it >= 380) last += r.loss / 20;
  }
  EXPECT_LT(last, first);
  EXPECT_LT(last, kLog2);
}

TEST(TrainStep, DivergenceLeavesNetworkUntouched) {
  Rng rng(10);
  DiscriminatorNet net = init_discriminator(2, rng, 8);
  net.params.b3(0) = 1000.0;  // exp(s - 1) overflows in the NWJ partition term
  const DiscriminatorNet before = net;
  AdamState state = AdamState::for_params(net.params);
  const StepResult r = train_step(net, state, small_batch(6, 2, 2), {Estimator::nwj, {Estimator::nwj}});
  EXPECT_TRUE(r.diverged);
  ASSERT_EQ(r.estimates.size(), 1u);
  EXPECT_TRUE(r.estimates[0].diverged);
  EXPECT_TRUE(std::isnan(r.estimates[0].mi_estimate));
  EXPECT_EQ(net.params.b3, before.params.b3);
  EXPECT_EQ(net.params.w1, before.params.w1);
  EXPECT_EQ(state.step, 0u);
}

TEST(TrainStep, RejectsMismatchedInputs) {
  Rng rng(11);
  DiscriminatorNet net = init_discriminator(2, rng, 8);
  AdamState state = AdamState::for_params(net.params);
  EXPECT_THROW(train_step(net, state, small_batch(6, 3, 1), {Estimator::jsd_lb, {}}),
               std::invalid_argument);
  EXPECT_THROW(train_step(net, state, small_batch(1, 2, 1), {Estimator::jsd_lb, {}}),
               std::invalid_argument);
  EXPECT_THROW(train_step(net, state, small_batch(6, 2, 1), {Estimator::mine, {Estimator::two_step}}),
               std::invalid_argument);
}
