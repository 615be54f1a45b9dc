#include "bseot/ekf.hpp"
#include "bseot/sim.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>
#include <random>

using namespace bseot;

namespace {

using S = ObjectState;

Eigen::MatrixXd init_covariance(Eigen::Index dim) {
  Eigen::VectorXd var = Eigen::VectorXd::Constant(dim, 0.25);
  var(S::kX) = var(S::kY) = var(S::kZ) = 1.0;
  var(S::kSpeed) = 4.0;
  var(S::kHeading) = 0.01;
  var(S::kTurnRate) = 0.1;
  return var.asDiagonal();
}

ObjectState truth_state() {
  ObjectState s = sedan_shape();
  s.set_position({4.0, -2.0, 0.75});
  s[S::kHeading] = 0.3;
  s[S::kSpeed] = 5.0;
  return s;
}

std::vector<PointMeasurement> surface_points(const ObjectState& s, std::size_t n,
                                             std::uint64_t seed, double noise = 0.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<PointMeasurement> out;
  for (const Vec3& p : sample_surface(s, sedan_model(), n - n / 4, n / 4, seed)) {
    const Vec3 e(g(rng), g(rng), g(rng));
    out.push_back({p + noise * e, Eigen::Matrix3d::Identity() * std::max(noise * noise, 1e-4)});
  }
  return out;
}

// CTRV right-hand side for RK4: (x, y, psi) with constant v and omega
Eigen::Vector3d ctrv_rhs(const Eigen::Vector3d& s, double v, double omega) {
  return {v * std::cos(s(2)), v * std::sin(s(2)), omega};
}

}  // namespace

TEST(Predict, StationaryGrowsCovariance) {
  GaussianEstimate est{sedan_shape(), init_covariance(S::dim_for(10)) * 0.01, 0.0};
  const auto out = predict(est, 0.5, ProcessNoiseConfig{});
  EXPECT_EQ(out.mean.position(), est.mean.position());
  EXPECT_GT(out.covariance.trace(), est.covariance.trace());
  EXPECT_DOUBLE_EQ(out.timestamp, 0.5);
  EXPECT_THROW(predict(est, 0.0, ProcessNoiseConfig{}), std::invalid_argument);
}

TEST(Predict, StraightLineUnitStep) {
  ObjectState s = sedan_shape();
  s[S::kSpeed] = 1.0;
  EXPECT_EQ(ctrv_transition(s, 1.0)[S::kX], 1.0);
  EXPECT_EQ(ctrv_transition(s, 1.0)[S::kY], 0.0);
}

TEST(Predict, MatchesRungeKutta) {
  ObjectState s = sedan_shape();
  s[S::kSpeed] = 1.0;
  s[S::kTurnRate] = 0.1;
  const ObjectState next = ctrv_transition(s, 1.0);
  Eigen::Vector3d y(0.0, 0.0, 0.0);
  const int steps = 1000;
  const double h = 1.0 / steps;
  for (int i = 0; i < steps; ++i) {
    const auto k1 = ctrv_rhs(y, 1.0, 0.1);
    const auto k2 = ctrv_rhs(y + 0.5 * h * k1, 1.0, 0.1);
    const auto k3 = ctrv_rhs(y + 0.5 * h * k2, 1.0, 0.1);
    const auto k4 = ctrv_rhs(y + h * k3, 1.0, 0.1);
    y += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  EXPECT_NEAR(next[S::kX], y(0), 1e-9);
  EXPECT_NEAR(next[S::kY], y(1), 1e-9);
  EXPECT_NEAR(next[S::kHeading], y(2), 1e-12);
}

TEST(Predict, TwoHalfStepsEqualOneStep) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int k = 0; k < 50; ++k) {
    ObjectState s = sedan_shape();
    s.set_position({u(rng), u(rng), u(rng)});
    s[S::kSpeed] = u(rng);
    s[S::kHeading] = u(rng);
    s[S::kVz] = 0.1 * u(rng);
    GaussianEstimate est{s, init_covariance(s.dim()), 0.0};
    const double dt = 0.05 + 0.1 * std::abs(u(rng));
    const auto twice = predict(predict(est, dt, {}), dt, {});
    const auto once = predict(est, 2 * dt, {});
    EXPECT_LT((twice.mean.values() - once.mean.values()).norm(), 1e-12);
  }
}

TEST(Predict, JacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    ObjectState s = sedan_shape();
    s.set_position({5 * u(rng), 5 * u(rng), u(rng)});
    s[S::kSpeed] = 10 * u(rng);
    s[S::kHeading] = 3 * u(rng);
    s[S::kVz] = u(rng);
    // every fifth state sits on the straight-line limit branch
    s[S::kTurnRate] = k % 5 == 0 ? 1e-9 * u(rng) : u(rng);
    const double dt = 0.05 + 0.5 * std::abs(u(rng));
    const Eigen::MatrixXd F = transition_jacobian(s, dt);
    const Eigen::MatrixXd fd = oracle::numeric_jacobian(
        [&](const Eigen::VectorXd& x) {
          Eigen::VectorXd out = ctrv_transition(ObjectState(x), dt).values();
          // undo the heading wrap so the difference quotient stays smooth
          out(S::kHeading) = x(S::kHeading) + x(S::kTurnRate) * dt;
          return out;
        },
        s.values());
    EXPECT_LT(oracle::relative_error(F, fd), 1e-5) << "state " << k;
  }
}

TEST(Update, ExactSurfacePointsLeaveMeanInPlace) {
  const ObjectState truth = truth_state();
  const GaussianEstimate prior{truth, init_covariance(truth.dim()) * 0.01, 0.0};
  UpdateOptions options;
  options.anchor_std = 0.0;
  const auto out = update(prior, surface_points(truth, 200, 4), sedan_model(), options);
  EXPECT_EQ(out.accepted, 200u);
  EXPECT_LT((out.estimate.mean.values() - truth.values()).norm(), 1e-6);
  EXPECT_THROW(update(prior, {}, sedan_model()), std::invalid_argument);
}

TEST(Update, TraceDoesNotIncrease) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g(0.0, 0.3);
  for (int k = 0; k < 20; ++k) {
    ObjectState prior_mean = truth_state();
    prior_mean[S::kX] += g(rng);
    prior_mean[S::kY] += g(rng);
    const GaussianEstimate prior{prior_mean, init_covariance(prior_mean.dim()), 0.0};
    const auto out = update(prior, surface_points(truth_state(), 60, 10 + k, 0.05), sedan_model());
    EXPECT_LE(out.estimate.covariance.trace(), prior.covariance.trace() + 1e-9);
  }
}

TEST(Update, ConvergesFromHalfMetreOffset) {
  const ObjectState truth = truth_state();
  ObjectState mean = truth;
  mean[S::kX] += 0.5;
  GaussianEstimate est{mean, init_covariance(mean.dim()), 0.0};
  const auto points = surface_points(truth, 200, 21);
  for (int k = 0; k < 5; ++k) est = update(est, points, sedan_model()).estimate;
  EXPECT_LT((est.mean.position() - truth.position()).head<2>().norm(), 0.05);
}

TEST(Update, CovariancePsdOverManyCycles) {
  const ProcessNoiseConfig noise;
  ObjectState truth = truth_state();
  truth[S::kTurnRate] = 0.2;
  GaussianEstimate est{truth, init_covariance(truth.dim()), 0.0};
  for (int k = 0; k < 1000; ++k) {
    truth = ctrv_transition(truth, 0.1);
    est = predict(est, 0.1, noise);
    est = update(est, surface_points(truth, 12, 1000 + k, 0.03), sedan_model()).estimate;
    ASSERT_TRUE(is_psd(est.covariance)) << "cycle " << k;
    ASSERT_LE((est.covariance - est.covariance.transpose()).norm(), 1e-12);
  }
}

TEST(Update, OrderInvariance) {
  const ObjectState truth = truth_state();
  ObjectState mean = truth;
  mean[S::kX] += 0.02;
  mean[S::kY] -= 0.012;
  // well conditioned: tight prior near the truth and near-exact points
  const GaussianEstimate prior{mean, init_covariance(mean.dim()) * 0.01, 0.0};
  auto points = surface_points(truth, 100, 30, 0.001);
  const auto reference = update(prior, points, sedan_model()).estimate.mean.values();
  std::mt19937_64 rng(2);
  for (int k = 0; k < 5; ++k) {
    std::shuffle(points.begin(), points.end(), rng);
    const auto shuffled = update(prior, points, sedan_model()).estimate.mean.values();
    EXPECT_LT((shuffled - reference).norm(), 1e-3);
  }
}

TEST(Update, WidthFloor) {
  const ObjectState truth = truth_state();
  ObjectState mean = truth;
  mean[S::kWidth] = 0.06;
  const GaussianEstimate prior{mean, init_covariance(mean.dim()), 0.0};
  std::vector<PointMeasurement> pinch;
  for (int i = 0; i < 20; ++i) {
    pinch.push_back({to_global(truth, {0.0, 0.0, 0.0}), Eigen::Matrix3d::Identity() * 1e-4});
  }
  const auto out = update(prior, pinch, sedan_model());
  EXPECT_GE(out.estimate.mean.width(), 0.05);
}

TEST(Initialize, BoxPrincipalAxis) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<PointMeasurement> points;
  Vec3 centroid = Vec3::Zero();
  for (int i = 0; i < 600; ++i) {
    // uniform on the faces of a 4 x 2 x 1.5 box
    Vec3 p(4 * u(rng) - 2, 2 * u(rng) - 1, 1.5 * u(rng));
    const int face = i % 6;
    if (face < 2) p.x() = face ? 2.0 : -2.0;
    else if (face < 4) p.y() = face == 3 ? 1.0 : -1.0;
    else p.z() = face == 5 ? 1.5 : 0.0;
    points.push_back({p, Eigen::Matrix3d::Identity() * 1e-3});
    centroid += p;
  }
  centroid /= 600.0;
  const auto est = initialize(points, sedan_model(), InitConfig{});
  ASSERT_TRUE(est.has_value());
  const double psi = est->mean.heading();
  EXPECT_LT(std::min(std::abs(psi), std::abs(std::abs(psi) - std::numbers::pi)), 0.1);
  EXPECT_LT((est->mean.position() - centroid).norm(), 1e-9);
  EXPECT_EQ(est->mean[S::kSpeed], 0.0);
  EXPECT_EQ(est->mean.control_points(), 10u);
  EXPECT_DOUBLE_EQ(est->covariance(S::kX, S::kX), 1.0);
  EXPECT_NEAR(est->covariance(S::kHeading, S::kHeading), std::pow(30.0 * std::numbers::pi / 180, 2), 1e-12);
  EXPECT_DOUBLE_EQ(est->covariance(S::control_x_index(3), S::control_x_index(3)), 0.25);
}

TEST(Initialize, TooFewPointsRefused) {
  std::vector<PointMeasurement> points(3);
  EXPECT_FALSE(initialize(points, sedan_model(), InitConfig{}).has_value());
}

TEST(Initialize, MotionHintResolvesHeading) {
  ObjectState truth = truth_state();
  truth[S::kHeading] = 2.8;
  const auto points = surface_points(truth, 200, 3);
  InitConfig init;
  init.motion_hint = Vec2(6.0 * std::cos(2.8), 6.0 * std::sin(2.8));
  const auto est = initialize(points, sedan_model(), init);
  ASSERT_TRUE(est.has_value());
  EXPECT_LT(std::abs(wrap_angle(est->mean.heading() - 2.8)), 0.1);
  EXPECT_NEAR(est->mean[S::kSpeed], 6.0, 0.6);
}

TEST(Tracker, BirthNeedsTwoFrames) {
  TrackerConfig config{sedan_model(), {}, {}, {}, 1.0};
  Tracker tracker(config);
  ObjectState truth = truth_state();
  const auto first = tracker.step(0.0, surface_points(truth, 100, 1, 0.02));
  EXPECT_FALSE(first.initialized);
  EXPECT_FALSE(tracker.estimate().has_value());
  truth = ctrv_transition(truth, 0.1);
  const auto second = tracker.step(0.1, surface_points(truth, 100, 2, 0.02));
  EXPECT_TRUE(second.born);
  ASSERT_TRUE(tracker.estimate().has_value());
  EXPECT_LT(std::abs(wrap_angle(tracker.estimate()->mean.heading() - truth.heading())), 0.3);
  EXPECT_DOUBLE_EQ(tracker.estimate()->timestamp, 0.1);
}
