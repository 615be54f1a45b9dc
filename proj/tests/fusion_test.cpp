#include "bseot/fusion.hpp"
#include "bseot/sim.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace bseot;

namespace {

double min_eigenvalue(const Eigen::MatrixXd& m) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
  return eig.eigenvalues().minCoeff();
}

GaussianEstimate random_track(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  ObjectState s = sedan_shape();
  for (Eigen::Index i = 0; i < s.dim(); ++i) s[i] += 0.1 * g(rng);
  s[ObjectState::kHeading] = wrap_angle(3.0 * g(rng));
  return {s, oracle::random_spd(static_cast<int>(s.dim()), rng, 0.01, 1.0), 0.0};
}

}  // namespace

TEST(FusionWeight, Range) {
  EXPECT_NO_THROW(FusionWeight(0.0));
  EXPECT_NO_THROW(FusionWeight(1.0));
  EXPECT_THROW(FusionWeight(1.5), std::invalid_argument);
  EXPECT_THROW(FusionWeight(-0.1), std::invalid_argument);
}

TEST(FuseCi, IdenticalInputs) {
  std::mt19937_64 rng(1);
  const GaussianEstimate a = random_track(rng);
  const FusionReport r = fuse_ci(a, a);
  EXPECT_EQ(r.weight.value(), 0.5);
  EXPECT_LT((r.fused.mean.values() - a.mean.values()).norm(), 1e-9);
  EXPECT_LT((r.fused.covariance - a.covariance).norm(), 1e-9);
  EXPECT_GT(r.cost, 0.0);
  EXPECT_FALSE(r.gated);
}

TEST(FuseCi, SymmetricDiagonalPair) {
  const Eigen::MatrixXd Pa = Eigen::Vector2d(1, 4).asDiagonal();
  const Eigen::MatrixXd Pb = Eigen::Vector2d(4, 1).asDiagonal();
  const FusionWeight w = optimize_omega(Pa, Pb);
  EXPECT_NEAR(w.value(), 0.5, 1e-6);
  // grid oracle
  double best_w = 0.0, best = INFINITY;
  for (int k = 0; k <= 10000; ++k) {
    const double om = k * 1e-4;
    const double det = 1.0 / (om * Pa.inverse() + (1 - om) * Pb.inverse()).determinant();
    if (det < best) best = det, best_w = om;
  }
  EXPECT_NEAR(best_w, 0.5, 1e-4);
  const Moments m = ci_combine(Eigen::Vector2d::Zero(), Pa, Eigen::Vector2d::Zero(), Pb, w.value());
  EXPECT_LT((m.covariance - Eigen::MatrixXd(Eigen::Vector2d(1.6, 1.6).asDiagonal())).norm(), 1e-6);
}

TEST(FuseCi, HeadingWrapNearPi) {
  ObjectState sa = sedan_shape(), sb = sedan_shape();
  sa[ObjectState::kHeading] = 3.1;
  sb[ObjectState::kHeading] = -3.1;
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(sa.dim(), sa.dim()) * 0.1;
  P(ObjectState::kHeading, ObjectState::kHeading) = 1e-3;
  const FusionReport r = fuse_ci({sa, P, 0.0}, {sb, P, 0.0});
  const double psi = r.fused.mean.heading();
  EXPECT_LT(std::abs(wrap_angle(psi - std::numbers::pi)), 0.05);
  EXPECT_GT(std::abs(psi), 3.0);
}

TEST(FuseCi, EndpointsReproduceInputs) {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd Pa = oracle::random_spd(4, rng), Pb = oracle::random_spd(4, rng);
  const Eigen::VectorXd ma = Eigen::VectorXd::Random(4), mb = Eigen::VectorXd::Random(4);
  const Moments one = ci_combine(ma, Pa, mb, Pb, 1.0);
  const Moments zero = ci_combine(ma, Pa, mb, Pb, 0.0);
  EXPECT_EQ(one.mean, ma);
  EXPECT_EQ(one.covariance, Pa);
  EXPECT_EQ(zero.mean, mb);
  EXPECT_EQ(zero.covariance, Pb);
}

TEST(FuseCi, DominantEstimateTakesAll) {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
  EXPECT_EQ(optimize_omega(I, 4 * I).value(), 1.0);
  EXPECT_EQ(optimize_omega(4 * I, I).value(), 0.0);
}

TEST(FuseCi, OptimalOnGridAndBelowInputs) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 50; ++k) {
    const int dim = 1 + k % 6;
    const Eigen::MatrixXd Pa = oracle::random_spd(dim, rng), Pb = oracle::random_spd(dim, rng);
    for (FusionCost cost : {FusionCost::det, FusionCost::trace}) {
      const double w = optimize_omega(Pa, Pb, cost).value();
      const auto c = [&](double om) {
        const Eigen::MatrixXd P = (om * Pa.inverse() + (1 - om) * Pb.inverse()).inverse();
        return cost == FusionCost::det ? P.determinant() : P.trace();
      };
      const double at = c(w);
      for (int g = 0; g <= 1000; ++g) EXPECT_LE(at, c(g * 1e-3) * (1 + 1e-12) + 1e-15);
      if (cost == FusionCost::det) {
        EXPECT_LE(at, std::min(Pa.determinant(), Pb.determinant()) + 1e-12);
      }
    }
  }
}

TEST(FuseCi, ConservativeAgainstAdmissibleCross) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 0.99);
  for (int k = 0; k < 30; ++k) {
    const int dim = 1 + k % 6;
    const Eigen::MatrixXd Pa = oracle::random_spd(dim, rng), Pb = oracle::random_spd(dim, rng);
    const Eigen::VectorXd m = Eigen::VectorXd::Zero(dim);
    const double w = optimize_omega(Pa, Pb).value();
    const Moments ci = ci_combine(m, Pa, m, Pb, w);
    for (int j = 0; j < 20; ++j) {
      const Eigen::MatrixXd cross = oracle::admissible_cross(Pa, Pb, rng, u(rng));
      const Moments opt = fuse_known_cross(m, Pa, m, Pb, cross);
      EXPECT_GE(min_eigenvalue(ci.covariance - opt.covariance), -1e-9);
    }
  }
}

TEST(FuseCi, ControlPointPermutationEquivariance) {
  std::mt19937_64 rng(5);
  const GaussianEstimate a = random_track(rng), b = random_track(rng);
  const Eigen::Index dim = a.mean.dim();
  // swap control points 2 and 7 (x and z) in both inputs
  Eigen::VectorXi perm(dim);
  for (Eigen::Index i = 0; i < dim; ++i) perm(i) = static_cast<int>(i);
  for (int c = 0; c < 2; ++c) {
    std::swap(perm(ObjectState::control_x_index(2) + c), perm(ObjectState::control_x_index(7) + c));
  }
  const Eigen::PermutationMatrix<Eigen::Dynamic> Pm(perm);
  const auto permute = [&](const GaussianEstimate& e) {
    return GaussianEstimate{ObjectState(Eigen::VectorXd(Pm * e.mean.values())),
                            Pm * e.covariance * Pm.transpose(), e.timestamp};
  };
  const FusionReport plain = fuse_ci(a, b);
  const FusionReport perm_fused = fuse_ci(permute(a), permute(b));
  // the cost is flat at its minimum, so omega only agrees to about sqrt(eps)
  EXPECT_LT((Eigen::VectorXd(Pm * plain.fused.mean.values()) - perm_fused.fused.mean.values()).norm(), 1e-6);
  EXPECT_LT((Pm * plain.fused.covariance * Pm.transpose() - perm_fused.fused.covariance).norm(), 1e-6);
}

TEST(FuseCi, FullTurnOnHeadingIsInvisible) {
  std::mt19937_64 rng(6);
  const GaussianEstimate a = random_track(rng);
  GaussianEstimate b = random_track(rng);
  const FusionReport r1 = fuse_ci(a, b);
  b.mean[ObjectState::kHeading] += 2 * std::numbers::pi;
  const FusionReport r2 = fuse_ci(a, b);
  EXPECT_LT((r1.fused.mean.values() - r2.fused.mean.values()).norm(), 1e-9);
  EXPECT_LT((r1.fused.covariance - r2.fused.covariance).norm(), 1e-9);
  EXPECT_GT(r1.fused.mean.heading(), -std::numbers::pi);
  EXPECT_LE(r1.fused.mean.heading(), std::numbers::pi);
}

TEST(FuseCi, Errors) {
  std::mt19937_64 rng(7);
  const GaussianEstimate a = random_track(rng);
  GaussianEstimate small{ObjectState(4), Eigen::MatrixXd::Identity(16, 16), 0.0};
  EXPECT_THROW(fuse_ci(a, small), FusionError);
  GaussianEstimate singular = a;
  singular.covariance = Eigen::MatrixXd::Identity(a.mean.dim(), a.mean.dim()) * 4.0;
  singular.covariance(3, 3) = 0.0;
  EXPECT_THROW(fuse_ci(a, singular), FusionError);
  // all-zero is isotropic after the 1e-12 ridge, so it fuses as a near-exact estimate
  GaussianEstimate exact = a;
  exact.covariance.setZero();
  EXPECT_NO_THROW(fuse_ci(a, exact));
}

TEST(KnownCross, IndependentUnitCovariances) {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
  const Eigen::VectorXd ma = Eigen::Vector3d(1, 2, 3), mb = Eigen::Vector3d(3, 2, 1);
  const Moments m = fuse_known_cross(ma, I, mb, I, Eigen::MatrixXd::Zero(3, 3));
  EXPECT_LT((m.covariance - 0.5 * I).norm(), 1e-12);
  EXPECT_LT((m.mean - Eigen::Vector3d(2, 2, 2)).norm(), 1e-12);
}

TEST(KnownCross, FullyCorrelatedReturnsA) {
  std::mt19937_64 rng(8);
  const Eigen::MatrixXd P = oracle::random_spd(3, rng);
  const Eigen::VectorXd ma = Eigen::Vector3d(1, 2, 3);
  const Moments m = fuse_known_cross(ma, P, ma, P, P);
  EXPECT_LT((m.mean - ma).norm(), 1e-9);
  EXPECT_LT((m.covariance - P).norm(), 1e-9);
}

TEST(KnownCross, MatchesJointGls) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 0.9);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const int dim = 1 + k % 6;
    const Eigen::MatrixXd Pa = oracle::random_spd(dim, rng), Pb = oracle::random_spd(dim, rng);
    const Eigen::MatrixXd cross = oracle::admissible_cross(Pa, Pb, rng, u(rng));
    Eigen::VectorXd ma(dim), mb(dim);
    for (int i = 0; i < dim; ++i) ma(i) = g(rng), mb(i) = g(rng);
    const Moments m = fuse_known_cross(ma, Pa, mb, Pb, cross);
    const oracle::Gls ref = oracle::joint_gls(ma, Pa, mb, Pb, cross);
    EXPECT_LT((m.mean - ref.mean).norm(), 1e-9);
    EXPECT_LT((m.covariance - ref.covariance).norm(), 1e-9);
    EXPECT_GE(min_eigenvalue(Pa - m.covariance), -1e-9);
    EXPECT_GE(min_eigenvalue(Pb - m.covariance), -1e-9);
  }
}

TEST(KnownCross, RejectsNonPsdJoint) {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);
  const Eigen::VectorXd m = Eigen::Vector2d::Zero();
  EXPECT_THROW(fuse_known_cross(m, I, m, I, 2 * I), FusionError);
}

TEST(Gate, Examples) {
  EXPECT_TRUE(gate_fusion(50, 50, 5));
  EXPECT_FALSE(gate_fusion(50, 2, 5));
  EXPECT_FALSE(gate_fusion(0, 0, 5));
  EXPECT_TRUE(gate_fusion(5, 5, 5));
}
