#include "bseot/fusion.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>

namespace bseot {

namespace {

constexpr double kRegularization = 1e-12;
constexpr double kMaxCondition = 1e12;
constexpr int kGoldenIterations = 60;
constexpr int kCoarseGrid = 101;

double condition_number(const Eigen::MatrixXd& sym) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

void check_dims(const Eigen::VectorXd& mean_a, const Eigen::MatrixXd& cov_a,
                const Eigen::VectorXd& mean_b, const Eigen::MatrixXd& cov_b) {
  const Eigen::Index n = mean_a.size();
  if (mean_b.size() != n || cov_a.rows() != n || cov_a.cols() != n || cov_b.rows() != n ||
      cov_b.cols() != n) {
    throw FusionError("fusion inputs have mismatched dimensions");
  }
}

}  // namespace

FusionWeight::FusionWeight(double omega) : omega_(omega) {
  if (!(omega >= 0.0 && omega <= 1.0)) throw std::invalid_argument("CI weight outside [0, 1]");
}

Eigen::MatrixXd information_matrix(const Eigen::MatrixXd& covariance) {
  Eigen::MatrixXd sym = 0.5 * (covariance + covariance.transpose());
  if (!(condition_number(sym) < kMaxCondition)) {
    sym.diagonal().array() += kRegularization;
    if (!(condition_number(sym) < kMaxCondition)) {
      throw FusionError("covariance is singular or too ill-conditioned to fuse");
    }
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(sym);
  if (llt.info() != Eigen::Success) throw FusionError("covariance is not positive definite");
  Eigen::MatrixXd info = llt.solve(Eigen::MatrixXd::Identity(sym.rows(), sym.cols()));
  return 0.5 * (info + info.transpose());
}

double ci_log_cost(const Eigen::MatrixXd& info_a, const Eigen::MatrixXd& info_b, double omega,
                   FusionCost cost) {
  const Eigen::MatrixXd info = omega * info_a + (1.0 - omega) * info_b;
  const Eigen::LLT<Eigen::MatrixXd> llt(info);
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  if (cost == FusionCost::det) {
    // det(P) = 1 / det(info) = prod(L_ii)^-2
    return -2.0 * llt.matrixLLT().diagonal().array().log().sum();
  }
  const Eigen::MatrixXd P = llt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols()));
  return std::log(P.trace());
}

Moments ci_combine(const Eigen::VectorXd& mean_a, const Eigen::MatrixXd& cov_a,
                   const Eigen::VectorXd& mean_b, const Eigen::MatrixXd& cov_b, double omega) {
  check_dims(mean_a, cov_a, mean_b, cov_b);
  if (omega == 1.0) return {mean_a, cov_a};
  if (omega == 0.0) return {mean_b, cov_b};
  const Eigen::MatrixXd info_a = information_matrix(cov_a);
  const Eigen::MatrixXd info_b = information_matrix(cov_b);
  const Eigen::MatrixXd info = omega * info_a + (1.0 - omega) * info_b;
  const Eigen::LLT<Eigen::MatrixXd> llt(info);
  if (llt.info() != Eigen::Success) throw FusionError("fused information is not positive definite");
  Moments out;
  out.covariance = llt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols()));
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  out.mean = out.covariance * (omega * info_a * mean_a + (1.0 - omega) * info_b * mean_b);
  return out;
}

FusionWeight optimize_omega(const Eigen::MatrixXd& cov_a, const Eigen::MatrixXd& cov_b,
                            FusionCost cost) {
  if (cov_a.rows() != cov_b.rows() || cov_a.cols() != cov_b.cols()) {
    throw FusionError("fusion inputs have mismatched dimensions");
  }
  const Eigen::MatrixXd info_a = information_matrix(cov_a);
  const Eigen::MatrixXd info_b = information_matrix(cov_b);
  auto f = [&](double w) { return ci_log_cost(info_a, info_b, w, cost); };

  double grid_best_w = 0.0;
  double grid_best = std::numeric_limits<double>::infinity();
  double grid_worst = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < kCoarseGrid; ++k) {
    const double w = static_cast<double>(k) / (kCoarseGrid - 1);
    const double c = f(w);
    if (c < grid_best) {
      grid_best = c;
      grid_best_w = w;
    }
    grid_worst = std::max(grid_worst, c);
  }
  if (grid_worst - grid_best <= 1e-12 * std::max(1.0, std::abs(grid_best))) {
    return FusionWeight(0.5);
  }

  // log cost is convex in omega, so golden section over [0, 1] is exact up to
  // its resolution; the grid guards against a flat or noisy cost surface.
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = 0.0;
  double b = 1.0;
  double x1 = b - ratio * (b - a);
  double x2 = a + ratio * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int it = 0; it < kGoldenIterations; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - ratio * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + ratio * (b - a);
      f2 = f(x2);
    }
  }
  double best_w = 0.5 * (a + b);
  double best = f(best_w);
  for (double w : {0.0, 1.0, grid_best_w}) {
    const double c = f(w);
    if (c < best) {
      best = c;
      best_w = w;
    }
  }
  return FusionWeight(std::clamp(best_w, 0.0, 1.0));
}

FusionWeight optimize_omega(const GaussianEstimate& a, const GaussianEstimate& b,
                            FusionCost cost) {
  return optimize_omega(a.covariance, b.covariance, cost);
}

Moments fuse_known_cross(const Eigen::VectorXd& mean_a, const Eigen::MatrixXd& cov_a,
                         const Eigen::VectorXd& mean_b, const Eigen::MatrixXd& cov_b,
                         const Eigen::MatrixXd& cross) {
  check_dims(mean_a, cov_a, mean_b, cov_b);
  const Eigen::Index n = mean_a.size();
  if (cross.rows() != n || cross.cols() != n) {
    throw FusionError("cross-covariance has mismatched dimensions");
  }
  Eigen::MatrixXd joint(2 * n, 2 * n);
  joint << cov_a, cross, cross.transpose(), cov_b;
  const double scale = std::max(1.0, joint.cwiseAbs().maxCoeff());
  if (!is_psd(joint, 1e-9 * scale)) throw FusionError("joint covariance is not PSD");

  const Eigen::MatrixXd U = cov_a + cov_b - cross - cross.transpose();
  const Eigen::MatrixXd U_pinv = U.completeOrthogonalDecomposition().pseudoInverse();
  const Eigen::MatrixXd gain = (cov_a - cross) * U_pinv;  // weight on (b - a)
  Moments out;
  out.mean = mean_a + gain * (mean_b - mean_a);
  out.covariance = cov_a - gain * (cov_a - cross).transpose();
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  return out;
}

GaussianEstimate fuse_known_cross(const GaussianEstimate& a, const GaussianEstimate& b,
                                  const Eigen::MatrixXd& cross) {
  const GaussianEstimate aligned = align_heading(a, b);
  Moments m = fuse_known_cross(a.mean.values(), a.covariance, aligned.mean.values(),
                               aligned.covariance, cross);
  GaussianEstimate out{ObjectState(std::move(m.mean)), std::move(m.covariance),
                       std::max(a.timestamp, b.timestamp)};
  out.mean.normalize();
  return out;
}

GaussianEstimate align_heading(const GaussianEstimate& a, const GaussianEstimate& b) {
  GaussianEstimate out = b;
  out.mean[ObjectState::kHeading] = a.mean.heading() + wrap_angle(b.mean.heading() - a.mean.heading());
  return out;
}

FusionReport fuse_ci(const GaussianEstimate& a, const GaussianEstimate& b, FusionCost cost) {
  if (a.mean.dim() != b.mean.dim()) throw FusionError("fusion inputs have mismatched dimensions");
  const GaussianEstimate aligned = align_heading(a, b);
  const FusionWeight weight = optimize_omega(a.covariance, aligned.covariance, cost);
  Moments m = ci_combine(a.mean.values(), a.covariance, aligned.mean.values(), aligned.covariance,
                         weight.value());

  FusionReport report;
  report.weight = weight;
  report.log_cost = ci_log_cost(information_matrix(a.covariance),
                                information_matrix(aligned.covariance), weight.value(), cost);
  report.cost = std::exp(report.log_cost);
  report.fused = GaussianEstimate{ObjectState(std::move(m.mean)), std::move(m.covariance),
                                  std::max(a.timestamp, b.timestamp)};
  report.fused.mean.normalize();
  return report;
}

bool gate_fusion(std::size_t a_points, std::size_t b_points, std::size_t min_points) {
  return a_points >= min_points && b_points >= min_points;
}

}  // namespace bseot
