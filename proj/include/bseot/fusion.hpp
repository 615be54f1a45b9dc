#pragma once

#include "bseot/ekf.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <stdexcept>

namespace bseot {

/// Covariance-intersection weight omega in [0, 1] (not the turn rate).
class FusionWeight {
 public:
  explicit FusionWeight(double omega);
  double value() const { return omega_; }

 private:
  double omega_;
};

enum class FusionCost { det, trace };

struct FusionReport {
  GaussianEstimate fused;
  FusionWeight weight{0.5};
  double cost = 0.0;      ///< det (or trace) of the fused covariance
  double log_cost = 0.0;  ///< log of `cost`; finite even when det underflows
  bool gated = false;     ///< true when fusion was skipped for this frame
};

class FusionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fused first and second moments.
struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

/// Information matrix of a covariance, regularized by 1e-12 I when the
/// condition number reaches 1e12. Throws FusionError when still singular.
Eigen::MatrixXd information_matrix(const Eigen::MatrixXd& covariance);

/// log C(P_CI(omega)) for precomputed information matrices.
double ci_log_cost(const Eigen::MatrixXd& info_a, const Eigen::MatrixXd& info_b, double omega,
                   FusionCost cost);

/// Covariance intersection for a given weight.
Moments ci_combine(const Eigen::VectorXd& mean_a, const Eigen::MatrixXd& cov_a,
                   const Eigen::VectorXd& mean_b, const Eigen::MatrixXd& cov_b, double omega);

/// Minimizer of the CI cost over [0, 1]: golden-section search checked
/// against a coarse grid and both end points. Returns 0.5 when the cost does
/// not depend on omega.
FusionWeight optimize_omega(const Eigen::MatrixXd& cov_a, const Eigen::MatrixXd& cov_b,
                            FusionCost cost = FusionCost::det);
FusionWeight optimize_omega(const GaussianEstimate& a, const GaussianEstimate& b,
                            FusionCost cost = FusionCost::det);

/// Optimal linear fusion for a known cross-covariance E[e_a e_b^T]
/// (Bar-Shalom/Campo gains). Throws FusionError when the joint covariance is
/// not PSD.
Moments fuse_known_cross(const Eigen::VectorXd& mean_a, const Eigen::MatrixXd& cov_a,
                         const Eigen::VectorXd& mean_b, const Eigen::MatrixXd& cov_b,
                         const Eigen::MatrixXd& cross);
GaussianEstimate fuse_known_cross(const GaussianEstimate& a, const GaussianEstimate& b,
                                  const Eigen::MatrixXd& cross);

/// Copy of `b` whose heading is expressed in a chart centred on a's heading.
GaussianEstimate align_heading(const GaussianEstimate& a, const GaussianEstimate& b);

/// Full-state covariance intersection of two track estimates. Control points
/// are associated by index; b's heading is aligned to a's before fusing.
FusionReport fuse_ci(const GaussianEstimate& a, const GaussianEstimate& b,
                     FusionCost cost = FusionCost::det);

/// Fuse only when both trackers were supported by at least `min_points`
/// measurements in the current frame.
bool gate_fusion(std::size_t a_points, std::size_t b_points, std::size_t min_points);

}  // namespace bseot
