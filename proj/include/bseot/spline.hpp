#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace bseot {

using Vec2 = Eigen::Vector2d;

/// Non-decreasing sequence of knot values for a B-spline of some degree.
class KnotVector {
 public:
  KnotVector() = default;
  explicit KnotVector(std::vector<double> knots);

  /// Clamped knot vector with uniformly spaced interior knots on [lo, hi];
  /// the resulting curve interpolates its first and last control points.
  static KnotVector clamped_uniform(std::size_t control_points, int degree,
                                    double lo = 0.0, double hi = 1.0);

  std::size_t size() const { return knots_.size(); }
  double operator[](std::size_t i) const { return knots_[i]; }
  std::span<const double> values() const { return knots_; }

 private:
  std::vector<double> knots_;
};

/// Cox-de Boor basis function B_{i,d}(tau) by direct recursion, with the
/// convention that a zero-denominator term contributes zero. Index i is
/// zero-based. At the right end of the valid domain the last non-empty span is
/// treated as closed so that the basis still sums to one there.
///
/// Throws std::out_of_range when i does not address a basis function of the
/// given degree and knot vector.
double basis(std::size_t i, int degree, const KnotVector& knots, double tau);

/// Open B-spline curve in the plane.
class BSplineCurve {
 public:
  BSplineCurve(int degree, KnotVector knots, std::vector<Vec2> control_points);

  /// Curve with a clamped uniform knot vector on [0, 1].
  static BSplineCurve clamped(int degree, std::vector<Vec2> control_points);

  int degree() const { return degree_; }
  const KnotVector& knots() const { return knots_; }
  std::span<const Vec2> control_points() const { return control_points_; }
  std::size_t size() const { return control_points_.size(); }

  /// Valid parameter interval [knots[d], knots[n]].
  std::pair<double, double> domain() const;

  /// Clamps tau into the domain when it lies within 1e-12 outside it.
  /// Throws std::domain_error for larger violations.
  double checked_parameter(double tau) const;

  /// Index k of the knot span [knots[k], knots[k+1]) holding tau, d <= k < n.
  std::size_t find_span(double tau) const;

  /// Non-zero basis values and their derivatives up to `order` at tau.
  /// ders(k, j) is the k-th derivative of B_{span-d+j}.
  Eigen::MatrixXd basis_derivatives(std::size_t span, double tau, int order) const;

  /// Dense row of all n basis values at tau.
  Eigen::VectorXd basis_row(double tau) const;

  Vec2 evaluate(double tau) const;
  Vec2 derivative(double tau, int order = 1) const;

 private:
  int degree_;
  KnotVector knots_;
  std::vector<Vec2> control_points_;
};

/// Closest-point queries against a fixed curve. The coarse samples are computed
/// once so repeated queries (one per measurement) only pay for refinement.
class ClosestPointQuery {
 public:
  explicit ClosestPointQuery(BSplineCurve curve, int samples = 256);

  /// Parameter of the curve point closest to `point`; ties go to smaller tau.
  double closest_tau(const Vec2& point) const;

  const BSplineCurve& curve() const { return curve_; }
  std::span<const double> sample_parameters() const { return taus_; }
  std::span<const Vec2> sample_points() const { return points_; }

 private:
  struct Refined {
    double tau = 0.0;
    bool rising_at_lo = false;
    bool falling_at_hi = false;
  };
  Refined refine(const Vec2& point, double lo, double hi, double start) const;

  BSplineCurve curve_;
  std::vector<double> taus_;
  std::vector<Vec2> points_;
};

double closest_tau(const BSplineCurve& curve, const Vec2& point);

}  // namespace bseot
