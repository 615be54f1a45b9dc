#include "bseot/spline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <tuple>

namespace bseot {

namespace {

constexpr double kDomainSlack = 1e-12;

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

// Index of the last non-empty span ending at knots[n]; the domain end is
// evaluated as a left limit on this span.
std::size_t last_span(const KnotVector& knots, std::size_t n) {
  std::size_t k = n - 1;
  while (k > 0 && !(knots[k] < knots[k + 1])) --k;
  return k;
}

double basis_recursive(std::size_t i, int d, const KnotVector& t, double tau,
                       bool at_end, std::size_t end_span) {
  if (d == 0) {
    if (at_end) return i == end_span ? 1.0 : 0.0;
    return (t[i] <= tau && tau < t[i + 1]) ? 1.0 : 0.0;
  }
  const auto du = static_cast<std::size_t>(d);
  const double left = safe_div(tau - t[i], t[i + du] - t[i]);
  const double right = safe_div(t[i + du + 1] - tau, t[i + du + 1] - t[i + 1]);
  double value = 0.0;
  if (left != 0.0) value += left * basis_recursive(i, d - 1, t, tau, at_end, end_span);
  if (right != 0.0) value += right * basis_recursive(i + 1, d - 1, t, tau, at_end, end_span);
  return value;
}

}  // namespace

KnotVector::KnotVector(std::vector<double> knots) : knots_(std::move(knots)) {
  for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
    if (!(knots_[i] <= knots_[i + 1])) {
      throw std::invalid_argument("knot vector must be non-decreasing");
    }
  }
}

KnotVector KnotVector::clamped_uniform(std::size_t control_points, int degree, double lo,
                                       double hi) {
  if (degree < 0) throw std::invalid_argument("negative spline degree");
  const auto d = static_cast<std::size_t>(degree);
  if (control_points < d + 1) {
    throw std::invalid_argument("clamped knot vector needs at least degree + 1 control points");
  }
  if (!(hi > lo)) throw std::invalid_argument("empty knot range");
  std::vector<double> knots(control_points + d + 1);
  const std::size_t interior = control_points - d;  // number of spans
  for (std::size_t i = 0; i < knots.size(); ++i) {
    if (i <= d) {
      knots[i] = lo;
    } else if (i >= control_points) {
      knots[i] = hi;
    } else {
      knots[i] = lo + (hi - lo) * static_cast<double>(i - d) / static_cast<double>(interior);
    }
  }
  return KnotVector(std::move(knots));
}

double basis(std::size_t i, int degree, const KnotVector& knots, double tau) {
  if (degree < 0) throw std::invalid_argument("negative spline degree");
  const auto d = static_cast<std::size_t>(degree);
  if (knots.size() < d + 2) throw std::out_of_range("knot vector too short for degree");
  const std::size_t n = knots.size() - d - 1;
  if (i >= n) {
    throw std::out_of_range("basis index " + std::to_string(i) + " out of range [0, " +
                            std::to_string(n) + ")");
  }
  const bool at_end = tau == knots[n] && knots[d] < knots[n];
  return basis_recursive(i, degree, knots, tau, at_end, at_end ? last_span(knots, n) : 0);
}

BSplineCurve::BSplineCurve(int degree, KnotVector knots, std::vector<Vec2> control_points)
    : degree_(degree), knots_(std::move(knots)), control_points_(std::move(control_points)) {
  if (degree_ < 0) throw std::invalid_argument("negative spline degree");
  const auto d = static_cast<std::size_t>(degree_);
  const std::size_t n = control_points_.size();
  if (n < d + 1) throw std::invalid_argument("B-spline needs at least degree + 1 control points");
  if (knots_.size() != n + d + 1) {
    throw std::invalid_argument("knot count must equal control points + degree + 1");
  }
  if (!(knots_[d] < knots_[n])) throw std::invalid_argument("degenerate parameter domain");
}

BSplineCurve BSplineCurve::clamped(int degree, std::vector<Vec2> control_points) {
  auto knots = KnotVector::clamped_uniform(control_points.size(), degree);
  return BSplineCurve(degree, std::move(knots), std::move(control_points));
}

std::pair<double, double> BSplineCurve::domain() const {
  return {knots_[static_cast<std::size_t>(degree_)], knots_[control_points_.size()]};
}

double BSplineCurve::checked_parameter(double tau) const {
  const auto [lo, hi] = domain();
  if (tau >= lo && tau <= hi) return tau;
  if (tau < lo && lo - tau <= kDomainSlack) return lo;
  if (tau > hi && tau - hi <= kDomainSlack) return hi;
  throw std::domain_error("spline parameter " + std::to_string(tau) + " outside [" +
                          std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

std::size_t BSplineCurve::find_span(double tau) const {
  const auto d = static_cast<std::size_t>(degree_);
  const std::size_t n = control_points_.size();
  if (tau >= knots_[n]) return last_span(knots_, n);
  const auto values = knots_.values();
  auto it = std::upper_bound(values.begin(), values.end(), tau);
  auto k = static_cast<std::size_t>(std::distance(values.begin(), it));
  k = k == 0 ? 0 : k - 1;
  return std::clamp(k, d, n - 1);
}

Eigen::MatrixXd BSplineCurve::basis_derivatives(std::size_t span, double tau, int order) const {
  // Piegl & Tiller style triangular table; zero knot differences contribute zero.
  const int p = degree_;
  const int nd = std::min(order, p);
  Eigen::MatrixXd ndu(p + 1, p + 1);
  Eigen::VectorXd left(p + 1);
  Eigen::VectorXd right(p + 1);
  ndu(0, 0) = 1.0;
  for (int j = 1; j <= p; ++j) {
    left(j) = tau - knots_[span + 1 - static_cast<std::size_t>(j)];
    right(j) = knots_[span + static_cast<std::size_t>(j)] - tau;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu(j, r) = right(r + 1) + left(j - r);
      const double temp = safe_div(ndu(r, j - 1), ndu(j, r));
      ndu(r, j) = saved + right(r + 1) * temp;
      saved = left(j - r) * temp;
    }
    ndu(j, j) = saved;
  }

  Eigen::MatrixXd ders = Eigen::MatrixXd::Zero(order + 1, p + 1);
  for (int j = 0; j <= p; ++j) ders(0, j) = ndu(j, p);

  Eigen::MatrixXd a(2, p + 1);
  for (int r = 0; r <= p; ++r) {
    int s1 = 0;
    int s2 = 1;
    a(0, 0) = 1.0;
    for (int k = 1; k <= nd; ++k) {
      double d = 0.0;
      const int rk = r - k;
      const int pk = p - k;
      if (r >= k) {
        a(s2, 0) = safe_div(a(s1, 0), ndu(pk + 1, rk));
        d = a(s2, 0) * ndu(rk, pk);
      }
      const int j1 = rk >= -1 ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a(s2, j) = safe_div(a(s1, j) - a(s1, j - 1), ndu(pk + 1, rk + j));
        d += a(s2, j) * ndu(rk + j, pk);
      }
      if (r <= pk) {
        a(s2, k) = safe_div(-a(s1, k - 1), ndu(pk + 1, r));
        d += a(s2, k) * ndu(r, pk);
      }
      ders(k, r) = d;
      std::swap(s1, s2);
    }
  }
  double factor = p;
  for (int k = 1; k <= nd; ++k) {
    ders.row(k) *= factor;
    factor *= (p - k);
  }
  return ders;
}

Eigen::VectorXd BSplineCurve::basis_row(double tau) const {
  tau = checked_parameter(tau);
  const std::size_t span = find_span(tau);
  const Eigen::MatrixXd ders = basis_derivatives(span, tau, 0);
  Eigen::VectorXd row = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(control_points_.size()));
  const std::size_t first = span - static_cast<std::size_t>(degree_);
  for (int j = 0; j <= degree_; ++j) row(static_cast<Eigen::Index>(first) + j) = ders(0, j);
  return row;
}

Vec2 BSplineCurve::evaluate(double tau) const { return derivative(tau, 0); }

Vec2 BSplineCurve::derivative(double tau, int order) const {
  tau = checked_parameter(tau);
  const std::size_t span = find_span(tau);
  const Eigen::MatrixXd ders = basis_derivatives(span, tau, order);
  const std::size_t first = span - static_cast<std::size_t>(degree_);
  Vec2 out = Vec2::Zero();
  for (int j = 0; j <= degree_; ++j) {
    out += ders(order, j) * control_points_[first + static_cast<std::size_t>(j)];
  }
  return out;
}

ClosestPointQuery::ClosestPointQuery(BSplineCurve curve, int samples) : curve_(std::move(curve)) {
  if (samples < 2) throw std::invalid_argument("closest-point query needs at least 2 samples");
  const auto [lo, hi] = curve_.domain();
  taus_.resize(static_cast<std::size_t>(samples));
  points_.resize(taus_.size());
  for (std::size_t k = 0; k < taus_.size(); ++k) {
    taus_[k] = k + 1 == taus_.size()
                   ? hi
                   : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(samples - 1);
    points_[k] = curve_.evaluate(taus_[k]);
  }
}

ClosestPointQuery::Refined ClosestPointQuery::refine(const Vec2& point, double lo, double hi,
                                                     double start) const {
  const int p = curve_.degree();
  const auto cps = curve_.control_points();
  // squared distance, its derivative and second derivative, using one span's polynomial
  auto state_at = [&](double t, std::size_t span) {
    const Eigen::MatrixXd ders = curve_.basis_derivatives(span, t, 2);
    const std::size_t first = span - static_cast<std::size_t>(p);
    Vec2 s = Vec2::Zero(), ds = Vec2::Zero(), dds = Vec2::Zero();
    for (int j = 0; j <= p; ++j) {
      const Vec2& c = cps[first + static_cast<std::size_t>(j)];
      s += ders(0, j) * c;
      ds += ders(1, j) * c;
      dds += ders(2, j) * c;
    }
    const Vec2 r = s - point;
    return std::tuple{r.squaredNorm(), r.dot(ds), ds.squaredNorm() + r.dot(dds)};
  };

  double best_t = start;
  double best_d2 = (curve_.evaluate(start) - point).squaredNorm();
  auto consider = [&](double t, double d2) {
    if (d2 < best_d2 || (d2 == best_d2 && t < best_t)) {
      best_t = t;
      best_d2 = d2;
    }
  };

  // the squared distance is smooth only between knots, so search each piece
  std::vector<double> cuts = {lo};
  for (double k : curve_.knots().values()) {
    if (k > lo && k < hi && k != cuts.back()) cuts.push_back(k);
  }
  cuts.push_back(hi);

  Refined out;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double a = cuts[i];
    double b = cuts[i + 1];
    if (!(b > a)) continue;
    const std::size_t span = curve_.find_span(0.5 * (a + b));
    const auto [d2_a, g_a, h_a] = state_at(a, span);
    const auto [d2_b, g_b, h_b] = state_at(b, span);
    (void)h_a;
    (void)h_b;
    consider(a, d2_a);
    consider(b, d2_b);
    if (i == 0) out.rising_at_lo = g_a > 0.0;
    if (i + 2 == cuts.size()) out.falling_at_hi = g_b < 0.0;
    if (!(g_a < 0.0 && g_b > 0.0)) continue;
    double t = start > a && start < b ? start : 0.5 * (a + b);
    for (int iter = 0; iter < 60; ++iter) {
      const auto [d2, g, h] = state_at(t, span);
      consider(t, d2);
      if (g == 0.0) break;
      if (g < 0.0) {
        a = t;
      } else {
        b = t;
      }
      double next = h > 0.0 ? t - g / h : 0.5 * (a + b);
      if (!(next > a && next < b)) next = 0.5 * (a + b);
      if (std::abs(next - t) <= 1e-15 * std::max(1.0, std::abs(t))) break;
      t = next;
    }
  }
  out.tau = best_t;
  return out;
}

double ClosestPointQuery::closest_tau(const Vec2& point) const {
  const std::size_t count = points_.size();
  std::vector<double> d2(count);
  for (std::size_t k = 0; k < count; ++k) d2[k] = (points_[k] - point).squaredNorm();

  std::vector<std::size_t> minima;
  for (std::size_t k = 0; k < count; ++k) {
    const bool left_ok = k == 0 || d2[k] <= d2[k - 1];
    const bool right_ok = k + 1 == count || d2[k] <= d2[k + 1];
    if (left_ok && right_ok) minima.push_back(k);
  }
  std::stable_sort(minima.begin(), minima.end(),
                   [&](std::size_t a, std::size_t b) { return d2[a] < d2[b]; });
  if (minima.size() > 4) minima.resize(4);

  double best_t = taus_.front();
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t k : minima) {
    std::size_t lo = k == 0 ? 0 : k - 1;
    std::size_t hi = std::min(k + 1, count - 1);
    Refined r = refine(point, taus_[lo], taus_[hi], taus_[k]);
    // a kink can hide a nearby minimum from the coarse pass; widen the
    // bracket while the distance still decreases across its ends
    while ((r.falling_at_hi && hi + 1 < count) || (r.rising_at_lo && lo > 0)) {
      if (r.falling_at_hi && hi + 1 < count) ++hi;
      if (r.rising_at_lo && lo > 0) --lo;
      r = refine(point, taus_[lo], taus_[hi], r.tau);
    }
    const double t = r.tau;
    const double dist2 = (curve_.evaluate(t) - point).squaredNorm();
    if (!std::isfinite(best_d2)) {
      best_t = t;
      best_d2 = dist2;
      continue;
    }
    const double tol = 1e-12 * std::max(1.0, best_d2);
    if (dist2 < best_d2 - tol || (std::abs(dist2 - best_d2) <= tol && t < best_t)) {
      best_t = t;
      best_d2 = std::min(dist2, best_d2);
    }
  }
  return best_t;
}

double closest_tau(const BSplineCurve& curve, const Vec2& point) {
  return ClosestPointQuery(curve).closest_tau(point);
}

}  // namespace bseot
