#include "bseot/ekf.hpp"

#include "bseot/kernels.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace bseot {

namespace {

// g(w) = 2 sin(w dt / 2) / w and its derivative, stable through w = 0.
struct ArcFactor {
  double g;
  double dg;
};

ArcFactor arc_factor(double omega, double dt) {
  const double h = 0.5 * omega * dt;
  if (std::abs(omega) < kStraightLineTurnRate || std::abs(h) < 1e-3) {
    const double h2 = h * h;
    const double sinc = 1.0 - h2 / 6.0 + h2 * h2 / 120.0 - h2 * h2 * h2 / 5040.0;
    const double dsinc = h * (-1.0 / 3.0 + h2 / 30.0 - h2 * h2 / 840.0);
    return {dt * sinc, 0.5 * dt * dt * dsinc};
  }
  const double sinc = std::sin(h) / h;
  const double dsinc = (h * std::cos(h) - std::sin(h)) / (h * h);
  return {dt * sinc, 0.5 * dt * dt * dsinc};
}

void symmetrize(Eigen::MatrixXd& m) { m = 0.5 * (m + m.transpose()).eval(); }

}  // namespace

ObjectState ctrv_transition(const ObjectState& state, double dt) {
  ObjectState next = state;
  const double v = state[ObjectState::kSpeed];
  const double psi = state[ObjectState::kHeading];
  const double omega = state[ObjectState::kTurnRate];
  const auto [g, dg] = arc_factor(omega, dt);
  (void)dg;
  const double phi = psi + 0.5 * omega * dt;
  next[ObjectState::kX] += v * g * std::cos(phi);
  next[ObjectState::kY] += v * g * std::sin(phi);
  next[ObjectState::kHeading] = psi + omega * dt;
  next[ObjectState::kZ] += state[ObjectState::kVz] * dt;
  next.normalize();
  return next;
}

Eigen::MatrixXd transition_jacobian(const ObjectState& state, double dt) {
  using S = ObjectState;
  const Eigen::Index dim = state.dim();
  Eigen::MatrixXd F = Eigen::MatrixXd::Identity(dim, dim);
  const double v = state[S::kSpeed];
  const double omega = state[S::kTurnRate];
  const auto [g, dg] = arc_factor(omega, dt);
  const double phi = state[S::kHeading] + 0.5 * omega * dt;
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  F(S::kX, S::kSpeed) = g * c;
  F(S::kX, S::kHeading) = -v * g * s;
  F(S::kX, S::kTurnRate) = v * (dg * c - 0.5 * dt * g * s);
  F(S::kY, S::kSpeed) = g * s;
  F(S::kY, S::kHeading) = v * g * c;
  F(S::kY, S::kTurnRate) = v * (dg * s + 0.5 * dt * g * c);
  F(S::kHeading, S::kTurnRate) = dt;
  F(S::kZ, S::kVz) = dt;
  return F;
}

Eigen::MatrixXd process_noise(const ObjectState& state, double dt,
                              const ProcessNoiseConfig& noise) {
  using S = ObjectState;
  const Eigen::Index dim = state.dim();
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(dim, dim);
  const double c = std::cos(state.heading());
  const double s = std::sin(state.heading());
  const double half_dt2 = 0.5 * dt * dt;

  Eigen::Matrix<double, 5, 2> G = Eigen::Matrix<double, 5, 2>::Zero();
  G(0, 0) = half_dt2 * c;
  G(1, 0) = half_dt2 * s;
  G(2, 0) = dt;
  G(3, 1) = half_dt2;
  G(4, 1) = dt;
  const Eigen::Vector2d var(noise.accel_std * noise.accel_std,
                            noise.yaw_accel_std * noise.yaw_accel_std);
  Q.topLeftCorner<5, 5>() = G * var.asDiagonal() * G.transpose();

  const Eigen::Vector2d gz(half_dt2, dt);
  Q.block<2, 2>(S::kZ, S::kZ) =
      gz * gz.transpose() * (noise.vertical_accel_std * noise.vertical_accel_std);

  for (Eigen::Index i = S::kWidth; i < dim; ++i) Q(i, i) = noise.shape_rw_var * dt;
  return Q;
}

GaussianEstimate predict(const GaussianEstimate& est, double dt, const ProcessNoiseConfig& noise) {
  if (!(dt > 0.0)) throw std::invalid_argument("predict needs dt > 0");
  const Eigen::MatrixXd F = transition_jacobian(est.mean, dt);
  GaussianEstimate out{ctrv_transition(est.mean, dt),
                       F * est.covariance * F.transpose() + process_noise(est.mean, dt, noise),
                       est.timestamp + dt};
  symmetrize(out.covariance);
  return out;
}

UpdateResult update(const GaussianEstimate& est, std::span<const PointMeasurement> measurements,
                    const ShapeModel& model, const UpdateOptions& options) {
  if (measurements.empty()) throw std::invalid_argument("update needs at least one measurement");
  model.check(est.mean);

  const SurfaceQuery query(est.mean, model);
  std::vector<SurfaceAssignment> assignments;
  if (!options.reassociate) {
    assignments = options.parallel_association
                      ? kernels::assign_batch(query, est.mean, measurements)
                      : kernels::assign_batch_serial(query, est.mean, measurements);
  }
  const double gate2 = options.gate_sigma * options.gate_sigma;

  UpdateResult result{est, 0, 0};
  ObjectState& x = result.estimate.mean;
  Eigen::MatrixXd& P = result.estimate.covariance;

  for (std::size_t i = 0; i < measurements.size(); ++i) {
    SurfaceAssignment assignment;
    Eigen::VectorXd weights;
    if (options.reassociate) {
      const std::optional<SurfaceQuery> current =
          i == 0 ? std::nullopt : std::optional<SurfaceQuery>(std::in_place, x, model);
      const SurfaceQuery& q = current ? *current : query;
      assignment = q.assign(to_body(x, measurements[i].position));
      if (!assignment.is_cap()) weights = q.profile().basis_row(*assignment.tau);
    } else {
      assignment = assignments[i];
      if (!assignment.is_cap()) weights = query.profile().basis_row(*assignment.tau);
    }
    const auto lin = linearize_pseudo_measurement(x, measurements[i], assignment, weights);

    Eigen::MatrixXd R = lin.wrt_noise * measurements[i].noise * lin.wrt_noise.transpose();
    R.diagonal().array() += options.extra_noise_var;
    if (!assignment.is_cap() && options.tangent_noise_var > 0.0) {
      const Vec2 d = (options.reassociate ? model.profile(x) : query.profile()).derivative(*assignment.tau, 1);
      if (d.norm() > 0.0) {
        const Vec2 t = d.normalized();
        R += options.tangent_noise_var * t * t.transpose();
      }
    }
    const Eigen::MatrixXd PHt = P * lin.wrt_state.transpose();
    const Eigen::MatrixXd S = lin.wrt_state * PHt + R;
    const Eigen::LDLT<Eigen::MatrixXd> S_ldlt(S);
    if (S_ldlt.info() != Eigen::Success || !(S_ldlt.vectorD().array() > 0.0).all()) {
      ++result.gated;
      continue;
    }
    const Eigen::VectorXd innovation = -lin.residual;
    const double d2 = innovation.dot(S_ldlt.solve(innovation));
    if (!(d2 <= gate2)) {
      ++result.gated;
      continue;
    }
    const Eigen::MatrixXd K = S_ldlt.solve(PHt.transpose()).transpose();
    x.values() += K * innovation;
    x.normalize();
    P -= K * PHt.transpose();
    symmetrize(P);
    ++result.accepted;
  }

  if (options.anchor_std > 0.0) {
    const std::size_t n = x.control_points();
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2, x.dim());
    for (std::size_t i = 0; i < n; ++i) {
      H(0, ObjectState::control_x_index(i)) = 1.0 / static_cast<double>(n);
      H(1, ObjectState::control_z_index(i)) = 1.0 / static_cast<double>(n);
    }
    const Eigen::Vector2d innovation = -H * x.values();
    const Eigen::MatrixXd PHt = P * H.transpose();
    const Eigen::Matrix2d S =
        H * PHt + Eigen::Matrix2d::Identity() * (options.anchor_std * options.anchor_std);
    const Eigen::MatrixXd K = S.ldlt().solve(PHt.transpose()).transpose();
    x.values() += K * innovation;
    x.normalize();
    P -= K * PHt.transpose();
    symmetrize(P);
  }

  if (x.width() < options.min_width) x[ObjectState::kWidth] = options.min_width;
  return result;
}

std::vector<Vec2> default_profile(std::size_t control_points, double length, double height) {
  if (control_points < 2) throw std::invalid_argument("profile needs at least 2 control points");
  const double hl = 0.5 * length;
  const double hh = 0.5 * height;
  const double perimeter = 2.0 * height + length;
  std::vector<Vec2> out(control_points);
  for (std::size_t k = 0; k < control_points; ++k) {
    const double s = perimeter * static_cast<double>(k) / static_cast<double>(control_points - 1);
    if (s <= height) {
      out[k] = Vec2(-hl, -hh + s);
    } else if (s <= height + length) {
      out[k] = Vec2(-hl + (s - height), hh);
    } else {
      out[k] = Vec2(hl, hh - (s - height - length));
    }
  }
  return out;
}

std::optional<GaussianEstimate> initialize(std::span<const PointMeasurement> measurements,
                                           const ShapeModel& model, const InitConfig& init,
                                           double timestamp) {
  using S = ObjectState;
  if (measurements.size() < init.min_points || measurements.empty()) return std::nullopt;

  Vec3 centroid = Vec3::Zero();
  for (const auto& m : measurements) centroid += m.position;
  centroid /= static_cast<double>(measurements.size());

  Eigen::Matrix2d scatter = Eigen::Matrix2d::Zero();
  for (const auto& m : measurements) {
    const Vec2 d = m.position.head<2>() - centroid.head<2>();
    scatter += d * d.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(scatter);
  const Vec2 axis = eig.eigenvectors().col(1);
  double heading = std::atan2(axis.y(), axis.x());
  double speed = 0.0;
  if (init.motion_hint && init.motion_hint->norm() >= init.min_hint_speed) {
    Vec2 dir(std::cos(heading), std::sin(heading));
    if (dir.dot(*init.motion_hint) < 0.0) {
      heading += std::numbers::pi;
      dir = -dir;
    }
    speed = dir.dot(*init.motion_hint);
  } else {
    if (heading > 0.5 * std::numbers::pi) heading -= std::numbers::pi;
    if (heading <= -0.5 * std::numbers::pi) heading += std::numbers::pi;
  }

  ObjectState state(model.control_points());
  state.set_position(centroid);
  state[S::kHeading] = wrap_angle(heading);
  state[S::kSpeed] = speed;

  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const auto& m : measurements) {
    const Vec3 b = to_body(state, m.position);
    lo = lo.cwiseMin(b);
    hi = hi.cwiseMax(b);
  }
  const Vec3 extent = hi - lo;
  const Vec3 center = 0.5 * (hi + lo);
  const double length = std::max(extent.x(), init.min_length);
  const double height = std::max(extent.z(), init.min_height);
  state[S::kWidth] = std::max(extent.y(), init.min_width);
  const auto profile = default_profile(model.control_points(), length, height);
  for (std::size_t i = 0; i < profile.size(); ++i) {
    state.set_control_point(i, profile[i] + Vec2(center.x(), center.z()));
  }

  const Eigen::Index dim = state.dim();
  Eigen::VectorXd var(dim);
  var(S::kX) = init.position_var;
  var(S::kY) = init.position_var;
  var(S::kSpeed) = init.speed_var;
  var(S::kHeading) = init.heading_var;
  var(S::kTurnRate) = init.turn_rate_var;
  var(S::kZ) = init.position_var;
  var(S::kVz) = init.vertical_speed_var;
  var(S::kWidth) = init.width_var;
  var.tail(dim - S::kWidth - 1).setConstant(init.shape_var);
  return GaussianEstimate{std::move(state), var.asDiagonal(), timestamp};
}

bool is_psd(const Eigen::MatrixXd& matrix, double tolerance) {
  const Eigen::MatrixXd sym = 0.5 * (matrix + matrix.transpose());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() >= -tolerance;
}

Tracker::Tracker(TrackerConfig config) : config_(std::move(config)) {}

Tracker::StepReport Tracker::step(double timestamp,
                                  std::span<const PointMeasurement> measurements) {
  StepReport report;
  report.received = measurements.size();

  if (!estimate_) {
    if (measurements.empty()) return report;
    if (measurements.size() < config_.init.min_points) {
      pending_.reset();
      return report;
    }
    Vec3 centroid = Vec3::Zero();
    for (const auto& m : measurements) centroid += m.position;
    centroid /= static_cast<double>(measurements.size());

    if (!pending_ || !(timestamp > pending_->timestamp) ||
        timestamp - pending_->timestamp > config_.max_birth_gap) {
      pending_ = Pending{timestamp, centroid};
      return report;
    }
    InitConfig init = config_.init;
    init.motion_hint = Vec2((centroid - pending_->centroid).head<2>() /
                            (timestamp - pending_->timestamp));
    estimate_ = initialize(measurements, config_.model, init, timestamp);
    pending_.reset();
    report.initialized = estimate_.has_value();
    report.born = report.initialized;
    report.accepted = report.initialized ? measurements.size() : 0;
    return report;
  }

  if (timestamp > estimate_->timestamp) {
    estimate_ = predict(*estimate_, timestamp - estimate_->timestamp, config_.process);
  }
  if (!measurements.empty()) {
    auto result = update(*estimate_, measurements, config_.model, config_.update);
    estimate_ = std::move(result.estimate);
    report.accepted = result.accepted;
  }
  report.initialized = true;
  return report;
}

}  // namespace bseot
