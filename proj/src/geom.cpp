#include "handover/geom.hpp"

#include <cmath>

namespace handover::geom {

namespace {

Eigen::Matrix3d left_block(const Mat34& m) { return m.leftCols<3>(); }

double det_sign(const Eigen::Matrix3d& m) { return m.determinant() >= 0.0 ? 1.0 : -1.0; }

}  // namespace

Point3 CameraProjection::center() const {
  const Eigen::Matrix3d m = left_block(matrix);
  return -m.inverse() * matrix.col(3);
}

Vec3 CameraProjection::ray_direction(const Pixel& px) const {
  const Eigen::Matrix3d m = left_block(matrix);
  Vec3 d = m.inverse() * Vec3(px.x(), px.y(), 1.0);
  d *= det_sign(m);
  return d.normalized();
}

double CameraProjection::depth_of(const Point3& p) const {
  const Eigen::Matrix3d m = left_block(matrix);
  const double w = matrix.row(2).head<3>().dot(p) + matrix(2, 3);
  return det_sign(m) * w / m.row(2).norm();
}

Pixel project(const CameraProjection& cam, const Point3& p) {
  const Vec3 h = cam.matrix * p.homogeneous();
  if (std::abs(h.z()) < 1e-9) throw DegenerateProjection();
  return {h.x() / h.z(), h.y() / h.z()};
}

Point3 triangulate(const CameraProjection& cam_a, const Pixel& px_a, const CameraProjection& cam_b,
                   const Pixel& px_b) {
  const Point3 ca = cam_a.center();
  const Point3 cb = cam_b.center();
  const Vec3 da = cam_a.ray_direction(px_a);
  const Vec3 db = cam_b.ray_direction(px_b);

  // Closest points of the two rays; unit directions so the Gram determinant
  // is 1 - cos^2 = sin^2 of the ray angle.
  const double b = da.dot(db);
  const double denom = 1.0 - b * b;
  if (denom < 1e-12) throw ParallelRays();

  const Vec3 w0 = ca - cb;
  const double d = da.dot(w0);
  const double e = db.dot(w0);
  const double s = (b * e - d) / denom;
  const double t = (e - b * d) / denom;

  const Point3 p = 0.5 * ((ca + s * da) + (cb + t * db));
  if (cam_a.depth_of(p) <= 0.0 || cam_b.depth_of(p) <= 0.0) throw BehindCamera();
  return p;
}

KalmanState kalman_init(const Point3& measurement, double r) {
  if (!measurement.allFinite()) throw NonFiniteMeasurement();
  KalmanState s;
  s.position = measurement;
  s.velocity.setZero();
  s.covariance.setZero();
  s.covariance.topLeftCorner<3, 3>() = Eigen::Matrix3d::Identity() * std::max(r, 1.0);
  s.covariance.bottomRightCorner<3, 3>() = Eigen::Matrix3d::Identity() * 1e6;
  return s;
}

KalmanState kalman_predict(const KalmanState& state, double dt, double q) {
  Eigen::Matrix<double, 6, 6> f = Eigen::Matrix<double, 6, 6>::Identity();
  f.topRightCorner<3, 3>() = Eigen::Matrix3d::Identity() * dt;

  // White-noise-acceleration process covariance per axis.
  Eigen::Matrix<double, 6, 6> qm = Eigen::Matrix<double, 6, 6>::Zero();
  const double dt2 = dt * dt;
  const double dt3 = dt2 * dt;
  qm.topLeftCorner<3, 3>() = Eigen::Matrix3d::Identity() * (q * dt3 / 3.0);
  qm.topRightCorner<3, 3>() = Eigen::Matrix3d::Identity() * (q * dt2 / 2.0);
  qm.bottomLeftCorner<3, 3>() = qm.topRightCorner<3, 3>();
  qm.bottomRightCorner<3, 3>() = Eigen::Matrix3d::Identity() * (q * dt);

  KalmanState out;
  out.position = state.position + dt * state.velocity;
  out.velocity = state.velocity;
  out.covariance = f * state.covariance * f.transpose() + qm;
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  return out;
}

KalmanState kalman_step(const KalmanState& state, const Point3& measurement, double dt, double q,
                        double r) {
  if (!measurement.allFinite()) throw NonFiniteMeasurement();

  KalmanState pred = kalman_predict(state, dt, q);

  Eigen::Matrix<double, 3, 6> h = Eigen::Matrix<double, 3, 6>::Zero();
  h.leftCols<3>() = Eigen::Matrix3d::Identity();

  const Eigen::Matrix3d rm = Eigen::Matrix3d::Identity() * r;
  const Eigen::Matrix3d s = h * pred.covariance * h.transpose() + rm;
  const Eigen::Matrix<double, 6, 3> k = pred.covariance * h.transpose() * s.inverse();

  Eigen::Matrix<double, 6, 1> x;
  x << pred.position, pred.velocity;
  x += k * (measurement - pred.position);

  // Joseph form keeps the covariance PSD under roundoff.
  const Eigen::Matrix<double, 6, 6> ikh = Eigen::Matrix<double, 6, 6>::Identity() - k * h;
  Eigen::Matrix<double, 6, 6> p = ikh * pred.covariance * ikh.transpose() + k * rm * k.transpose();
  p = 0.5 * (p + p.transpose()).eval();

  KalmanState out;
  out.position = x.head<3>();
  out.velocity = x.tail<3>();
  out.covariance = p;
  return out;
}

double point_segment_distance(const Point3& p, const Point3& a, const Point3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

}  // namespace handover::geom
