#pragma once

#include <Eigen/Dense>

#include "handover/errors.hpp"

namespace handover::geom {

// World frame: millimetres, z up, y toward the human, origin at the robot
// base. Time in seconds.
using Point3 = Eigen::Vector3d;
using Vec3 = Eigen::Vector3d;
using Pixel = Eigen::Vector2d;
using Mat34 = Eigen::Matrix<double, 3, 4>;

struct CameraProjection {
  Mat34 matrix = Mat34::Zero();
  int image_width = 0;
  int image_height = 0;

  Point3 center() const;
  // Unit direction of the ray through a pixel, oriented so points at
  // positive ray parameter have positive depth.
  Vec3 ray_direction(const Pixel& px) const;
  // Signed depth of a world point; positive in front of the camera.
  double depth_of(const Point3& p) const;
  bool contains(const Pixel& px) const {
    return px.x() >= -0.5 && px.y() >= -0.5 && px.x() < image_width - 0.5 &&
           px.y() < image_height - 0.5;
  }
};

Pixel project(const CameraProjection& cam, const Point3& p);

Point3 triangulate(const CameraProjection& cam_a, const Pixel& px_a,
                   const CameraProjection& cam_b, const Pixel& px_b);

struct KalmanState {
  Point3 position = Point3::Zero();
  Vec3 velocity = Vec3::Zero();
  Eigen::Matrix<double, 6, 6> covariance = Eigen::Matrix<double, 6, 6>::Zero();
};

// Fresh state pinned at a first measurement: zero velocity, position
// variance r, large velocity variance.
KalmanState kalman_init(const Point3& measurement, double r);

// Constant-velocity predict + position update. q is the per-axis process
// noise PSD (mm^2/s^3), r the per-axis measurement variance (mm^2).
KalmanState kalman_step(const KalmanState& state, const Point3& measurement, double dt, double q,
                        double r);

// Predict-only step for frames without a measurement.
KalmanState kalman_predict(const KalmanState& state, double dt, double q);

double point_segment_distance(const Point3& p, const Point3& a, const Point3& b);

}  // namespace handover::geom
