#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "handover/content.hpp"
#include "handover/geom.hpp"
#include "handover/ingest.hpp"
#include "handover/params.hpp"

namespace handover::perception {

using ingest::HandKeypoints;

// Rigid approximation of a detected hand: wrist->middle-MCP direction, palm
// normal as up, and their cross product.
struct HandFrame {
  HandKeypoints keypoints{};
  geom::Vec3 direction = geom::Vec3::UnitY();
  geom::Vec3 up = geom::Vec3::UnitZ();
  geom::Vec3 right = geom::Vec3::UnitX();
  bool valid = false;

  Eigen::Matrix3d rotation() const {
    Eigen::Matrix3d r;
    r.col(0) = right;
    r.col(1) = direction;
    r.col(2) = up;
    return r;
  }
};

HandFrame hand_frame(const HandKeypoints& keypoints);

struct TrackFrame {
  double t = 0.0;
  geom::Point3 position = geom::Point3::Zero();
  Eigen::Matrix3d orientation = Eigen::Matrix3d::Identity();
  bool valid = false;     // filter initialised
  bool measured = false;  // updated from a triangulated centroid
  bool held = false;      // appended end-of-recording hold frame
};

struct ContainerTrack {
  std::vector<TrackFrame> frames;
  int trace_frame_count = 0;  // entries beyond this index are hold frames
};

// Triangulates the per-view centroid pixels, smooths them with the
// constant-velocity filter, copies orientation from the holding hand, and
// appends the end-of-recording hold.
ContainerTrack track_container(const ingest::HandoverScenario& scenario);

struct ShapeSlice {
  double z_mm = 0.0;
  double radius_mm = 0.0;
};

struct ContainerShape {
  std::vector<ShapeSlice> slices;  // z strictly increasing
  double z_min() const { return slices.front().z_mm; }
  double z_max() const { return slices.back().z_mm; }
  double max_radius() const;
  // Radius at height z by linear interpolation between adjacent slices.
  double radius_at(double z_mm) const;
};

// Circumference-stack reconstruction from two silhouette masks: each slice
// radius shrinks until all circle samples project inside both masks.
ContainerShape lode_reconstruct(const std::array<ingest::SilhouetteMask, 2>& masks,
                                const std::array<geom::CameraProjection, 2>& cameras,
                                const geom::Point3& centroid, const ParameterSet& params);

struct ShapeMetrics {
  double width_mm = 0.0;
  double height_mm = 0.0;
  double depth_mm = 0.0;
  double volume_ml = 0.0;
};

ShapeMetrics shape_metrics(const ContainerShape& shape);

// Writes a watertight OBJ mesh: one vertex ring per slice, side quads split
// into triangles, apex-fan caps.
void mesh_export(const ContainerShape& shape, std::ostream& out, int ring_samples = 36);

struct ContentBelief {
  ProbVector posterior{};
  ContentClass map_class = ContentClass::Empty;
};

// Equal probability for empty and unknown before the first observation.
ContentBelief initial_belief();

using TransitionMatrix = std::array<std::array<double, kContentClassCount>, kContentClassCount>;

ContentBelief fuse_content_step(const ContentBelief& prior, const ProbVector& view_a,
                                const ProbVector& view_b, const TransitionMatrix& transition);

// Left fold of fuse_content_step over all frames; result[k] is the belief
// after frame k.
std::vector<ContentBelief> fuse_content_stream(const ingest::EstimateStream& stream,
                                               const TransitionMatrix& transition);

// m = m_C + lambda * V * rho(tau) for the MAP class; empty and unknown carry
// zero filling.
double estimate_mass(const ContentBelief& belief, double volume_ml, const DensityTable& densities,
                     double container_mass_g);

}  // namespace handover::perception
