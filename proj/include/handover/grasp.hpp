#pragma once

#include <optional>
#include <vector>

#include "handover/geom.hpp"
#include "handover/params.hpp"
#include "handover/perception.hpp"

namespace handover::grasp {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
  bool contains(double z) const { return z >= lo && z <= hi; }
  double mid() const { return 0.5 * (lo + hi); }
};

struct SafeRegion {
  Interval graspable;                  // vertical range reachable by the gripper
  std::vector<double> unsafe_heights;  // keypoint heights inside the container band
  std::vector<Interval> safe;          // disjoint, sorted
  std::optional<Interval> chosen;      // largest, ties toward the higher one
};

// Vertical interval the gripper fingers fit on: [z_min + w_g/2, z_max - w_g/2].
Interval graspable_range(double z_min, double z_max, double gripper_width_mm);
Interval graspable_range(const perception::ContainerShape& shape, double gripper_width_mm);

// Heights of all keypoints inside the container's frontal occupancy band:
// (h_y > t_y - w/2) and (|h_x - t_x| < w).
std::vector<double> unsafe_heights(const std::vector<ingest::HandKeypoints>& hands,
                                   const geom::Point3& t, double width_mm);

SafeRegion safe_region(const Interval& graspable, const std::vector<double>& unsafe,
                       double margin_r_mm);

// Verification route: evaluates the range predicates on a uniform height
// grid and reassembles intervals. Used by the oracle subcommand and the
// property tests.
std::vector<Interval> safe_region_bruteforce(const Interval& graspable,
                                             const std::vector<double>& unsafe, double margin_r_mm,
                                             double grid_mm = 1.0);

struct GraspPlan {
  bool feasible = false;
  geom::Point3 target = geom::Point3::Zero();  // (t_x, t_y, g_z)
  double gripper_width_mm = 0.0;               // container diameter at g_z
  Eigen::Matrix3d orientation = Eigen::Matrix3d::Identity();
};

// Target in the middle of the chosen interval, width from the shape at g_z,
// horizontal front-approach orientation with heading from the hand frame.
// z_shift moves the reference shape to the container's current height.
GraspPlan plan_grasp(const SafeRegion& region, const perception::ContainerShape& shape,
                     double z_shift, const perception::TrackFrame& track_frame);

// F = m (g + a_max) / mu, with mass in grams and force in newtons.
double required_force(double mass_g, const GripModel& model);

double force_for_effort(double effort, const GripModel& model);

struct EffortResult {
  double effort = 0.0;
  bool out_of_range = false;  // outside the calibrated effort range
};

// Exact inverse of the effort model; the flag marks values the robot would
// have to clamp before issuing.
EffortResult effort_for_force(double force_n, const GripModel& model);

// Issued efforts are limited to the calibrated range.
double clamp_effort(double effort, const GripModel& model);

}  // namespace handover::grasp
