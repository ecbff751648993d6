#include "handover/grasp.hpp"

#include <algorithm>
#include <cmath>

#include "handover/errors.hpp"

namespace handover::grasp {

using geom::Point3;
using geom::Vec3;

Interval graspable_range(double z_min, double z_max, double gripper_width_mm) {
  if (z_max - z_min <= gripper_width_mm) throw TooShort();
  return {z_min + 0.5 * gripper_width_mm, z_max - 0.5 * gripper_width_mm};
}

Interval graspable_range(const perception::ContainerShape& shape, double gripper_width_mm) {
  return graspable_range(shape.z_min(), shape.z_max(), gripper_width_mm);
}

std::vector<double> unsafe_heights(const std::vector<ingest::HandKeypoints>& hands,
                                   const Point3& t, double width_mm) {
  std::vector<double> out;
  for (const auto& hand : hands) {
    for (const auto& kp : hand) {
      if (kp.y() > t.y() - 0.5 * width_mm && std::abs(kp.x() - t.x()) < width_mm)
        out.push_back(kp.z());
    }
  }
  return out;
}

SafeRegion safe_region(const Interval& graspable, const std::vector<double>& unsafe,
                       double margin_r_mm) {
  SafeRegion region;
  region.graspable = graspable;
  region.unsafe_heights = unsafe;

  if (unsafe.empty()) {
    region.safe = {graspable};
  } else {
    const auto [lo_it, hi_it] = std::minmax_element(unsafe.begin(), unsafe.end());
    const double below = *lo_it - margin_r_mm;
    const double above = *hi_it + margin_r_mm;
    if (graspable.lo <= std::min(below, graspable.hi)) {
      Interval l{graspable.lo, std::min(below, graspable.hi)};
      if (l.lo <= l.hi) region.safe.push_back(l);
    }
    if (std::max(above, graspable.lo) <= graspable.hi) {
      Interval u{std::max(above, graspable.lo), graspable.hi};
      if (u.lo <= u.hi) region.safe.push_back(u);
    }
    // A hand entirely outside the graspable range on one side can leave the
    // two pieces overlapping as the full range; merge in that case.
    if (region.safe.size() == 2 && region.safe[0].hi >= region.safe[1].lo)
      region.safe = {graspable};
  }

  if (!region.safe.empty()) {
    const Interval* best = &region.safe[0];
    for (const Interval& iv : region.safe) {
      if (iv.length() > best->length() + 1e-12 ||
          (std::abs(iv.length() - best->length()) <= 1e-12 && iv.lo > best->lo))
        best = &iv;
    }
    region.chosen = *best;
  }
  return region;
}

std::vector<Interval> safe_region_bruteforce(const Interval& graspable,
                                             const std::vector<double>& unsafe, double margin_r_mm,
                                             double grid_mm) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double h : unsafe) {
    lo = std::min(lo, h);
    hi = std::max(hi, h);
  }

  auto is_safe = [&](double z) {
    if (unsafe.empty()) return true;
    return z <= lo - margin_r_mm || z >= hi + margin_r_mm;
  };

  std::vector<Interval> out;
  std::optional<double> run_start;
  double prev = graspable.lo;
  for (double z = graspable.lo;; z += grid_mm) {
    const bool past_end = z > graspable.hi;
    const double zz = past_end ? graspable.hi : z;
    const bool safe = !past_end || zz >= prev ? is_safe(zz) : false;
    if (safe && !run_start) run_start = zz;
    if ((!safe || past_end) && run_start) {
      out.push_back({*run_start, safe ? zz : prev});
      run_start.reset();
    }
    if (past_end) break;
    prev = zz;
  }
  return out;
}

GraspPlan plan_grasp(const SafeRegion& region, const perception::ContainerShape& shape,
                     double z_shift, const perception::TrackFrame& track_frame) {
  GraspPlan plan;
  if (!region.chosen || !track_frame.valid) return plan;

  const double g_z = region.chosen->mid();
  plan.target = Point3(track_frame.position.x(), track_frame.position.y(), g_z);
  plan.gripper_width_mm = 2.0 * shape.radius_at(g_z - z_shift);

  // Horizontal heading from the hand orientation; the gripper axis stays
  // horizontal so the container is taken straight from the front.
  Vec3 heading = track_frame.orientation.col(1);
  heading.z() = 0.0;
  if (heading.norm() < 1e-9) heading = Vec3::UnitY();
  heading.normalize();
  const Vec3 up = Vec3::UnitZ();
  plan.orientation.col(0) = heading.cross(up);  // closing axis
  plan.orientation.col(1) = heading;            // approach axis
  plan.orientation.col(2) = up;
  plan.feasible = true;
  return plan;
}

double required_force(double mass_g, const GripModel& model) {
  return (mass_g / 1000.0) * (model.g_m_s2 + model.a_max_m_s2) / model.mu;
}

double force_for_effort(double effort, const GripModel& model) {
  return model.a_n_per_effort * effort + model.b_n;
}

EffortResult effort_for_force(double force_n, const GripModel& model) {
  EffortResult r;
  r.effort = (force_n - model.b_n) / model.a_n_per_effort;
  r.out_of_range = r.effort < model.effort_min || r.effort > model.effort_max;
  return r;
}

double clamp_effort(double effort, const GripModel& model) {
  return std::clamp(effort, model.effort_min, model.effort_max);
}

}  // namespace handover::grasp
