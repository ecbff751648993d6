#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "handover/geom.hpp"
#include "handover/grasp.hpp"
#include "handover/ingest.hpp"
#include "handover/perception.hpp"

namespace handover::sim {

enum class Phase { Approach, Standoff, Grasp, Transport, Place, Done, Aborted };
const char* to_string(Phase p);

enum class EventType { GraspExecuted, NoSafeRegion, HandContact, Slip, Placed, Timeout };
const char* to_string(EventType e);

struct Event {
  EventType type;
  double t = 0.0;
  std::string detail;
};

struct StepRecord {
  int step = 0;
  double t = 0.0;
  Phase phase = Phase::Approach;
  geom::Point3 tool = geom::Point3::Zero();
  geom::Vec3 velocity = geom::Vec3::Zero();
  double accel_mm_s2 = 0.0;  // commanded acceleration magnitude
  double aperture_mm = 0.0;
  double effort = 0.0;
  geom::Point3 container = geom::Point3::Zero();
  double min_hand_distance_mm = std::numeric_limits<double>::infinity();
  double applied_force_n = 0.0;
  bool safe_region_found = false;
  double target_gz = std::numeric_limits<double>::quiet_NaN();
};

struct GraspInfo {
  bool executed = false;
  int step = -1;
  double t = 0.0;
  int trace_frame = -1;
  double g_z_mm = 0.0;
  double width_mm = 0.0;
  double predicted_mass_g = 0.0;
  double predicted_force_n = 0.0;
  double effort_raw = 0.0;
  double effort_issued = 0.0;
  bool effort_clamped = false;
  double applied_force_n = 0.0;
};

struct SimulationLog {
  std::string scenario_id;
  std::vector<StepRecord> steps;
  std::vector<Event> events;
  GraspInfo grasp;

  // min over the contact-risk window (trigger to closure), or the whole run
  // when the trigger never fired.
  double min_hand_distance_window_mm = std::numeric_limits<double>::infinity();
  double min_hand_distance_overall_mm = std::numeric_limits<double>::infinity();

  bool placed = false;
  bool slipped = false;
  bool timed_out = false;
  bool hand_detection_failure = false;

  std::optional<geom::Point3> final_base_center;  // set on PLACED or SLIP
  double final_tilt_rad = 0.0;

  double last_belief_mass_g = 0.0;  // predicted mass at the final trace frame
  double true_mass_g = 0.0;
  perception::ShapeMetrics shape;
};

// Replays the scenario through the kinematic state machine. The seed drives
// contact and orientation noise only; with the default zero noise levels the
// run is fully determined by the scenario.
SimulationLog run_handover(const ingest::HandoverScenario& scenario, std::uint64_t seed = 0);

// Quasi-static grip check: mu F >= m (g + |a|).
bool grip_stability(double applied_force_n, double true_mass_g, double accel_m_s2, double mu,
                    double gravity_m_s2 = 9.81);

struct FingerPair {
  geom::Point3 left_base, left_tip;
  geom::Point3 right_base, right_tip;
};

// Two parallel finger segments separated by the aperture along the closing
// axis, running along the approach axis and meeting the tool point at the
// tips.
FingerPair finger_segments(const geom::Point3& tool, const Eigen::Matrix3d& orientation,
                           double aperture_mm, double finger_length_mm);

// Closest distance between the finger segments and any keypoint, less the
// hand sphere radius w_h/2, clamped at zero. +inf with no hands.
double min_hand_distance(const FingerPair& fingers,
                         const std::vector<ingest::HandKeypoints>& hands, double hand_width_mm);

// Measured normal force after closing: F = a e + b plus contact noise.
double applied_force(double effort, const GripModel& model, double noise_n, bool in_contact);

void write_steps_csv(const SimulationLog& log, std::ostream& out);
void write_events_json(const SimulationLog& log, std::ostream& out);

}  // namespace handover::sim
