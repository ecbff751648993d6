#pragma once

#include <array>
#include <string>
#include <vector>

#include "handover/content.hpp"

namespace handover {

// Linear effort-to-force calibration of the parallel gripper plus the
// quasi-static grip constants (F = a*eps + b; F_req = m (g + a_max) / mu).
struct GripModel {
  double a_n_per_effort = 25.35;
  double b_n = 0.045;
  double mu = 1.0;
  double a_max_m_s2 = 27.9;
  double g_m_s2 = 9.81;
  double effort_min = 0.01;
  double effort_max = 1.25;
};

// Constants of the safety scores: psi_h distance scale L, sensitivity c,
// delivery radius eta, and tip-over angle phi.
struct SafetyParams {
  double L_mm = 21.0;
  double c = 0.995;
  double eta_mm = 500.0;
  double phi_rad = 0.7853981633974483;  // pi/4
};

struct ParameterSet {
  // Gripper / hand geometry.
  double gripper_width_mm = 22.0;  // w_g
  double hand_width_mm = 20.0;     // w_h

  // Safety sensitivity.
  double sensitivity_c = 0.995;
  double delivery_radius_mm = 500.0;
  double tip_angle_rad = 0.7853981633974483;

  // Quasi-static grip.
  double friction_mu = 1.0;
  double accel_max_m_s2 = 27.9;
  double gravity_m_s2 = 9.81;
  double effort_a = 25.35;
  double effort_b_n = 0.045;
  double effort_min = 0.01;
  double effort_max = 1.25;

  // Kalman filter (constant velocity, per axis).
  double kalman_q_mm2_s3 = 100.0;
  double kalman_r_mm2 = 25.0;

  // Circumference-stack shape reconstruction.
  int shape_circle_samples = 36;
  double shape_dz_mm = 2.0;
  double shape_dr_mm = 1.0;
  double shape_rmin_mm = 1.0;
  double shape_zscan_mm = 500.0;

  // Simulator.
  double sim_dt_s = 1.0 / 30.0;
  double v_max_mm_s = 500.0;
  double standoff_mm = 100.0;
  double grasp_trigger_mm = 10.0;
  double finger_length_mm = 40.0;
  double max_aperture_mm = 85.0;
  double close_speed_mm_s = 250.0;
  double place_tolerance_mm = 5.0;
  double hold_duration_s = 2.0;
  double post_trace_limit_s = 30.0;
  double contact_noise_n = 0.0;
  double orientation_noise_rad = 0.0;
  bool lock_region = true;
  std::array<double, 3> tool_home_mm = {0.0, 100.0, 400.0};

  DensityTable densities;

  // Fused-classifier transition matrix, row stochastic, row = class at k-1.
  std::array<std::array<double, kContentClassCount>, kContentClassCount> transition;

  ParameterSet();

  // Margin r = (w_g + w_h)/2 around hand keypoints; the safety distance L
  // equals r.
  double margin_r_mm() const { return 0.5 * (gripper_width_mm + hand_width_mm); }

  GripModel grip_model() const;
  SafetyParams safety_params() const;
};

std::array<std::array<double, kContentClassCount>, kContentClassCount> default_transition_matrix();

// Applies overrides from a JSON object (text already parsed by the caller is
// passed as serialized text to keep nlohmann out of this header). Unknown
// keys raise SchemaViolation; every field left at its default is recorded in
// `notes`.
void apply_param_overrides_json(ParameterSet& params, const std::string& json_text,
                                const std::string& origin, std::vector<std::string>& notes);

}  // namespace handover
