#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "handover/params.hpp"
#include "handover/sim.hpp"

namespace handover::safety {

// psi_h = 1 / (1 + exp((2l/L - 1) ln((1-c)/c))): 0.5 at L/2, c at L,
// saturating to 1 as the gripper stays clear of the hand. l may be +inf.
double human_safety(double distance_mm, const SafetyParams& params);

// psi_f = exp(|F_pred - F_req| / F_req * ln(1-c)). When the reference force
// vanishes the score is 1 for a zero prediction and 0 (flagged) otherwise.
double object_safety(double predicted_force_n, double required_force_n, const SafetyParams& params,
                     bool* undefined_reference = nullptr);

// Post-grasp variant fed by the measured applied force; NE (nullopt) when no
// grasp was executed.
std::optional<double> post_grasp_safety(const sim::SimulationLog& log, double required_force_n,
                                        const SafetyParams& params);

// Delta = 1 - alpha/eta inside the target disc and below the tipping angle,
// else 0.
double delivery_accuracy(const geom::Point3& base_center, double tilt_rad,
                         const geom::Point3& target, const SafetyParams& params);

// Signed estimation bias, estimated minus true.
double mass_bias(double estimated_mass_g, double true_mass_g);

struct SafetyReport {
  std::string scenario;
  std::string container_id;
  std::string config_label;  // 0 / P5 / ... / W9
  double psi_h = 0.0;
  double psi_f = 0.0;
  std::optional<double> psi_f_bar;  // NE when no grasp executed
  double delta = 0.0;
  double delta_m_g = 0.0;
  double predicted_mass_g = 0.0;
  double true_mass_g = 0.0;
  double predicted_force_n = 0.0;
  double required_force_n = 0.0;
  double applied_force_n = 0.0;
  double min_hand_distance_mm = 0.0;
  bool object_safety_undefined = false;
  bool hand_detection_failure = false;
  std::vector<sim::Event> events;
};

SafetyReport build_report(const sim::SimulationLog& log, const ingest::HandoverScenario& scenario);

void write_report_csv_header(std::ostream& out);
void write_report_csv_row(const SafetyReport& report, std::ostream& out);
void write_report_json(const SafetyReport& report, const ingest::HandoverScenario& scenario,
                       std::ostream& out);

}  // namespace handover::safety
