#include "handover/params.hpp"

#include <functional>
#include <map>
#include <sstream>

#include "handover/errors.hpp"
#include "json.hpp"

namespace handover {

std::array<std::array<double, kContentClassCount>, kContentClassCount> default_transition_matrix() {
  constexpr int kEmpty = 0, kP5 = 1, kP9 = 2, kR5 = 3, kR9 = 4, kW5 = 5, kW9 = 6, kUnknown = 7;
  std::array<std::array<double, kContentClassCount>, kContentClassCount> t{};

  // A filling status never reverts; empty may start filling with any type,
  // full levels may only fall back to unknown.
  t[kEmpty][kEmpty] = 0.8;
  t[kEmpty][kP5] = t[kEmpty][kR5] = t[kEmpty][kW5] = 0.2 / 3.0;

  for (const auto [half, full] : {std::pair{kP5, kP9}, {kR5, kR9}, {kW5, kW9}}) {
    t[half][half] = 0.8;
    t[half][full] = 0.15;
    t[half][kUnknown] = 0.05;
    t[full][full] = 0.95;
    t[full][kUnknown] = 0.05;
  }

  t[kUnknown][kUnknown] = 0.9;
  t[kUnknown][kEmpty] = 0.1;
  return t;
}

ParameterSet::ParameterSet() : transition(default_transition_matrix()) {}

GripModel ParameterSet::grip_model() const {
  GripModel m;
  m.a_n_per_effort = effort_a;
  m.b_n = effort_b_n;
  m.mu = friction_mu;
  m.a_max_m_s2 = accel_max_m_s2;
  m.g_m_s2 = gravity_m_s2;
  m.effort_min = effort_min;
  m.effort_max = effort_max;
  return m;
}

SafetyParams ParameterSet::safety_params() const {
  SafetyParams s;
  s.L_mm = margin_r_mm();
  s.c = sensitivity_c;
  s.eta_mm = delivery_radius_mm;
  s.phi_rad = tip_angle_rad;
  return s;
}

void apply_param_overrides_json(ParameterSet& p, const std::string& json_text,
                                const std::string& origin, std::vector<std::string>& notes) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaViolation(origin + ": invalid JSON: " + e.what());
  }
  if (!j.is_object()) throw SchemaViolation(origin + ": parameter overrides must be an object");

  const std::map<std::string, std::function<void(const nlohmann::json&)>> setters = {
      {"gripper_width_mm", [&](const auto& v) { p.gripper_width_mm = v.template get<double>(); }},
      {"hand_width_mm", [&](const auto& v) { p.hand_width_mm = v.template get<double>(); }},
      {"sensitivity_c", [&](const auto& v) { p.sensitivity_c = v.template get<double>(); }},
      {"delivery_radius_mm", [&](const auto& v) { p.delivery_radius_mm = v.template get<double>(); }},
      {"tip_angle_rad", [&](const auto& v) { p.tip_angle_rad = v.template get<double>(); }},
      {"friction_mu", [&](const auto& v) { p.friction_mu = v.template get<double>(); }},
      {"accel_max_m_s2", [&](const auto& v) { p.accel_max_m_s2 = v.template get<double>(); }},
      {"gravity_m_s2", [&](const auto& v) { p.gravity_m_s2 = v.template get<double>(); }},
      {"effort_a", [&](const auto& v) { p.effort_a = v.template get<double>(); }},
      {"effort_b_n", [&](const auto& v) { p.effort_b_n = v.template get<double>(); }},
      {"effort_min", [&](const auto& v) { p.effort_min = v.template get<double>(); }},
      {"effort_max", [&](const auto& v) { p.effort_max = v.template get<double>(); }},
      {"kalman_q_mm2_s3", [&](const auto& v) { p.kalman_q_mm2_s3 = v.template get<double>(); }},
      {"kalman_r_mm2", [&](const auto& v) { p.kalman_r_mm2 = v.template get<double>(); }},
      {"shape_circle_samples", [&](const auto& v) { p.shape_circle_samples = v.template get<int>(); }},
      {"shape_dz_mm", [&](const auto& v) { p.shape_dz_mm = v.template get<double>(); }},
      {"shape_dr_mm", [&](const auto& v) { p.shape_dr_mm = v.template get<double>(); }},
      {"shape_rmin_mm", [&](const auto& v) { p.shape_rmin_mm = v.template get<double>(); }},
      {"shape_zscan_mm", [&](const auto& v) { p.shape_zscan_mm = v.template get<double>(); }},
      {"sim_dt_s", [&](const auto& v) { p.sim_dt_s = v.template get<double>(); }},
      {"v_max_mm_s", [&](const auto& v) { p.v_max_mm_s = v.template get<double>(); }},
      {"standoff_mm", [&](const auto& v) { p.standoff_mm = v.template get<double>(); }},
      {"grasp_trigger_mm", [&](const auto& v) { p.grasp_trigger_mm = v.template get<double>(); }},
      {"finger_length_mm", [&](const auto& v) { p.finger_length_mm = v.template get<double>(); }},
      {"max_aperture_mm", [&](const auto& v) { p.max_aperture_mm = v.template get<double>(); }},
      {"close_speed_mm_s", [&](const auto& v) { p.close_speed_mm_s = v.template get<double>(); }},
      {"place_tolerance_mm", [&](const auto& v) { p.place_tolerance_mm = v.template get<double>(); }},
      {"hold_duration_s", [&](const auto& v) { p.hold_duration_s = v.template get<double>(); }},
      {"post_trace_limit_s", [&](const auto& v) { p.post_trace_limit_s = v.template get<double>(); }},
      {"contact_noise_n", [&](const auto& v) { p.contact_noise_n = v.template get<double>(); }},
      {"orientation_noise_rad",
       [&](const auto& v) { p.orientation_noise_rad = v.template get<double>(); }},
      {"lock_region", [&](const auto& v) { p.lock_region = v.template get<bool>(); }},
      {"tool_home_mm",
       [&](const auto& v) {
         if (!v.is_array() || v.size() != 3)
           throw SchemaViolation(origin + ": tool_home_mm must be an array of 3 numbers");
         for (int i = 0; i < 3; ++i) p.tool_home_mm[i] = v[i].template get<double>();
       }},
      {"densities",
       [&](const auto& v) {
         if (!v.is_object()) throw SchemaViolation(origin + ": densities must be an object");
         for (const auto& [k, val] : v.items()) {
           if (k == "pasta")
             p.densities.pasta_g_ml = val.template get<double>();
           else if (k == "rice")
             p.densities.rice_g_ml = val.template get<double>();
           else if (k == "water")
             p.densities.water_g_ml = val.template get<double>();
           else
             throw SchemaViolation(origin + ": unknown density key '" + k + "'");
         }
       }},
      {"transition",
       [&](const auto& v) {
         if (!v.is_array() || v.size() != kContentClassCount)
           throw SchemaViolation(origin + ": transition must be an 8x8 array");
         for (int r = 0; r < kContentClassCount; ++r) {
           if (!v[r].is_array() || v[r].size() != kContentClassCount)
             throw SchemaViolation(origin + ": transition must be an 8x8 array");
           double sum = 0.0;
           for (int c = 0; c < kContentClassCount; ++c) {
             p.transition[r][c] = v[r][c].template get<double>();
             if (p.transition[r][c] < 0.0)
               throw InvariantViolation(origin + ": transition entries must be nonnegative");
             sum += p.transition[r][c];
           }
           if (std::abs(sum - 1.0) > 1e-6)
             throw InvariantViolation(origin + ": transition row " + std::to_string(r) +
                                      " sums to " + std::to_string(sum) + ", expected 1");
         }
       }},
  };

  std::vector<std::string> applied;
  for (const auto& [key, value] : j.items()) {
    auto it = setters.find(key);
    if (it == setters.end()) throw SchemaViolation(origin + ": unknown parameter '" + key + "'");
    try {
      it->second(value);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaViolation(origin + ": parameter '" + key + "': " + e.what());
    }
    applied.push_back(key);
  }

  std::ostringstream note;
  note << origin << ": " << applied.size() << " parameter override(s)";
  if (!applied.empty()) {
    note << " [";
    for (size_t i = 0; i < applied.size(); ++i) note << (i ? " " : "") << applied[i];
    note << "]";
  }
  note << "; defaults kept for " << (setters.size() - applied.size()) << " parameter(s)";
  notes.push_back(note.str());
}

}  // namespace handover
