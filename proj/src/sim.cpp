#include "handover/sim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "handover/errors.hpp"
#include "json.hpp"

namespace handover::sim {

using geom::Point3;
using geom::Vec3;

const char* to_string(Phase p) {
  switch (p) {
    case Phase::Approach: return "APPROACH";
    case Phase::Standoff: return "STANDOFF";
    case Phase::Grasp: return "GRASP";
    case Phase::Transport: return "TRANSPORT";
    case Phase::Place: return "PLACE";
    case Phase::Done: return "DONE";
    case Phase::Aborted: return "ABORTED";
  }
  return "?";
}

const char* to_string(EventType e) {
  switch (e) {
    case EventType::GraspExecuted: return "GRASP_EXECUTED";
    case EventType::NoSafeRegion: return "NO_SAFE_REGION";
    case EventType::HandContact: return "HAND_CONTACT";
    case EventType::Slip: return "SLIP";
    case EventType::Placed: return "PLACED";
    case EventType::Timeout: return "TIMEOUT";
  }
  return "?";
}

bool grip_stability(double applied_force_n, double true_mass_g, double accel_m_s2, double mu,
                    double gravity_m_s2) {
  return mu * applied_force_n >= (true_mass_g / 1000.0) * (gravity_m_s2 + std::abs(accel_m_s2));
}

FingerPair finger_segments(const Point3& tool, const Eigen::Matrix3d& orientation,
                           double aperture_mm, double finger_length_mm) {
  const Vec3 closing = orientation.col(0);
  const Vec3 approach = orientation.col(1);
  const Vec3 off = 0.5 * aperture_mm * closing;
  FingerPair f;
  f.left_tip = tool + off;
  f.left_base = f.left_tip - finger_length_mm * approach;
  f.right_tip = tool - off;
  f.right_base = f.right_tip - finger_length_mm * approach;
  return f;
}

double min_hand_distance(const FingerPair& fingers,
                         const std::vector<ingest::HandKeypoints>& hands, double hand_width_mm) {
  if (hands.empty()) return std::numeric_limits<double>::infinity();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& hand : hands) {
    for (const auto& kp : hand) {
      best = std::min(best, geom::point_segment_distance(kp, fingers.left_base, fingers.left_tip));
      best =
          std::min(best, geom::point_segment_distance(kp, fingers.right_base, fingers.right_tip));
    }
  }
  return std::max(0.0, best - 0.5 * hand_width_mm);
}

double applied_force(double effort, const GripModel& model, double noise_n, bool in_contact) {
  if (!in_contact) throw NotInContact();
  return model.a_n_per_effort * effort + model.b_n + noise_n;
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Deterministic standard normal (Box-Muller over the raw 64-bit stream, so
// results do not depend on the standard library's distribution).
double draw_normal(std::mt19937_64& rng) {
  const double u1 = ((rng() >> 11) + 1.0) * 0x1p-53;
  const double u2 = (rng() >> 11) * 0x1p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

struct Controller {
  Point3 pos;
  Vec3 vel = Vec3::Zero();

  // Velocity-bounded, acceleration-bounded step toward a (possibly moving)
  // target; the dist/dt term prevents overshoot.
  double step(const Point3& target, double dt, double v_max, double a_max_mm_s2) {
    const Vec3 to = target - pos;
    const double dist = to.norm();
    Vec3 v_des = Vec3::Zero();
    if (dist > 1e-12) {
      const double mag = std::min({v_max, std::sqrt(2.0 * a_max_mm_s2 * dist), dist / dt});
      v_des = to / dist * mag;
    }
    Vec3 dv = v_des - vel;
    const double dv_max = a_max_mm_s2 * dt;
    if (dv.norm() > dv_max) dv *= dv_max / dv.norm();
    vel += dv;
    pos += vel * dt;
    return dv.norm() / dt;
  }
};

std::vector<ingest::HandKeypoints> hands_at(const ingest::TraceFrame& frame) {
  std::vector<ingest::HandKeypoints> hands;
  if (frame.left_hand) hands.push_back(*frame.left_hand);
  if (frame.right_hand) hands.push_back(*frame.right_hand);
  return hands;
}

}  // namespace

SimulationLog run_handover(const ingest::HandoverScenario& scenario, std::uint64_t seed) {
  const ParameterSet& params = scenario.params;
  const GripModel grip = params.grip_model();
  const double dt = params.sim_dt_s;

  SimulationLog log;
  log.scenario_id = scenario.id;
  log.true_mass_g = scenario.truth.total_mass_g(params.densities);
  log.hand_detection_failure = true;
  for (const auto& f : scenario.frames)
    if (f.left_hand || f.right_hand) {
      log.hand_detection_failure = false;
      break;
    }

  // Perception products. The shape is stored relative to the centroid of
  // the operator-selected frame so it can follow the tracked container.
  const perception::ContainerTrack track = perception::track_container(scenario);
  const std::vector<perception::ContentBelief> beliefs =
      perception::fuse_content_stream(scenario.estimates, params.transition);

  const ingest::TraceFrame& op = scenario.frames[scenario.operator_frame];
  const Point3 op_centroid = geom::triangulate(scenario.cameras[0], *op.centroid_px[0],
                                               scenario.cameras[1], *op.centroid_px[1]);
  perception::ContainerShape shape =
      perception::lode_reconstruct(scenario.shape_masks, scenario.cameras, op_centroid, params);
  for (auto& s : shape.slices) s.z_mm -= op_centroid.z();
  log.shape = perception::shape_metrics(shape);

  log.last_belief_mass_g = perception::estimate_mass(beliefs.back(), log.shape.volume_ml,
                                                     params.densities, scenario.truth.container_mass_g);

  std::mt19937_64 rng(seed ^ fnv1a(scenario.id));
  const double contact_noise =
      params.contact_noise_n > 0.0 ? params.contact_noise_n * draw_normal(rng) : 0.0;
  const double tilt_noise =
      params.orientation_noise_rad > 0.0 ? std::abs(params.orientation_noise_rad * draw_normal(rng))
                                         : 0.0;

  const int n_track = static_cast<int>(track.frames.size());
  const int trace_count = track.trace_frame_count;
  const int max_steps = n_track + static_cast<int>(std::ceil(params.post_trace_limit_s / dt));

  Controller ctl{Point3(params.tool_home_mm[0], params.tool_home_mm[1], params.tool_home_mm[2])};
  Phase phase = Phase::Approach;
  double aperture = params.max_aperture_mm;
  double effort = 0.0;
  double force = 0.0;
  // Default heading before any plan: approach along +y, closing axis x, z up.
  Eigen::Matrix3d tool_orientation = Eigen::Matrix3d::Identity();

  std::optional<grasp::Interval> locked;
  bool no_safe_active = false;
  bool in_contact_event = false;
  bool trigger_fired = false;
  Vec3 attach_offset = Vec3::Zero();
  Point3 container_pos = Point3::Zero();

  for (int k = 0; k < max_steps; ++k) {
    const int ti = std::min(k, n_track - 1);
    const perception::TrackFrame& tf = track.frames[ti];
    const int trace_fi = std::min(k, trace_count - 1);
    const std::vector<ingest::HandKeypoints> hands = hands_at(scenario.frames[trace_fi]);
    const double t_now = k < n_track ? tf.t : track.frames.back().t + (k - n_track + 1) * dt;

    StepRecord rec;
    rec.step = k;
    rec.t = t_now;

    if (phase == Phase::Approach || phase == Phase::Standoff || phase == Phase::Grasp) {
      container_pos = tf.position;
      grasp::GraspPlan plan;
      bool plan_feasible = false;

      if (tf.valid) {
        try {
          const grasp::Interval z_range = grasp::graspable_range(
              tf.position.z() + shape.z_min(), tf.position.z() + shape.z_max(),
              params.gripper_width_mm);
          const std::vector<double> occluded =
              grasp::unsafe_heights(hands, tf.position, log.shape.width_mm);
          grasp::SafeRegion region = grasp::safe_region(z_range, occluded, params.margin_r_mm());

          if (params.lock_region && locked) {
            // Stay on the region picked first; switch only within overlap.
            std::optional<grasp::Interval> best;
            double best_overlap = 0.0;
            for (const auto& iv : region.safe) {
              const double overlap =
                  std::min(iv.hi, locked->hi) - std::max(iv.lo, locked->lo);
              if (overlap > best_overlap) {
                best_overlap = overlap;
                best = iv;
              }
            }
            region.chosen = best;
          }
          if (region.chosen) locked = region.chosen;

          plan = grasp::plan_grasp(region, shape, tf.position.z(), tf);
          plan_feasible = plan.feasible;
        } catch (const TooShort&) {
          plan_feasible = false;
        }
      }

      if (plan_feasible) {
        no_safe_active = false;
        tool_orientation = plan.orientation;
        rec.safe_region_found = true;
        rec.target_gz = plan.target.z();

        if (phase != Phase::Grasp && (ctl.pos - plan.target).norm() < params.grasp_trigger_mm) {
          phase = Phase::Grasp;
          if (!trigger_fired) {
            trigger_fired = true;
            log.min_hand_distance_window_mm = std::numeric_limits<double>::infinity();
          }
        }

        rec.accel_mm_s2 = ctl.step(plan.target, dt, params.v_max_mm_s, params.accel_max_m_s2 * 1000.0);

        if (phase == Phase::Grasp) {
          aperture = std::max(plan.gripper_width_mm, aperture - params.close_speed_mm_s * dt);
          if (aperture <= plan.gripper_width_mm) {
            // Gripper closed on the container: issue the effort from the
            // mass predicted at this frame.
            log.grasp.executed = true;
            log.grasp.step = k;
            log.grasp.t = t_now;
            log.grasp.trace_frame = trace_fi;
            log.grasp.g_z_mm = plan.target.z();
            log.grasp.width_mm = plan.gripper_width_mm;
            log.grasp.predicted_mass_g = perception::estimate_mass(
                beliefs[trace_fi], log.shape.volume_ml, params.densities,
                scenario.truth.container_mass_g);
            log.grasp.predicted_force_n = grasp::required_force(log.grasp.predicted_mass_g, grip);
            const grasp::EffortResult er = grasp::effort_for_force(log.grasp.predicted_force_n, grip);
            log.grasp.effort_raw = er.effort;
            log.grasp.effort_issued = grasp::clamp_effort(er.effort, grip);
            log.grasp.effort_clamped = er.out_of_range;
            log.grasp.applied_force_n =
                applied_force(log.grasp.effort_issued, grip, contact_noise, true);
            effort = log.grasp.effort_issued;
            force = log.grasp.applied_force_n;
            attach_offset = tf.position - ctl.pos;
            log.events.push_back({EventType::GraspExecuted, t_now, ""});
            phase = Phase::Transport;
          }
        }
      } else {
        if (tf.valid && !no_safe_active) {
          log.events.push_back({EventType::NoSafeRegion, t_now, ""});
          no_safe_active = true;
        }
        if (phase == Phase::Grasp) {
          phase = Phase::Standoff;
          aperture = params.max_aperture_mm;
        } else if (tf.valid) {
          phase = Phase::Standoff;
        }
        Point3 target = ctl.pos;  // hold until the container is tracked
        if (tf.valid) {
          Vec3 front = Point3(params.tool_home_mm[0], params.tool_home_mm[1], params.tool_home_mm[2]) -
                       tf.position;
          front.z() = 0.0;
          if (front.norm() < 1e-9) front = -Vec3::UnitY();
          front.normalize();
          target = tf.position + (0.5 * log.shape.width_mm + params.standoff_mm) * front;
          target.z() = tf.position.z();
        }
        rec.accel_mm_s2 = ctl.step(target, dt, params.v_max_mm_s, params.accel_max_m_s2 * 1000.0);
      }
    } else if (phase == Phase::Transport) {
      rec.accel_mm_s2 =
          ctl.step(scenario.delivery_target, dt, params.v_max_mm_s, params.accel_max_m_s2 * 1000.0);
      container_pos = ctl.pos + attach_offset;

      if (!grip_stability(force, log.true_mass_g, rec.accel_mm_s2 / 1000.0, grip.mu, grip.g_m_s2)) {
        log.slipped = true;
        log.events.push_back({EventType::Slip, t_now, "grip force insufficient"});
        log.final_base_center = Point3(container_pos.x(), container_pos.y(),
                                       container_pos.z() + shape.z_min());
        log.final_tilt_rad = params.tip_angle_rad;  // a dropped container scores as tipped
        phase = Phase::Done;
      } else if ((ctl.pos - scenario.delivery_target).norm() < params.place_tolerance_mm &&
                 ctl.vel.norm() < params.place_tolerance_mm / dt * 0.5) {
        phase = Phase::Place;
      }
    } else if (phase == Phase::Place) {
      rec.accel_mm_s2 = ctl.step(scenario.delivery_target, dt, params.v_max_mm_s,
                                 params.accel_max_m_s2 * 1000.0);
      container_pos = ctl.pos + attach_offset;
      aperture += params.close_speed_mm_s * dt;
      if (aperture > log.grasp.width_mm + 1.0) {
        log.placed = true;
        log.final_tilt_rad = tilt_noise;
        log.final_base_center =
            Point3(container_pos.x(), container_pos.y(), container_pos.z() + shape.z_min());
        log.events.push_back({EventType::Placed, t_now, ""});
        effort = 0.0;
        force = 0.0;
        phase = Phase::Done;
      }
    }

    // Hand clearance bookkeeping runs in every phase.
    const FingerPair fingers =
        finger_segments(ctl.pos, tool_orientation, aperture, params.finger_length_mm);
    const double l = min_hand_distance(fingers, hands, params.hand_width_mm);
    log.min_hand_distance_overall_mm = std::min(log.min_hand_distance_overall_mm, l);
    const bool in_window = !trigger_fired || (log.grasp.step < 0 || k <= log.grasp.step);
    if (in_window) log.min_hand_distance_window_mm = std::min(log.min_hand_distance_window_mm, l);
    if (l <= 0.0 && !hands.empty()) {
      if (!in_contact_event) {
        log.events.push_back({EventType::HandContact, t_now, ""});
        in_contact_event = true;
      }
    } else {
      in_contact_event = false;
    }

    rec.phase = phase;
    rec.tool = ctl.pos;
    rec.velocity = ctl.vel;
    rec.aperture_mm = aperture;
    rec.effort = effort;
    rec.container = container_pos;
    rec.min_hand_distance_mm = l;
    rec.applied_force_n = force;
    log.steps.push_back(rec);

    if (phase == Phase::Done) break;

    if (k == n_track - 1 && !log.grasp.executed) {
      // Recording plus hold exhausted without a grasp.
      log.timed_out = true;
      log.events.push_back({EventType::Timeout, t_now, "no grasp before end of recording"});
      phase = Phase::Aborted;
      break;
    }
    if (k == max_steps - 1) {
      log.timed_out = true;
      log.events.push_back({EventType::Timeout, t_now, "delivery did not finish"});
      break;
    }
  }
  return log;
}

// ---------------------------------------------------------------------------
// Serialization

void write_steps_csv(const SimulationLog& log, std::ostream& out) {
  using ingest::format_double;
  out << "step,t,phase,tool_x,tool_y,tool_z,vel_x,vel_y,vel_z,accel_mm_s2,aperture_mm,effort,"
         "container_x,container_y,container_z,min_hand_distance_mm,applied_force_n,"
         "safe_region_found,target_gz\n";
  for (const auto& s : log.steps) {
    out << s.step << "," << format_double(s.t) << "," << to_string(s.phase) << ","
        << format_double(s.tool.x()) << "," << format_double(s.tool.y()) << ","
        << format_double(s.tool.z()) << "," << format_double(s.velocity.x()) << ","
        << format_double(s.velocity.y()) << "," << format_double(s.velocity.z()) << ","
        << format_double(s.accel_mm_s2) << "," << format_double(s.aperture_mm) << ","
        << format_double(s.effort) << "," << format_double(s.container.x()) << ","
        << format_double(s.container.y()) << "," << format_double(s.container.z()) << ","
        << (std::isinf(s.min_hand_distance_mm) ? "inf" : format_double(s.min_hand_distance_mm))
        << "," << format_double(s.applied_force_n) << "," << (s.safe_region_found ? 1 : 0) << ","
        << (std::isnan(s.target_gz) ? "" : format_double(s.target_gz)) << "\n";
  }
}

void write_events_json(const SimulationLog& log, std::ostream& out) {
  nlohmann::json j;
  j["scenario"] = log.scenario_id;
  j["events"] = nlohmann::json::array();
  for (const auto& e : log.events) {
    nlohmann::json ej;
    ej["type"] = to_string(e.type);
    ej["t"] = e.t;
    if (!e.detail.empty()) ej["detail"] = e.detail;
    j["events"].push_back(ej);
  }
  out << j.dump(2) << "\n";
}

}  // namespace handover::sim
