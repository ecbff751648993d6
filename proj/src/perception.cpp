#include "handover/perception.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "handover/errors.hpp"

namespace handover::perception {

using geom::Point3;
using geom::Vec3;

HandFrame hand_frame(const HandKeypoints& keypoints) {
  HandFrame f;
  f.keypoints = keypoints;

  // Wrist -> middle-finger MCP, and index MCP -> pinky MCP across the palm.
  const Vec3 dir = keypoints[9] - keypoints[0];
  const Vec3 lateral = keypoints[5] - keypoints[17];
  if (dir.norm() < 1.0 || lateral.norm() < 1.0) return f;

  const Vec3 up_raw = lateral.cross(dir);
  if (up_raw.norm() < 1e-6) return f;

  f.direction = dir.normalized();
  f.up = up_raw.normalized();
  f.right = f.direction.cross(f.up);
  f.valid = true;
  return f;
}

// ---------------------------------------------------------------------------
// Container tracking

ContainerTrack track_container(const ingest::HandoverScenario& scenario) {
  const auto& params = scenario.params;
  const double q = params.kalman_q_mm2_s3;
  const double r = params.kalman_r_mm2;

  ContainerTrack track;
  track.trace_frame_count = static_cast<int>(scenario.frames.size());
  track.frames.resize(scenario.frames.size());

  std::optional<geom::KalmanState> state;
  double prev_t = 0.0;

  for (size_t k = 0; k < scenario.frames.size(); ++k) {
    const ingest::TraceFrame& in = scenario.frames[k];
    TrackFrame& out = track.frames[k];
    out.t = in.timestamp;

    std::optional<Point3> meas;
    if (in.centroid_px[0] && in.centroid_px[1]) {
      try {
        meas = geom::triangulate(scenario.cameras[0], *in.centroid_px[0], scenario.cameras[1],
                                 *in.centroid_px[1]);
      } catch (const ComputeError&) {
        // Inconsistent pixels behave like a missed detection.
      }
    }

    if (!state) {
      if (meas) {
        state = geom::kalman_init(*meas, r);
        out.measured = true;
      }
    } else {
      const double dt = in.timestamp - prev_t;
      if (meas) {
        state = geom::kalman_step(*state, *meas, dt, q, r);
        out.measured = true;
      } else {
        state = geom::kalman_predict(*state, dt, q);
      }
    }
    if (state) {
      out.position = state->position;
      out.valid = true;
    }
    prev_t = in.timestamp;
  }

  if (!state) throw NoValidFrames();

  // Orientation from the holding hand: the hand whose wrist is closest to
  // the filtered centroid, ties toward the right hand.
  std::vector<int> oriented;
  for (size_t k = 0; k < scenario.frames.size(); ++k) {
    const ingest::TraceFrame& in = scenario.frames[k];
    if (!track.frames[k].valid) continue;
    const Point3& t = track.frames[k].position;

    const ingest::HandKeypoints* holding = nullptr;
    if (in.left_hand && in.right_hand) {
      const double dl = ((*in.left_hand)[0] - t).norm();
      const double dr = ((*in.right_hand)[0] - t).norm();
      holding = dl < dr ? &*in.left_hand : &*in.right_hand;
    } else if (in.left_hand) {
      holding = &*in.left_hand;
    } else if (in.right_hand) {
      holding = &*in.right_hand;
    }
    if (!holding) continue;

    const HandFrame hf = hand_frame(*holding);
    if (hf.valid) {
      track.frames[k].orientation = hf.rotation();
      oriented.push_back(static_cast<int>(k));
    }
  }

  // Frames without a valid holding-hand frame inherit the nearest one in
  // time (no orientation update on hand loss).
  if (!oriented.empty()) {
    for (size_t k = 0; k < track.frames.size(); ++k) {
      if (std::binary_search(oriented.begin(), oriented.end(), static_cast<int>(k))) continue;
      auto it = std::lower_bound(oriented.begin(), oriented.end(), static_cast<int>(k));
      int best;
      if (it == oriented.end())
        best = oriented.back();
      else if (it == oriented.begin())
        best = *it;
      else
        best = (*it - static_cast<int>(k)) < (static_cast<int>(k) - *(it - 1)) ? *it : *(it - 1);
      track.frames[k].orientation = track.frames[best].orientation;
    }
  }

  // End-of-recording hold: the last pose persists for the configured time.
  const int hold_steps = static_cast<int>(std::lround(params.hold_duration_s / params.sim_dt_s));
  TrackFrame last = track.frames.back();
  for (int i = 1; i <= hold_steps; ++i) {
    TrackFrame h = last;
    h.t = last.t + i * params.sim_dt_s;
    h.measured = false;
    h.held = true;
    track.frames.push_back(h);
  }
  return track;
}

// ---------------------------------------------------------------------------
// Shape reconstruction

double ContainerShape::max_radius() const {
  double m = 0.0;
  for (const auto& s : slices) m = std::max(m, s.radius_mm);
  return m;
}

double ContainerShape::radius_at(double z_mm) const {
  if (slices.empty()) return 0.0;
  if (z_mm <= slices.front().z_mm) return slices.front().radius_mm;
  if (z_mm >= slices.back().z_mm) return slices.back().radius_mm;
  for (size_t i = 1; i < slices.size(); ++i) {
    if (z_mm <= slices[i].z_mm) {
      const auto& a = slices[i - 1];
      const auto& b = slices[i];
      const double u = (z_mm - a.z_mm) / (b.z_mm - a.z_mm);
      return a.radius_mm + u * (b.radius_mm - a.radius_mm);
    }
  }
  return slices.back().radius_mm;
}

namespace {

bool point_in_both_masks(const Point3& p, const std::array<ingest::SilhouetteMask, 2>& masks,
                         const std::array<geom::CameraProjection, 2>& cameras) {
  for (int v = 0; v < 2; ++v) {
    geom::Pixel px;
    try {
      px = geom::project(cameras[v], p);
    } catch (const DegenerateProjection&) {
      return false;
    }
    if (!masks[v].occupied_px(px)) return false;
  }
  return true;
}

// Image scale (pixel / mm) at the centroid along a horizontal direction
// perpendicular to the viewing ray.
double pixels_per_mm(const geom::CameraProjection& cam, const Point3& at) {
  Vec3 view = at - cam.center();
  Vec3 e = view.cross(Vec3::UnitZ());
  if (e.norm() < 1e-9) e = Vec3::UnitX();
  e.normalize();
  const geom::Pixel a = geom::project(cam, at + 0.5 * e);
  const geom::Pixel b = geom::project(cam, at - 0.5 * e);
  return (a - b).norm();
}

double mask_width_px(const ingest::SilhouetteMask& mask) {
  int lo = mask.width, hi = -1;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.occupied(x, y)) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
  return hi < lo ? 0.0 : hi - lo + 1;
}

}  // namespace

ContainerShape lode_reconstruct(const std::array<ingest::SilhouetteMask, 2>& masks,
                                const std::array<geom::CameraProjection, 2>& cameras,
                                const Point3& centroid, const ParameterSet& params) {
  if (masks[0].empty() || masks[1].empty()) throw EmptyIntersection();

  const int n = params.shape_circle_samples;
  const double dz = params.shape_dz_mm;
  const double dr = params.shape_dr_mm;
  const double r_min = params.shape_rmin_mm;

  double r_init = 0.0;
  for (int v = 0; v < 2; ++v) {
    const double ppm = pixels_per_mm(cameras[v], centroid);
    if (ppm > 1e-9) r_init = std::max(r_init, 0.5 * mask_width_px(masks[v]) / ppm);
  }
  if (r_init < r_min) throw EmptyIntersection();

  // Vertical extent: heights whose axis point falls inside both masks.
  double z_lo = 0.0, z_hi = 0.0;
  bool any = false;
  for (double z = centroid.z() - params.shape_zscan_mm; z <= centroid.z() + params.shape_zscan_mm;
       z += dz) {
    if (point_in_both_masks({centroid.x(), centroid.y(), z}, masks, cameras)) {
      if (!any) z_lo = z;
      z_hi = z;
      any = true;
    }
  }
  if (!any) throw EmptyIntersection();

  struct Rung {
    double z;
    double radius;
    bool ok;
  };
  std::vector<Rung> rungs;
  for (double z = z_lo; z <= z_hi + 1e-9; z += dz) {
    double found = -1.0;
    for (double r = r_init; r >= r_min; r -= dr) {
      bool all_inside = true;
      for (int i = 0; i < n && all_inside; ++i) {
        const double th = 2.0 * M_PI * i / n;
        const Point3 p(centroid.x() + r * std::cos(th), centroid.y() + r * std::sin(th), z);
        all_inside = point_in_both_masks(p, masks, cameras);
      }
      if (all_inside) {
        found = r;
        break;
      }
    }
    rungs.push_back({z, found, found >= 0.0});
  }

  // Failed rungs are trimmed at the ends and zeroed in the interior.
  size_t first = 0, last = rungs.size();
  while (first < rungs.size() && !rungs[first].ok) ++first;
  while (last > first && !rungs[last - 1].ok) --last;
  if (first >= last) throw EmptyIntersection();

  ContainerShape shape;
  for (size_t i = first; i < last; ++i)
    shape.slices.push_back({rungs[i].z, rungs[i].ok ? rungs[i].radius : 0.0});
  if (shape.slices.size() < 2) throw EmptyIntersection();
  return shape;
}

ShapeMetrics shape_metrics(const ContainerShape& shape) {
  ShapeMetrics m;
  m.width_mm = m.depth_mm = 2.0 * shape.max_radius();
  m.height_mm = shape.z_max() - shape.z_min();
  double vol_mm3 = 0.0;
  for (size_t i = 0; i + 1 < shape.slices.size(); ++i) {
    const double r = shape.slices[i].radius_mm;
    vol_mm3 += M_PI * r * r * (shape.slices[i + 1].z_mm - shape.slices[i].z_mm);
  }
  m.volume_ml = vol_mm3 / 1000.0;
  return m;
}

void mesh_export(const ContainerShape& shape, std::ostream& out, int ring_samples) {
  std::vector<ShapeSlice> rings;
  for (const auto& s : shape.slices)
    if (s.radius_mm > 0.0) rings.push_back(s);
  if (rings.size() < 2) throw DegenerateShape("mesh needs at least 2 slices with positive radius");

  const int n = ring_samples;
  out << "# container surface, millimetres\n";
  for (const auto& ring : rings) {
    for (int k = 0; k < n; ++k) {
      const double th = 2.0 * M_PI * k / n;
      out << "v " << ingest::format_double(ring.radius_mm * std::cos(th)) << " "
          << ingest::format_double(ring.radius_mm * std::sin(th)) << " "
          << ingest::format_double(ring.z_mm) << "\n";
    }
  }
  const int bottom_apex = static_cast<int>(rings.size()) * n + 1;  // OBJ indices are 1-based
  const int top_apex = bottom_apex + 1;
  out << "v 0 0 " << ingest::format_double(rings.front().z_mm) << "\n";
  out << "v 0 0 " << ingest::format_double(rings.back().z_mm) << "\n";

  auto vid = [n](int ring, int k) { return ring * n + (k % n) + 1; };
  for (size_t i = 0; i + 1 < rings.size(); ++i) {
    for (int k = 0; k < n; ++k) {
      out << "f " << vid(i, k) << " " << vid(i, k + 1) << " " << vid(i + 1, k + 1) << "\n";
      out << "f " << vid(i, k) << " " << vid(i + 1, k + 1) << " " << vid(i + 1, k) << "\n";
    }
  }
  const int last = static_cast<int>(rings.size()) - 1;
  for (int k = 0; k < n; ++k) {
    out << "f " << bottom_apex << " " << vid(0, k + 1) << " " << vid(0, k) << "\n";
    out << "f " << top_apex << " " << vid(last, k) << " " << vid(last, k + 1) << "\n";
  }
}

// ---------------------------------------------------------------------------
// Content fusion and mass

ContentBelief initial_belief() {
  ContentBelief b;
  b.posterior.fill(0.0);
  b.posterior[static_cast<int>(ContentClass::Empty)] = 0.5;
  b.posterior[static_cast<int>(ContentClass::Unknown)] = 0.5;
  b.map_class = ContentClass::Empty;
  return b;
}

namespace {

ContentClass argmax_class(const ProbVector& p) {
  int best = 0;
  for (int i = 1; i < kContentClassCount; ++i)
    if (p[i] > p[best]) best = i;
  return static_cast<ContentClass>(best);
}

}  // namespace

ContentBelief fuse_content_step(const ContentBelief& prior, const ProbVector& view_a,
                                const ProbVector& view_b, const TransitionMatrix& transition) {
  ProbVector predicted{};
  for (int i = 0; i < kContentClassCount; ++i)
    for (int j = 0; j < kContentClassCount; ++j)
      predicted[i] += transition[j][i] * prior.posterior[j];

  ContentBelief out;
  double sum = 0.0;
  for (int i = 0; i < kContentClassCount; ++i) {
    out.posterior[i] = view_a[i] * view_b[i] * predicted[i];
    sum += out.posterior[i];
  }

  if (sum <= 0.0) {
    // Views contradict every reachable class; fall back to uniform over the
    // classes with transition mass.
    int reachable = 0;
    for (int i = 0; i < kContentClassCount; ++i)
      if (predicted[i] > 0.0) ++reachable;
    for (int i = 0; i < kContentClassCount; ++i)
      out.posterior[i] = predicted[i] > 0.0 ? 1.0 / reachable : 0.0;
  } else {
    for (double& p : out.posterior) p /= sum;
  }
  out.map_class = argmax_class(out.posterior);
  return out;
}

std::vector<ContentBelief> fuse_content_stream(const ingest::EstimateStream& stream,
                                               const TransitionMatrix& transition) {
  std::vector<ContentBelief> out;
  out.reserve(stream.probs.size());
  ContentBelief belief = initial_belief();
  for (const auto& views : stream.probs) {
    belief = fuse_content_step(belief, views[0], views[1], transition);
    out.push_back(belief);
  }
  return out;
}

double estimate_mass(const ContentBelief& belief, double volume_ml, const DensityTable& densities,
                     double container_mass_g) {
  const FillType type = fill_type_of(belief.map_class);
  const double level = fill_level_of(belief.map_class);
  return container_mass_g + level * volume_ml * densities.of(type);
}

}  // namespace handover::perception
