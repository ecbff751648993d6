#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "handover/content.hpp"
#include "handover/geom.hpp"
#include "handover/params.hpp"

namespace handover::ingest {

inline constexpr int kHandKeypoints = 21;
using HandKeypoints = std::array<geom::Point3, kHandKeypoints>;

struct TraceFrame {
  int frame_index = 0;
  double timestamp = 0.0;
  std::optional<HandKeypoints> left_hand;
  std::optional<HandKeypoints> right_hand;
  // Object centroid pixel per view; absent when the object is occluded in
  // that view.
  std::array<std::optional<geom::Pixel>, 2> centroid_px;
};

struct SilhouetteMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;  // row-major, 1 = occupied

  bool occupied(int x, int y) const {
    if (x < 0 || y < 0 || x >= width || y >= height) return false;
    return bits[static_cast<size_t>(y) * width + x] != 0;
  }
  bool occupied_px(const geom::Pixel& px) const {
    return occupied(static_cast<int>(std::lround(px.x())), static_cast<int>(std::lround(px.y())));
  }
  int count() const;
  bool empty() const { return count() == 0; }
};

struct EstimateStream {
  // probs[frame][view] is a distribution over the 8 content classes.
  std::vector<std::array<ProbVector, 2>> probs;
};

struct GroundTruth {
  double container_mass_g = 0.0;
  FillType true_type = FillType::None;
  double true_level = 0.0;  // 0, 0.5 or 0.9
  double capacity_ml = 0.0;
  bool opaque = false;

  double filling_mass_g(const DensityTable& d) const {
    return true_level * capacity_ml * d.of(true_type);
  }
  double total_mass_g(const DensityTable& d) const {
    return container_mass_g + filling_mass_g(d);
  }
};

struct HandoverScenario {
  std::string id;
  std::string container_id;  // batch matrix column key
  std::vector<TraceFrame> frames;
  std::array<geom::CameraProjection, 2> cameras;
  std::array<SilhouetteMask, 2> shape_masks;
  int operator_frame = 0;  // occlusion-free frame the shape masks belong to
  EstimateStream estimates;
  GroundTruth truth;
  ParameterSet params;
  geom::Point3 delivery_target = geom::Point3::Zero();
  double delivery_radius_mm = 500.0;
  std::vector<std::string> load_notes;
};

// Directory bundle: scenario.json, trace.csv, calib_0.txt, calib_1.txt,
// mask_0.pgm, mask_1.pgm, estimates.csv.
HandoverScenario parse_scenario(const std::filesystem::path& dir);

SilhouetteMask parse_mask(const std::filesystem::path& path);
void write_mask(const SilhouetteMask& mask, const std::filesystem::path& path);

geom::CameraProjection parse_calibration(const std::filesystem::path& path);
void write_calibration(const geom::CameraProjection& cam, const std::filesystem::path& path);

std::vector<TraceFrame> parse_trace(const std::filesystem::path& path);
void write_trace(const std::vector<TraceFrame>& frames, const std::filesystem::path& path);

EstimateStream parse_estimates(const std::filesystem::path& path, int frame_count);
void write_estimates(const EstimateStream& stream, const std::filesystem::path& path);

// Locale-independent shortest-round-trip formatting used by every CSV/text
// writer in the project.
std::string format_double(double v);

}  // namespace handover::ingest
