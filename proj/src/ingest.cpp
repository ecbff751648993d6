#include "handover/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "handover/errors.hpp"
#include "json.hpp"

namespace handover::ingest {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::optional<double> parse_real(std::string_view s) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end) return std::nullopt;
  return v;
}

std::optional<long> parse_int(std::string_view s) {
  long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFile(path.filename().string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// PGM masks

int SilhouetteMask::count() const {
  return static_cast<int>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string pgm_token(const std::string& data, size_t& pos, const std::string& name) {
  while (pos < data.size()) {
    char c = data[pos];
    if (c == '#') {
      while (pos < data.size() && data[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  size_t start = pos;
  while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
  if (start == pos) throw TruncatedFile(name + ": unexpected end of header");
  return data.substr(start, pos - start);
}

}  // namespace

SilhouetteMask parse_mask(const fs::path& path) {
  const std::string name = path.filename().string();
  const std::string data = read_file(path);
  size_t pos = 0;

  const std::string magic = pgm_token(data, pos, name);
  if (magic != "P2" && magic != "P5")
    throw UnsupportedFormat(name + ": expected PGM magic P2 or P5, got '" + magic + "'");

  auto header_int = [&](const char* what) {
    const std::string tok = pgm_token(data, pos, name);
    auto v = parse_int(tok);
    if (!v || *v <= 0)
      throw UnsupportedFormat(name + ": bad " + what + " '" + tok + "'");
    return static_cast<int>(*v);
  };
  const int width = header_int("width");
  const int height = header_int("height");
  const int maxval = header_int("maxval");
  if (maxval > 65535) throw UnsupportedFormat(name + ": maxval > 65535");

  SilhouetteMask mask;
  mask.width = width;
  mask.height = height;
  mask.bits.resize(static_cast<size_t>(width) * height);

  if (magic == "P2") {
    for (size_t i = 0; i < mask.bits.size(); ++i) {
      const std::string tok = [&] {
        try {
          return pgm_token(data, pos, name);
        } catch (const TruncatedFile&) {
          throw TruncatedFile(name + ": raster ends after " + std::to_string(i) + " of " +
                              std::to_string(mask.bits.size()) + " values");
        }
      }();
      auto v = parse_int(tok);
      if (!v || *v < 0 || *v > maxval)
        throw UnsupportedFormat(name + ": bad raster value '" + tok + "'");
      mask.bits[i] = *v > 127 ? 1 : 0;
    }
  } else {
    if (maxval > 255) throw UnsupportedFormat(name + ": binary PGM with maxval > 255");
    if (pos >= data.size() || !std::isspace(static_cast<unsigned char>(data[pos])))
      throw TruncatedFile(name + ": missing raster separator");
    ++pos;
    if (data.size() - pos < mask.bits.size())
      throw TruncatedFile(name + ": raster has " + std::to_string(data.size() - pos) +
                          " bytes, expected " + std::to_string(mask.bits.size()));
    for (size_t i = 0; i < mask.bits.size(); ++i)
      mask.bits[i] = static_cast<unsigned char>(data[pos + i]) > 127 ? 1 : 0;
  }
  return mask;
}

void write_mask(const SilhouetteMask& mask, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  out << "P5\n" << mask.width << " " << mask.height << "\n255\n";
  for (std::uint8_t b : mask.bits) out.put(b ? char(255) : char(0));
}

// ---------------------------------------------------------------------------
// Calibration

geom::CameraProjection parse_calibration(const fs::path& path) {
  const std::string name = path.filename().string();
  const std::string data = read_file(path);

  std::istringstream in(data);
  std::vector<std::string> tokens;
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  if (tokens.size() != 14)
    throw MalformedCalibration(name + ": expected 14 numbers (12 matrix entries + image size), got " +
                               std::to_string(tokens.size()));

  geom::CameraProjection cam;
  for (int i = 0; i < 12; ++i) {
    auto v = parse_real(tokens[i]);
    if (!v) throw MalformedCalibration(name + ": bad number '" + tokens[i] + "'");
    cam.matrix(i / 4, i % 4) = *v;
  }
  for (int i = 0; i < 2; ++i) {
    auto v = parse_int(tokens[12 + i]);
    if (!v || *v <= 0)
      throw MalformedCalibration(name + ": bad image dimension '" + tokens[12 + i] + "'");
    (i == 0 ? cam.image_width : cam.image_height) = static_cast<int>(*v);
  }
  if (std::abs(cam.matrix.leftCols<3>().determinant()) < 1e-12)
    throw MalformedCalibration(name + ": projection matrix has singular 3x3 block");
  return cam;
}

void write_calibration(const geom::CameraProjection& cam, const fs::path& path) {
  std::ofstream out(path);
  char buf[64];
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", cam.matrix(r, c));
      out << buf << (c == 3 ? "\n" : " ");
    }
  }
  out << cam.image_width << " " << cam.image_height << "\n";
}

// ---------------------------------------------------------------------------
// Trace CSV
//
// Columns: frame, t, 63 left-hand coords, 63 right-hand coords, then u0, v0,
// u1, v1 centroid pixels. Empty cells mark absent hands / occluded views.

namespace {

constexpr int kHandCols = kHandKeypoints * 3;
constexpr int kTraceCols = 2 + 2 * kHandCols + 4;

std::optional<HandKeypoints> parse_hand_cells(const std::vector<std::string>& cells, int first,
                                              const std::string& where) {
  int present = 0;
  for (int i = 0; i < kHandCols; ++i)
    if (!cells[first + i].empty()) ++present;
  if (present == 0) return std::nullopt;
  if (present != kHandCols)
    throw SchemaViolation(where + ": hand has " + std::to_string(present) + " of " +
                          std::to_string(kHandCols) + " coordinates; a present hand needs all 21 keypoints");
  HandKeypoints kp;
  for (int k = 0; k < kHandKeypoints; ++k) {
    for (int a = 0; a < 3; ++a) {
      auto v = parse_real(cells[first + 3 * k + a]);
      if (!v) throw SchemaViolation(where + ": bad coordinate '" + cells[first + 3 * k + a] + "'");
      kp[k][a] = *v;
    }
  }
  return kp;
}

}  // namespace

std::vector<TraceFrame> parse_trace(const fs::path& path) {
  const std::string name = path.filename().string();
  std::ifstream in(path);
  if (!in) throw MissingFile(name);

  std::vector<TraceFrame> frames;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv(line);
    if (line_no == 1 && !cells.empty() && cells[0] == "frame") continue;  // header

    const std::string where = name + ":" + std::to_string(line_no);
    if (static_cast<int>(cells.size()) != kTraceCols)
      throw SchemaViolation(where + ": expected " + std::to_string(kTraceCols) + " columns, got " +
                            std::to_string(cells.size()));

    TraceFrame f;
    auto idx = parse_int(cells[0]);
    auto ts = parse_real(cells[1]);
    if (!idx || !ts) throw SchemaViolation(where + ": bad frame index or timestamp");
    f.frame_index = static_cast<int>(*idx);
    f.timestamp = *ts;
    f.left_hand = parse_hand_cells(cells, 2, where + " (left hand)");
    f.right_hand = parse_hand_cells(cells, 2 + kHandCols, where + " (right hand)");

    for (int view = 0; view < 2; ++view) {
      const std::string& cu = cells[2 + 2 * kHandCols + 2 * view];
      const std::string& cv = cells[2 + 2 * kHandCols + 2 * view + 1];
      if (cu.empty() != cv.empty())
        throw SchemaViolation(where + ": centroid pixel of view " + std::to_string(view) +
                              " must have both or neither coordinate");
      if (!cu.empty()) {
        auto u = parse_real(cu);
        auto v = parse_real(cv);
        if (!u || !v) throw SchemaViolation(where + ": bad centroid pixel");
        f.centroid_px[view] = geom::Pixel(*u, *v);
      }
    }

    if (!frames.empty() && f.timestamp <= frames.back().timestamp)
      throw InvariantViolation(where + ": timestamps must be strictly increasing");
    frames.push_back(std::move(f));
  }
  return frames;
}

void write_trace(const std::vector<TraceFrame>& frames, const fs::path& path) {
  std::ofstream out(path);
  out << "frame,t";
  for (const char* side : {"l", "r"})
    for (int k = 0; k < kHandKeypoints; ++k)
      out << "," << side << "_x" << k << "," << side << "_y" << k << "," << side << "_z" << k;
  out << ",u0,v0,u1,v1\n";

  for (const TraceFrame& f : frames) {
    out << f.frame_index << "," << format_double(f.timestamp);
    for (const auto* hand : {&f.left_hand, &f.right_hand}) {
      if (*hand) {
        for (const auto& kp : **hand)
          out << "," << format_double(kp.x()) << "," << format_double(kp.y()) << ","
              << format_double(kp.z());
      } else {
        for (int i = 0; i < kHandCols; ++i) out << ",";
      }
    }
    for (int view = 0; view < 2; ++view) {
      if (f.centroid_px[view])
        out << "," << format_double(f.centroid_px[view]->x()) << ","
            << format_double(f.centroid_px[view]->y());
      else
        out << ",,";
    }
    out << "\n";
  }
}

// ---------------------------------------------------------------------------
// Estimates CSV: frame, view, then one probability per content class.

EstimateStream parse_estimates(const fs::path& path, int frame_count) {
  const std::string name = path.filename().string();
  std::ifstream in(path);
  if (!in) throw MissingFile(name);

  EstimateStream stream;
  stream.probs.resize(frame_count);
  std::vector<std::array<bool, 2>> seen(frame_count, {false, false});

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv(line);
    if (line_no == 1 && !cells.empty() && cells[0] == "frame") continue;

    const std::string where = name + ":" + std::to_string(line_no);
    if (cells.size() != 2 + kContentClassCount)
      throw SchemaViolation(where + ": expected " + std::to_string(2 + kContentClassCount) +
                            " columns, got " + std::to_string(cells.size()));
    auto frame = parse_int(cells[0]);
    auto view = parse_int(cells[1]);
    if (!frame || *frame < 0 || *frame >= frame_count)
      throw SchemaViolation(where + ": frame index out of range");
    if (!view || (*view != 0 && *view != 1)) throw SchemaViolation(where + ": view must be 0 or 1");
    if (seen[*frame][*view])
      throw SchemaViolation(where + ": duplicate row for frame " + std::to_string(*frame) +
                            " view " + std::to_string(*view));

    ProbVector p{};
    double sum = 0.0;
    for (int i = 0; i < kContentClassCount; ++i) {
      auto v = parse_real(cells[2 + i]);
      if (!v) throw SchemaViolation(where + ": bad probability '" + cells[2 + i] + "'");
      if (*v < 0.0)
        throw InvariantViolation(where + ": negative probability " + cells[2 + i]);
      p[i] = *v;
      sum += *v;
    }
    if (std::abs(sum - 1.0) > 1e-6)
      throw InvariantViolation(where + " (frame " + std::to_string(*frame) + ", view " +
                               std::to_string(*view) + "): probabilities sum to " +
                               format_double(sum) + ", expected 1");

    stream.probs[*frame][*view] = p;
    seen[*frame][*view] = true;
  }

  for (int f = 0; f < frame_count; ++f)
    for (int v = 0; v < 2; ++v)
      if (!seen[f][v])
        throw InvariantViolation(name + ": missing probabilities for frame " + std::to_string(f) +
                                 " view " + std::to_string(v));
  return stream;
}

void write_estimates(const EstimateStream& stream, const fs::path& path) {
  std::ofstream out(path);
  out << "frame,view,empty,P5,P9,R5,R9,W5,W9,unknown\n";
  for (size_t f = 0; f < stream.probs.size(); ++f) {
    for (int v = 0; v < 2; ++v) {
      out << f << "," << v;
      for (double p : stream.probs[f][v]) out << "," << format_double(p);
      out << "\n";
    }
  }
}

// ---------------------------------------------------------------------------
// Scenario bundle

namespace {

const char* const kBundleFiles[] = {"scenario.json", "trace.csv",  "calib_0.txt", "calib_1.txt",
                                    "mask_0.pgm",    "mask_1.pgm", "estimates.csv"};

void require_key_subset(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                        const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* a) { return key == a; }) == allowed.end())
      throw SchemaViolation(where + ": unknown key '" + key + "'");
  }
}

}  // namespace

HandoverScenario parse_scenario(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw MissingFile(dir.string());
  for (const char* f : kBundleFiles)
    if (!fs::exists(dir / f)) throw MissingFile(f);

  HandoverScenario sc;
  sc.id = dir.filename().string();
  if (sc.id.empty()) sc.id = dir.parent_path().filename().string();

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(dir / "scenario.json"));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaViolation(std::string("scenario.json: ") + e.what());
  }
  require_key_subset(j, {"id", "container", "operator_frame", "delivery", "params"},
                     "scenario.json");

  try {
    if (j.contains("id")) sc.id = j["id"].get<std::string>();

    if (!j.contains("container")) throw SchemaViolation("scenario.json: missing 'container'");
    const auto& c = j["container"];
    require_key_subset(c, {"id", "mass_g", "true_type", "true_level", "capacity_ml", "opaque"},
                       "scenario.json container");
    sc.container_id = c.value("id", std::string("container"));
    sc.truth.container_mass_g = c.at("mass_g").get<double>();
    const std::string type_s = c.at("true_type").get<std::string>();
    auto type = fill_type_from_string(type_s);
    if (!type) throw SchemaViolation("scenario.json: unknown true_type '" + type_s + "'");
    sc.truth.true_type = *type;
    sc.truth.true_level = c.at("true_level").get<double>();
    sc.truth.capacity_ml = c.value("capacity_ml", 0.0);
    sc.truth.opaque = c.value("opaque", false);

    sc.operator_frame = j.value("operator_frame", 0);
    if (!j.contains("operator_frame"))
      sc.load_notes.push_back("scenario.json: operator_frame defaulted to 0");

    if (j.contains("delivery")) {
      const auto& d = j["delivery"];
      require_key_subset(d, {"target_mm", "radius_mm"}, "scenario.json delivery");
      if (d.contains("target_mm")) {
        const auto& t = d["target_mm"];
        if (!t.is_array() || t.size() != 3)
          throw SchemaViolation("scenario.json: delivery.target_mm must be an array of 3 numbers");
        for (int i = 0; i < 3; ++i) sc.delivery_target[i] = t[i].get<double>();
      } else {
        sc.delivery_target = geom::Point3(0.0, -400.0, 100.0);
        sc.load_notes.push_back("scenario.json: delivery target defaulted to (0,-400,100) mm");
      }
      sc.delivery_radius_mm = d.value("radius_mm", 500.0);
      if (!d.contains("radius_mm"))
        sc.load_notes.push_back("scenario.json: delivery radius defaulted to 500 mm");
    } else {
      sc.delivery_target = geom::Point3(0.0, -400.0, 100.0);
      sc.delivery_radius_mm = 500.0;
      sc.load_notes.push_back("scenario.json: delivery defaulted to (0,-400,100) mm, radius 500 mm");
    }

    if (j.contains("params"))
      apply_param_overrides_json(sc.params, j["params"].dump(), "scenario.json params",
                                 sc.load_notes);
    else
      sc.load_notes.push_back("scenario.json: all parameters at defaults");
  } catch (const nlohmann::json::exception& e) {
    throw SchemaViolation(std::string("scenario.json: ") + e.what());
  }

  const bool level_zero = sc.truth.true_level == 0.0;
  if (level_zero != (sc.truth.true_type == FillType::None))
    throw InvariantViolation("scenario.json: true_level must be 0 exactly when true_type is none");
  if (sc.truth.true_level != 0.0 && sc.truth.true_level != 0.5 && sc.truth.true_level != 0.9)
    throw InvariantViolation("scenario.json: true_level must be 0, 0.5 or 0.9");
  if (sc.truth.container_mass_g < 0.0)
    throw InvariantViolation("scenario.json: container mass_g must be nonnegative");
  if (sc.truth.true_type != FillType::None && sc.truth.capacity_ml <= 0.0)
    throw InvariantViolation("scenario.json: capacity_ml must be positive for a filled container");

  sc.cameras[0] = parse_calibration(dir / "calib_0.txt");
  sc.cameras[1] = parse_calibration(dir / "calib_1.txt");
  sc.shape_masks[0] = parse_mask(dir / "mask_0.pgm");
  sc.shape_masks[1] = parse_mask(dir / "mask_1.pgm");
  sc.frames = parse_trace(dir / "trace.csv");

  if (sc.frames.empty()) throw InvariantViolation("trace.csv: scenario needs at least one frame");
  for (int v = 0; v < 2; ++v) {
    if (sc.shape_masks[v].width != sc.cameras[v].image_width ||
        sc.shape_masks[v].height != sc.cameras[v].image_height)
      throw InvariantViolation("mask_" + std::to_string(v) + ".pgm: size " +
                               std::to_string(sc.shape_masks[v].width) + "x" +
                               std::to_string(sc.shape_masks[v].height) +
                               " does not match calibration image size");
  }
  if (sc.operator_frame < 0 || sc.operator_frame >= static_cast<int>(sc.frames.size()))
    throw InvariantViolation("scenario.json: operator_frame out of range");
  const TraceFrame& op = sc.frames[sc.operator_frame];
  if (!op.centroid_px[0] || !op.centroid_px[1])
    throw InvariantViolation("scenario.json: operator_frame " + std::to_string(sc.operator_frame) +
                             " lacks a centroid pixel in both views");

  sc.estimates = parse_estimates(dir / "estimates.csv", static_cast<int>(sc.frames.size()));
  return sc;
}

}  // namespace handover::ingest
