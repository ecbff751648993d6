#pragma once

#include <array>
#include <optional>
#include <string>

namespace handover {

// Fixed class order used by every probability vector in the system:
// {empty, P5, P9, R5, R9, W5, W9, unknown}.
enum class ContentClass : int {
  Empty = 0,
  Pasta50,
  Pasta90,
  Rice50,
  Rice90,
  Water50,
  Water90,
  Unknown,
};

inline constexpr int kContentClassCount = 8;

using ProbVector = std::array<double, kContentClassCount>;

enum class FillType { None, Pasta, Rice, Water };

struct DensityTable {
  double pasta_g_ml = 0.41;
  double rice_g_ml = 0.85;
  double water_g_ml = 1.0;

  double of(FillType t) const {
    switch (t) {
      case FillType::Pasta: return pasta_g_ml;
      case FillType::Rice: return rice_g_ml;
      case FillType::Water: return water_g_ml;
      case FillType::None: return 0.0;
    }
    return 0.0;
  }
};

// Empty and unknown both map to (None, 0): an unrecognisable container is
// treated as empty for mass purposes.
inline FillType fill_type_of(ContentClass c) {
  switch (c) {
    case ContentClass::Pasta50:
    case ContentClass::Pasta90: return FillType::Pasta;
    case ContentClass::Rice50:
    case ContentClass::Rice90: return FillType::Rice;
    case ContentClass::Water50:
    case ContentClass::Water90: return FillType::Water;
    default: return FillType::None;
  }
}

inline double fill_level_of(ContentClass c) {
  switch (c) {
    case ContentClass::Pasta50:
    case ContentClass::Rice50:
    case ContentClass::Water50: return 0.5;
    case ContentClass::Pasta90:
    case ContentClass::Rice90:
    case ContentClass::Water90: return 0.9;
    default: return 0.0;
  }
}

inline const char* to_string(ContentClass c) {
  switch (c) {
    case ContentClass::Empty: return "empty";
    case ContentClass::Pasta50: return "P5";
    case ContentClass::Pasta90: return "P9";
    case ContentClass::Rice50: return "R5";
    case ContentClass::Rice90: return "R9";
    case ContentClass::Water50: return "W5";
    case ContentClass::Water90: return "W9";
    case ContentClass::Unknown: return "unknown";
  }
  return "?";
}

inline const char* to_string(FillType t) {
  switch (t) {
    case FillType::None: return "none";
    case FillType::Pasta: return "pasta";
    case FillType::Rice: return "rice";
    case FillType::Water: return "water";
  }
  return "?";
}

inline std::optional<FillType> fill_type_from_string(const std::string& s) {
  if (s == "none") return FillType::None;
  if (s == "pasta") return FillType::Pasta;
  if (s == "rice") return FillType::Rice;
  if (s == "water") return FillType::Water;
  return std::nullopt;
}

// Row label of the batch matrices: 0, P5, P9, R5, R9, W5, W9.
inline std::string config_label(FillType t, double level) {
  if (t == FillType::None) return "0";
  std::string out;
  switch (t) {
    case FillType::Pasta: out = "P"; break;
    case FillType::Rice: out = "R"; break;
    case FillType::Water: out = "W"; break;
    default: return "0";
  }
  out += level > 0.7 ? "9" : "5";
  return out;
}

}  // namespace handover
