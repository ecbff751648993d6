#pragma once

#include <stdexcept>
#include <string>

namespace handover {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad input data or files. The CLI maps these to exit code 2.
struct ValidationError : Error {
  using Error::Error;
};

// Numeric or state preconditions violated inside the pipeline. Exit code 1.
struct ComputeError : Error {
  using Error::Error;
};

struct DegenerateProjection : ComputeError {
  DegenerateProjection() : ComputeError("point projects to infinity (homogeneous depth ~ 0)") {}
};

struct ParallelRays : ComputeError {
  ParallelRays() : ComputeError("back-projected rays are parallel; cannot triangulate") {}
};

struct BehindCamera : ComputeError {
  BehindCamera() : ComputeError("triangulated point has nonpositive depth in a view") {}
};

struct NonFiniteMeasurement : ComputeError {
  NonFiniteMeasurement() : ComputeError("filter measurement is not finite") {}
};

struct MissingFile : ValidationError {
  explicit MissingFile(const std::string& name) : ValidationError("missing file: " + name), file(name) {}
  std::string file;
};

struct SchemaViolation : ValidationError {
  using ValidationError::ValidationError;
};

struct InvariantViolation : ValidationError {
  using ValidationError::ValidationError;
};

struct UnsupportedFormat : ValidationError {
  using ValidationError::ValidationError;
};

struct TruncatedFile : ValidationError {
  using ValidationError::ValidationError;
};

struct MalformedCalibration : ValidationError {
  using ValidationError::ValidationError;
};

struct NoValidFrames : ValidationError {
  NoValidFrames() : ValidationError("no frame yields a container centroid measurement") {}
};

struct EmptyIntersection : ValidationError {
  EmptyIntersection() : ValidationError("no shape slice survives the silhouette constraints") {}
};

struct TooShort : ComputeError {
  TooShort() : ComputeError("container height does not exceed the gripper finger width") {}
};

struct DegenerateShape : ComputeError {
  using ComputeError::ComputeError;
};

struct NotInContact : ComputeError {
  NotInContact() : ComputeError("gripper is not closed on the container") {}
};

}  // namespace handover
