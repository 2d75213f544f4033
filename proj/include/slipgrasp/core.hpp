#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace slipgrasp {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// Error categories. The CLI maps each category to its own exit code.
enum class ErrorCode : int {
  invalid_argument = 1,
  invalid_object,
  no_intersection,
  degenerate_contact,
  sampler_exhausted,
  cell_too_coarse,
  not_force_closure,
  invalid_cutoff,
  dimension_mismatch,
  shape_mismatch,
  too_few_objects,
  empty_input,
  untrained_detector,
  untrained_planner,
  degenerate_segment,
  out_of_range,
  not_rotational,
  config,
  io,
  schema,
};

inline std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::invalid_object: return "InvalidObject";
    case ErrorCode::no_intersection: return "NoIntersection";
    case ErrorCode::degenerate_contact: return "DegenerateContact";
    case ErrorCode::sampler_exhausted: return "SamplerExhausted";
    case ErrorCode::cell_too_coarse: return "CellTooCoarse";
    case ErrorCode::not_force_closure: return "NotForceClosure";
    case ErrorCode::invalid_cutoff: return "InvalidCutoff";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::shape_mismatch: return "ShapeMismatch";
    case ErrorCode::too_few_objects: return "TooFewObjects";
    case ErrorCode::empty_input: return "EmptyInput";
    case ErrorCode::untrained_detector: return "UntrainedDetector";
    case ErrorCode::untrained_planner: return "UntrainedPlanner";
    case ErrorCode::degenerate_segment: return "DegenerateSegment";
    case ErrorCode::out_of_range: return "OutOfRange";
    case ErrorCode::not_rotational: return "NotRotational";
    case ErrorCode::config: return "ConfigError";
    case ErrorCode::io: return "IoError";
    case ErrorCode::schema: return "SchemaError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline constexpr double gravity = 9.81;

// SplitMix64 finalizer. Child seeds are derived as mix(master ^ mix(stream + index)),
// so every worker gets an independent stream regardless of scheduling order.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index = 0) {
  return mix64(master ^ mix64(stream * 0x100000001b3ULL + index));
}

}  // namespace slipgrasp
