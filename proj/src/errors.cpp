#include "cmclab/errors.hpp"

#include "cmclab/vec.hpp"

namespace cmclab {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MollifierTooNarrow: return "MollifierTooNarrow";
    case ErrorCode::OutOfBox: return "OutOfBox";
    case ErrorCode::DegenerateAxis: return "DegenerateAxis";
    case ErrorCode::AmplitudeTooLarge: return "AmplitudeTooLarge";
    case ErrorCode::NeckUnresolved: return "NeckUnresolved";
    case ErrorCode::EmptySurface: return "EmptySurface";
    case ErrorCode::EmptyBall: return "EmptyBall";
    case ErrorCode::SolverDiverged: return "SolverDiverged";
    case ErrorCode::DomainTooThin: return "DomainTooThin";
    case ErrorCode::NonpositiveMeanCurvature: return "NonpositiveMeanCurvature";
    case ErrorCode::DeficitTooLarge: return "DeficitTooLarge";
    case ErrorCode::EmptyThresholdSet: return "EmptyThresholdSet";
    case ErrorCode::NoBallsSurvive: return "NoBallsSurvive";
    case ErrorCode::InsufficientPoints: return "InsufficientPoints";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

double unit_ball_volume(int k) {
  switch (k) {
    case 1: return 2.0;
    case 2: return kPi;
    case 3: return 4.0 * kPi / 3.0;
    case 4: return kPi * kPi / 2.0;
    default: throw Error(ErrorCode::InvalidArgument, "unit_ball_volume: unsupported dimension");
  }
}

double unit_sphere_area(int k) { return k * unit_ball_volume(k); }

}  // namespace cmclab
