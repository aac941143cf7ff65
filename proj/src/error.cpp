#include "polyfuse/error.hpp"

namespace polyfuse {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
        case ErrorCode::DegenerateRotation: return "DegenerateRotation";
        case ErrorCode::InvalidRotation: return "InvalidRotation";
        case ErrorCode::InvalidIntrinsics: return "InvalidIntrinsics";
        case ErrorCode::DegenerateBaseline: return "DegenerateBaseline";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::InvalidRange: return "InvalidRange";
        case ErrorCode::OddDimensions: return "OddDimensions";
        case ErrorCode::InvalidIntensity: return "InvalidIntensity";
        case ErrorCode::TotalInternalReflection: return "TotalInternalReflection";
        case ErrorCode::ZeroReflectance: return "ZeroReflectance";
        case ErrorCode::ThetaOutOfFov: return "ThetaOutOfFov";
        case ErrorCode::OutsideAnnulus: return "OutsideAnnulus";
        case ErrorCode::InvalidModel: return "InvalidModel";
        case ErrorCode::BehindCamera: return "BehindCamera";
        case ErrorCode::InvalidThreshold: return "InvalidThreshold";
        case ErrorCode::OutOfBounds: return "OutOfBounds";
        case ErrorCode::UnknownClass: return "UnknownClass";
        case ErrorCode::EmptyScene: return "EmptyScene";
        case ErrorCode::InvalidScene: return "InvalidScene";
        case ErrorCode::InvalidCalibration: return "InvalidCalibration";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

}  // namespace polyfuse
