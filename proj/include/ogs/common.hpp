// Copyright Contributors to the ogs Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ogs {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Rgb  = Eigen::Vector3d;

inline constexpr double kPi = std::numbers::pi;

/// Minimum signed distance in front of a projection plane (scene units).
inline constexpr double kNearEpsilon = 1e-4;

enum class ErrorCode {
    BehindCamera,
    BehindTangentPlane,
    DegenerateDirection,
    PolarSingularity,
    DegenerateSplat,
    DomainOverflow,
    FisheyeOutOfDomain,
    ClassicUnsupportedCamera,
    DecodeError,
    MissingProperty,
    TruncatedFile,
    UnsupportedFormat,
    NonOrthonormalRotation,
    UnknownModelTag,
    DimensionMismatch,
    TooSmall,
    InvalidArgument,
    IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::BehindTangentPlane: return "BehindTangentPlane";
    case ErrorCode::DegenerateDirection: return "DegenerateDirection";
    case ErrorCode::PolarSingularity: return "PolarSingularity";
    case ErrorCode::DegenerateSplat: return "DegenerateSplat";
    case ErrorCode::DomainOverflow: return "DomainOverflow";
    case ErrorCode::FisheyeOutOfDomain: return "FisheyeOutOfDomain";
    case ErrorCode::ClassicUnsupportedCamera: return "ClassicUnsupportedCamera";
    case ErrorCode::DecodeError: return "DecodeError";
    case ErrorCode::MissingProperty: return "MissingProperty";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::NonOrthonormalRotation: return "NonOrthonormalRotation";
    case ErrorCode::UnknownModelTag: return "UnknownModelTag";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

/// Every failure in the library is reported as an Error carrying a code, so
/// callers (the CLI in particular) can map codes to exit statuses.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string &what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

    ErrorCode code() const noexcept { return code_; }
    /// Message without the code prefix.
    const std::string &detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

} // namespace ogs
