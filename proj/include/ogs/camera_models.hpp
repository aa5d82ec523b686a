// Copyright Contributors to the ogs Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "ogs/common.hpp"
#include "ogs/core_model.hpp"

#include <algorithm>
#include <cmath>

namespace ogs {

/// Continuous pixel coordinate; the center of pixel (col, row) is (col + 0.5, row + 0.5).
struct PixelCoord {
    double u = 0.0;
    double v = 0.0;
};

inline PixelCoord pixel_center(int col, int row) { return {col + 0.5, row + 0.5}; }

namespace detail {

// sin(r) / r with a series branch near zero.
inline double sinc(double r) {
    if (std::abs(r) < 1e-6)
        return 1.0 - r * r / 6.0;
    return std::sin(r) / r;
}

} // namespace detail

/// Unit camera-space ray direction through pixel `p`.
inline Vec3 pixel_to_direction(const CameraRig &rig, const PixelCoord &p) {
    switch (rig.model) {
    case CameraModel::Pinhole: {
        const Vec3 d((p.u - rig.cx) / rig.fx, (p.v - rig.cy) / rig.fy, 1.0);
        return d.normalized();
    }
    case CameraModel::FisheyeEquidistant: {
        const double a = (p.u - rig.cx) / rig.fx;
        const double b = (p.v - rig.cy) / rig.fy;
        const double r = std::sqrt(a * a + b * b);
        if (r > kPi)
            throw Error(ErrorCode::FisheyeOutOfDomain, "angular radius exceeds pi");
        const double k = detail::sinc(r);
        return Vec3(a * k, b * k, std::cos(r)).normalized();
    }
    case CameraModel::Equirectangular: {
        const double w = rig.width;
        const double h = rig.height;
        const double lon = kPi * (2.0 * p.u - w) / w;
        const double lat = kPi * (p.v - 0.5 * h) / h;
        return {std::sin(lon) * std::cos(lat), std::sin(lat), std::cos(lat) * std::cos(lon)};
    }
    }
    throw Error(ErrorCode::InvalidArgument, "unknown camera model");
}

/// Inverse of pixel_to_direction. Panorama longitudes wrap modulo the width and
/// latitudes clamp to the image.
inline PixelCoord direction_to_pixel(const CameraRig &rig, const Vec3 &dir) {
    switch (rig.model) {
    case CameraModel::Pinhole: {
        const Vec3 d = dir.normalized();
        if (!(d.z() > kNearEpsilon))
            throw Error(ErrorCode::BehindCamera, "direction is not in front of the pinhole camera");
        return {rig.cx + rig.fx * d.x() / d.z(), rig.cy + rig.fy * d.y() / d.z()};
    }
    case CameraModel::FisheyeEquidistant: {
        const double rho = std::hypot(dir.x(), dir.y());
        const double theta = std::atan2(rho, dir.z());
        if (!(theta < kPi) || (rho == 0.0 && dir.z() <= 0.0))
            throw Error(ErrorCode::FisheyeOutOfDomain, "direction is at the fisheye antipode");
        const double k = rho > 1e-300 ? theta / rho : 1.0 / dir.z();
        return {rig.cx + rig.fx * dir.x() * k, rig.cy + rig.fy * dir.y() * k};
    }
    case CameraModel::Equirectangular: {
        const double w = rig.width;
        const double h = rig.height;
        const double lon = std::atan2(dir.x(), dir.z());
        const double lat = std::atan2(dir.y(), std::hypot(dir.x(), dir.z()));
        double u = 0.5 * w + w * lon / (2.0 * kPi);
        u = std::fmod(u, w);
        if (u < 0.0)
            u += w;
        if (u >= w)
            u = 0.0;
        double v = 0.5 * h + h * lat / kPi;
        v = std::clamp(v, 0.0, std::nextafter(h, 0.0));
        return {u, v};
    }
    }
    throw Error(ErrorCode::InvalidArgument, "unknown camera model");
}

/// Largest angle from +z of any ray inside the image, used for culling.
inline double max_view_angle(const CameraRig &rig) {
    if (rig.model == CameraModel::Equirectangular)
        return kPi;
    double best = 0.0;
    const double us[2] = {0.0, static_cast<double>(rig.width)};
    const double vs[2] = {0.0, static_cast<double>(rig.height)};
    for (double u : us) {
        for (double v : vs) {
            if (rig.model == CameraModel::Pinhole) {
                const Vec3 d = pixel_to_direction(rig, {u, v});
                best = std::max(best, std::acos(std::clamp(d.z(), -1.0, 1.0)));
            } else {
                const double a = (u - rig.cx) / rig.fx;
                const double b = (v - rig.cy) / rig.fy;
                best = std::max(best, std::min(std::sqrt(a * a + b * b), kPi));
            }
        }
    }
    return best;
}

} // namespace ogs
