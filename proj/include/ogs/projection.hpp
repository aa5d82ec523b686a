// Copyright Contributors to the ogs Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Projection maps and their Jacobians.
//
// Two routes are provided. The classical route projects every splat onto the
// shared z = 1 image plane and linearizes at the mean. The tangent-plane route
// projects each splat onto the plane tangent to the unit sphere at its own mean
// direction x_p = mu' / |mu'|, where the linearization error is smallest. The
// frame rotation Q maps x_p to +z so the tangent-plane covariance can be
// reduced to 2x2 by dropping its third row and column.

#include "ogs/common.hpp"
#include "ogs/core_model.hpp"

#include <cmath>

namespace ogs {

/// Tangent point on the unit sphere, the rotation taking it to +z, and the
/// radial depth |mu'|.
struct TangentFrame {
    Vec3 x_p = Vec3::UnitZ();
    Mat3 q = Mat3::Identity();
    double depth_key = 0.0;
    bool polar_fallback = false;
};

/// A splat projected to a 2D frame: tangent-plane units on the optimal route,
/// z = 1 plane units on the classical route.
struct Splat2D {
    Vec2 mean2d = Vec2::Zero();
    Mat2 cov2d = Mat2::Zero();
    Mat2 inv_cov2d = Mat2::Zero();
    double depth_key = 0.0;
    Rgb color = Rgb::Zero();
    double alpha_max = 0.0;
};

/// phi(x') = x' / x'_z, projection onto z = 1.
inline Vec3 classic_project(const Vec3 &xc) {
    if (!(xc.z() > kNearEpsilon))
        throw Error(ErrorCode::BehindCamera, "point is not in front of the z = 1 plane");
    Vec3 out = xc / xc.z();
    out.z() = 1.0;
    return out;
}

/// Jacobian of classic_project at mu': I / mu_z - mu' e_z^T / mu_z^2.
inline Mat3 classic_jacobian(const Vec3 &mu) {
    if (!(mu.z() > kNearEpsilon))
        throw Error(ErrorCode::BehindCamera, "mean is not in front of the z = 1 plane");
    const double inv_z = 1.0 / mu.z();
    Mat3 j = Mat3::Zero();
    j(0, 0) = inv_z;
    j(1, 1) = inv_z;
    j(0, 2) = -mu.x() * inv_z * inv_z;
    j(1, 2) = -mu.y() * inv_z * inv_z;
    return j;
}

/// x' / |x'|.
inline Vec3 sphere_project(const Vec3 &xc) {
    const double n = xc.norm();
    if (!(n > 1e-12))
        throw Error(ErrorCode::DegenerateDirection, "cannot normalize a near-zero vector");
    return xc / n;
}

/// phi_p(x') = x' / (x_p . x'), projection onto the plane tangent to the unit
/// sphere at x_p.
inline Vec3 optimal_project(const Vec3 &xc, const Vec3 &x_p) {
    const double d = x_p.dot(xc);
    if (!(d > kNearEpsilon))
        throw Error(ErrorCode::BehindTangentPlane, "point is not in front of the tangent plane");
    return xc / d;
}

/// Jacobian of x -> optimal_project(x, mu'/|mu'|) at mu':
/// (|mu|^2 I - mu mu^T) / |mu|^3. Symmetric, rank 2, null vector mu'.
inline Mat3 optimal_jacobian(const Vec3 &mu) {
    const double n2 = mu.squaredNorm();
    const double n = std::sqrt(n2);
    if (!(n > 1e-12))
        throw Error(ErrorCode::DegenerateDirection, "mean is at the camera center");
    const double inv_n3 = 1.0 / (n2 * n);
    return (n2 * Mat3::Identity() - mu * mu.transpose()) * inv_n3;
}

/// Q with third row mu'/|mu'|. Undefined when mu' is parallel to the y axis.
inline Mat3 frame_rotation(const Vec3 &mu) {
    const double n = mu.norm();
    const double rxz2 = mu.x() * mu.x() + mu.z() * mu.z();
    if (!(n > 1e-12))
        throw Error(ErrorCode::DegenerateDirection, "mean is at the camera center");
    if (!(rxz2 > 1e-18 * n * n))
        throw Error(ErrorCode::PolarSingularity, "mean is parallel to the y axis");
    const double rxz = std::sqrt(rxz2);
    Mat3 q;
    q << mu.z() / rxz, 0.0, -mu.x() / rxz,
         -mu.x() * mu.y() / (rxz * n), rxz / n, -mu.y() * mu.z() / (rxz * n),
         mu.x() / n, mu.y() / n, mu.z() / n;
    return q;
}

/// Fixed frame used at the polar singularity; third row is +-y.
inline Mat3 polar_fallback_rotation(const Vec3 &mu) {
    const double s = mu.y() >= 0.0 ? 1.0 : -1.0;
    Mat3 q;
    q << 1.0, 0.0, 0.0,
         0.0, 0.0, -s,
         0.0, s, 0.0;
    return q;
}

inline TangentFrame make_tangent_frame(const Vec3 &mu) {
    TangentFrame f;
    f.x_p = sphere_project(mu);
    f.depth_key = mu.norm();
    try {
        f.q = frame_rotation(mu);
    } catch (const Error &e) {
        if (e.code() != ErrorCode::PolarSingularity)
            throw;
        f.q = polar_fallback_rotation(mu);
        f.polar_fallback = true;
    }
    return f;
}

/// Inverse of a symmetric 2x2 via the adjugate; throws DegenerateSplat when
/// det <= 1e-18.
inline Mat2 invert_cov2d(const Mat2 &c) {
    const double det = c(0, 0) * c(1, 1) - c(0, 1) * c(1, 0);
    if (!(det > 1e-18) || !std::isfinite(det))
        throw Error(ErrorCode::DegenerateSplat, "2D covariance is not positive definite");
    Mat2 inv;
    inv << c(1, 1) / det, -c(0, 1) / det, -c(1, 0) / det, c(0, 0) / det;
    return inv;
}

/// Tangent-plane splat: cov2d is the top-left block of Q J_p Sigma' J_p^T Q^T
/// plus lowpass * I; the mean lands on the frame origin.
inline Splat2D project_splat(const Vec3 &mu, const Covariance3 &sigma, const TangentFrame &frame,
                             double lowpass) {
    const Mat3 qj = frame.q * optimal_jacobian(mu);
    const Mat3 full = qj * sigma.sym * qj.transpose();
    Splat2D s;
    s.cov2d = full.topLeftCorner<2, 2>();
    s.cov2d(0, 1) = s.cov2d(1, 0) = 0.5 * (full(0, 1) + full(1, 0));
    s.cov2d.diagonal().array() += lowpass;
    s.inv_cov2d = invert_cov2d(s.cov2d);
    s.mean2d = (frame.q * optimal_project(mu, frame.x_p)).head<2>();
    s.depth_key = frame.depth_key;
    return s;
}

/// Image-plane splat on the classical route, in z = 1 plane units.
inline Splat2D classic_splat(const Vec3 &mu, const Covariance3 &sigma, double lowpass) {
    const Mat3 j = classic_jacobian(mu);
    const Mat3 full = j * sigma.sym * j.transpose();
    Splat2D s;
    s.cov2d = full.topLeftCorner<2, 2>();
    s.cov2d(0, 1) = s.cov2d(1, 0) = 0.5 * (full(0, 1) + full(1, 0));
    s.cov2d.diagonal().array() += lowpass;
    s.inv_cov2d = invert_cov2d(s.cov2d);
    s.mean2d = classic_project(mu).head<2>();
    s.depth_key = mu.norm();
    return s;
}

} // namespace ogs
