// Copyright Contributors to the ogs Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "ogs/common.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace ogs {

/// Number of SH coefficients per channel for a given degree: (L+1)^2.
constexpr int sh_coeff_count(int degree) { return (degree + 1) * (degree + 1); }

inline constexpr int kMaxShDegree = 3;

/// One anisotropic splat. Scale and opacity stay in their pre-activation
/// spaces (log / logit), matching the usual checkpoint layout; use scale()
/// and opacity() for decoded values.
struct Gaussian3D {
    Vec3 mean_world = Vec3::Zero();
    Eigen::Quaterniond rot = Eigen::Quaterniond::Identity(); // (w, x, y, z)
    Vec3 log_scale = Vec3::Zero();
    double opacity_logit = 0.0;
    std::vector<Rgb> sh{Rgb::Zero()}; // (L+1)^2 entries

    Vec3 scale() const { return log_scale.array().exp().matrix(); }
    double opacity() const { return 1.0 / (1.0 + std::exp(-opacity_logit)); }
};

/// Symmetric 3x3 covariance (scene units^2).
struct Covariance3 {
    Mat3 sym = Mat3::Zero();
};

enum class CameraModel { Pinhole, FisheyeEquidistant, Equirectangular };

constexpr std::string_view to_string(CameraModel model) {
    switch (model) {
    case CameraModel::Pinhole: return "pinhole";
    case CameraModel::FisheyeEquidistant: return "fisheye";
    case CameraModel::Equirectangular: return "panorama";
    }
    return "unknown";
}

/// World-to-camera rigid transform: x_cam = rotation * x_world + translation.
struct RigidPose {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    Vec3 apply(const Vec3 &x) const { return rotation * x + translation; }
    Vec3 apply_inverse(const Vec3 &x) const { return rotation.transpose() * (x - translation); }
    Vec3 camera_center_world() const { return -(rotation.transpose() * translation); }
};

struct CameraRig {
    CameraModel model = CameraModel::Pinhole;
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;
    RigidPose pose_w2c;

    /// Same rig with fx, fy multiplied by `s` (principal point unchanged).
    CameraRig with_focal_scale(double s) const {
        CameraRig out = *this;
        out.fx *= s;
        out.fy *= s;
        return out;
    }

    /// Throws InvalidArgument / NonOrthonormalRotation when the rig cannot be used.
    void validate() const {
        if (width <= 0 || height <= 0)
            throw Error(ErrorCode::InvalidArgument, "camera size must be positive");
        if (model != CameraModel::Equirectangular &&
            !(fx > 0.0 && fy > 0.0 && std::isfinite(fx) && std::isfinite(fy)))
            throw Error(ErrorCode::InvalidArgument, "focal lengths must be positive and finite");
        const Mat3 &r = pose_w2c.rotation;
        if (!r.allFinite() || !pose_w2c.translation.allFinite())
            throw Error(ErrorCode::InvalidArgument, "pose contains non-finite values");
        if ((r * r.transpose() - Mat3::Identity()).norm() >= 1e-9 || r.determinant() <= 0.0)
            throw Error(ErrorCode::NonOrthonormalRotation, "pose rotation is not a proper rotation");
    }
};

/// H x W RGB image, row-major. Values are unclamped internally; writers clamp.
struct ImageBuffer {
    int width = 0;
    int height = 0;
    std::vector<float> pixels; // 3 * width * height
    Rgb background = Rgb::Zero();

    ImageBuffer() = default;
    ImageBuffer(int w, int h, const Rgb &fill = Rgb::Zero())
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3), background(fill) {
        for (std::size_t i = 0; i < pixels.size(); i += 3) {
            pixels[i + 0] = static_cast<float>(fill.x());
            pixels[i + 1] = static_cast<float>(fill.y());
            pixels[i + 2] = static_cast<float>(fill.z());
        }
    }

    std::size_t offset(int x, int y) const {
        return (static_cast<std::size_t>(y) * width + x) * 3;
    }
    Rgb at(int x, int y) const {
        const std::size_t o = offset(x, y);
        return {pixels[o], pixels[o + 1], pixels[o + 2]};
    }
    void set(int x, int y, const Rgb &c) {
        const std::size_t o = offset(x, y);
        pixels[o + 0] = static_cast<float>(c.x());
        pixels[o + 1] = static_cast<float>(c.y());
        pixels[o + 2] = static_cast<float>(c.z());
    }
    bool all_finite() const {
        return std::all_of(pixels.begin(), pixels.end(), [](float v) { return std::isfinite(v); });
    }
};

struct Scene {
    std::vector<Gaussian3D> gaussians;
    int sh_degree = 0;

    bool empty() const { return gaussians.empty(); }

    /// Checks that every Gaussian carries exactly (sh_degree+1)^2 coefficients.
    void validate() const {
        if (sh_degree < 0 || sh_degree > kMaxShDegree)
            throw Error(ErrorCode::InvalidArgument, "sh_degree out of range");
        const auto expected = static_cast<std::size_t>(sh_coeff_count(sh_degree));
        for (std::size_t i = 0; i < gaussians.size(); ++i) {
            if (gaussians[i].sh.size() != expected)
                throw Error(ErrorCode::InvalidArgument,
                            "gaussian " + std::to_string(i) + " has " +
                                std::to_string(gaussians[i].sh.size()) +
                                " SH coefficients, expected " + std::to_string(expected));
        }
    }
};

/// Validates a raw record and returns it with a unit quaternion. Degenerate
/// quaternions (norm < 1e-8) and non-finite fields are rejected, never repaired.
inline Gaussian3D decode_gaussian(const Gaussian3D &raw) {
    if (!raw.mean_world.allFinite() || !raw.log_scale.allFinite() ||
        !std::isfinite(raw.opacity_logit) || !raw.rot.coeffs().allFinite())
        throw Error(ErrorCode::DecodeError, "non-finite field");
    for (const auto &c : raw.sh) {
        if (!c.allFinite())
            throw Error(ErrorCode::DecodeError, "non-finite SH coefficient");
    }
    const double qn = raw.rot.norm();
    if (qn < 1e-8)
        throw Error(ErrorCode::DecodeError, "degenerate quaternion (norm < 1e-8)");
    const Vec3 s = raw.scale();
    if (!s.allFinite() || (s.array() <= 0.0).any())
        throw Error(ErrorCode::DecodeError, "scale is not positive and finite");
    Gaussian3D g = raw;
    g.rot.coeffs() /= qn;
    return g;
}

/// Sigma = R S S^T R^T with S = diag(exp(log_scale)).
inline Covariance3 assemble_covariance(const Gaussian3D &g) {
    const Vec3 s = g.scale();
    if (!s.allFinite() || (s.array() <= 0.0).any())
        throw Error(ErrorCode::DecodeError, "scale is not positive and finite");
    const Mat3 r = g.rot.normalized().toRotationMatrix();
    const Mat3 m = r * s.asDiagonal();
    Mat3 sigma = m * m.transpose();
    sigma = 0.5 * (sigma + sigma.transpose());
    return {sigma};
}

struct CameraSpaceGaussian {
    Vec3 mean;
    Covariance3 cov;
};

/// mu' = W mu, Sigma' = W Sigma W^T for the rig's rigid pose W.
inline CameraSpaceGaussian world_to_camera(const Gaussian3D &g, const Covariance3 &sigma,
                                           const CameraRig &rig) {
    const Mat3 &r = rig.pose_w2c.rotation;
    Mat3 cov = r * sigma.sym * r.transpose();
    cov = 0.5 * (cov + cov.transpose());
    return {rig.pose_w2c.apply(g.mean_world), {cov}};
}

namespace sh {

inline constexpr double kC0 = 0.28209479177387814;
inline constexpr double kC1 = 0.4886025119029199;
inline constexpr std::array<double, 5> kC2 = {1.0925484305920792, -1.0925484305920792,
                                              0.31539156525252005, -1.0925484305920792,
                                              0.5462742152960396};
inline constexpr std::array<double, 7> kC3 = {-0.5900435899266435, 2.890611442640554,
                                              -0.4570457994644658, 0.3731763325901154,
                                              -0.4570457994644658, 1.445305721320277,
                                              -0.5900435899266435};

/// DC coefficient that decodes to `color` for a degree-0 splat.
inline Rgb dc_from_color(const Rgb &color) { return (color.array() - 0.5).matrix() / kC0; }

} // namespace sh

/// View-dependent color: clamp(0.5 + sum c_lm Y_lm(dir), 0, 1) using the real SH
/// basis of the common splatting convention. `dir` must be unit length.
inline Rgb eval_sh_color(const std::vector<Rgb> &coeffs, int degree, const Vec3 &dir) {
    using namespace sh;
    Rgb c = kC0 * coeffs[0];
    if (degree > 0) {
        const double x = dir.x(), y = dir.y(), z = dir.z();
        c += -kC1 * y * coeffs[1] + kC1 * z * coeffs[2] - kC1 * x * coeffs[3];
        if (degree > 1) {
            const double xx = x * x, yy = y * y, zz = z * z;
            const double xy = x * y, yz = y * z, xz = x * z;
            c += kC2[0] * xy * coeffs[4] + kC2[1] * yz * coeffs[5] +
                 kC2[2] * (2.0 * zz - xx - yy) * coeffs[6] + kC2[3] * xz * coeffs[7] +
                 kC2[4] * (xx - yy) * coeffs[8];
            if (degree > 2) {
                c += kC3[0] * y * (3.0 * xx - yy) * coeffs[9] + kC3[1] * xy * z * coeffs[10] +
                     kC3[2] * y * (4.0 * zz - xx - yy) * coeffs[11] +
                     kC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy) * coeffs[12] +
                     kC3[4] * x * (4.0 * zz - xx - yy) * coeffs[13] +
                     kC3[5] * z * (xx - yy) * coeffs[14] + kC3[6] * x * (xx - 3.0 * yy) * coeffs[15];
            }
        }
    }
    return (c.array() + 0.5).cwiseMax(0.0).cwiseMin(1.0).matrix();
}

} // namespace ogs
