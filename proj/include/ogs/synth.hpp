// Copyright Contributors to the ogs Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Deterministic fixture scenes. The generator draws raw 64-bit words from
// std::mt19937_64 (whose output sequence is fixed by the standard) and maps
// them to doubles itself, so scenes are identical across standard libraries.

#include "ogs/common.hpp"
#include "ogs/core_model.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace ogs {

enum class SynthKind { OnAxis, Ring, Grid };

struct SynthSpec {
    SynthKind kind = SynthKind::OnAxis;
    int n = 1;
    double radius = 2.0;     // distance of the ring / first on-axis splat from the origin
    double angle_deg = 70.0; // ring half-angle about +z
    double scale = 0.1;      // isotropic splat scale for OnAxis and Ring
    int sh_degree = 0;       // Grid only; other kinds are degree 0
    std::uint64_t seed = 0;
};

inline SynthKind parse_synth_kind(const std::string &s) {
    if (s == "onaxis")
        return SynthKind::OnAxis;
    if (s == "ring")
        return SynthKind::Ring;
    if (s == "grid")
        return SynthKind::Grid;
    throw Error(ErrorCode::InvalidArgument, "unknown fixture kind '" + s + "'");
}

namespace detail {

class FixtureRng {
public:
    explicit FixtureRng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    Eigen::Quaterniond rotation() {
        // Shoemake's uniform random rotation.
        const double u1 = uniform(), u2 = uniform(), u3 = uniform();
        const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
        return {a * std::sin(2.0 * kPi * u2), a * std::cos(2.0 * kPi * u2), b * std::sin(2.0 * kPi * u3),
                b * std::cos(2.0 * kPi * u3)};
    }

private:
    std::mt19937_64 engine_;
};

inline const Rgb &primary_color(int i) {
    static const Rgb colors[3] = {Rgb(1.0, 0.0, 0.0), Rgb(0.0, 1.0, 0.0), Rgb(0.0, 0.0, 1.0)};
    return colors[i % 3];
}

} // namespace detail

/// OnAxis: n splats on +z starting at `radius`, spaced by radius / 2, colored
/// red, green, blue in turn. Ring: n splats evenly spaced on a cone of
/// half-angle `angle_deg` about +z at distance `radius`, colors drawn from the
/// seed. Grid: n random anisotropic splats in front of an identity camera.
inline Scene synth_scene(const SynthSpec &spec) {
    if (spec.n < 1)
        throw Error(ErrorCode::InvalidArgument, "fixture needs n >= 1");
    if (!(spec.radius > 0.0) || !(spec.scale > 0.0))
        throw Error(ErrorCode::InvalidArgument, "fixture radius and scale must be positive");
    if (spec.sh_degree < 0 || spec.sh_degree > kMaxShDegree)
        throw Error(ErrorCode::InvalidArgument, "fixture SH degree out of range");

    detail::FixtureRng rng(spec.seed);
    Scene scene;
    scene.sh_degree = spec.kind == SynthKind::Grid ? spec.sh_degree : 0;
    const auto ncoeff = static_cast<std::size_t>(sh_coeff_count(scene.sh_degree));
    scene.gaussians.reserve(static_cast<std::size_t>(spec.n));

    for (int i = 0; i < spec.n; ++i) {
        Gaussian3D g;
        g.sh.assign(ncoeff, Rgb::Zero());
        switch (spec.kind) {
        case SynthKind::OnAxis:
            g.mean_world = {0.0, 0.0, spec.radius * (1.0 + 0.5 * i)};
            g.log_scale = Vec3::Constant(std::log(spec.scale));
            g.opacity_logit = 10.0;
            g.sh[0] = sh::dc_from_color(detail::primary_color(i));
            break;
        case SynthKind::Ring: {
            const double half = spec.angle_deg * kPi / 180.0;
            const double az = 2.0 * kPi * i / spec.n;
            g.mean_world = spec.radius * Vec3(std::sin(half) * std::cos(az), std::sin(half) * std::sin(az),
                                              std::cos(half));
            g.log_scale = Vec3::Constant(std::log(spec.scale));
            g.opacity_logit = 10.0;
            g.sh[0] = sh::dc_from_color(Rgb(rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0)));
            break;
        }
        case SynthKind::Grid: {
            const double z = rng.uniform(2.0, 6.0);
            g.mean_world = {rng.uniform(-0.5, 0.5) * z, rng.uniform(-0.5, 0.5) * z, z};
            g.rot = rng.rotation();
            for (int k = 0; k < 3; ++k)
                g.log_scale[k] = std::log(rng.uniform(0.02, 0.25));
            g.opacity_logit = rng.uniform(-2.0, 4.0);
            g.sh[0] = sh::dc_from_color(Rgb(rng.uniform(), rng.uniform(), rng.uniform()));
            for (std::size_t k = 1; k < ncoeff; ++k)
                g.sh[k] = Rgb(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2));
            break;
        }
        }
        scene.gaussians.push_back(g);
    }
    return scene;
}

/// Identity-pose pinhole camera looking down +z with the principal point at the image center.
inline CameraRig default_rig(int width = 256, int height = 256, double focal = 256.0,
                             CameraModel model = CameraModel::Pinhole) {
    CameraRig rig;
    rig.model = model;
    rig.width = width;
    rig.height = height;
    rig.fx = rig.fy = focal;
    rig.cx = 0.5 * width;
    rig.cy = 0.5 * height;
    return rig;
}

} // namespace ogs
