// Copyright Contributors to the ogs Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Tile-based software rasterizer with two projection routes.
//
// Optimal: every pixel ray is mapped to a camera-space direction by the rig's
// camera model, projected onto each splat's tangent plane and evaluated in the
// splat's Q-aligned 2D frame. Works for every camera model.
//
// Classic: splats are linearized on the z = 1 plane and evaluated at the
// pixel's plane coordinate. Pinhole only.
//
// Both routes share culling, tile binning and front-to-back compositing.

#include "ogs/camera_models.hpp"
#include "ogs/common.hpp"
#include "ogs/core_model.hpp"
#include "ogs/parallel.hpp"
#include "ogs/projection.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace ogs {

enum class RenderMode { Classic, Optimal };
enum class DepthKey { Radial, Z };

constexpr std::string_view to_string(RenderMode m) {
    return m == RenderMode::Classic ? "classic" : "optimal";
}

struct RenderConfig {
    RenderMode mode = RenderMode::Optimal;
    int tile_size = 16;
    DepthKey depth_key = DepthKey::Radial;
    double t_min = 1e-4;
    double alpha_clamp = 0.99;
    std::optional<double> lowpass; // 2D-frame units^2; default derived from the focal length
    Rgb background = Rgb::Zero();
    std::optional<int> sh_degree;  // caps the scene's degree
    double focal_scale = 1.0;
    double sigma_cutoff = 3.0;
    unsigned threads = 1;          // 0 = all hardware threads
    bool record_weights = false;   // keep per-pixel transmittance and weight sums
};

/// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct PixelRect {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;

    bool empty() const { return x0 >= x1 || y0 >= y1; }
};

struct PreparedSplat {
    Splat2D splat;
    std::optional<TangentFrame> frame; // set on the optimal route
    PixelRect pixel_bbox;
    std::size_t source_index = 0;
};

struct PreparedSplats {
    std::vector<PreparedSplat> splats;
    std::size_t culled = 0;
};

struct TileGrid {
    int tile_size = 16;
    int tiles_x = 0;
    int tiles_y = 0;
    std::vector<std::vector<std::uint32_t>> bins; // row-major tiles, depth-sorted

    const std::vector<std::uint32_t> &bin(int tx, int ty) const {
        return bins[static_cast<std::size_t>(ty) * tiles_x + tx];
    }
};

struct ShadeResult {
    Rgb color = Rgb::Zero();
    double transmittance = 1.0; // T after the last contributing splat
    double weight_sum = 0.0;    // sum of T_i * alpha_i
};

struct RenderResult {
    ImageBuffer image;
    std::vector<double> transmittance; // per pixel, only with record_weights
    std::vector<double> weight_sum;
    std::size_t n_splats = 0;
    std::size_t n_culled = 0;
};

/// 0.3 px^2 of screen-space dilation expressed in 2D-frame units.
inline double default_lowpass(const CameraRig &rig) {
    double f = 0.0;
    if (rig.model == CameraModel::Equirectangular)
        f = std::min(rig.width / (2.0 * kPi), rig.height / kPi);
    else
        f = std::min(rig.fx, rig.fy);
    return std::max(0.3 / (f * f), 1e-12);
}

namespace detail {

inline PixelRect clamp_rect(double umin, double vmin, double umax, double vmax, int pad,
                            const CameraRig &rig) {
    PixelRect r;
    r.x0 = static_cast<int>(std::clamp(std::floor(umin) - pad, 0.0, static_cast<double>(rig.width)));
    r.y0 = static_cast<int>(std::clamp(std::floor(vmin) - pad, 0.0, static_cast<double>(rig.height)));
    r.x1 = static_cast<int>(std::clamp(std::ceil(umax) + 1 + pad, 0.0, static_cast<double>(rig.width)));
    r.y1 = static_cast<int>(std::clamp(std::ceil(vmax) + 1 + pad, 0.0, static_cast<double>(rig.height)));
    return r;
}

inline PixelRect full_image(const CameraRig &rig) { return {0, 0, rig.width, rig.height}; }

// Bounding box of the cutoff ellipse of a tangent-plane splat. The ellipse is
// enclosed by an octagon in the tangent plane; its vertices are lifted to 3D
// and pushed through the camera model. Under a pinhole the plane-to-plane map
// is projective, so the vertex box is exact; the one-tile pad covers the
// curvature of the other models.
inline PixelRect tangent_bbox(const Splat2D &s, const TangentFrame &frame, const CameraRig &rig,
                              double cutoff, int pad) {
    Eigen::SelfAdjointEigenSolver<Mat2> eig(s.cov2d);
    const Vec2 axis0 = eig.eigenvectors().col(0) * std::sqrt(std::max(eig.eigenvalues()(0), 0.0));
    const Vec2 axis1 = eig.eigenvectors().col(1) * std::sqrt(std::max(eig.eigenvalues()(1), 0.0));
    const double k = cutoff / std::cos(kPi / 8.0);
    const Mat3 qt = frame.q.transpose();

    double umin = rig.width, umax = 0.0, vmin = rig.height, vmax = 0.0;
    try {
        for (int t = 0; t < 8; ++t) {
            const double a = 2.0 * kPi * t / 8.0;
            const Vec2 p = s.mean2d + k * (std::cos(a) * axis0 + std::sin(a) * axis1);
            const PixelCoord px = direction_to_pixel(rig, qt * Vec3(p.x(), p.y(), 1.0));
            umin = std::min(umin, px.u);
            umax = std::max(umax, px.u);
            vmin = std::min(vmin, px.v);
            vmax = std::max(vmax, px.v);
        }
    } catch (const Error &) {
        return full_image(rig);
    }

    if (rig.model == CameraModel::Equirectangular) {
        if (umax - umin > 0.5 * rig.width) {
            umin = 0.0;
            umax = rig.width;
        }
        for (double sgn : {-1.0, 1.0}) {
            const Vec3 pole(0.0, sgn, 0.0);
            const double dp = frame.x_p.dot(pole);
            if (!(dp > kNearEpsilon))
                continue;
            const Vec2 off = (frame.q * (pole / dp)).head<2>() - s.mean2d;
            if (off.dot(s.inv_cov2d * off) <= k * k) {
                umin = 0.0;
                umax = rig.width;
                if (sgn < 0.0)
                    vmin = 0.0;
                else
                    vmax = rig.height;
            }
        }
    }
    return clamp_rect(umin, vmin, umax, vmax, pad, rig);
}

} // namespace detail

/// Projects, colors and bounds every Gaussian for the rig (focal scale already
/// applied). Culled splats are dropped and counted; output keeps scene order.
inline PreparedSplats prepare_splats(const Scene &scene, const CameraRig &rig, const RenderConfig &cfg) {
    scene.validate();
    const int degree = std::min(cfg.sh_degree.value_or(scene.sh_degree), scene.sh_degree);
    const double lowpass = cfg.lowpass.value_or(default_lowpass(rig));
    const Vec3 center = rig.pose_w2c.camera_center_world();
    const double view_angle = max_view_angle(rig);
    const int pad = cfg.tile_size;

    std::vector<std::optional<PreparedSplat>> slots(scene.gaussians.size());
    parallel_for(slots.size(), cfg.threads, [&](std::size_t i) {
        const Gaussian3D &g = scene.gaussians[i];
        try {
            const Covariance3 sigma = assemble_covariance(g);
            const CameraSpaceGaussian cam = world_to_camera(g, sigma, rig);
            PreparedSplat p;
            p.source_index = i;
            if (cfg.mode == RenderMode::Classic) {
                if (!(cam.mean.z() > kNearEpsilon))
                    return;
                p.splat = classic_splat(cam.mean, cam.cov, lowpass);
                const double uc = rig.cx + rig.fx * p.splat.mean2d.x();
                const double vc = rig.cy + rig.fy * p.splat.mean2d.y();
                const double ex = cfg.sigma_cutoff * std::sqrt(p.splat.cov2d(0, 0)) * rig.fx;
                const double ey = cfg.sigma_cutoff * std::sqrt(p.splat.cov2d(1, 1)) * rig.fy;
                p.pixel_bbox = detail::clamp_rect(uc - ex, vc - ey, uc + ex, vc + ey, 1, rig);
            } else {
                const TangentFrame frame = make_tangent_frame(cam.mean);
                p.splat = project_splat(cam.mean, cam.cov, frame, lowpass);
                const double lmax = Eigen::SelfAdjointEigenSolver<Mat2>(p.splat.cov2d, Eigen::EigenvaluesOnly)
                                        .eigenvalues()
                                        .maxCoeff();
                const double radius = std::atan(cfg.sigma_cutoff * std::sqrt(lmax));
                const double off_axis = std::acos(std::clamp(frame.x_p.z(), -1.0, 1.0));
                if (off_axis - radius > view_angle)
                    return;
                p.pixel_bbox = detail::tangent_bbox(p.splat, frame, rig, cfg.sigma_cutoff, pad);
                p.frame = frame;
            }
            if (p.pixel_bbox.empty())
                return;
            p.splat.depth_key = cfg.depth_key == DepthKey::Radial ? cam.mean.norm() : cam.mean.z();
            const Vec3 view = g.mean_world - center;
            const Vec3 dir = view.norm() > 0.0 ? Vec3(view.normalized()) : Vec3(Vec3::UnitZ());
            p.splat.color = eval_sh_color(g.sh, degree, dir);
            p.splat.alpha_max = std::min(g.opacity(), cfg.alpha_clamp);
            slots[i] = std::move(p);
        } catch (const Error &) {
            // Degenerate geometry for this view: the splat is culled.
        }
    });

    PreparedSplats out;
    out.splats.reserve(slots.size());
    for (auto &s : slots) {
        if (s)
            out.splats.push_back(std::move(*s));
        else
            ++out.culled;
    }
    return out;
}

/// Assigns each splat to every tile its bbox overlaps; bins are ordered by
/// (depth_key, index).
inline TileGrid bin_tiles(std::span<const PreparedSplat> splats, const CameraRig &rig, int tile_size) {
    if (tile_size < 1)
        throw Error(ErrorCode::InvalidArgument, "tile size must be positive");
    TileGrid grid;
    grid.tile_size = tile_size;
    grid.tiles_x = (rig.width + tile_size - 1) / tile_size;
    grid.tiles_y = (rig.height + tile_size - 1) / tile_size;
    grid.bins.resize(static_cast<std::size_t>(grid.tiles_x) * grid.tiles_y);
    for (std::size_t i = 0; i < splats.size(); ++i) {
        const PixelRect &r = splats[i].pixel_bbox;
        if (r.empty())
            continue;
        for (int ty = r.y0 / tile_size; ty <= (r.y1 - 1) / tile_size; ++ty)
            for (int tx = r.x0 / tile_size; tx <= (r.x1 - 1) / tile_size; ++tx)
                grid.bins[static_cast<std::size_t>(ty) * grid.tiles_x + tx].push_back(
                    static_cast<std::uint32_t>(i));
    }
    for (auto &bin : grid.bins) {
        std::stable_sort(bin.begin(), bin.end(), [&](std::uint32_t a, std::uint32_t b) {
            const double da = splats[a].splat.depth_key, db = splats[b].splat.depth_key;
            return da < db || (da == db && a < b);
        });
    }
    return grid;
}

/// Front-to-back compositing of one pixel over a depth-sorted bin.
inline ShadeResult shade_pixel(const PixelCoord &p, std::span<const std::uint32_t> bin,
                               std::span<const PreparedSplat> splats, const CameraRig &rig,
                               const RenderConfig &cfg) {
    ShadeResult out;
    Vec3 ray = Vec3::UnitZ();
    Vec2 plane = Vec2::Zero();
    if (cfg.mode == RenderMode::Optimal) {
        try {
            ray = pixel_to_direction(rig, p);
        } catch (const Error &) {
            out.color = cfg.background;
            return out;
        }
    } else {
        plane = {(p.u - rig.cx) / rig.fx, (p.v - rig.cy) / rig.fy};
    }

    const double cutoff2 = cfg.sigma_cutoff * cfg.sigma_cutoff;
    double t = 1.0;
    Rgb c = Rgb::Zero();
    double wsum = 0.0;
    for (const std::uint32_t idx : bin) {
        const PreparedSplat &ps = splats[idx];
        Vec2 off;
        if (cfg.mode == RenderMode::Optimal) {
            const TangentFrame &f = *ps.frame;
            const double dp = f.x_p.dot(ray);
            if (!(dp > kNearEpsilon))
                continue;
            off = (f.q * (ray / dp)).head<2>() - ps.splat.mean2d;
        } else {
            off = plane - ps.splat.mean2d;
        }
        const double m2 = off.dot(ps.splat.inv_cov2d * off);
        if (!(m2 <= cutoff2))
            continue;
        const double alpha = std::min(ps.splat.alpha_max * std::exp(-0.5 * m2), cfg.alpha_clamp);
        const double w = t * alpha;
        c += w * ps.splat.color;
        wsum += w;
        t *= 1.0 - alpha;
        if (t < cfg.t_min)
            break;
    }
    out.color = c + t * cfg.background;
    out.transmittance = t;
    out.weight_sum = wsum;
    return out;
}

inline RenderResult render(const Scene &scene, const CameraRig &rig, const RenderConfig &cfg) {
    rig.validate();
    if (cfg.mode == RenderMode::Classic && rig.model != CameraModel::Pinhole)
        throw Error(ErrorCode::ClassicUnsupportedCamera,
                    "classic projection only supports pinhole cameras, got " +
                        std::string(to_string(rig.model)));
    if (!(cfg.focal_scale > 0.0))
        throw Error(ErrorCode::InvalidArgument, "focal scale must be positive");
    if (cfg.tile_size < 1)
        throw Error(ErrorCode::InvalidArgument, "tile size must be positive");
    const CameraRig view = rig.with_focal_scale(cfg.focal_scale);

    RenderResult out;
    out.image = ImageBuffer(view.width, view.height, cfg.background);
    const std::size_t npix = static_cast<std::size_t>(view.width) * view.height;
    if (cfg.record_weights) {
        out.transmittance.assign(npix, 1.0);
        out.weight_sum.assign(npix, 0.0);
    }
    if (scene.empty())
        return out;

    const PreparedSplats prepared = prepare_splats(scene, view, cfg);
    out.n_splats = prepared.splats.size();
    out.n_culled = prepared.culled;
    const TileGrid grid = bin_tiles(prepared.splats, view, cfg.tile_size);
    const std::span<const PreparedSplat> splats(prepared.splats);

    // Each tile owns its pixels exclusively.
    parallel_for(grid.bins.size(), cfg.threads, [&](std::size_t k) {
        const int tx = static_cast<int>(k % grid.tiles_x);
        const int ty = static_cast<int>(k / grid.tiles_x);
        const auto &bin = grid.bins[k];
        const int x_end = std::min((tx + 1) * grid.tile_size, view.width);
        const int y_end = std::min((ty + 1) * grid.tile_size, view.height);
        for (int y = ty * grid.tile_size; y < y_end; ++y) {
            for (int x = tx * grid.tile_size; x < x_end; ++x) {
                const ShadeResult s = shade_pixel(pixel_center(x, y), bin, splats, view, cfg);
                out.image.set(x, y, s.color);
                if (cfg.record_weights) {
                    const std::size_t o = static_cast<std::size_t>(y) * view.width + x;
                    out.transmittance[o] = s.transmittance;
                    out.weight_sum[o] = s.weight_sum;
                }
            }
        }
    });
    return out;
}

/// Mean absolute per-channel difference between two images of equal size.
inline double mean_abs_diff(const ImageBuffer &a, const ImageBuffer &b) {
    if (a.width != b.width || a.height != b.height)
        throw Error(ErrorCode::DimensionMismatch, "images differ in size");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i)
        acc += std::abs(static_cast<double>(a.pixels[i]) - b.pixels[i]);
    return a.pixels.empty() ? 0.0 : acc / static_cast<double>(a.pixels.size());
}

} // namespace ogs
