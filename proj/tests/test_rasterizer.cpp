// Copyright Contributors to the ogs Project
// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace ogs;
using ogs::test::Rng;
using ogs::test::make_gaussian;

namespace {

const Rgb kRed(1, 0, 0);
const Rgb kGreen(0, 1, 0);

RenderConfig config(RenderMode mode, unsigned threads = 1) {
    RenderConfig c;
    c.mode = mode;
    c.threads = threads;
    return c;
}

double max_channel_diff(const ImageBuffer &a, const ImageBuffer &b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a.pixels[i]) - b.pixels[i]));
    return m;
}

Scene scene_of(std::vector<Gaussian3D> gs) {
    Scene s;
    s.gaussians = std::move(gs);
    return s;
}

PreparedSplat splat_with_bbox(PixelRect r, double depth) {
    PreparedSplat p;
    p.pixel_bbox = r;
    p.splat.depth_key = depth;
    return p;
}

} // namespace

TEST(DefaultLowpass, FocalConversion) {
    EXPECT_DOUBLE_EQ(default_lowpass(default_rig(64, 64, 100.0)), 0.3 / 1e4);
    const CameraRig pano = default_rig(360, 180, 1.0, CameraModel::Equirectangular);
    EXPECT_DOUBLE_EQ(default_lowpass(pano), 0.3 / std::pow(180.0 / kPi, 2));
}

TEST(PrepareSplats, EmptyFrustum) {
    Scene s = scene_of({make_gaussian({0, 0, -3}, 0.1, 5, kRed), make_gaussian({1, 0, -2}, 0.1, 5, kRed)});
    const CameraRig rig = default_rig(64, 64, 64.0);
    for (auto mode : {RenderMode::Classic, RenderMode::Optimal}) {
        const PreparedSplats p = prepare_splats(s, rig, config(mode));
        EXPECT_TRUE(p.splats.empty());
        EXPECT_EQ(p.culled, 2u);
    }
}

TEST(PrepareSplats, OnAxisRoutesAgree) {
    Rng rng(41);
    const CameraRig rig = default_rig(64, 64, 64.0);
    for (int t = 0; t < 20; ++t) {
        Gaussian3D g = make_gaussian({0, 0, rng.uniform(1.0, 8.0)}, 1.0, 2.0, kRed);
        g.rot = rng.rotation();
        g.log_scale = rng.vec3(std::log(0.02), std::log(0.5));
        const Scene s = scene_of({g});
        const auto c = prepare_splats(s, rig, config(RenderMode::Classic));
        const auto o = prepare_splats(s, rig, config(RenderMode::Optimal));
        ASSERT_EQ(c.splats.size(), 1u);
        ASSERT_EQ(o.splats.size(), 1u);
        const Mat2 &cc = c.splats[0].splat.cov2d, &oc = o.splats[0].splat.cov2d;
        EXPECT_LT((cc - oc).norm(), 1e-9 * oc.norm());
        EXPECT_DOUBLE_EQ(c.splats[0].splat.depth_key, o.splats[0].splat.depth_key);
    }
}

TEST(PrepareSplats, OptimalKeepsSplatsOverlappingTheEdge) {
    // Mean just outside a 90 degree pinhole view but with a footprint reaching in.
    const CameraRig rig = default_rig(64, 64, 32.0);
    const double a = 47.0 * kPi / 180.0;
    const Scene s = scene_of({make_gaussian(3.0 * Vec3(std::sin(a), 0, std::cos(a)), 0.3, 5, kRed)});
    const auto o = prepare_splats(s, rig, config(RenderMode::Optimal));
    ASSERT_EQ(o.splats.size(), 1u);
    EXPECT_EQ(o.splats[0].pixel_bbox.x1, 64);
    const Scene far = scene_of({make_gaussian(3.0 * Vec3(1, 0, 0.05).normalized(), 0.01, 5, kRed)});
    EXPECT_EQ(prepare_splats(far, rig, config(RenderMode::Optimal)).culled, 1u);
}

TEST(PrepareSplats, BoundingBoxCoversCutoffFootprint) {
    // Every pixel where the splat passes the cutoff must lie inside its bbox.
    Rng rng(42);
    for (auto model : {CameraModel::Pinhole, CameraModel::FisheyeEquidistant, CameraModel::Equirectangular}) {
        const CameraRig rig = default_rig(96, 64, 30.0, model);
        for (int t = 0; t < 30; ++t) {
            Scene s = test::random_scene(rng, 1);
            if (model != CameraModel::Pinhole)
                s.gaussians[0].mean_world = rng.vec3(-4, 4);
            RenderConfig cfg = config(RenderMode::Optimal);
            cfg.tile_size = 1;
            const auto p = prepare_splats(s, rig, cfg);
            if (p.splats.empty())
                continue;
            const PreparedSplat &ps = p.splats[0];
            for (int y = 0; y < rig.height; ++y)
                for (int x = 0; x < rig.width; ++x) {
                    const std::uint32_t idx = 0;
                    const ShadeResult r = shade_pixel(pixel_center(x, y), std::span(&idx, 1), p.splats, rig, cfg);
                    if (r.weight_sum > 0.0) {
                        EXPECT_TRUE(x >= ps.pixel_bbox.x0 && x < ps.pixel_bbox.x1 && y >= ps.pixel_bbox.y0 &&
                                    y < ps.pixel_bbox.y1)
                            << to_string(model) << " pixel " << x << ',' << y;
                    }
                }
        }
    }
}

TEST(BinTiles, FullCoverage) {
    const CameraRig rig = default_rig(50, 40, 50.0);
    const std::vector<PreparedSplat> sp{splat_with_bbox({0, 0, 50, 40}, 1.0)};
    const TileGrid g = bin_tiles(sp, rig, 16);
    EXPECT_EQ(g.tiles_x, 4);
    EXPECT_EQ(g.tiles_y, 3);
    for (const auto &bin : g.bins)
        EXPECT_EQ(bin, std::vector<std::uint32_t>{0});
}

TEST(BinTiles, DisjointSplatsNeverShareATile) {
    const CameraRig rig = default_rig(64, 64, 50.0);
    const std::vector<PreparedSplat> sp{splat_with_bbox({0, 0, 16, 16}, 1.0), splat_with_bbox({32, 32, 64, 48}, 1.0)};
    const TileGrid g = bin_tiles(sp, rig, 16);
    for (const auto &bin : g.bins)
        EXPECT_LE(bin.size(), 1u);
    EXPECT_EQ(g.bin(0, 0), std::vector<std::uint32_t>{0});
    EXPECT_EQ(g.bin(3, 2), std::vector<std::uint32_t>{1});
    EXPECT_TRUE(g.bin(3, 3).empty());
}

TEST(BinTiles, DepthOrderWithIndexTiebreak) {
    const CameraRig rig = default_rig(16, 16, 50.0);
    const std::vector<PreparedSplat> sp{splat_with_bbox({0, 0, 4, 4}, 2.0), splat_with_bbox({0, 0, 4, 4}, 1.0),
                                        splat_with_bbox({0, 0, 4, 4}, 2.0)};
    const TileGrid g = bin_tiles(sp, rig, 16);
    EXPECT_EQ(g.bin(0, 0), (std::vector<std::uint32_t>{1, 0, 2}));
}

TEST(ShadePixel, EmptyBinIsBackground) {
    const CameraRig rig = default_rig(16, 16, 16.0);
    RenderConfig cfg;
    cfg.background = {0.1, 0.2, 0.3};
    const ShadeResult r = shade_pixel({8, 8}, {}, {}, rig, cfg);
    EXPECT_EQ(r.color, cfg.background);
    EXPECT_EQ(r.transmittance, 1.0);
}

TEST(ShadePixel, SingleOpaqueSplat) {
    const CameraRig rig = default_rig(33, 33, 33.0);
    const Scene s = scene_of({make_gaussian({0, 0, 1}, 0.05, 40.0, kRed)});
    for (auto mode : {RenderMode::Classic, RenderMode::Optimal}) {
        const RenderConfig cfg = config(mode);
        const auto p = prepare_splats(s, rig, cfg);
        const std::uint32_t idx = 0;
        const ShadeResult r = shade_pixel({rig.cx, rig.cy}, std::span(&idx, 1), p.splats, rig, cfg);
        EXPECT_LT((r.color - Rgb(0.99, 0, 0)).norm(), 1e-12) << to_string(mode);
    }
}

TEST(ShadePixel, TwoSplatsFrontToBack) {
    const CameraRig rig = default_rig(33, 33, 33.0);
    // Listed back to front so that the sort has work to do.
    const Scene s = scene_of({make_gaussian({0, 0, 2}, 0.05, 40.0, kGreen), make_gaussian({0, 0, 1}, 0.05, 40.0, kRed)});
    for (auto mode : {RenderMode::Classic, RenderMode::Optimal}) {
        RenderConfig cfg = config(mode);
        cfg.background = {0.3, 0.6, 0.9};
        const auto p = prepare_splats(s, rig, cfg);
        const TileGrid g = bin_tiles(p.splats, rig, cfg.tile_size);
        const auto &bin = g.bin(1, 1);
        const ShadeResult r = shade_pixel({rig.cx, rig.cy}, bin, p.splats, rig, cfg);
        const Rgb want = 0.99 * kRed + 0.01 * 0.99 * kGreen + 0.0001 * cfg.background;
        EXPECT_LT((r.color - want).norm(), 1e-12) << to_string(mode);
    }
}

TEST(Render, EmptySceneIsBackground) {
    RenderConfig cfg;
    cfg.background = {0.25, 0.5, 0.75};
    const RenderResult r = render(Scene{}, default_rig(20, 10, 10.0), cfg);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 20; ++x)
            EXPECT_LT((r.image.at(x, y) - cfg.background).norm(), 1e-7);
}

TEST(Render, ClassicRequiresPinhole) {
    const Scene s = synth_scene({});
    for (auto model : {CameraModel::FisheyeEquidistant, CameraModel::Equirectangular}) {
        try {
            render(s, default_rig(32, 32, 32.0, model), config(RenderMode::Classic));
            FAIL();
        } catch (const Error &e) {
            EXPECT_EQ(e.code(), ErrorCode::ClassicUnsupportedCamera);
        }
        EXPECT_NO_THROW(render(s, default_rig(32, 32, 32.0, model), config(RenderMode::Optimal)));
    }
}

TEST(Render, OnAxisCenterPixelAgrees) {
    const Scene s = synth_scene({});
    const CameraRig rig = default_rig(65, 65, 64.0);
    const ImageBuffer c = render(s, rig, config(RenderMode::Classic)).image;
    const ImageBuffer o = render(s, rig, config(RenderMode::Optimal)).image;
    EXPECT_LT((c.at(32, 32) - o.at(32, 32)).norm(), 1e-4);
    EXPECT_GT(o.at(32, 32).x(), 0.9);
}

TEST(Render, NearAxisModesAgree) {
    Rng rng(43);
    const CameraRig rig = default_rig(64, 64, 512.0);
    Scene s;
    for (int i = 0; i < 20; ++i) {
        const double a = rng.uniform(0.0, 1.0) * kPi / 180.0, b = rng.uniform(0.0, 2.0 * kPi);
        const double d = rng.uniform(3.0, 6.0);
        Gaussian3D g = make_gaussian(d * Vec3(std::sin(a) * std::cos(b), std::sin(a) * std::sin(b), std::cos(a)), 1.0,
                                     rng.uniform(-1.0, 3.0), Rgb(rng.uniform(), rng.uniform(), rng.uniform()));
        g.rot = rng.rotation();
        g.log_scale = rng.vec3(std::log(0.005), std::log(0.03));
        s.gaussians.push_back(g);
    }
    const ImageBuffer c = render(s, rig, config(RenderMode::Classic)).image;
    const ImageBuffer o = render(s, rig, config(RenderMode::Optimal)).image;
    EXPECT_LT(max_channel_diff(c, o), 1e-3);
}

TEST(Render, CompositingWeightsTelescope) {
    Rng rng(44);
    const Scene s = test::random_scene(rng, 60);
    for (auto mode : {RenderMode::Classic, RenderMode::Optimal}) {
        RenderConfig cfg = config(mode);
        cfg.record_weights = true;
        const RenderResult r = render(s, default_rig(64, 48, 50.0), cfg);
        for (std::size_t i = 0; i < r.transmittance.size(); ++i)
            EXPECT_NEAR(r.weight_sum[i] + r.transmittance[i], 1.0, 1e-12);
    }
}

TEST(Render, PermutationInvariance) {
    Rng rng(45);
    Scene s = test::random_scene(rng, 80);
    for (auto mode : {RenderMode::Classic, RenderMode::Optimal}) {
        const ImageBuffer a = render(s, default_rig(64, 64, 60.0), config(mode)).image;
        Scene shuffled = s;
        std::shuffle(shuffled.gaussians.begin(), shuffled.gaussians.end(), rng.engine());
        const ImageBuffer b = render(shuffled, default_rig(64, 64, 60.0), config(mode)).image;
        EXPECT_LT(max_channel_diff(a, b), 1e-6);
    }
}

TEST(Render, TileSizeInvariance) {
    Rng rng(46);
    const Scene s = test::random_scene(rng, 60);
    for (auto model : {CameraModel::Pinhole, CameraModel::FisheyeEquidistant, CameraModel::Equirectangular}) {
        const CameraRig rig = default_rig(80, 56, 40.0, model);
        for (auto mode : {RenderMode::Classic, RenderMode::Optimal}) {
            if (mode == RenderMode::Classic && model != CameraModel::Pinhole)
                continue;
            RenderConfig cfg = config(mode);
            cfg.tile_size = 16;
            const ImageBuffer base = render(s, rig, cfg).image;
            for (int ts : {1, 7, 32, 128}) {
                cfg.tile_size = ts;
                EXPECT_LE(max_channel_diff(base, render(s, rig, cfg).image), 1e-12)
                    << to_string(model) << ' ' << to_string(mode) << " tile " << ts;
            }
        }
    }
}

TEST(Render, ThreadCountInvariance) {
    Rng rng(47);
    const Scene s = test::random_scene(rng, 100, 2);
    for (auto mode : {RenderMode::Classic, RenderMode::Optimal}) {
        const ImageBuffer a = render(s, default_rig(96, 64, 60.0), config(mode, 1)).image;
        const ImageBuffer b = render(s, default_rig(96, 64, 60.0), config(mode, 8)).image;
        EXPECT_EQ(a.pixels, b.pixels);
    }
}

TEST(Render, DepthKeyOverrideOnlyReorders) {
    Rng rng(48);
    const Scene s = test::random_scene(rng, 40);
    RenderConfig cfg = config(RenderMode::Optimal);
    cfg.depth_key = DepthKey::Z;
    const ImageBuffer z = render(s, default_rig(48, 48, 40.0), cfg).image;
    EXPECT_TRUE(z.all_finite());
}

TEST(Render, FuzzedScenesStayFinite) {
    Rng rng(49);
    for (int t = 0; t < 1000; ++t) {
        Scene s = test::random_scene(rng, rng.integer(1, 6), rng.integer(0, 3));
        for (auto &g : s.gaussians) {
            g.mean_world = rng.vec3(-6, 6);
            g.log_scale = rng.vec3(-8, 1);
            g.opacity_logit = rng.uniform(-20, 20);
        }
        const auto model = static_cast<CameraModel>(t % 3);
        const CameraRig rig = default_rig(24, 16, rng.uniform(4.0, 60.0), model);
        const auto mode = model == CameraModel::Pinhole && t % 2 ? RenderMode::Classic : RenderMode::Optimal;
        RenderConfig cfg = config(mode);
        cfg.tile_size = 8;
        ASSERT_TRUE(render(s, rig, cfg).image.all_finite()) << "case " << t;
    }
}

TEST(Render, FocalScaleWidensView) {
    const Scene ring = synth_scene({SynthKind::Ring, 12, 2.0, 70.0, 0.1, 0, 0});
    const CameraRig rig = default_rig(128, 128, 128.0);
    RenderConfig cfg = config(RenderMode::Optimal);
    const RenderResult wide = [&] {
        RenderConfig c = cfg;
        c.focal_scale = 0.2;
        return render(ring, rig, c);
    }();
    const RenderResult narrow = render(ring, rig, cfg);
    EXPECT_EQ(narrow.n_splats, 0u);
    EXPECT_EQ(wide.n_splats, 12u);
}

TEST(Render, FisheyeSeesBehindTheSide) {
    // A splat 100 degrees off-axis is outside every pinhole but inside a fisheye.
    const double a = 100.0 * kPi / 180.0;
    const Scene s = scene_of({make_gaussian(3.0 * Vec3(std::sin(a), 0, std::cos(a)), 0.2, 5.0, kRed)});
    const CameraRig fish = default_rig(64, 64, 16.0, CameraModel::FisheyeEquidistant);
    const ImageBuffer img = render(s, fish, config(RenderMode::Optimal)).image;
    const double u = fish.cx + fish.fx * a;
    EXPECT_GT(img.at(static_cast<int>(u), 32).x(), 0.5);
}

TEST(Render, PanoramaPolarSplat) {
    const Scene s = scene_of({make_gaussian({0, -3, 0}, 0.3, 5.0, kGreen)});
    const CameraRig pano = default_rig(64, 32, 1.0, CameraModel::Equirectangular);
    const RenderResult r = render(s, pano, config(RenderMode::Optimal));
    EXPECT_EQ(r.n_splats, 1u);
    // The whole top row is the pole.
    for (int x = 0; x < 64; ++x)
        EXPECT_GT(r.image.at(x, 0).y(), 0.5);
}

TEST(MeanAbsDiff, Basics) {
    ImageBuffer a(4, 4, Rgb::Zero()), b(4, 4, Rgb::Constant(0.5));
    EXPECT_DOUBLE_EQ(mean_abs_diff(a, b), 0.5);
    EXPECT_THROW(mean_abs_diff(a, ImageBuffer(3, 4)), Error);
}
