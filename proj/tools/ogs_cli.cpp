// Copyright Contributors to the ogs Project
// SPDX-License-Identifier: Apache-2.0

// ogs: render splat scenes with the classic or tangent-plane projection,
// compare the two, map the affine-approximation error, and write fixtures.
//
// Exit codes: 0 ok, 1 input / IO / validation error, 2 unsupported configuration.

#include "ogs/ogs.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct RenderFlags {
    std::string scene;
    std::string cameras;
    std::string mode = "optimal";
    std::string camera_model;
    std::string depth_key = "radial";
    std::string background = "0,0,0";
    double focal_scale = 1.0;
    int tile_size = 16;
    double t_min = 1e-4;
    double alpha_clamp = 0.99;
    std::optional<double> lowpass;
    std::optional<int> sh_degree;
};

void add_render_flags(CLI::App *cmd, RenderFlags &f, bool with_mode) {
    cmd->add_option("--scene", f.scene, "Binary little-endian PLY splat file")->required();
    cmd->add_option("--cameras", f.cameras, "Camera text file")->required();
    if (with_mode)
        cmd->add_option("--mode", f.mode, "Projection route")->check(CLI::IsMember({"classic", "optimal"}));
    cmd->add_option("--camera-model", f.camera_model, "Override the model of every camera")
        ->check(CLI::IsMember({"pinhole", "fisheye", "panorama"}));
    cmd->add_option("--focal-scale", f.focal_scale, "Multiply fx, fy by this factor")->check(CLI::PositiveNumber);
    cmd->add_option("--tile-size", f.tile_size, "Tile edge in pixels")->check(CLI::PositiveNumber);
    cmd->add_option("--depth-key", f.depth_key, "Sort key")->check(CLI::IsMember({"radial", "z"}));
    cmd->add_option("--background", f.background, "Background color r,g,b in [0,1]");
    cmd->add_option("--lowpass", f.lowpass, "2D covariance dilation (frame units^2)");
    cmd->add_option("--sh-degree", f.sh_degree, "Cap the SH degree")->check(CLI::Range(0, 3));
    cmd->add_option("--t-min", f.t_min, "Early-exit transmittance");
    cmd->add_option("--alpha-clamp", f.alpha_clamp, "Per-splat alpha clamp");
}

ogs::Rgb parse_rgb(const std::string &s) {
    std::istringstream in(s);
    ogs::Rgb c;
    char sep1 = 0, sep2 = 0;
    in >> c.x() >> sep1 >> c.y() >> sep2 >> c.z();
    if (!in || sep1 != ',' || sep2 != ',')
        throw ogs::Error(ogs::ErrorCode::InvalidArgument, "background must be r,g,b, got '" + s + "'");
    return c;
}

unsigned resolve_threads(int flag) {
    if (flag > 0)
        return static_cast<unsigned>(flag);
    if (const char *env = std::getenv("SPLAT_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0)
                return static_cast<unsigned>(n);
        } catch (const std::exception &) {
        }
        throw ogs::Error(ogs::ErrorCode::InvalidArgument, std::string("invalid SPLAT_THREADS '") + env + "'");
    }
    return 0;
}

ogs::RenderConfig make_config(const RenderFlags &f, unsigned threads) {
    ogs::RenderConfig cfg;
    cfg.mode = f.mode == "classic" ? ogs::RenderMode::Classic : ogs::RenderMode::Optimal;
    cfg.tile_size = f.tile_size;
    cfg.depth_key = f.depth_key == "z" ? ogs::DepthKey::Z : ogs::DepthKey::Radial;
    cfg.t_min = f.t_min;
    cfg.alpha_clamp = f.alpha_clamp;
    cfg.lowpass = f.lowpass;
    cfg.background = parse_rgb(f.background);
    cfg.sh_degree = f.sh_degree;
    cfg.focal_scale = f.focal_scale;
    cfg.threads = threads;
    return cfg;
}

struct LoadedInputs {
    ogs::Scene scene;
    std::vector<ogs::CameraRecord> cameras;
};

LoadedInputs load_inputs(const RenderFlags &f) {
    LoadedInputs in;
    ogs::PlyLoadResult ply = ogs::load_ply(f.scene);
    for (const auto &r : ply.rejected)
        std::cerr << "warning: " << f.scene << ": record " << r.index << " rejected: " << r.reason << '\n';
    in.scene = std::move(ply.scene);
    in.cameras = ogs::load_cameras(f.cameras);
    if (!f.camera_model.empty())
        for (auto &c : in.cameras)
            c.rig.model = ogs::parse_camera_model(f.camera_model);
    return in;
}

int cmd_render(const RenderFlags &f, const std::string &out_dir, unsigned threads) {
    const LoadedInputs in = load_inputs(f);
    const ogs::RenderConfig cfg = make_config(f, threads);
    fs::create_directories(out_dir);
    for (const auto &cam : in.cameras) {
        const auto t0 = std::chrono::steady_clock::now();
        const ogs::RenderResult r = ogs::render(in.scene, cam.rig, cfg);
        const fs::path path = fs::path(out_dir) / (cam.id + "_" + std::string(ogs::to_string(cfg.mode)) + ".png");
        ogs::write_image(r.image, path, ogs::ImageFormat::Png);
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        std::cout << cam.id << ' ' << ogs::to_string(cfg.mode) << " splats=" << r.n_splats
                  << " culled=" << r.n_culled << " ms=" << std::fixed << std::setprecision(1) << ms
                  << std::defaultfloat << '\n';
    }
    return 0;
}

std::optional<ogs::ImageBuffer> load_ground_truth(const std::string &dir, const std::string &id) {
    for (const std::string &name : {id + ".png", id + "_optimal.png"}) {
        const fs::path p = fs::path(dir) / name;
        if (fs::exists(p))
            return ogs::read_image(p);
    }
    return std::nullopt;
}

int cmd_compare(const RenderFlags &f, const std::string &gt_dir, std::optional<double> focal_mask,
                unsigned threads) {
    const LoadedInputs in = load_inputs(f);
    ogs::RenderConfig cfg = make_config(f, threads);
    if (focal_mask) {
        if (!(*focal_mask > 0.0 && *focal_mask <= 1.0))
            throw ogs::Error(ogs::ErrorCode::InvalidArgument, "--focal-mask must be in (0, 1]");
        cfg.focal_scale *= *focal_mask;
    }
    std::cout << "camera_id,mode,psnr_db,ssim,classic_vs_optimal_mad\n";
    for (const auto &cam : in.cameras) {
        ogs::RenderConfig classic = cfg;
        classic.mode = ogs::RenderMode::Classic;
        ogs::RenderConfig optimal = cfg;
        optimal.mode = ogs::RenderMode::Optimal;
        const ogs::ImageBuffer img_classic = ogs::render(in.scene, cam.rig, classic).image;
        const ogs::ImageBuffer img_optimal = ogs::render(in.scene, cam.rig, optimal).image;
        const double mad = ogs::mean_abs_diff(img_classic, img_optimal);

        std::optional<ogs::ImageBuffer> gt;
        if (!gt_dir.empty()) {
            gt = load_ground_truth(gt_dir, cam.id);
            if (!gt)
                throw ogs::Error(ogs::ErrorCode::IoError, "no ground truth for camera " + cam.id + " in " + gt_dir);
        }
        for (const auto *entry : {&img_classic, &img_optimal}) {
            const char *mode = entry == &img_classic ? "classic" : "optimal";
            std::cout << cam.id << ',' << mode << ',';
            if (gt) {
                const ogs::ImageBuffer q = ogs::quantized(*entry);
                const ogs::MetricReport m =
                    focal_mask ? ogs::focal_mask_eval(q, *gt, *focal_mask) : ogs::evaluate(q, *gt);
                std::cout << std::setprecision(10) << m.psnr_db << ',' << m.ssim;
            } else {
                std::cout << ',';
            }
            std::cout << ',' << std::setprecision(10) << mad << '\n';
        }
    }
    return 0;
}

struct ErrorMapFlags {
    std::string space = "spherical";
    double lambda = 0.95;
    int n = 33;
    double focal_scale = 1.0;
    int nodes = 64;
    double half_width = ogs::kPi / 4.0;
    int width = 128;
    int height = 128;
    double focal = 400.0;
    std::string out;
};

int cmd_error_map(const ErrorMapFlags &f, unsigned threads) {
    const ogs::QuadratureSpec quad{f.nodes, f.half_width};
    ogs::ErrorField field;
    if (f.space == "spherical") {
        field = ogs::error_field_spherical(f.lambda, f.n, quad, threads);
    } else {
        const ogs::CameraRig rig = ogs::default_rig(f.width, f.height, f.focal);
        field = ogs::error_field_pixels(rig, f.focal_scale, f.n, quad, threads);
    }
    std::ostream *summary = &std::cout;
    if (!f.out.empty()) {
        std::ofstream os(f.out, std::ios::trunc);
        if (!os)
            throw ogs::Error(ogs::ErrorCode::IoError, "cannot open " + f.out + " for writing");
        ogs::write_error_field_csv(field, os);
        if (!os)
            throw ogs::Error(ogs::ErrorCode::IoError, "write failed for " + f.out);
    } else {
        ogs::write_error_field_csv(field, std::cout);
        summary = &std::cerr;
    }
    const auto [i, j] = field.argmin();
    *summary << std::setprecision(12) << "argmin " << field.axis1_name << '=' << field.axis1[i] << ' '
             << field.axis2_name << '=' << field.axis2[j] << " index=(" << i << ',' << j << ")"
             << " min=" << field.min() << " max=" << field.max() << " max_over_min=" << field.max() / field.min()
             << " mean=" << field.mean() << '\n';
    return 0;
}

struct SynthFlags {
    std::string kind = "onaxis";
    int n = 1;
    double radius = 2.0;
    double angle = 70.0;
    double scale = 0.1;
    int sh_degree = 0;
    std::uint64_t seed = 0;
    std::string out;
    std::string cameras_out;
    std::string camera_model = "pinhole";
    int width = 256;
    int height = 256;
    double focal = 256.0;
};

int cmd_synth(const SynthFlags &f) {
    ogs::SynthSpec spec;
    spec.kind = ogs::parse_synth_kind(f.kind);
    spec.n = f.n;
    spec.radius = f.radius;
    spec.angle_deg = f.angle;
    spec.scale = f.scale;
    spec.sh_degree = f.sh_degree;
    spec.seed = f.seed;
    const ogs::Scene scene = ogs::synth_scene(spec);
    ogs::save_ply(scene, f.out);
    if (!f.cameras_out.empty()) {
        const ogs::CameraRig rig =
            ogs::default_rig(f.width, f.height, f.focal, ogs::parse_camera_model(f.camera_model));
        ogs::save_cameras({{"cam0", rig}}, f.cameras_out);
    }
    std::cerr << "wrote " << scene.gaussians.size() << " splats to " << f.out << '\n';
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Gaussian splat renderer with classic and tangent-plane projection"};
    app.require_subcommand(1);
    int threads_flag = 0;
    app.add_option("--threads", threads_flag, "Worker threads (fallback: SPLAT_THREADS, default: all cores)");

    RenderFlags render_flags;
    std::string out_dir;
    auto *render = app.add_subcommand("render", "Render every camera to <out>/<id>_<mode>.png");
    add_render_flags(render, render_flags, true);
    render->add_option("--out", out_dir, "Output directory")->required();

    RenderFlags compare_flags;
    std::string gt_dir;
    std::optional<double> focal_mask;
    auto *compare = app.add_subcommand("compare", "Render both routes and report metrics as CSV");
    add_render_flags(compare, compare_flags, false);
    compare->add_option("--gt", gt_dir, "Ground-truth directory (<id>.png or <id>_optimal.png)");
    compare->add_option("--focal-mask", focal_mask, "Render at this focal scale and evaluate the central crop");

    ErrorMapFlags em;
    auto *error_map = app.add_subcommand("error-map", "Sample the affine-approximation error as CSV");
    error_map->add_option("--space", em.space, "Sampling domain")->check(CLI::IsMember({"spherical", "pixels"}));
    error_map->add_option("--lambda", em.lambda, "Domain scale for --space spherical");
    error_map->add_option("--n", em.n, "Grid size per axis");
    error_map->add_option("--focal-scale", em.focal_scale, "Focal scale for --space pixels");
    error_map->add_option("--nodes", em.nodes, "Gauss-Legendre nodes per axis")->check(CLI::PositiveNumber);
    error_map->add_option("--half-width", em.half_width, "Integration half-width (radians)");
    error_map->add_option("--width", em.width, "Image width for --space pixels")->check(CLI::PositiveNumber);
    error_map->add_option("--height", em.height, "Image height for --space pixels")->check(CLI::PositiveNumber);
    error_map->add_option("--focal", em.focal, "Base focal length for --space pixels")->check(CLI::PositiveNumber);
    error_map->add_option("--out", em.out, "CSV path (default: standard output)");

    SynthFlags sf;
    auto *synth = app.add_subcommand("synth", "Write a deterministic fixture scene as PLY");
    synth->add_option("--kind", sf.kind, "Fixture kind")->check(CLI::IsMember({"onaxis", "ring", "grid"}));
    synth->add_option("--n", sf.n, "Number of splats");
    synth->add_option("--radius", sf.radius, "Distance from the origin");
    synth->add_option("--angle", sf.angle, "Ring half-angle in degrees");
    synth->add_option("--scale", sf.scale, "Isotropic splat scale");
    synth->add_option("--sh-degree", sf.sh_degree, "SH degree (grid)")->check(CLI::Range(0, 3));
    synth->add_option("--seed", sf.seed, "Random seed");
    synth->add_option("--out", sf.out, "Output PLY")->required();
    synth->add_option("--cameras-out", sf.cameras_out, "Also write a single identity camera file");
    synth->add_option("--camera-model", sf.camera_model, "Model for --cameras-out")
        ->check(CLI::IsMember({"pinhole", "fisheye", "panorama"}));
    synth->add_option("--width", sf.width, "Camera width for --cameras-out")->check(CLI::PositiveNumber);
    synth->add_option("--height", sf.height, "Camera height for --cameras-out")->check(CLI::PositiveNumber);
    synth->add_option("--focal", sf.focal, "Camera focal length for --cameras-out")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        const unsigned threads = resolve_threads(threads_flag);
        if (*render)
            return cmd_render(render_flags, out_dir, threads);
        if (*compare)
            return cmd_compare(compare_flags, gt_dir, focal_mask, threads);
        if (*error_map)
            return cmd_error_map(em, threads);
        if (*synth)
            return cmd_synth(sf);
    } catch (const ogs::Error &e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.code() == ogs::ErrorCode::ClassicUnsupportedCamera ? 2 : 1;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
