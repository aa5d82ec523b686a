// Copyright Contributors to the ogs Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "ogs/common.hpp"
#include "ogs/core_model.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

static_assert(std::endian::native == std::endian::little, "PLY I/O assumes a little-endian host");

namespace ogs {

// ---------------------------------------------------------------------------
// PLY splat checkpoints
// ---------------------------------------------------------------------------

enum class PlyScalar { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

struct PlyProperty {
    std::string name;
    PlyScalar type = PlyScalar::Float32;
};

struct SplatFileHeader {
    std::size_t vertex_count = 0;
    std::vector<PlyProperty> properties; // declaration order
    std::size_t header_bytes = 0;
};

struct RejectedRecord {
    std::size_t index = 0;
    std::string reason;
};

struct PlyLoadResult {
    Scene scene;
    std::vector<RejectedRecord> rejected;
};

namespace detail {

inline std::size_t scalar_size(PlyScalar t) {
    switch (t) {
    case PlyScalar::Int8:
    case PlyScalar::UInt8: return 1;
    case PlyScalar::Int16:
    case PlyScalar::UInt16: return 2;
    case PlyScalar::Int32:
    case PlyScalar::UInt32:
    case PlyScalar::Float32: return 4;
    case PlyScalar::Float64: return 8;
    }
    return 0;
}

inline std::optional<PlyScalar> parse_scalar(const std::string &s) {
    static const std::unordered_map<std::string, PlyScalar> table = {
        {"char", PlyScalar::Int8},     {"int8", PlyScalar::Int8},       {"uchar", PlyScalar::UInt8},
        {"uint8", PlyScalar::UInt8},   {"short", PlyScalar::Int16},     {"int16", PlyScalar::Int16},
        {"ushort", PlyScalar::UInt16}, {"uint16", PlyScalar::UInt16},   {"int", PlyScalar::Int32},
        {"int32", PlyScalar::Int32},   {"uint", PlyScalar::UInt32},     {"uint32", PlyScalar::UInt32},
        {"float", PlyScalar::Float32}, {"float32", PlyScalar::Float32}, {"double", PlyScalar::Float64},
        {"float64", PlyScalar::Float64}};
    const auto it = table.find(s);
    if (it == table.end())
        return std::nullopt;
    return it->second;
}

template <typename T>
T read_le(const unsigned char *p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return v;
}

inline double read_scalar(const unsigned char *p, PlyScalar t) {
    switch (t) {
    case PlyScalar::Int8: return read_le<std::int8_t>(p);
    case PlyScalar::UInt8: return read_le<std::uint8_t>(p);
    case PlyScalar::Int16: return read_le<std::int16_t>(p);
    case PlyScalar::UInt16: return read_le<std::uint16_t>(p);
    case PlyScalar::Int32: return read_le<std::int32_t>(p);
    case PlyScalar::UInt32: return read_le<std::uint32_t>(p);
    case PlyScalar::Float32: return read_le<float>(p);
    case PlyScalar::Float64: return read_le<double>(p);
    }
    return 0.0;
}

inline std::string read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path &path, const std::string &bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

} // namespace detail

/// Parses the ASCII header of a binary little-endian PLY held in `bytes`.
inline SplatFileHeader parse_ply_header(const std::string &bytes) {
    const std::size_t end = bytes.find("end_header");
    if (bytes.rfind("ply", 0) != 0 || end == std::string::npos)
        throw Error(ErrorCode::UnsupportedFormat, "not a PLY file");
    const std::size_t nl = bytes.find('\n', end);
    if (nl == std::string::npos)
        throw Error(ErrorCode::TruncatedFile, "header is not terminated");

    SplatFileHeader h;
    h.header_bytes = nl + 1;
    std::istringstream in(bytes.substr(0, end));
    std::string line;
    bool in_vertex = false;
    bool seen_vertex = false;
    bool format_ok = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        std::istringstream ls(line);
        std::string kw;
        ls >> kw;
        if (kw == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt != "binary_little_endian")
                throw Error(ErrorCode::UnsupportedFormat, "only binary_little_endian PLY is supported, got " + fmt);
            format_ok = true;
        } else if (kw == "element") {
            std::string name;
            long long count = -1;
            ls >> name >> count;
            if (seen_vertex) {
                in_vertex = false; // later elements are ignored
                continue;
            }
            if (name != "vertex")
                throw Error(ErrorCode::UnsupportedFormat, "first element must be 'vertex', got " + name);
            if (count < 0)
                throw Error(ErrorCode::UnsupportedFormat, "invalid vertex count");
            h.vertex_count = static_cast<std::size_t>(count);
            in_vertex = seen_vertex = true;
        } else if (kw == "property" && in_vertex) {
            std::string type, name;
            ls >> type >> name;
            if (type == "list")
                throw Error(ErrorCode::UnsupportedFormat, "list properties are not supported on vertices");
            const auto t = detail::parse_scalar(type);
            if (!t)
                throw Error(ErrorCode::UnsupportedFormat, "unknown property type " + type);
            h.properties.push_back({name, *t});
        }
    }
    if (!format_ok)
        throw Error(ErrorCode::UnsupportedFormat, "missing format line");
    if (!seen_vertex)
        throw Error(ErrorCode::UnsupportedFormat, "missing vertex element");
    return h;
}

/// Decodes a splat checkpoint held in memory. Records with non-finite fields
/// or degenerate quaternions are rejected individually and reported.
inline PlyLoadResult parse_ply(const std::string &bytes) {
    const SplatFileHeader h = parse_ply_header(bytes);
    std::unordered_map<std::string, std::pair<std::size_t, PlyScalar>> index;
    std::size_t stride = 0;
    for (const auto &p : h.properties) {
        index[p.name] = {stride, p.type};
        stride += detail::scalar_size(p.type);
    }
    const auto require = [&](const std::string &name) {
        const auto it = index.find(name);
        if (it == index.end())
            throw Error(ErrorCode::MissingProperty, "missing vertex property '" + name + "'");
        return it->second;
    };
    std::vector<std::pair<std::size_t, PlyScalar>> base;
    for (const char *name : {"x", "y", "z", "rot_0", "rot_1", "rot_2", "rot_3", "scale_0", "scale_1",
                             "scale_2", "opacity", "f_dc_0", "f_dc_1", "f_dc_2"})
        base.push_back(require(name));

    std::size_t n_rest = 0;
    while (index.count("f_rest_" + std::to_string(n_rest)))
        ++n_rest;
    int degree = -1;
    for (int l = 0; l <= kMaxShDegree; ++l) {
        if (static_cast<std::size_t>(3 * (sh_coeff_count(l) - 1)) == n_rest)
            degree = l;
    }
    if (degree < 0)
        throw Error(ErrorCode::UnsupportedFormat,
                    std::to_string(n_rest) + " f_rest properties do not match any SH degree");
    std::vector<std::pair<std::size_t, PlyScalar>> rest;
    for (std::size_t k = 0; k < n_rest; ++k)
        rest.push_back(index["f_rest_" + std::to_string(k)]);

    if (stride == 0 && h.vertex_count > 0)
        throw Error(ErrorCode::UnsupportedFormat, "vertex element has no properties");
    const std::size_t available = bytes.size() - h.header_bytes;
    if (h.vertex_count > 0 && available / stride < h.vertex_count)
        throw Error(ErrorCode::TruncatedFile, "expected " + std::to_string(h.vertex_count) + " vertices of " +
                                                  std::to_string(stride) + " bytes, file holds " +
                                                  std::to_string(available) + " bytes");

    PlyLoadResult out;
    out.scene.sh_degree = degree;
    out.scene.gaussians.reserve(h.vertex_count);
    const auto *data = reinterpret_cast<const unsigned char *>(bytes.data()) + h.header_bytes;
    const std::size_t per_channel = static_cast<std::size_t>(sh_coeff_count(degree) - 1);
    for (std::size_t v = 0; v < h.vertex_count; ++v) {
        const unsigned char *rec = data + v * stride;
        const auto get = [&](const std::pair<std::size_t, PlyScalar> &p) {
            return detail::read_scalar(rec + p.first, p.second);
        };
        Gaussian3D g;
        g.mean_world = {get(base[0]), get(base[1]), get(base[2])};
        g.rot = Eigen::Quaterniond(get(base[3]), get(base[4]), get(base[5]), get(base[6]));
        g.log_scale = {get(base[7]), get(base[8]), get(base[9])};
        g.opacity_logit = get(base[10]);
        g.sh.assign(static_cast<std::size_t>(sh_coeff_count(degree)), Rgb::Zero());
        g.sh[0] = {get(base[11]), get(base[12]), get(base[13])};
        // f_rest is channel-major: all R coefficients, then G, then B.
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t k = 0; k < per_channel; ++k)
                g.sh[k + 1][static_cast<Eigen::Index>(c)] = get(rest[c * per_channel + k]);
        try {
            out.scene.gaussians.push_back(decode_gaussian(g));
        } catch (const Error &e) {
            out.rejected.push_back({v, e.what()});
        }
    }
    return out;
}

inline PlyLoadResult load_ply(const std::filesystem::path &path) {
    try {
        return parse_ply(detail::read_file(path));
    } catch (const Error &e) {
        if (e.code() == ErrorCode::IoError)
            throw;
        throw Error(e.code(), path.string() + ": " + e.detail());
    }
}

/// Serializes a scene as binary little-endian float32 PLY.
inline std::string serialize_ply(const Scene &scene) {
    scene.validate();
    const std::size_t per_channel = static_cast<std::size_t>(sh_coeff_count(scene.sh_degree) - 1);
    std::ostringstream hdr;
    hdr << "ply\nformat binary_little_endian 1.0\nelement vertex " << scene.gaussians.size() << '\n';
    for (const char *name : {"x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2"})
        hdr << "property float " << name << '\n';
    for (std::size_t k = 0; k < 3 * per_channel; ++k)
        hdr << "property float f_rest_" << k << '\n';
    for (const char *name : {"opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"})
        hdr << "property float " << name << '\n';
    hdr << "end_header\n";

    std::string out = hdr.str();
    std::vector<float> rec;
    for (const auto &g : scene.gaussians) {
        rec.clear();
        for (int i = 0; i < 3; ++i)
            rec.push_back(static_cast<float>(g.mean_world[i]));
        for (int i = 0; i < 3; ++i)
            rec.push_back(static_cast<float>(g.sh[0][i]));
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t k = 0; k < per_channel; ++k)
                rec.push_back(static_cast<float>(g.sh[k + 1][static_cast<Eigen::Index>(c)]));
        rec.push_back(static_cast<float>(g.opacity_logit));
        for (int i = 0; i < 3; ++i)
            rec.push_back(static_cast<float>(g.log_scale[i]));
        rec.push_back(static_cast<float>(g.rot.w()));
        rec.push_back(static_cast<float>(g.rot.x()));
        rec.push_back(static_cast<float>(g.rot.y()));
        rec.push_back(static_cast<float>(g.rot.z()));
        out.append(reinterpret_cast<const char *>(rec.data()), rec.size() * sizeof(float));
    }
    return out;
}

inline void save_ply(const Scene &scene, const std::filesystem::path &path) {
    detail::write_file(path, serialize_ply(scene));
}

// ---------------------------------------------------------------------------
// Camera files
// ---------------------------------------------------------------------------

struct CameraRecord {
    std::string id;
    CameraRig rig;
};

inline CameraModel parse_camera_model(const std::string &tag) {
    if (tag == "pinhole")
        return CameraModel::Pinhole;
    if (tag == "fisheye")
        return CameraModel::FisheyeEquidistant;
    if (tag == "panorama")
        return CameraModel::Equirectangular;
    throw Error(ErrorCode::UnknownModelTag, "unknown camera model '" + tag + "'");
}

/// Accepts rotations with |R R^T - I|_F <= 1e-6 and snaps them to the nearest
/// rotation (polar factor); anything further off is rejected.
inline Mat3 orthonormalize_rotation(const Mat3 &r) {
    const double dev = (r * r.transpose() - Mat3::Identity()).norm();
    if (!r.allFinite() || !(dev <= 1e-6) || r.determinant() <= 0.0)
        throw Error(ErrorCode::NonOrthonormalRotation,
                    "rotation deviates from orthonormal by " + std::to_string(dev));
    Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().transpose();
}

/// One record per non-comment line:
///   id width height model fx fy cx cy r00 r01 r02 r10 r11 r12 r20 r21 r22 tx ty tz
/// model is pinhole | fisheye | panorama; the pose maps world to camera.
inline std::vector<CameraRecord> parse_cameras(std::istream &in) {
    std::vector<CameraRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#')
            continue;
        std::istringstream ls(line);
        CameraRecord rec;
        std::string model;
        std::array<double, 16> v{};
        ls >> rec.id >> rec.rig.width >> rec.rig.height >> model;
        for (double &x : v)
            ls >> x;
        if (!ls)
            throw Error(ErrorCode::InvalidArgument,
                        "camera line " + std::to_string(lineno) + ": expected 20 fields");
        std::string extra;
        if (ls >> extra)
            throw Error(ErrorCode::InvalidArgument,
                        "camera line " + std::to_string(lineno) + ": trailing field '" + extra + "'");
        rec.rig.model = parse_camera_model(model);
        rec.rig.fx = v[0];
        rec.rig.fy = v[1];
        rec.rig.cx = v[2];
        rec.rig.cy = v[3];
        Mat3 r;
        r << v[4], v[5], v[6], v[7], v[8], v[9], v[10], v[11], v[12];
        rec.rig.pose_w2c.rotation = orthonormalize_rotation(r);
        rec.rig.pose_w2c.translation = {v[13], v[14], v[15]};
        rec.rig.validate();
        out.push_back(std::move(rec));
    }
    return out;
}

inline std::vector<CameraRecord> load_cameras(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    try {
        return parse_cameras(in);
    } catch (const Error &e) {
        throw Error(e.code(), path.string() + ": " + e.detail());
    }
}

inline void write_cameras(const std::vector<CameraRecord> &cams, std::ostream &os) {
    os << "# id width height model fx fy cx cy r00 r01 r02 r10 r11 r12 r20 r21 r22 tx ty tz\n";
    os << std::setprecision(17);
    for (const auto &c : cams) {
        const CameraRig &r = c.rig;
        os << c.id << ' ' << r.width << ' ' << r.height << ' ' << to_string(r.model) << ' ' << r.fx << ' '
           << r.fy << ' ' << r.cx << ' ' << r.cy;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                os << ' ' << r.pose_w2c.rotation(i, j);
        for (int i = 0; i < 3; ++i)
            os << ' ' << r.pose_w2c.translation[i];
        os << '\n';
    }
}

inline void save_cameras(const std::vector<CameraRecord> &cams, const std::filesystem::path &path) {
    std::ostringstream ss;
    write_cameras(cams, ss);
    detail::write_file(path, ss.str());
}

} // namespace ogs
