// Copyright Contributors to the ogs Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "ogs/common.hpp"
#include "ogs/core_model.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace ogs {

enum class ImageFormat { Png, Ppm };

inline std::uint8_t to_byte(float v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

/// 8-bit RGB bytes, clamped to [0, 1] before rounding. Throws on non-finite pixels.
inline std::vector<std::uint8_t> quantize_rgb8(const ImageBuffer &img) {
    if (!img.all_finite())
        throw Error(ErrorCode::InvalidArgument, "image contains non-finite pixels");
    std::vector<std::uint8_t> out(img.pixels.size());
    std::transform(img.pixels.begin(), img.pixels.end(), out.begin(), to_byte);
    return out;
}

/// The image as it reads back after an 8-bit round trip.
inline ImageBuffer quantized(const ImageBuffer &img) {
    ImageBuffer out = img;
    const auto bytes = quantize_rgb8(img);
    for (std::size_t i = 0; i < bytes.size(); ++i)
        out.pixels[i] = bytes[i] / 255.0f;
    return out;
}

inline std::string encode_ppm(const ImageBuffer &img) {
    const auto bytes = quantize_rgb8(img);
    std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    out.append(reinterpret_cast<const char *>(bytes.data()), bytes.size());
    return out;
}

namespace detail {

struct PngWriteGuard {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriteGuard() { png_destroy_write_struct(&png, &info); }
};

struct PngReadGuard {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReadGuard() { png_destroy_read_struct(&png, &info, nullptr); }
};

struct FileCloser {
    void operator()(std::FILE *f) const {
        if (f)
            std::fclose(f);
    }
};

inline void write_png_file(const ImageBuffer &img, const std::filesystem::path &path) {
    const auto bytes = quantize_rgb8(img);
    std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "wb"));
    if (!fp)
        throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    PngWriteGuard g;
    g.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!g.png)
        throw Error(ErrorCode::IoError, "png_create_write_struct failed");
    g.info = png_create_info_struct(g.png);
    if (!g.info)
        throw Error(ErrorCode::IoError, "png_create_info_struct failed");
    if (setjmp(png_jmpbuf(g.png)))
        throw Error(ErrorCode::IoError, "libpng failed writing " + path.string());
    png_init_io(g.png, fp.get());
    png_set_IHDR(g.png, g.info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(g.png, g.info);
    for (int y = 0; y < img.height; ++y)
        png_write_row(g.png, bytes.data() + static_cast<std::size_t>(y) * img.width * 3);
    png_write_end(g.png, nullptr);
}

inline ImageBuffer read_png_file(const std::filesystem::path &path) {
    std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "rb"));
    if (!fp)
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    PngReadGuard g;
    g.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!g.png)
        throw Error(ErrorCode::IoError, "png_create_read_struct failed");
    g.info = png_create_info_struct(g.png);
    if (!g.info)
        throw Error(ErrorCode::IoError, "png_create_info_struct failed");
    std::vector<std::uint8_t> data;
    png_uint_32 w = 0, h = 0;
    if (setjmp(png_jmpbuf(g.png)))
        throw Error(ErrorCode::IoError, "libpng failed reading " + path.string());
    png_init_io(g.png, fp.get());
    png_read_info(g.png, g.info);
    w = png_get_image_width(g.png, g.info);
    h = png_get_image_height(g.png, g.info);
    const int color = png_get_color_type(g.png, g.info);
    if (png_get_bit_depth(g.png, g.info) == 16)
        png_set_strip_16(g.png);
    if (color == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(g.png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(g.png);
    if (color & PNG_COLOR_MASK_ALPHA)
        png_set_strip_alpha(g.png);
    png_read_update_info(g.png, g.info);
    data.resize(static_cast<std::size_t>(w) * h * 3);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y)
        rows[y] = data.data() + static_cast<std::size_t>(y) * w * 3;
    png_read_image(g.png, rows.data());
    png_read_end(g.png, nullptr);

    ImageBuffer img(static_cast<int>(w), static_cast<int>(h));
    for (std::size_t i = 0; i < data.size(); ++i)
        img.pixels[i] = data[i] / 255.0f;
    return img;
}

inline ImageBuffer decode_ppm(const std::string &bytes) {
    std::istringstream in(bytes);
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255)
        throw Error(ErrorCode::UnsupportedFormat, "only 8-bit binary P6 PPM is supported");
    in.get();
    const auto offset = static_cast<std::size_t>(in.tellg());
    const std::size_t n = static_cast<std::size_t>(w) * h * 3;
    if (bytes.size() < offset + n)
        throw Error(ErrorCode::TruncatedFile, "PPM pixel data is truncated");
    ImageBuffer img(w, h);
    for (std::size_t i = 0; i < n; ++i)
        img.pixels[i] = static_cast<unsigned char>(bytes[offset + i]) / 255.0f;
    return img;
}

} // namespace detail

/// Writes an 8-bit image; deterministic bytes for identical input.
inline void write_image(const ImageBuffer &img, const std::filesystem::path &path, ImageFormat format) {
    if (format == ImageFormat::Png) {
        detail::write_png_file(img, path);
        return;
    }
    const std::string bytes = encode_ppm(img);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

/// Reads a PNG or P6 PPM, picked by file extension.
inline ImageBuffer read_image(const std::filesystem::path &path) {
    if (path.extension() == ".ppm") {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw Error(ErrorCode::IoError, "cannot open " + path.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        return detail::decode_ppm(ss.str());
    }
    return detail::read_png_file(path);
}

} // namespace ogs
