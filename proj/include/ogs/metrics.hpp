// Copyright Contributors to the ogs Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "ogs/common.hpp"
#include "ogs/core_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <ostream>
#include <vector>

namespace ogs {

struct MetricReport {
    double psnr_db = 0.0;
    double ssim = 0.0;
    std::size_t n_pixels = 0;
};

inline constexpr double kPsnrCap = 100.0;

namespace detail {

inline void require_same_size(const ImageBuffer &a, const ImageBuffer &b) {
    if (a.width != b.width || a.height != b.height)
        throw Error(ErrorCode::DimensionMismatch, "images are " + std::to_string(a.width) + "x" +
                                                      std::to_string(a.height) + " and " + std::to_string(b.width) +
                                                      "x" + std::to_string(b.height));
}

inline std::vector<double> luminance(const ImageBuffer &img) {
    std::vector<double> y(static_cast<std::size_t>(img.width) * img.height);
    for (std::size_t i = 0; i < y.size(); ++i) {
        const float *p = &img.pixels[3 * i];
        y[i] = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
    }
    return y;
}

// Separable "valid" filter with an 11-tap Gaussian (sigma 1.5).
inline std::vector<double> gaussian_filter_valid(const std::vector<double> &src, int w, int h) {
    constexpr int kSize = 11;
    std::array<double, kSize> k{};
    double sum = 0.0;
    for (int i = 0; i < kSize; ++i) {
        const double x = i - kSize / 2;
        k[i] = std::exp(-x * x / (2.0 * 1.5 * 1.5));
        sum += k[i];
    }
    for (double &v : k)
        v /= sum;
    const int ow = w - kSize + 1, oh = h - kSize + 1;
    std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < kSize; ++i)
                acc += k[i] * src[static_cast<std::size_t>(y) * w + x + i];
            tmp[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    std::vector<double> out(static_cast<std::size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < kSize; ++i)
                acc += k[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    return out;
}

} // namespace detail

/// 10 log10(1 / MSE) over all channels, MAX = 1, capped at 100 dB.
inline double psnr(const ImageBuffer &a, const ImageBuffer &b) {
    detail::require_same_size(a, b);
    double se = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const double d = static_cast<double>(a.pixels[i]) - static_cast<double>(b.pixels[i]);
        se += d * d;
    }
    if (se == 0.0 || a.pixels.empty())
        return kPsnrCap;
    const double mse = se / static_cast<double>(a.pixels.size());
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

/// Mean SSIM on Rec.601 luminance, 11x11 Gaussian window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03, dynamic range 1, valid windows only.
inline double ssim(const ImageBuffer &a, const ImageBuffer &b) {
    detail::require_same_size(a, b);
    if (std::min(a.width, a.height) < 11)
        throw Error(ErrorCode::TooSmall, "SSIM needs both dimensions >= 11");
    const int w = a.width, h = a.height;
    const auto ya = detail::luminance(a);
    const auto yb = detail::luminance(b);
    std::vector<double> aa(ya.size()), bb(ya.size()), ab(ya.size());
    for (std::size_t i = 0; i < ya.size(); ++i) {
        aa[i] = ya[i] * ya[i];
        bb[i] = yb[i] * yb[i];
        ab[i] = ya[i] * yb[i];
    }
    const auto mu_a = detail::gaussian_filter_valid(ya, w, h);
    const auto mu_b = detail::gaussian_filter_valid(yb, w, h);
    const auto e_aa = detail::gaussian_filter_valid(aa, w, h);
    const auto e_bb = detail::gaussian_filter_valid(bb, w, h);
    const auto e_ab = detail::gaussian_filter_valid(ab, w, h);
    constexpr double c1 = 0.01 * 0.01;
    constexpr double c2 = 0.03 * 0.03;
    double acc = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        const double ma = mu_a[i], mb = mu_b[i];
        const double va = e_aa[i] - ma * ma;
        const double vb = e_bb[i] - mb * mb;
        const double cov = e_ab[i] - ma * mb;
        acc += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    return acc / static_cast<double>(mu_a.size());
}

inline ImageBuffer crop(const ImageBuffer &img, int x0, int y0, int w, int h) {
    if (x0 < 0 || y0 < 0 || w <= 0 || h <= 0 || x0 + w > img.width || y0 + h > img.height)
        throw Error(ErrorCode::DimensionMismatch, "crop window outside the image");
    ImageBuffer out(w, h, img.background);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out.set(x, y, img.at(x0 + x, y0 + y));
    return out;
}

/// Bilinear resample with pixel-center alignment and edge clamping.
inline ImageBuffer resize_bilinear(const ImageBuffer &img, int w, int h) {
    if (w <= 0 || h <= 0 || img.width <= 0 || img.height <= 0)
        throw Error(ErrorCode::InvalidArgument, "resize to an empty image");
    ImageBuffer out(w, h, img.background);
    const double sx = static_cast<double>(img.width) / w;
    const double sy = static_cast<double>(img.height) / h;
    for (int y = 0; y < h; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height - 1.0);
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double ty = fy - y0;
        for (int x = 0; x < w; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width - 1.0);
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double tx = fx - x0;
            const Rgb top = (1.0 - tx) * img.at(x0, y0) + tx * img.at(x1, y0);
            const Rgb bot = (1.0 - tx) * img.at(x0, y1) + tx * img.at(x1, y1);
            out.set(x, y, (1.0 - ty) * top + ty * bot);
        }
    }
    return out;
}

inline MetricReport evaluate(const ImageBuffer &a, const ImageBuffer &b) {
    return {psnr(a, b), ssim(a, b), static_cast<std::size_t>(a.width) * a.height};
}

/// Short-focal evaluation: the render was made at focal length scale * f, so
/// only its central scale-fraction has ground truth. That region is cropped
/// (dimensions floored to even counts) and compared with the ground truth
/// resized to the crop.
inline MetricReport focal_mask_eval(const ImageBuffer &render, const ImageBuffer &gt, double scale) {
    detail::require_same_size(render, gt);
    if (!(scale > 0.0 && scale <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "focal mask scale must be in (0, 1]");
    if (scale == 1.0)
        return evaluate(render, gt);
    const int cw = 2 * static_cast<int>(std::floor(scale * render.width / 2.0));
    const int ch = 2 * static_cast<int>(std::floor(scale * render.height / 2.0));
    if (cw <= 0 || ch <= 0)
        throw Error(ErrorCode::TooSmall, "focal mask crop is empty");
    const ImageBuffer patch = crop(render, (render.width - cw) / 2, (render.height - ch) / 2, cw, ch);
    return evaluate(patch, resize_bilinear(gt, cw, ch));
}

/// One CSV row: psnr_db,ssim,n_pixels
inline void write_metric_row(const MetricReport &m, std::ostream &os) {
    os << std::setprecision(12) << m.psnr_db << ',' << m.ssim << ',' << m.n_pixels << '\n';
}

} // namespace ogs
