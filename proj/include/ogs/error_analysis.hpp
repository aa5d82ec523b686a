// Copyright Contributors to the ogs Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Local affine approximation error of the z = 1 projection.
//
// For a mean direction (theta_mu, phi_mu) the error functional is the integral
// of |R1|^2 over the box [theta_mu - h, theta_mu + h] x [phi_mu - h, phi_mu + h]
// of ray directions, R1 being the first-order Taylor remainder of the
// projection expanded at the mean. Directions use
//   (sin phi cos theta, -sin theta, cos phi cos theta).

#include "ogs/common.hpp"
#include "ogs/core_model.hpp"
#include "ogs/parallel.hpp"
#include "ogs/projection.hpp"
#include "ogs/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

namespace ogs {

struct SphericalMean {
    double theta_mu = 0.0;
    double phi_mu = 0.0;
};

struct QuadratureSpec {
    int nodes = 64;                  // per axis
    double half_width = kPi / 4.0;   // of the integration box, radians
};

/// Sampled error functional. values(i, j) pairs axis1[i] with axis2[j].
struct ErrorField {
    std::string axis1_name;
    std::string axis2_name;
    std::vector<double> axis1;
    std::vector<double> axis2;
    std::vector<double> values;
    double meta = 0.0; // domain scale or focal scale

    double at(std::size_t i, std::size_t j) const { return values[i * axis2.size() + j]; }

    std::pair<std::size_t, std::size_t> argmin() const {
        const auto it = std::min_element(values.begin(), values.end());
        const auto k = static_cast<std::size_t>(it - values.begin());
        return {k / axis2.size(), k % axis2.size()};
    }
    double min() const { return *std::min_element(values.begin(), values.end()); }
    double max() const { return *std::max_element(values.begin(), values.end()); }
    double mean() const {
        return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    }
};

inline Vec3 spherical_to_unit(double theta, double phi) {
    return {std::sin(phi) * std::cos(theta), -std::sin(theta), std::cos(phi) * std::cos(theta)};
}

/// Inverse of spherical_to_unit for directions with positive z.
inline SphericalMean unit_to_spherical(const Vec3 &dir) {
    const Vec3 d = dir.normalized();
    return {std::asin(std::clamp(-d.y(), -1.0, 1.0)), std::atan2(d.x(), d.z())};
}

namespace detail {

// R1 without the front-of-plane checks; callers guarantee positive z.
inline Vec3 remainder_kernel(const Vec3 &x, const Vec3 &mu) {
    const double inv_mz = 1.0 / mu.z();
    const double inv_xz = 1.0 / x.z();
    const Vec3 dx = x - mu;
    Vec3 r;
    r.x() = x.x() * inv_xz - mu.x() * inv_mz - (dx.x() * inv_mz - mu.x() * dx.z() * inv_mz * inv_mz);
    r.y() = x.y() * inv_xz - mu.y() * inv_mz - (dx.y() * inv_mz - mu.y() * dx.z() * inv_mz * inv_mz);
    r.z() = 0.0;
    return r;
}

inline void check_box(const SphericalMean &m, double half_width) {
    const double limit = kPi / 2.0;
    if (!(half_width > 0.0))
        throw Error(ErrorCode::InvalidArgument, "integration half-width must be positive");
    if (!(std::abs(m.theta_mu) + half_width < limit) || !(std::abs(m.phi_mu) + half_width < limit))
        throw Error(ErrorCode::DomainOverflow,
                    "integration box around (" + std::to_string(m.theta_mu) + ", " +
                        std::to_string(m.phi_mu) + ") leaves (-pi/2, pi/2)^2");
}

} // namespace detail

/// R1(x') = phi(x') - phi(mu') - J(mu') (x' - mu') for the z = 1 projection.
inline Vec3 taylor_remainder(const Vec3 &xc, const Vec3 &mu) {
    if (!(xc.z() > kNearEpsilon) || !(mu.z() > kNearEpsilon))
        throw Error(ErrorCode::BehindCamera, "remainder needs both points in front of z = 1");
    const Vec3 r = classic_project(xc) - classic_project(mu) - classic_jacobian(mu) * (xc - mu);
    return {r.x(), r.y(), 0.0};
}

/// |R1|^2 at ray direction (theta, phi) for mean direction m.
inline double error_integrand(double theta, double phi, const SphericalMean &m) {
    return detail::remainder_kernel(spherical_to_unit(theta, phi),
                                    spherical_to_unit(m.theta_mu, m.phi_mu))
        .squaredNorm();
}

/// Tensor-product Gauss-Legendre estimate of the error functional.
inline double error_integral(const SphericalMean &m, const QuadratureSpec &quad = {}) {
    detail::check_box(m, quad.half_width);
    const GaussLegendreRule rule = gauss_legendre(quad.nodes);
    const Vec3 mu = spherical_to_unit(m.theta_mu, m.phi_mu);
    const double h = quad.half_width;
    const std::size_t n = rule.nodes.size();
    std::vector<double> sin_phi(n), cos_phi(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double phi = m.phi_mu + h * rule.nodes[j];
        sin_phi[j] = std::sin(phi);
        cos_phi[j] = std::cos(phi);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double theta = m.theta_mu + h * rule.nodes[i];
        const double st = std::sin(theta), ct = std::cos(theta);
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const Vec3 x(sin_phi[j] * ct, -st, cos_phi[j] * ct);
            row += rule.weights[j] * detail::remainder_kernel(x, mu).squaredNorm();
        }
        total += rule.weights[i] * row;
    }
    return total * h * h;
}

struct ErrorEstimate {
    double value = 0.0;
    double relative_change = 0.0; // |eps(2n) - eps(n)| / eps(2n)
};

/// error_integral at `quad.nodes` and twice as many; returns the finer value.
inline ErrorEstimate error_integral_checked(const SphericalMean &m, const QuadratureSpec &quad = {}) {
    QuadratureSpec fine = quad;
    fine.nodes *= 2;
    const double coarse = error_integral(m, quad);
    const double v = error_integral(m, fine);
    return {v, std::abs(v - coarse) / std::abs(v)};
}

/// Central finite differences of error_integral with step 1e-4.
inline Vec2 error_gradient(const SphericalMean &m, const QuadratureSpec &quad = {}, double step = 1e-4) {
    const auto eval = [&](double dt, double dp) {
        return error_integral({m.theta_mu + dt, m.phi_mu + dp}, quad);
    };
    return {(eval(step, 0.0) - eval(-step, 0.0)) / (2.0 * step),
            (eval(0.0, step) - eval(0.0, -step)) / (2.0 * step)};
}

/// Closed-form value of the functional for half-width pi/4. It agrees with
/// the quadrature only on the diagonal theta_mu == phi_mu, so it is kept as a
/// cross-check there and nowhere else.
inline double error_integral_closed_form_diagonal(double t) {
    using std::cos, std::sin, std::tan, std::log, std::exp, std::sqrt, std::pow;
    const double tm = t, pm = t;
    const double pi = kPi;
    const double r2 = std::numbers::sqrt2;
    const double tp = tan(pm + pi / 4), tt = tan(tm + pi / 4);
    const double sp = sin(pm + pi / 4), cp = cos(pm + pi / 4);
    const double c4 = pow(cos(pm), 4) * pow(cos(tm), 4);
    const double l1 = log((sp + 1) * (cp + 1) / ((1 - sp) * (1 - cp)));
    const double l3 = log((1 - sp) * (1 - cp) * exp(2 * r2 * cos(tm)) / ((sp + 1) * (cp + 1)));
    const double l2 = l3 - 2 * sin(tm) * log(tt);
    double s = 8 * ((2 * tt - pi) * tt + 2) * c4 * tp * tp;
    s += (-4 * (2 * cos(2 * tm) + pi) * pow(sin(pm), 2) + pi * (2 * cos(2 * tm) + pi) + 4 * cos(2 * tm) + 2 * pi) *
         pow(sin(tm), 2) * tp * tt;
    s += 8 * l1 * l2 * pow(cos(pm), 3) * pow(cos(tm), 3) * tp * tt;
    s += 4 * pi * (-4 * log(tp) * tan(pm) + pi * pow(tan(pm), 2) + 2 * tp - pi) * c4 * tp * tt;
    s += (2 * pi * ((4 + 2 * pi + 16 * r2) * pow(sin(tm), 2) - 2 + pi) * pow(cos(pm), 2) +
          (2 * pi - 4) * cos(2 * tm) - 2 * pi + pi * pi) *
         pow(cos(tm), 2) * tp * tt;
    s += 16 * r2 * l3 * pow(cos(pm), 3) * pow(cos(tm), 4) * tp * tt;
    s += 64 * pow(sin(pm), 2) * pow(cos(pm), 2) * pow(cos(tm), 4) * tp * tt;
    s -= 16 * r2 * (1 + r2) * sin(tm) * sin(2 * tm) * pow(cos(pm), 2) * cos(tm) * tp * tt;
    s += 8 * pi * c4 * tt;
    s += 8 * (-2 * pi * pow(cos(tm), 2) + pi + 4) * pow(cos(pm), 4) * pow(cos(tm), 2) / pow(tan(tm) - 1, 2);
    return s / (16 * c4 * tp * tt);
}

/// n x n samples over [-lambda pi/4, lambda pi/4]^2 of (theta_mu, phi_mu).
inline ErrorField error_field_spherical(double lambda, int n, const QuadratureSpec &quad = {},
                                        unsigned workers = 1) {
    if (!(lambda > 0.0))
        throw Error(ErrorCode::InvalidArgument, "domain scale must be positive");
    if (n < 3)
        throw Error(ErrorCode::InvalidArgument, "grid size must be at least 3");
    const double extent = lambda * kPi / 4.0;
    detail::check_box({extent, extent}, quad.half_width);
    ErrorField f;
    f.axis1_name = "theta_mu";
    f.axis2_name = "phi_mu";
    f.meta = lambda;
    f.axis1.resize(n);
    for (int i = 0; i < n; ++i) {
        // Symmetric construction so that mirrored samples are exact negatives.
        const int k = 2 * i - (n - 1);
        f.axis1[i] = extent * static_cast<double>(k) / static_cast<double>(n - 1);
    }
    f.axis2 = f.axis1;
    f.values.assign(static_cast<std::size_t>(n) * n, 0.0);
    parallel_for(f.values.size(), workers, [&](std::size_t k) {
        f.values[k] = error_integral({f.axis1[k / n], f.axis2[k % n]}, quad);
    });
    return f;
}

/// Error functional over an n x n grid of pixel centers for a pinhole camera
/// whose focal lengths are scaled by `focal_scale`. axis1 holds u, axis2 holds v.
inline ErrorField error_field_pixels(const CameraRig &rig, double focal_scale, int n,
                                     const QuadratureSpec &quad = {}, unsigned workers = 1) {
    if (!(focal_scale > 0.0))
        throw Error(ErrorCode::InvalidArgument, "focal scale must be positive");
    if (n < 2)
        throw Error(ErrorCode::InvalidArgument, "grid size must be at least 2");
    if (rig.width <= 0 || rig.height <= 0 || !(rig.fx > 0.0) || !(rig.fy > 0.0))
        throw Error(ErrorCode::InvalidArgument, "pixel error field needs a valid pinhole rig");
    const double fx = rig.fx * focal_scale;
    const double fy = rig.fy * focal_scale;
    ErrorField f;
    f.axis1_name = "u";
    f.axis2_name = "v";
    f.meta = focal_scale;
    f.axis1.resize(n);
    f.axis2.resize(n);
    for (int i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / (n - 1);
        f.axis1[i] = 0.5 + t * (rig.width - 1.0);
        f.axis2[i] = 0.5 + t * (rig.height - 1.0);
    }
    std::vector<SphericalMean> means(static_cast<std::size_t>(n) * n);
    for (std::size_t k = 0; k < means.size(); ++k) {
        const Vec3 d((f.axis1[k / n] - rig.cx) / fx, (f.axis2[k % n] - rig.cy) / fy, 1.0);
        means[k] = unit_to_spherical(d);
        detail::check_box(means[k], quad.half_width);
    }
    f.values.assign(means.size(), 0.0);
    parallel_for(means.size(), workers, [&](std::size_t k) { f.values[k] = error_integral(means[k], quad); });
    return f;
}

/// CSV with header `axis1,axis2,value`, 17 significant digits.
inline void write_error_field_csv(const ErrorField &f, std::ostream &os) {
    os << "axis1,axis2,value\n";
    os << std::setprecision(17);
    for (std::size_t i = 0; i < f.axis1.size(); ++i)
        for (std::size_t j = 0; j < f.axis2.size(); ++j)
            os << f.axis1[i] << ',' << f.axis2[j] << ',' << f.at(i, j) << '\n';
}

} // namespace ogs
