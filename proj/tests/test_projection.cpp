// Copyright Contributors to the ogs Project
// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ogs;
using ogs::test::Rng;

namespace {

template <typename Fn>
ErrorCode code_of(Fn &&fn) {
    try {
        fn();
    } catch (const Error &e) {
        return e.code();
    }
    ADD_FAILURE() << "no ogs::Error thrown";
    return ErrorCode::InvalidArgument;
}

Mat3 rows(std::initializer_list<double> v) {
    Mat3 m;
    auto it = v.begin();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            m(i, j) = *it++;
    return m;
}

Vec3 random_front_point(Rng &rng) {
    const double z = rng.uniform(0.5, 10.0);
    return {rng.uniform(-1.5, 1.5) * z, rng.uniform(-1.5, 1.5) * z, z};
}

} // namespace

TEST(ClassicProject, Examples) {
    EXPECT_EQ(classic_project({0, 0, 1}), Vec3(0, 0, 1));
    EXPECT_EQ(classic_project({1, 2, 2}), Vec3(0.5, 1, 1));
    EXPECT_EQ(code_of([] { classic_project({0, 0, -1}); }), ErrorCode::BehindCamera);
    EXPECT_EQ(code_of([] { classic_project({0, 0, 1e-4}); }), ErrorCode::BehindCamera);
}

TEST(ClassicJacobian, Examples) {
    EXPECT_EQ(classic_jacobian({0, 0, 1}), rows({1, 0, 0, 0, 1, 0, 0, 0, 0}));
    EXPECT_EQ(classic_jacobian({0, 0, 2}), rows({0.5, 0, 0, 0, 0.5, 0, 0, 0, 0}));
    EXPECT_EQ(code_of([] { classic_jacobian({1, 1, 0}); }), ErrorCode::BehindCamera);
}

TEST(ClassicJacobian, MatchesFiniteDifferences) {
    Rng rng(101);
    for (int t = 0; t < 100; ++t) {
        const Vec3 mu = random_front_point(rng);
        const Mat3 fd = test::numeric_jacobian([](const Vec3 &x) { return classic_project(x); }, mu,
                                               1e-5 * mu.norm());
        EXPECT_LT(test::rel_error(classic_jacobian(mu), fd), 1e-6) << mu.transpose();
        EXPECT_TRUE(classic_jacobian(mu).row(2).isZero(0.0));
    }
}

TEST(SphereProject, Examples) {
    EXPECT_LT((sphere_project({0, 3, 4}) - Vec3(0, 0.6, 0.8)).norm(), 1e-15);
    EXPECT_EQ(sphere_project({0, 0, 2}), Vec3(0, 0, 1));
    EXPECT_EQ(code_of([] { sphere_project({0, 0, 0}); }), ErrorCode::DegenerateDirection);
}

TEST(OptimalProject, MeanMapsToTangentPoint) {
    const Vec3 out = optimal_project({3, 0, 4}, {0.6, 0, 0.8});
    EXPECT_LT((out - Vec3(0.6, 0, 0.8)).norm(), 1e-15);
}

TEST(OptimalProject, AxisTangentPointIsClassicExactly) {
    Rng rng(102);
    for (int t = 0; t < 200; ++t) {
        const Vec3 x = random_front_point(rng);
        EXPECT_EQ(optimal_project(x, Vec3::UnitZ()), classic_project(x));
    }
}

TEST(OptimalProject, ResultLiesOnTangentPlane) {
    Rng rng(103);
    for (int t = 0; t < 200; ++t) {
        const Vec3 xp = sphere_project(random_front_point(rng));
        Vec3 x = random_front_point(rng);
        if (xp.dot(x) <= kNearEpsilon)
            continue;
        EXPECT_NEAR(xp.dot(optimal_project(x, xp)), 1.0, 1e-9);
    }
}

TEST(OptimalProject, CompositionWithSphereProjection) {
    Rng rng(104);
    int checked = 0;
    while (checked < 200) {
        const Vec3 x = rng.vec3(-5.0, 5.0);
        const Vec3 xp = rng.vec3(-1.0, 1.0).normalized();
        if (x.norm() < 1e-3 || xp.dot(x) <= 0.05 * x.norm())
            continue;
        const Vec3 a = optimal_project(sphere_project(x), xp);
        const Vec3 b = optimal_project(x, xp);
        EXPECT_LT((a - b).norm(), 1e-12 * std::max(1.0, b.norm()));
        ++checked;
    }
}

TEST(OptimalProject, BehindTangentPlane) {
    EXPECT_EQ(code_of([] { optimal_project({0, 0, -1}, {0, 0, 1}); }), ErrorCode::BehindTangentPlane);
    EXPECT_EQ(code_of([] { optimal_project({1, 0, 0}, {0, 0, 1}); }), ErrorCode::BehindTangentPlane);
}

TEST(OptimalJacobian, Examples) {
    EXPECT_LT((optimal_jacobian({0, 0, 1}) - rows({1, 0, 0, 0, 1, 0, 0, 0, 0})).norm(), 1e-15);
    const Mat3 want = rows({0.128, 0, -0.096, 0, 0.2, 0, -0.096, 0, 0.072});
    EXPECT_LT((optimal_jacobian({3, 0, 4}) - want).norm(), 1e-15);
    EXPECT_EQ(code_of([] { optimal_jacobian({0, 0, 0}); }), ErrorCode::DegenerateDirection);
}

TEST(OptimalJacobian, MatchesFiniteDifferences) {
    Rng rng(105);
    for (int t = 0; t < 100; ++t) {
        const Vec3 mu = rng.vec3(-4.0, 4.0);
        if (mu.norm() < 0.1)
            continue;
        const Vec3 xp = sphere_project(mu);
        const Mat3 fd = test::numeric_jacobian([&](const Vec3 &x) { return optimal_project(x, xp); }, mu,
                                               1e-5 * mu.norm());
        EXPECT_LT(test::rel_error(optimal_jacobian(mu), fd), 1e-6) << mu.transpose();
    }
}

TEST(OptimalJacobian, SymmetricNullVectorAndScaling) {
    Rng rng(106);
    for (int t = 0; t < 100; ++t) {
        const Vec3 mu = rng.vec3(-4.0, 4.0);
        const Mat3 j = optimal_jacobian(mu);
        EXPECT_EQ(j, j.transpose());
        EXPECT_LT((j * mu).norm(), 1e-9 * j.norm());
        const double s = rng.uniform(0.1, 20.0);
        EXPECT_LT(test::rel_error(optimal_jacobian(s * mu), j / s), 1e-12);
        Eigen::FullPivLU<Mat3> lu(j);
        lu.setThreshold(1e-10);
        EXPECT_EQ(lu.rank(), 2);
    }
}

TEST(FrameRotation, Examples) {
    EXPECT_LT((frame_rotation({0, 0, 1}) - Mat3::Identity()).norm(), 1e-15);
    const Mat3 want = rows({0.8, 0, -0.6, 0, 1, 0, 0.6, 0, 0.8});
    EXPECT_LT((frame_rotation({3, 0, 4}) - want).norm(), 1e-15);
    EXPECT_EQ(code_of([] { frame_rotation({0, 1, 0}); }), ErrorCode::PolarSingularity);
    EXPECT_EQ(code_of([] { frame_rotation({0, -2, 0}); }), ErrorCode::PolarSingularity);
}

TEST(FrameRotation, OrthonormalAndAlignsMean) {
    Rng rng(107);
    for (int t = 0; t < 100; ++t) {
        const Vec3 mu = rng.vec3(-4.0, 4.0);
        const Mat3 q = frame_rotation(mu);
        EXPECT_LT((q * q.transpose() - Mat3::Identity()).norm(), 1e-9);
        EXPECT_LT((q * sphere_project(mu) - Vec3::UnitZ()).norm(), 1e-9);
        EXPECT_LT((q * mu - Vec3(0, 0, mu.norm())).norm(), 1e-9 * mu.norm());
        EXPECT_NEAR(q.determinant(), 1.0, 1e-12);
    }
}

TEST(TangentFrame, PolarFallback) {
    for (double s : {1.0, -1.0, 3.0, -0.5}) {
        const Vec3 mu(0, s, 0);
        const TangentFrame f = make_tangent_frame(mu);
        EXPECT_TRUE(f.polar_fallback);
        EXPECT_LT((f.q * f.q.transpose() - Mat3::Identity()).norm(), 1e-12);
        EXPECT_LT((f.q * f.x_p - Vec3::UnitZ()).norm(), 1e-12);
        EXPECT_NEAR(f.q.determinant(), 1.0, 1e-12);
        EXPECT_DOUBLE_EQ(f.depth_key, std::abs(s));
    }
    EXPECT_FALSE(make_tangent_frame({0.1, 1, 0}).polar_fallback);
}

TEST(ProjectSplat, OnAxisUnitCovariance) {
    const Vec3 mu(0, 0, 2);
    const Splat2D s = project_splat(mu, Covariance3{Mat3::Identity()}, make_tangent_frame(mu), 0.0);
    EXPECT_LT((s.cov2d - 0.25 * Mat2::Identity()).norm(), 1e-15);
    EXPECT_LT(s.mean2d.norm(), 1e-15);
    EXPECT_LT((s.inv_cov2d * s.cov2d - Mat2::Identity()).norm(), 1e-12);
}

TEST(ProjectSplat, ZeroCovarianceGivesLowpass) {
    Rng rng(108);
    for (int t = 0; t < 20; ++t) {
        const Vec3 mu = random_front_point(rng);
        const Splat2D s = project_splat(mu, Covariance3{}, make_tangent_frame(mu), 0.01);
        EXPECT_LT((s.cov2d - 0.01 * Mat2::Identity()).norm(), 1e-15);
        EXPECT_LT(s.mean2d.norm(), 1e-9);
    }
}

TEST(ProjectSplat, ZeroCovarianceWithoutLowpassIsDegenerate) {
    const Vec3 mu(0, 0, 2);
    EXPECT_EQ(code_of([&] { project_splat(mu, Covariance3{}, make_tangent_frame(mu), 0.0); }),
              ErrorCode::DegenerateSplat);
}

TEST(ProjectSplat, OnAxisMatchesClassicForAnyCovariance) {
    Rng rng(109);
    for (int t = 0; t < 50; ++t) {
        const Vec3 mu(0, 0, rng.uniform(0.2, 20.0));
        const Covariance3 sigma{rng.spd(rng.uniform(0.01, 3.0))};
        const Splat2D opt = project_splat(mu, sigma, make_tangent_frame(mu), 0.0);
        const Mat3 j = classic_jacobian(mu);
        const Mat2 classic = (j * sigma.sym * j.transpose()).topLeftCorner<2, 2>();
        EXPECT_LT((opt.cov2d - classic).norm(), 1e-12 * classic.norm());
    }
}

TEST(ProjectSplat, PolarMeanStillProjects) {
    const Vec3 mu(0, 3, 0);
    const Splat2D s = project_splat(mu, Covariance3{0.01 * Mat3::Identity()}, make_tangent_frame(mu), 0.0);
    EXPECT_LT(s.mean2d.norm(), 1e-12);
    // J_p at a mean of length 3 scales the transverse plane by 1/3.
    EXPECT_LT((s.cov2d - (0.01 / 9.0) * Mat2::Identity()).norm(), 1e-15);
}

TEST(ClassicSplat, WideAngleGapGrowsWithAngle) {
    // The same isotropic Gaussian placed at increasing angles from the axis,
    // each route measured in its own 2D frame (z = 1 plane vs tangent plane).
    const Covariance3 sigma{0.01 * Mat3::Identity()};
    double previous = -1.0;
    for (double deg : {0.0, 15.0, 30.0, 45.0, 60.0}) {
        const double a = deg * kPi / 180.0;
        const Vec3 mu = 3.0 * Vec3(std::sin(a), 0.0, std::cos(a));
        const Mat2 c = classic_splat(mu, sigma, 0.0).cov2d;
        const Mat2 o = project_splat(mu, sigma, make_tangent_frame(mu), 0.0).cov2d;
        const double gap = (c - o).norm() / o.norm();
        if (deg == 0.0)
            EXPECT_LT(gap, 1e-12);
        else
            EXPECT_GT(gap, previous);
        previous = gap;
    }
    EXPECT_GT(previous, 1.0); // at 60 degrees the image-plane footprint is stretched by 1/cos^2 = 4
}

TEST(InvertCov2d, AdjugateAndGuard) {
    Mat2 c;
    c << 2.0, 0.5, 0.5, 1.0;
    EXPECT_LT((invert_cov2d(c) * c - Mat2::Identity()).norm(), 1e-15);
    Mat2 singular;
    singular << 1.0, 1.0, 1.0, 1.0;
    EXPECT_EQ(code_of([&] { invert_cov2d(singular); }), ErrorCode::DegenerateSplat);
}
