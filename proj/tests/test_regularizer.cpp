#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "gpefem/mesh.hpp"
#include "gpefem/regularizer.hpp"
#include "gpefem/steppers.hpp"

using namespace gpefem;

TEST(FM, IdentityBranch) {
    const Complex z(1, 1);
    EXPECT_EQ(f_M(2.0, z), std::norm(z) * z);
    EXPECT_EQ(f_M(2.0, z), Complex(2, 2));
}

TEST(FM, SaturationBranch) {
    EXPECT_DOUBLE_EQ(RegularizedCubic(1.0).gamma(4.0), 2.0);
    EXPECT_EQ(f_M(1.0, Complex(2, 0)), Complex(4, 0));
}

TEST(FM, BlendBranch) {
    const RegularizedCubic f(1.0);
    const double expect = 3.0 / 32 - 7.0 / 16 + 0.5 + 0.5 + 1.0;
    EXPECT_DOUBLE_EQ(expect, 1.65625);
    EXPECT_NEAR(f.gamma(1.5), expect, 1e-15);
    EXPECT_NEAR(std::abs(f(Complex(std::sqrt(1.5), 0))), 1.65625 * std::sqrt(1.5), 1e-14);
}

TEST(FM, JunctionsAreC2) {
    for (double M : {0.3, 1.0, 2.0, 7.5}) {
        const RegularizedCubic f(M);
        const double t = f.theta();
        EXPECT_DOUBLE_EQ(t, M * M);
        // blend values and derivatives at 0 and theta against the inner and outer branches
        EXPECT_NEAR(f.blend(0.0), 0.0, 1e-15 * t);
        EXPECT_NEAR(f.blend(t) + t, 2 * t, 1e-13 * t);
        EXPECT_NEAR(f.blend_d1(0.0), 1.0, 1e-14);
        EXPECT_NEAR(f.blend_d1(t), 0.0, 1e-14);
        EXPECT_NEAR(f.blend_d2(0.0), 0.0, 1e-14);
        EXPECT_NEAR(f.blend_d2(t), 0.0, 1e-14);
    }
}

TEST(FM, DerivativesMatchFiniteDifferences) {
    const RegularizedCubic f(1.3);
    const double t = f.theta(), h = 1e-6;
    for (double s = 0.05 * t; s < 2.5 * t; s += 0.0731 * t) {
        if (std::abs(s - t) < 2 * h || std::abs(s - 2 * t) < 2 * h) continue;
        EXPECT_NEAR(f.dgamma(s), (f.gamma(s + h) - f.gamma(s - h)) / (2 * h), 1e-7);
        EXPECT_NEAR(f.d2gamma(s), (f.dgamma(s + h) - f.dgamma(s - h)) / (2 * h), 1e-6);
    }
}

TEST(FM, Monotone) {
    const RegularizedCubic f(0.7);
    double prev = -1;
    for (int i = 0; i <= 30000; ++i) {
        const double g = f.gamma(3 * f.theta() * i / 30000.0);
        EXPECT_GE(g, prev);
        prev = g;
    }
}

TEST(FM, PropertySuite) {
    const FmPropertyReport r = verify_f_M_properties(1.0, 100000);
    EXPECT_TRUE(r.passed()) << r.summary();
    EXPECT_EQ(r.samples, 100000u);
    EXPECT_GT(r.identity_checked, 0u);
    EXPECT_LE(r.max_growth_ratio, 2.0 * (1 + 1e-14));
    EXPECT_LE(r.max_lipschitz_ratio, 10.0);
    EXPECT_LE(r.junction_mismatch, 1e-9);
    for (double M : {0.1, 3.0}) EXPECT_TRUE(verify_f_M_properties(M, 20000, 99).passed());
}

TEST(FM, InvalidCutoff) {
    EXPECT_THROW(RegularizedCubic{0.0}, InvalidParameter);
    EXPECT_THROW(RegularizedCubic{-1.0}, InvalidParameter);
    EXPECT_THROW(RegularizedCubic{std::numeric_limits<double>::infinity()}, InvalidParameter);
}

TEST(EstimateM, HatFunction) {
    // hat of the single interior node of a 2x2 mesh with cell width d has
    // nodal sup 1 and largest gradient sqrt(2)/d on the diagonal-cut triangles
    const double d = std::sqrt(2.0) / 3.0;
    FeSpace V(build_rect_mesh({0, 2 * d, 0, 2 * d}, 2, 2));
    ASSERT_EQ(V.n_dofs(), 1);
    const ComplexVector u = ComplexVector::Ones(1);
    EXPECT_NEAR(estimate_M(V, {u, u}), 8.0, 1e-12);
    EXPECT_NEAR(estimate_M(V, {u}, 3.0), 12.0, 1e-12);
}

TEST(EstimateM, Degenerate) {
    FeSpace V(build_rect_mesh({0, 1, 0, 1}, 3, 3));
    EXPECT_THROW(estimate_M(V, {ComplexVector::Zero(V.n_dofs())}), InvalidParameter);
    EXPECT_THROW(estimate_M(V, {}), InvalidParameter);
}

TEST(UniquenessBound, Values) {
    EXPECT_DOUBLE_EQ(uniqueness_bound(1.0, 0.0, 100.0), 0.002);
    EXPECT_TRUE(std::isinf(uniqueness_bound(1.0, 0.0, 0.0)));
    EXPECT_NEAR(uniqueness_bound(2.0, 0.5, 1.0), 2.0 / 40.5, 1e-15);
    EXPECT_NEAR(uniqueness_bound(2.0, 0.5, 1.0), 0.049383, 1e-6);
}
