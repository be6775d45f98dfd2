#include <cmath>

#include <gtest/gtest.h>

#include "gpefem/mesh.hpp"
#include "gpefem/model.hpp"
#include "gpefem/quadrature.hpp"

using namespace gpefem;

TEST(GpeRotating, NoRotation) {
    auto k = gpe_rotating(0.0, harmonic_potential(1, 1), 1.0);
    for (Point p : {Point(0.3, -2.0), Point(5, 5)}) EXPECT_EQ(k.b(p), Eigen::Vector2d::Zero());
}

TEST(GpeRotating, ExperimentPreset) {
    auto k = gpe_rotating(0.8, harmonic_potential(0.9, 1.1), 100.0);
    EXPECT_EQ(k.beta, 100.0);
    EXPECT_TRUE(k.b_is_divergence_free);
    const Point p(1.0, 2.0);
    EXPECT_DOUBLE_EQ(k.b(p).x(), -1.6);
    EXPECT_DOUBLE_EQ(k.b(p).y(), 0.8);
    EXPECT_DOUBLE_EQ(k.c(p), 0.5 * (0.81 * 1.0 + 1.21 * 4.0));
    EXPECT_EQ(k.A(p), 0.5 * Eigen::Matrix2d::Identity());
    EXPECT_EQ(k.kappa(p), Complex(0, 0));
}

TEST(GpeRotating, NegativeBetaRejected) {
    EXPECT_THROW(gpe_rotating(0.8, harmonic_potential(1, 1), -1.0), InvalidParameter);
}

TEST(MatrixRoots, Roots) {
    Eigen::Matrix2d A;
    A << 2.0, 0.5, 0.5, 1.0;
    const MatrixRoots R = matrix_roots(A);
    EXPECT_LT((R.sqrt * R.sqrt - A).norm(), 1e-14);
    EXPECT_LT((R.inv_sqrt * A * R.inv_sqrt - Eigen::Matrix2d::Identity()).norm(), 1e-14);
    EXPECT_NEAR(R.eig_min * R.eig_max, A.determinant(), 1e-14);
}

TEST(ValidateAssumptions, PlainCertificate) {
    Coefficients k = Coefficients::laplacian(1.0);
    k.c = [](const Point&) { return 1.0; };
    auto rep = validate_assumptions(k, build_rect_mesh({0, 1, 0, 1}, 3, 3), 2.0);
    ASSERT_TRUE(rep.ok());
    EXPECT_DOUBLE_EQ(rep.certificate.zeta0, 1.0);
    EXPECT_DOUBLE_EQ(rep.certificate.zeta1, 2.0);
    EXPECT_DOUBLE_EQ(rep.certificate.gamma_min, 1.0);
    EXPECT_DOUBLE_EQ(rep.certificate.gamma_max, 1.0);
    EXPECT_EQ(rep.certificate.sample_points.size(), 18u * 6u);
}

TEST(ValidateAssumptions, Zeta0ScalesWithC) {
    Coefficients k = Coefficients::laplacian(1.0);
    k.c = [](const Point& p) { return 1.0 + p.x() * p.x(); };
    const Mesh m = build_rect_mesh({0, 1, 0, 1}, 4, 4);
    const double z = validate_assumptions(k, m).certificate.zeta0;
    k.c = [](const Point& p) { return 3.0 * (1.0 + p.x() * p.x()); };
    EXPECT_NEAR(validate_assumptions(k, m).certificate.zeta0, 3.0 * z, 1e-14);
}

TEST(ValidateAssumptions, NegativeKappaReported) {
    Coefficients k = Coefficients::laplacian(1.0);
    k.c = [](const Point&) { return 1.0; };
    k.kappa = [](const Point& p) { return Complex(p.x() > 0.5 ? -0.1 : 0.0, 0.0); };
    auto rep = validate_assumptions(k, build_rect_mesh({0, 1, 0, 1}, 2, 2));
    ASSERT_FALSE(rep.ok());
    for (const auto& v : rep.violations) {
        EXPECT_GT(v.where.x(), 0.5);
        EXPECT_DOUBLE_EQ(v.value, -0.1);
        EXPECT_NE(v.what.find("kappa"), std::string::npos);
    }
}

TEST(ValidateAssumptions, ExperimentConfigurationFailsNearCorners) {
    // 4c - (2 + zeta1)|A^{-1/2} b|^2 with A = I/2, so |A^{-1/2} b|^2 = 2 omega^2 r^2
    const double omega = 0.8, zeta1 = 1.01;
    const auto expr = [&](double x, double y) {
        return 4.0 * 0.5 * (0.81 * x * x + 1.21 * y * y) - (2.0 + zeta1) * 2.0 * omega * omega * (x * x + y * y);
    };
    EXPECT_NEAR(expr(6, 6), 145.44 - 277.4016, 1e-9);
    EXPECT_LT(expr(6, 6), 0.0);

    auto k = gpe_rotating(omega, harmonic_potential(0.9, 1.1), 100.0);
    const Mesh m = build_rect_mesh({-6, 6, -6, 6}, 4, 4);
    auto rep = validate_assumptions(k, m, zeta1);
    EXPECT_FALSE(rep.ok());
    double min_expr = 1e300;
    const auto rule = triangle_rule_degree4();
    for (const auto& t : m.triangles())
        for (const auto& l : rule.points) {
            const Point x = l[0] * m.nodes()[t[0]] + l[1] * m.nodes()[t[1]] + l[2] * m.nodes()[t[2]];
            min_expr = std::min(min_expr, expr(x.x(), x.y()));
        }
    EXPECT_NEAR(rep.certificate.zeta0, 0.25 * min_expr, 1e-10);
}

TEST(ValidateAssumptions, ZetaOneMustExceedOne) {
    EXPECT_THROW(validate_assumptions(Coefficients::laplacian(), build_rect_mesh({0, 1, 0, 1}, 1, 1), 1.0),
                 InvalidParameter);
}

TEST(DivergenceFree, Examples) {
    const Mesh m = build_rect_mesh({-1, 2, -1, 1}, 6, 5);
    auto k = gpe_rotating(0.8, harmonic_potential(1, 1), 0.0);
    EXPECT_TRUE(check_divergence_free(k, m, 1e-10));
    k.b = [](const Point& p) { return Eigen::Vector2d(p.x(), 0.0); };
    EXPECT_FALSE(check_divergence_free(k, m, 1e-3));
    EXPECT_NEAR(max_divergence(k, m), 1.0, 1e-8);
    k.b = [](const Point& p) { return Eigen::Vector2d(p.y() * p.y(), p.x() * p.x()); };
    EXPECT_TRUE(check_divergence_free(k, m, 1e-10));
}
