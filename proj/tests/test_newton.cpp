#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "gpefem/mesh.hpp"
#include "gpefem/model.hpp"
#include "gpefem/newton.hpp"
#include "gpefem/steppers.hpp"

using namespace gpefem;

namespace {

SparseRealMatrix tridiag(int n) {
    std::vector<Eigen::Triplet<double>> t;
    for (int i = 0; i < n; ++i) {
        t.emplace_back(i, i, 4.0);
        if (i > 0) t.emplace_back(i, i - 1, -1.0);
        if (i + 1 < n) t.emplace_back(i, i + 1, -1.5);
    }
    SparseRealMatrix A(n, n);
    A.setFromTriplets(t.begin(), t.end());
    return A;
}

}  // namespace

TEST(Newton, AffineMapTakesOneIteration) {
    const SparseRealMatrix A = tridiag(10);
    const RealVector b = RealVector::LinSpaced(10, -1.0, 2.0);
    const auto F = [&](const RealVector& x) -> RealVector { return A * x - b; };
    const auto J = [&](const RealVector&) { return A; };
    NewtonOptions opt;
    opt.tol = 1e-12;
    const NewtonResult r = newton_solve(F, J, RealVector::Zero(10), opt);
    EXPECT_EQ(r.iterations, 1);
    EXPECT_LE(r.final_residual(), 1e-12);
    ASSERT_EQ(r.residual_norms.size(), 2u);
    EXPECT_NEAR(r.residual_norms[0], b.norm(), 1e-15);
}

TEST(Newton, ZeroInitialResidual) {
    const SparseRealMatrix A = tridiag(5);
    int jac_calls = 0;
    const auto F = [&](const RealVector& x) -> RealVector { return A * x; };
    const auto J = [&](const RealVector&) {
        ++jac_calls;
        return A;
    };
    const NewtonResult r = newton_solve(F, J, RealVector::Zero(5));
    EXPECT_EQ(r.iterations, 0);
    EXPECT_EQ(jac_calls, 0);
    EXPECT_EQ(r.final_residual(), 0.0);
}

TEST(Newton, MinIterationsBelowTolerance) {
    const SparseRealMatrix A = tridiag(5);
    const RealVector b = RealVector::Constant(5, 1e-12);
    const auto F = [&](const RealVector& x) -> RealVector { return A * x - b; };
    const auto J = [&](const RealVector&) { return A; };
    NewtonOptions opt;
    opt.tol = 1e-8;
    EXPECT_EQ(newton_solve(F, J, RealVector::Zero(5), opt).iterations, 0);
    opt.min_iter = 1;
    const NewtonResult r = newton_solve(F, J, RealVector::Zero(5), opt);
    EXPECT_EQ(r.iterations, 1);
    EXPECT_LE(r.final_residual(), 1e-25);
    // exactly zero residual still skips
    EXPECT_EQ(newton_solve([&](const RealVector& x) -> RealVector { return A * x; }, J, RealVector::Zero(5), opt).iterations, 0);
}

TEST(Newton, QuadraticConvergenceOnCubicSystem) {
    // F_i(x) = x_i^3 + x_i - 2 - 0.1 (x_{i-1} + x_{i+1}) couples neighbours; root near 1
    const int n = 20;
    const auto F = [&](const RealVector& x) -> RealVector {
        RealVector f = x.cwiseProduct(x).cwiseProduct(x) + x - RealVector::Constant(n, 2.0);
        for (int i = 0; i < n; ++i) {
            if (i > 0) f[i] -= 0.1 * x[i - 1];
            if (i + 1 < n) f[i] -= 0.1 * x[i + 1];
        }
        return f;
    };
    const auto J = [&](const RealVector& x) {
        std::vector<Eigen::Triplet<double>> t;
        for (int i = 0; i < n; ++i) {
            t.emplace_back(i, i, 3 * x[i] * x[i] + 1);
            if (i > 0) t.emplace_back(i, i - 1, -0.1);
            if (i + 1 < n) t.emplace_back(i, i + 1, -0.1);
        }
        SparseRealMatrix A(n, n);
        A.setFromTriplets(t.begin(), t.end());
        return A;
    };
    NewtonOptions opt;
    opt.tol = 1e-14;
    const NewtonResult r = newton_solve(F, J, RealVector::Constant(n, 3.0), opt);
    const auto& h = r.residual_norms;
    ASSERT_GE(h.size(), 4u);
    // terminal phase: r_{k+1} <= C r_k^2
    int checked = 0;
    for (std::size_t k = 0; k + 1 < h.size(); ++k)
        if (h[k] < 1e-1 && h[k + 1] > 1e-13) {
            EXPECT_LE(h[k + 1], 5.0 * h[k] * h[k]) << "k=" << k;
            ++checked;
        }
    EXPECT_GE(checked, 1);
}

TEST(Newton, QuadraticConvergenceOnGpeStep) {
    GpeSystem sys(build_rect_mesh({-6, 6, -6, 6}, 16, 16), gpe_rotating(0.8, harmonic_potential(1, 1), 100.0));
    ComplexVector u0 = interpolate(sys.space(), [](const Point& p) {
                           return Complex(p.x(), p.y()) * std::exp(-0.5 * p.squaredNorm());
                       }).values;
    u0 /= sys.mass(u0);
    StepperConfig cfg;
    cfg.newton_tol = 1e-13;
    const StepResult s = irk_step(sys, u0, 0.1, cfg);
    const auto& h = s.residual_history;
    ASSERT_GE(h.size(), 3u);
    const double r0 = h[0];
    int checked = 0;
    for (std::size_t k = 1; k + 1 < h.size(); ++k)
        if (h[k + 1] > 1e-13) {
            EXPECT_LE(h[k + 1] / r0, 10.0 * (h[k] / r0) * (h[k] / r0)) << "k=" << k;
            ++checked;
        }
    EXPECT_GE(checked, 1);
}

TEST(Newton, NonConvergenceCarriesHistory) {
    // x^2 + 1 has no real root
    const auto F = [](const RealVector& x) -> RealVector { return (x.array() * x.array() + 1.0).matrix(); };
    const auto J = [](const RealVector& x) {
        SparseRealMatrix A(1, 1);
        A.insert(0, 0) = 2 * x[0];
        return A;
    };
    NewtonOptions opt;
    opt.max_iter = 7;
    try {
        newton_solve(F, J, RealVector::Constant(1, 0.3), opt);
        FAIL() << "expected NonConvergence";
    } catch (const NonConvergence& e) {
        EXPECT_EQ(e.residual_history().size(), 8u);
        EXPECT_EQ(e.last_iterate().size(), 1u);
    }
}

TEST(Newton, InvalidTolerance) {
    const auto F = [](const RealVector& x) -> RealVector { return x; };
    const auto J = [](const RealVector&) { return SparseRealMatrix(1, 1); };
    NewtonOptions opt;
    opt.tol = 0.0;
    EXPECT_THROW(newton_solve(F, J, RealVector::Zero(1), opt), InvalidParameter);
}
