#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gpefem/error.hpp"
#include "gpefem/mesh.hpp"
#include "gpefem/quadrature.hpp"

namespace gpefem {

using Complex = std::complex<double>;

/// Coefficient data of the operator
///   <L v, w> = int A grad v . conj(grad w) + i b . grad v conj(w) + c v conj(w)
/// together with the potential kappa and the interaction strength beta of the
/// nonlinear term (kappa + beta |u|^2) u. All maps must be side-effect free.
struct Coefficients {
    std::function<Eigen::Matrix2d(const Point&)> A;
    std::function<Eigen::Vector2d(const Point&)> b;
    std::function<double(const Point&)> c;
    std::function<Complex(const Point&)> kappa;
    double beta = 0.0;
    bool b_is_divergence_free = false;

    /// Constant-coefficient defaults: A = I, b = 0, c = 0, kappa = 0.
    static Coefficients laplacian(double diffusion = 1.0) {
        Coefficients k;
        k.A = [diffusion](const Point&) { return Eigen::Matrix2d(diffusion * Eigen::Matrix2d::Identity()); };
        k.b = [](const Point&) { return Eigen::Vector2d::Zero().eval(); };
        k.c = [](const Point&) { return 0.0; };
        k.kappa = [](const Point&) { return Complex(0.0, 0.0); };
        k.b_is_divergence_free = true;
        return k;
    }
};

/// V(x, y) = (gx^2 x^2 + gy^2 y^2) / 2.
inline std::function<double(const Point&)> harmonic_potential(double gamma_x, double gamma_y) {
    return [gx2 = gamma_x * gamma_x, gy2 = gamma_y * gamma_y](const Point& p) {
        return 0.5 * (gx2 * p.x() * p.x() + gy2 * p.y() * p.y());
    };
}

/// Rotating Gross-Pitaevskii coefficients: A = I/2, b = omega (-y, x),
/// c = potential, kappa = 0. With L_z = -i (x d_y - y d_x) the drift term
/// i b . grad u equals -omega L_z u.
inline Coefficients gpe_rotating(double omega, std::function<double(const Point&)> potential, double beta) {
    if (!(beta >= 0.0)) throw InvalidParameter("gpe_rotating: beta must be >= 0");
    if (!potential) throw InvalidParameter("gpe_rotating: potential is empty");
    Coefficients k;
    k.A = [](const Point&) { return Eigen::Matrix2d(0.5 * Eigen::Matrix2d::Identity()); };
    k.b = [omega](const Point& p) { return Eigen::Vector2d(-omega * p.y(), omega * p.x()); };
    k.c = std::move(potential);
    k.kappa = [](const Point&) { return Complex(0.0, 0.0); };
    k.beta = beta;
    k.b_is_divergence_free = true;
    return k;
}

/// Symmetric square root and inverse square root of a symmetric positive
/// definite 2x2 matrix.
struct MatrixRoots {
    Eigen::Matrix2d sqrt;
    Eigen::Matrix2d inv_sqrt;
    double eig_min = 0.0, eig_max = 0.0;
};

inline MatrixRoots matrix_roots(const Eigen::Matrix2d& A) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(A);
    const Eigen::Vector2d ev = es.eigenvalues();
    MatrixRoots r;
    r.eig_min = ev.minCoeff();
    r.eig_max = ev.maxCoeff();
    if (!(r.eig_min > 0.0)) throw InvalidParameter("diffusion matrix is not positive definite");
    const Eigen::Matrix2d& V = es.eigenvectors();
    r.sqrt = V * ev.cwiseSqrt().asDiagonal() * V.transpose();
    r.inv_sqrt = V * ev.cwiseSqrt().cwiseInverse().asDiagonal() * V.transpose();
    return r;
}

struct EllipticityCertificate {
    double gamma_min = 0.0;
    double gamma_max = 0.0;
    double zeta0 = 0.0;
    double zeta1 = 1.01;
    std::vector<Point> sample_points;
};

struct AssumptionViolation {
    Point where;
    std::string what;
    double value = 0.0;
};

/// Outcome of validate_assumptions: either a certificate or a list of
/// failing sample points (the certificate bounds are still filled in).
struct AssumptionReport {
    EllipticityCertificate certificate;
    std::vector<AssumptionViolation> violations;
    bool ok() const { return violations.empty(); }
};

/// Pointwise check of symmetric positive definite A, Re kappa >= 0 and
/// 4c - (2 + zeta1)|A^{-1/2} b|^2 > 0 at every quadrature point.
inline AssumptionReport validate_assumptions(const Coefficients& k, const Mesh& mesh, double zeta1 = 1.01,
                                             const QuadratureRule& rule = triangle_rule_degree4()) {
    if (!(zeta1 > 1.0)) throw InvalidParameter("validate_assumptions: zeta1 must be > 1");
    AssumptionReport rep;
    auto& cert = rep.certificate;
    cert.zeta1 = zeta1;
    cert.gamma_min = std::numeric_limits<double>::infinity();
    cert.gamma_max = -std::numeric_limits<double>::infinity();
    double min_expr = std::numeric_limits<double>::infinity();
    for (const auto& t : mesh.triangles()) {
        const Point& p0 = mesh.nodes()[t[0]];
        const Point& p1 = mesh.nodes()[t[1]];
        const Point& p2 = mesh.nodes()[t[2]];
        for (const auto& lam : rule.points) {
            const Point x = lam[0] * p0 + lam[1] * p1 + lam[2] * p2;
            cert.sample_points.push_back(x);
            const Eigen::Matrix2d A = k.A(x);
            if (std::abs(A(0, 1) - A(1, 0)) > 1e-14 * A.norm()) {
                rep.violations.push_back({x, "A not symmetric", A(0, 1) - A(1, 0)});
                continue;
            }
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(A, Eigen::EigenvaluesOnly);
            const double emin = es.eigenvalues().minCoeff();
            cert.gamma_min = std::min(cert.gamma_min, emin);
            cert.gamma_max = std::max(cert.gamma_max, es.eigenvalues().maxCoeff());
            if (!(emin > 0.0)) {
                rep.violations.push_back({x, "A not positive definite", emin});
                continue;
            }
            const double re_kappa = k.kappa(x).real();
            if (re_kappa < 0.0) rep.violations.push_back({x, "Re kappa < 0", re_kappa});
            const Eigen::Vector2d w = matrix_roots(A).inv_sqrt * k.b(x);
            const double expr = 4.0 * k.c(x) - (2.0 + zeta1) * w.squaredNorm();
            min_expr = std::min(min_expr, expr);
            if (!(expr > 0.0)) rep.violations.push_back({x, "4c - (2+zeta1)|A^{-1/2}b|^2 <= 0", expr});
        }
    }
    cert.zeta0 = 0.25 * min_expr;
    return rep;
}

/// Central-difference estimate of div b at element barycenters.
inline double max_divergence(const Coefficients& k, const Mesh& mesh) {
    double worst = 0.0;
    for (std::size_t e = 0; e < mesh.num_triangles(); ++e) {
        const Point x = mesh.barycenter(e);
        const double d = 1e-4 * mesh.h_per_element()[e];
        const Point ex(d, 0.0), ey(0.0, d);
        const double div = (k.b(x + ex).x() - k.b(x - ex).x()) / (2 * d) + (k.b(x + ey).y() - k.b(x - ey).y()) / (2 * d);
        worst = std::max(worst, std::abs(div));
    }
    return worst;
}

inline bool check_divergence_free(const Coefficients& k, const Mesh& mesh, double tol) {
    return max_divergence(k, mesh) <= tol;
}

}  // namespace gpefem
