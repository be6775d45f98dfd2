#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "gpefem/error.hpp"
#include "gpefem/linear_solver.hpp"
#include "gpefem/log.hpp"
#include "gpefem/mesh.hpp"
#include "gpefem/model.hpp"
#include "gpefem/quadrature.hpp"

namespace gpefem {

using SparseComplexMatrix = Eigen::SparseMatrix<Complex, Eigen::RowMajor, int>;
using SparseRealMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using ComplexGradient = Eigen::Vector2cd;

/// Degrees of freedom: one complex unknown per interior node (homogeneous
/// Dirichlet data by elimination). all_nodes() keeps every node, which is
/// only useful for checks that need the full basis.
struct DofMap {
    std::vector<int> interior_nodes;
    std::vector<int> node_to_dof;  // -1 for eliminated nodes
    int n_dofs = 0;

    static DofMap interior(const Mesh& mesh) {
        DofMap d;
        d.node_to_dof.assign(mesh.num_nodes(), -1);
        for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
            if (!mesh.is_boundary(static_cast<int>(i))) {
                d.node_to_dof[i] = static_cast<int>(d.interior_nodes.size());
                d.interior_nodes.push_back(static_cast<int>(i));
            }
        }
        d.n_dofs = static_cast<int>(d.interior_nodes.size());
        return d;
    }

    static DofMap all_nodes(const Mesh& mesh) {
        DofMap d;
        d.node_to_dof.resize(mesh.num_nodes());
        d.interior_nodes.resize(mesh.num_nodes());
        for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
            d.node_to_dof[i] = static_cast<int>(i);
            d.interior_nodes[i] = static_cast<int>(i);
        }
        d.n_dofs = static_cast<int>(mesh.num_nodes());
        return d;
    }
};

/// Coefficient vector of an element of S_h.
struct ComplexField {
    ComplexVector values;
    std::optional<double> t;

    ComplexField() = default;
    explicit ComplexField(ComplexVector v, std::optional<double> time = std::nullopt)
        : values(std::move(v)), t(time) {}
    Eigen::Index size() const { return values.size(); }
};

/// Per-element data shared by all assembly routines.
struct ElementData {
    std::array<int, 3> dofs;  // -1 where the vertex carries no dof
    std::array<Point, 3> vertices;
    std::array<Eigen::Vector2d, 3> grads;  // constant gradients of the barycentric basis
    double area = 0.0;

    Point map(const std::array<double, 3>& lam) const {
        return lam[0] * vertices[0] + lam[1] * vertices[1] + lam[2] * vertices[2];
    }
};

/// Mesh + dof map + quadrature: everything needed to assemble forms on S_h.
class FeSpace {
public:
    FeSpace(Mesh mesh, QuadratureRule rule = triangle_rule_degree4(), bool eliminate_boundary = true)
        : mesh_(std::move(mesh)),
          dofs_(eliminate_boundary ? DofMap::interior(mesh_) : DofMap::all_nodes(mesh_)),
          rule_(std::move(rule)) {
        elements_.reserve(mesh_.num_triangles());
        for (std::size_t k = 0; k < mesh_.num_triangles(); ++k) {
            const auto& t = mesh_.triangles()[k];
            ElementData e;
            for (int a = 0; a < 3; ++a) {
                e.dofs[a] = dofs_.node_to_dof[t[a]];
                e.vertices[a] = mesh_.nodes()[t[a]];
            }
            e.area = mesh_.signed_area(k);
            const Point& p0 = e.vertices[0];
            const Point& p1 = e.vertices[1];
            const Point& p2 = e.vertices[2];
            const double inv2a = 1.0 / (2.0 * e.area);
            e.grads[0] = Eigen::Vector2d(p1.y() - p2.y(), p2.x() - p1.x()) * inv2a;
            e.grads[1] = Eigen::Vector2d(p2.y() - p0.y(), p0.x() - p2.x()) * inv2a;
            e.grads[2] = Eigen::Vector2d(p0.y() - p1.y(), p1.x() - p0.x()) * inv2a;
            elements_.push_back(e);
        }
    }

    const Mesh& mesh() const { return mesh_; }
    const DofMap& dofmap() const { return dofs_; }
    const QuadratureRule& rule() const { return rule_; }
    const std::vector<ElementData>& elements() const { return elements_; }
    int n_dofs() const { return dofs_.n_dofs; }

    /// u_h at barycentric point lam of element e.
    Complex value(const ComplexVector& u, const ElementData& e, const std::array<double, 3>& lam) const {
        Complex s = 0.0;
        for (int a = 0; a < 3; ++a)
            if (e.dofs[a] >= 0) s += lam[a] * u[e.dofs[a]];
        return s;
    }

    ComplexGradient gradient(const ComplexVector& u, const ElementData& e) const {
        ComplexGradient g = ComplexGradient::Zero();
        for (int a = 0; a < 3; ++a)
            if (e.dofs[a] >= 0) g += e.grads[a].cast<Complex>() * u[e.dofs[a]];
        return g;
    }

    /// Nodal values on all mesh nodes, eliminated nodes set to zero.
    ComplexVector nodal_values(const ComplexVector& u) const {
        ComplexVector full = ComplexVector::Zero(static_cast<Eigen::Index>(mesh_.num_nodes()));
        for (int d = 0; d < dofs_.n_dofs; ++d) full[dofs_.interior_nodes[d]] = u[d];
        return full;
    }

private:
    Mesh mesh_;
    DofMap dofs_;
    QuadratureRule rule_;
    std::vector<ElementData> elements_;
};

namespace detail {

/// Assembles sum_e local(e) where local fills a 3x3 complex matrix with
/// entry (a, b) = form(phi_b, phi_a), i.e. row = test function.
template <typename Local>
SparseComplexMatrix assemble_complex(const FeSpace& V, Local&& local) {
    std::vector<Eigen::Triplet<Complex>> trip;
    trip.reserve(9 * V.elements().size());
    Eigen::Matrix3cd K;
    for (const auto& e : V.elements()) {
        K.setZero();
        local(e, K);
        for (int a = 0; a < 3; ++a) {
            if (e.dofs[a] < 0) continue;
            for (int b = 0; b < 3; ++b)
                if (e.dofs[b] >= 0) trip.emplace_back(e.dofs[a], e.dofs[b], K(a, b));
        }
    }
    SparseComplexMatrix M(V.n_dofs(), V.n_dofs());
    M.setFromTriplets(trip.begin(), trip.end());
    return M;
}

}  // namespace detail

/// M[i][j] = int phi_j phi_i.
inline SparseComplexMatrix assemble_mass(const FeSpace& V) {
    const auto& rule = V.rule();
    return detail::assemble_complex(V, [&](const ElementData& e, Eigen::Matrix3cd& K) {
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto& lam = rule.points[q];
            const double w = rule.weights[q] * e.area;
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) K(a, b) += w * lam[a] * lam[b];
        }
    });
}

/// int A grad phi_j . grad phi_i (the diffusion part of L alone).
inline SparseComplexMatrix assemble_stiffness(const FeSpace& V, const Coefficients& k) {
    const auto& rule = V.rule();
    return detail::assemble_complex(V, [&](const ElementData& e, Eigen::Matrix3cd& K) {
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const Point x = e.map(rule.points[q]);
            const double w = rule.weights[q] * e.area;
            const Eigen::Matrix2d A = k.A(x);
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) K(a, b) += w * e.grads[a].dot(A * e.grads[b]);
        }
    });
}

/// <L phi_j, phi_i> = int A grad phi_j . grad phi_i + i (b . grad phi_j) phi_i + c phi_j phi_i.
inline SparseComplexMatrix assemble_L(const FeSpace& V, const Coefficients& k) {
    const auto& rule = V.rule();
    const Complex I(0.0, 1.0);
    return detail::assemble_complex(V, [&](const ElementData& e, Eigen::Matrix3cd& K) {
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto& lam = rule.points[q];
            const Point x = e.map(lam);
            const double w = rule.weights[q] * e.area;
            const Eigen::Matrix2d A = k.A(x);
            const Eigen::Vector2d bx = k.b(x);
            const double cx = k.c(x);
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b)
                    K(a, b) += w * (e.grads[a].dot(A * e.grads[b]) + I * bx.dot(e.grads[b]) * lam[a] +
                                    cx * lam[a] * lam[b]);
        }
    });
}

/// Completed-square form
///   (v, w)_E = int (A^{1/2} grad v - i/2 A^{-1/2} b v) . conj(A^{1/2} grad w - i/2 A^{-1/2} b w)
///            + int (c - |A^{-1/2} b|^2 / 4) v conj(w).
/// Evaluated literally from the matrix square roots, independent of assemble_L.
inline SparseComplexMatrix assemble_E(const FeSpace& V, const Coefficients& k) {
    const auto& rule = V.rule();
    const Complex I(0.0, 1.0);
    double worst = 0.0;
    Point worst_at = Point::Zero();
    auto E = detail::assemble_complex(V, [&](const ElementData& e, Eigen::Matrix3cd& K) {
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto& lam = rule.points[q];
            const Point x = e.map(lam);
            const double w = rule.weights[q] * e.area;
            const MatrixRoots R = matrix_roots(k.A(x));
            const Eigen::Vector2d drift = R.inv_sqrt * k.b(x);
            const double shifted = k.c(x) - 0.25 * drift.squaredNorm();
            if (shifted < worst) {
                worst = shifted;
                worst_at = x;
            }
            std::array<Eigen::Vector2cd, 3> z;
            for (int a = 0; a < 3; ++a)
                z[a] = (R.sqrt * e.grads[a]).cast<Complex>() - (0.5 * I * lam[a]) * drift.cast<Complex>();
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b)
                    K(a, b) += w * (z[a].dot(z[b]) + shifted * lam[a] * lam[b]);  // dot() conjugates z[a]
        }
    });
    if (worst < 0.0)
        warn("assemble_E: c - |A^{-1/2}b|^2/4 = " + std::to_string(worst) + " < 0 at (" +
             std::to_string(worst_at.x()) + ", " + std::to_string(worst_at.y()) + "); E may be indefinite");
    return E;
}

/// int kappa phi_j phi_i.
inline SparseComplexMatrix assemble_kappa(const FeSpace& V, const Coefficients& k) {
    const auto& rule = V.rule();
    return detail::assemble_complex(V, [&](const ElementData& e, Eigen::Matrix3cd& K) {
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto& lam = rule.points[q];
            const Complex kx = k.kappa(e.map(lam));
            const double w = rule.weights[q] * e.area;
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) K(a, b) += w * kx * lam[a] * lam[b];
        }
    });
}

/// gamma(s) = s: the plain cubic |u|^2 u = gamma(|u|^2) u.
struct CubicGamma {
    double gamma(double s) const { return s; }
    double dgamma(double) const { return 1.0; }
};

/// r[i] = beta int gamma(|u_h|^2) u_h phi_i, integrated with the space's rule.
template <typename Gamma = CubicGamma>
ComplexVector nonlinear_residual(const FeSpace& V, const ComplexVector& u, double beta, const Gamma& g = {}) {
    ComplexVector r = ComplexVector::Zero(V.n_dofs());
    if (beta == 0.0) return r;
    const auto& rule = V.rule();
    for (const auto& e : V.elements()) {
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto& lam = rule.points[q];
            const Complex uq = V.value(u, e, lam);
            const double s = std::norm(uq);
            const Complex f = (beta * rule.weights[q] * e.area * g.gamma(s)) * uq;
            for (int a = 0; a < 3; ++a)
                if (e.dofs[a] >= 0) r[e.dofs[a]] += f * lam[a];
        }
    }
    return r;
}

inline ComplexVector cubic_residual(const FeSpace& V, const ComplexVector& u, double beta) {
    return nonlinear_residual(V, u, beta, CubicGamma{});
}

/// Sparsity of the real 2N x 2N split with dof i mapped to rows/columns
/// (2i, 2i+1) = (Re, Im). For every element and local pair (a, b) it records
/// the value offsets of entries (2i, 2j) and (2i, 2j+1); the entries one row
/// below sit at offset + 1 because columns are stored contiguously.
class BlockPattern {
public:
    explicit BlockPattern(const FeSpace& V) {
        const int n = 2 * V.n_dofs();
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(36 * V.elements().size());
        for (const auto& e : V.elements())
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) {
                    if (e.dofs[a] < 0 || e.dofs[b] < 0) continue;
                    for (int r = 0; r < 2; ++r)
                        for (int c = 0; c < 2; ++c) trip.emplace_back(2 * e.dofs[a] + r, 2 * e.dofs[b] + c, 0.0);
                }
        pattern_.resize(n, n);
        pattern_.setFromTriplets(trip.begin(), trip.end());
        pattern_.makeCompressed();
        slots_.resize(V.elements().size());
        for (std::size_t k = 0; k < V.elements().size(); ++k) {
            const auto& e = V.elements()[k];
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) {
                    if (e.dofs[a] < 0 || e.dofs[b] < 0) {
                        slots_[k][a][b] = {-1, -1};
                        continue;
                    }
                    slots_[k][a][b] = {offset(2 * e.dofs[a], 2 * e.dofs[b]), offset(2 * e.dofs[a], 2 * e.dofs[b] + 1)};
                }
        }
    }

    /// Structurally complete matrix with all values zero.
    SparseRealMatrix zeros() const {
        SparseRealMatrix m = pattern_;
        std::fill(m.valuePtr(), m.valuePtr() + m.nonZeros(), 0.0);
        return m;
    }

    /// Real split of a complex matrix with entries a + ib -> [[a, -b], [b, a]].
    SparseRealMatrix split(const SparseComplexMatrix& C) const {
        SparseRealMatrix m = zeros();
        double* v = m.valuePtr();
        for (int i = 0; i < C.outerSize(); ++i)
            for (SparseComplexMatrix::InnerIterator it(C, i); it; ++it) {
                const int j = static_cast<int>(it.col());
                const int p0 = offset(2 * i, 2 * j), p1 = offset(2 * i, 2 * j + 1);
                v[p0] += it.value().real();
                v[p0 + 1] += it.value().imag();
                v[p1] -= it.value().imag();
                v[p1 + 1] += it.value().real();
            }
        return m;
    }

    const std::array<int, 2>& slot(std::size_t element, int a, int b) const { return slots_[element][a][b]; }
    const SparseRealMatrix& pattern() const { return pattern_; }

private:
    int offset(int row, int col) const {
        const int* outer = pattern_.outerIndexPtr();
        const int* inner = pattern_.innerIndexPtr();
        const int* first = inner + outer[col];
        const int* last = inner + outer[col + 1];
        const int* it = std::lower_bound(first, last, row);
        if (it == last || *it != row) throw Error("BlockPattern: entry outside sparsity pattern");
        return static_cast<int>(it - inner);
    }

    SparseRealMatrix pattern_;
    std::vector<std::array<std::array<std::array<int, 2>, 3>, 3>> slots_;
};

/// Adds scale * d(Re r, Im r)/d(Re u, Im u) of nonlinear_residual into the
/// values of J (which must carry the BlockPattern structure). With
/// u = p + iq and s = p^2 + q^2 the pointwise derivative of gamma(s) u is
///   [[gamma + 2 gamma' p^2, 2 gamma' p q], [2 gamma' p q, gamma + 2 gamma' q^2]];
/// for gamma(s) = s this is [[3p^2 + q^2, 2pq], [2pq, p^2 + 3q^2]].
/// If rotate is set, the block is premultiplied by the real split of i.
template <typename Gamma = CubicGamma>
void add_nonlinear_jacobian(const FeSpace& V, const BlockPattern& P, const ComplexVector& u, double beta,
                            double scale, bool rotate, SparseRealMatrix& J, const Gamma& g = {}) {
    if (beta == 0.0 || scale == 0.0) return;
    const auto& rule = V.rule();
    double* val = J.valuePtr();
    for (std::size_t k = 0; k < V.elements().size(); ++k) {
        const auto& e = V.elements()[k];
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto& lam = rule.points[q];
            const Complex uq = V.value(u, e, lam);
            const double p = uq.real(), qi = uq.imag();
            const double s = p * p + qi * qi;
            const double gm = g.gamma(s), dg = g.dgamma(s);
            const double w = scale * beta * rule.weights[q] * e.area;
            double j00 = gm + 2.0 * dg * p * p, j01 = 2.0 * dg * p * qi, j10 = j01, j11 = gm + 2.0 * dg * qi * qi;
            if (rotate) {
                // i (x + iy) = -y + ix
                const double r00 = -j10, r01 = -j11, r10 = j00, r11 = j01;
                j00 = r00, j01 = r01, j10 = r10, j11 = r11;
            }
            for (int a = 0; a < 3; ++a) {
                if (e.dofs[a] < 0) continue;
                for (int b = 0; b < 3; ++b) {
                    const auto& s2 = P.slot(k, a, b);
                    if (s2[0] < 0) continue;
                    const double c = w * lam[a] * lam[b];
                    val[s2[0]] += c * j00;
                    val[s2[0] + 1] += c * j10;
                    val[s2[1]] += c * j01;
                    val[s2[1] + 1] += c * j11;
                }
            }
        }
    }
}

/// Jacobian of the real-split cubic residual, 2N x 2N with (Re, Im) pairs
/// interleaved. Symmetric because the residual is the gradient of
/// (beta/4) int |u_h|^4.
inline SparseRealMatrix cubic_jacobian(const FeSpace& V, const ComplexVector& u, double beta) {
    const BlockPattern P(V);
    SparseRealMatrix J = P.zeros();
    add_nonlinear_jacobian(V, P, u, beta, 1.0, false, J, CubicGamma{});
    return J;
}

inline RealVector to_real(const ComplexVector& z) {
    RealVector x(2 * z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        x[2 * i] = z[i].real();
        x[2 * i + 1] = z[i].imag();
    }
    return x;
}

inline ComplexVector to_complex(const RealVector& x) {
    ComplexVector z(x.size() / 2);
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = Complex(x[2 * i], x[2 * i + 1]);
    return z;
}

using ScalarFunction = std::function<Complex(const Point&)>;
using GradientFunction = std::function<ComplexGradient(const Point&)>;

/// Lagrange interpolant: nodal values at the dof nodes.
inline ComplexField interpolate(const FeSpace& V, const ScalarFunction& f) {
    ComplexVector v(V.n_dofs());
    for (int d = 0; d < V.n_dofs(); ++d) v[d] = f(V.mesh().nodes()[V.dofmap().interior_nodes[d]]);
    return ComplexField(std::move(v));
}

/// load[i] = int f phi_i.
inline ComplexVector load_vector(const FeSpace& V, const ScalarFunction& f) {
    ComplexVector r = ComplexVector::Zero(V.n_dofs());
    const auto& rule = V.rule();
    for (const auto& e : V.elements())
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto& lam = rule.points[q];
            const Complex fq = f(e.map(lam)) * (rule.weights[q] * e.area);
            for (int a = 0; a < 3; ++a)
                if (e.dofs[a] >= 0) r[e.dofs[a]] += fq * lam[a];
        }
    return r;
}

inline ComplexVector solve_complex(const SparseComplexMatrix& A, const ComplexVector& rhs) {
    SparseSolver<Complex> solver;
    solver.factorize(Eigen::SparseMatrix<Complex, Eigen::ColMajor, int>(A));
    return solver.solve(rhs);
}

/// L2 projection onto S_h.
inline ComplexField l2_project(const FeSpace& V, const ScalarFunction& f) {
    return ComplexField(solve_complex(assemble_mass(V), load_vector(V, f)));
}

/// Ritz projection: <L(f - P f), w_h> = 0 for all w_h in S_h. kappa is not
/// part of L.
inline ComplexField ritz_project(const FeSpace& V, const Coefficients& k, const ScalarFunction& f,
                                 const GradientFunction& grad_f) {
    const auto& rule = V.rule();
    const Complex I(0.0, 1.0);
    ComplexVector load = ComplexVector::Zero(V.n_dofs());
    for (const auto& e : V.elements())
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto& lam = rule.points[q];
            const Point x = e.map(lam);
            const double w = rule.weights[q] * e.area;
            const Eigen::Matrix2d A = k.A(x);
            const ComplexGradient gf = grad_f(x);
            const ComplexGradient Agf = A.cast<Complex>() * gf;
            const Eigen::Vector2d bx = k.b(x);
            const Complex drift = I * (bx.x() * gf.x() + bx.y() * gf.y());
            const Complex fx = f(x);
            for (int a = 0; a < 3; ++a) {
                if (e.dofs[a] < 0) continue;
                const Complex diffusion = e.grads[a].x() * Agf.x() + e.grads[a].y() * Agf.y();
                load[e.dofs[a]] += w * (diffusion + (drift + k.c(x) * fx) * lam[a]);
            }
        }
    return ComplexField(solve_complex(assemble_L(V, k), load));
}

/// Squared L2 norm of u_h - f, by quadrature.
inline double l2_error_squared(const FeSpace& V, const ComplexVector& u, const ScalarFunction& f) {
    double s = 0.0;
    const auto& rule = V.rule();
    for (const auto& e : V.elements())
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto& lam = rule.points[q];
            s += rule.weights[q] * e.area * std::norm(V.value(u, e, lam) - f(e.map(lam)));
        }
    return s;
}

/// Squared E-norm of u_h - f, integrating the completed-square integrand
/// pointwise. Requires the gradient of f.
inline double energy_error_squared(const FeSpace& V, const Coefficients& k, const ComplexVector& u,
                                   const ScalarFunction& f, const GradientFunction& grad_f) {
    double s = 0.0;
    const auto& rule = V.rule();
    const Complex I(0.0, 1.0);
    for (const auto& e : V.elements()) {
        const ComplexGradient gu = V.gradient(u, e);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto& lam = rule.points[q];
            const Point x = e.map(lam);
            const MatrixRoots R = matrix_roots(k.A(x));
            const Eigen::Vector2d drift = R.inv_sqrt * k.b(x);
            const Complex d = V.value(u, e, lam) - f(x);
            const ComplexGradient gd = gu - grad_f(x);
            const Eigen::Vector2cd z = R.sqrt.cast<Complex>() * gd - (0.5 * I * d) * drift.cast<Complex>();
            s += rule.weights[q] * e.area * (z.squaredNorm() + (k.c(x) - 0.25 * drift.squaredNorm()) * std::norm(d));
        }
    }
    return s;
}

}  // namespace gpefem
