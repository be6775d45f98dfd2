#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "gpefem/assembly.hpp"
#include "gpefem/diagnostics.hpp"
#include "gpefem/error.hpp"
#include "gpefem/linear_solver.hpp"
#include "gpefem/log.hpp"

namespace gpefem {

enum class SeedProfile {
    Gaussian,  // exp(-(x^2+y^2)/2)
    Vortex,    // ((1 - w) + w (x + iy)) exp(-(x^2+y^2)/2), w = min(|omega|, 1)
    Lattice,   // exp(-(x^2+y^2)/2) times unit-winding vortices on a triangular lattice
               // of density |omega|/pi inside radius lattice_radius
};

inline SeedProfile parse_seed_profile(const std::string& s) {
    if (s == "gaussian") return SeedProfile::Gaussian;
    if (s == "vortex") return SeedProfile::Vortex;
    if (s == "lattice") return SeedProfile::Lattice;
    throw InvalidParameter("unknown seed profile '" + s + "' (expected gaussian|vortex|lattice)");
}

enum class CubicTreatment {
    Explicit,  // beta |u^k|^2 u^k on the right-hand side; one factorization
    Frozen,    // beta |u^k|^2 u* on the left; refactored every step
};

inline CubicTreatment parse_cubic_treatment(const std::string& s) {
    if (s == "explicit") return CubicTreatment::Explicit;
    if (s == "frozen") return CubicTreatment::Frozen;
    throw InvalidParameter("unknown cubic treatment '" + s + "' (expected explicit|frozen)");
}

struct GradientFlowConfig {
    double tau_flow = 0.05;
    double tol = 1e-8;  // on ||u^{k+1} - u^k||_{L2} / tau_flow
    int max_steps = 20000;
    SeedProfile seed_profile = SeedProfile::Gaussian;
    double seed_omega = 0.0;   // weight of the vortex component for SeedProfile::Vortex
    double seed_noise = 0.0;   // relative amplitude of seeded random perturbation
    double lattice_radius = 3.0;
    std::uint64_t seed = 12345;
    CubicTreatment cubic = CubicTreatment::Frozen;
    LinearSolverKind linear_solver = LinearSolverKind::Direct;
    std::function<void(int step, double energy, double change)> progress;  // optional, called every step

    void validate() const {
        if (!(tau_flow > 0.0)) throw InvalidParameter("tau_flow must be > 0");
        if (!(tol > 0.0)) throw InvalidParameter("gradient flow tol must be > 0");
        if (max_steps < 1) throw InvalidParameter("max_steps must be >= 1");
    }
};

struct GroundState {
    ComplexField field;
    double energy = 0.0;
    int steps = 0;
    double final_change = 0.0;
    std::vector<double> energy_history;
    bool energy_increased = false;
};

/// Vortex centres of the lattice seed: triangular lattice with spacing
/// sqrt(2 pi / (sqrt(3) |omega|)), one site at the origin, clipped to radius.
inline std::vector<Complex> lattice_vortex_centres(double omega, double radius) {
    std::vector<Complex> c;
    if (omega == 0.0 || !(radius > 0.0)) return c;
    const double a = std::sqrt(2.0 * M_PI / (std::sqrt(3.0) * std::abs(omega)));
    const Complex e1(a, 0.0), e2(0.5 * a, 0.5 * std::sqrt(3.0) * a);
    const int n = static_cast<int>(std::ceil(radius / a)) + 2;
    for (int i = -2 * n; i <= 2 * n; ++i)
        for (int j = -2 * n; j <= 2 * n; ++j) {
            const Complex z = double(i) * e1 + double(j) * e2;
            if (std::abs(z) <= radius) c.push_back(z);
        }
    return c;
}

/// Normalized seed on the given space.
inline ComplexVector groundstate_seed(const FeSpace& V, const GradientFlowConfig& cfg) {
    const double w = std::min(std::abs(cfg.seed_omega), 1.0);
    const std::vector<Complex> centres = cfg.seed_profile == SeedProfile::Lattice
                                             ? lattice_vortex_centres(cfg.seed_omega, cfg.lattice_radius)
                                             : std::vector<Complex>{};
    const bool clockwise = cfg.seed_omega < 0.0;
    ComplexField f = interpolate(V, [&](const Point& p) {
        const double g = std::exp(-0.5 * (p.x() * p.x() + p.y() * p.y()));
        if (cfg.seed_profile == SeedProfile::Vortex) return ((1.0 - w) + w * Complex(p.x(), p.y())) * g;
        if (cfg.seed_profile == SeedProfile::Lattice) {
            Complex v(g, 0.0);
            const Complex z(p.x(), p.y());
            for (const Complex& c : centres) {
                const Complex d = clockwise ? std::conj(z - c) : z - c;
                v *= d / std::sqrt(std::norm(d) + 0.25);
            }
            return v;
        }
        return Complex(g, 0.0);
    });
    ComplexVector u = std::move(f.values);
    if (cfg.seed_noise > 0.0) {
        std::mt19937_64 rng(cfg.seed);
        std::uniform_real_distribution<double> d(-1.0, 1.0);
        const double scale = cfg.seed_noise * (u.size() ? u.cwiseAbs().maxCoeff() : 0.0);
        for (auto& z : u) z += scale * Complex(d(rng), d(rng));
    }
    const double m = mass(u, assemble_mass(V));
    if (!(m > 0.0)) throw InvalidParameter("groundstate seed vanishes on this mesh");
    return u / m;
}

/// int w |u|^2 phi_j phi_i with w = beta.
inline SparseComplexMatrix assemble_density_mass(const FeSpace& V, const ComplexVector& u, double beta) {
    const auto& rule = V.rule();
    return detail::assemble_complex(V, [&](const ElementData& e, Eigen::Matrix3cd& K) {
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto& lam = rule.points[q];
            const double w = rule.weights[q] * e.area * beta * std::norm(V.value(u, e, lam));
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) K(a, b) += w * lam[a] * lam[b];
        }
    });
}

/// Discrete normalized gradient flow: a backward-Euler step in imaginary time
/// that is implicit in L and kappa, followed by L2 normalization. The cubic
/// term is either explicit,
///   (M + tau (L + K)) u* = M u^k - tau beta N(u^k),
/// with the matrix factored once, or frozen at u^k,
///   (M + tau (L + K + W(u^k))) u* = M u^k,  W(u) = (beta |u|^2 phi_j, phi_i).
/// Stops when ||u^{k+1} - u^k||_{L2} <= tol tau.
inline GroundState dngf(const FeSpace& V, const Coefficients& k, const GradientFlowConfig& cfg,
                        const ComplexVector* initial = nullptr) {
    cfg.validate();
    const SparseComplexMatrix M = assemble_mass(V);
    const SparseComplexMatrix L = assemble_L(V, k);
    const SparseComplexMatrix E = assemble_E(V, k);
    const SparseComplexMatrix K = assemble_kappa(V, k);
    const double tau = cfg.tau_flow;

    using ColMatrix = Eigen::SparseMatrix<Complex, Eigen::ColMajor, int>;
    const bool frozen = cfg.cubic == CubicTreatment::Frozen && k.beta != 0.0;
    const SparseComplexMatrix A = M + tau * (L + K);
    SparseSolver<Complex> solver(cfg.linear_solver);
    if (!frozen) solver.factorize(ColMatrix(A));

    ComplexVector u = initial ? *initial : groundstate_seed(V, cfg);
    u /= mass(u, M);

    GroundState gs;
    gs.energy_history.push_back(energy(V, u, E, K, k.beta));
    for (int n = 1; n <= cfg.max_steps; ++n) {
        ComplexVector rhs = M * u;
        if (frozen)
            solver.factorize(ColMatrix(A + tau * assemble_density_mass(V, u, k.beta)));
        else if (k.beta != 0.0)
            rhs -= tau * cubic_residual(V, u, k.beta);
        ComplexVector next = solver.solve(rhs);
        next /= mass(next, M);
        const double change = mass(next - u, M) / tau;
        u = std::move(next);
        const double en = energy(V, u, E, K, k.beta);
        if (en > gs.energy_history.back() + 1e-10 && !gs.energy_increased) {
            gs.energy_increased = true;
            warn("dngf: energy increased at flow step " + std::to_string(n) + "; tau_flow may be too large");
        }
        gs.energy_history.push_back(en);
        gs.steps = n;
        gs.final_change = change;
        if (cfg.progress) cfg.progress(n, en, change);
        if (change <= cfg.tol) {
            gs.field = ComplexField(u);
            gs.energy = en;
            return gs;
        }
    }
    throw NonConvergence("dngf: no stationary state after " + std::to_string(cfg.max_steps) +
                             " steps (last change " + std::to_string(gs.final_change) + ")",
                         gs.energy_history);
}

}  // namespace gpefem
