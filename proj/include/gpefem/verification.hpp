#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gpefem/assembly.hpp"
#include "gpefem/error.hpp"
#include "gpefem/linear_solver.hpp"
#include "gpefem/mesh.hpp"
#include "gpefem/model.hpp"
#include "gpefem/steppers.hpp"

namespace gpefem {

/// A problem with known exact solution u(x, t) of
///   i u_t = L u + (kappa + beta |u|^2) u + F   on domain x (0, T].
struct BenchmarkCase {
    std::string name;
    Rect domain;
    Coefficients coeffs;
    std::function<Complex(const Point&, double)> exact;
    std::function<ComplexGradient(const Point&, double)> exact_gradient;
    GpeSystem::Source source;  // empty for the unforced equation
    double T = 1.0;
    /// exact(., t) = exp(-i lambda t) exact(., 0) with L exact(., 0) = lambda exact(., 0).
    std::optional<double> eigenvalue;
};

/// Linear eigenmode: [0, pi]^2, A = I/2, b = 0, c = 0, beta = 0,
/// u = exp(-i t) sin x sin y.
inline BenchmarkCase eigenmode_case(double T = 1.0) {
    BenchmarkCase c;
    c.name = "eigenmode";
    c.domain = Rect{0.0, M_PI, 0.0, M_PI};
    c.coeffs = Coefficients::laplacian(0.5);
    c.exact = [](const Point& p, double t) {
        return std::exp(Complex(0.0, -t)) * (std::sin(p.x()) * std::sin(p.y()));
    };
    c.exact_gradient = [](const Point& p, double t) {
        const Complex ph = std::exp(Complex(0.0, -t));
        return ComplexGradient(ph * std::cos(p.x()) * std::sin(p.y()), ph * std::sin(p.x()) * std::cos(p.y()));
    };
    c.T = T;
    c.eigenvalue = 1.0;
    return c;
}

/// Forced nonlinear case on [0, 1]^2 with rotation omega about the origin,
/// V = (x^2 + y^2)/2 and interaction beta. u = exp(-i t) sin(pi x) sin(pi y)
/// and F = i u_t - L u - beta |u|^2 u.
inline BenchmarkCase manufactured_case(double beta = 1.0, double omega = 0.5, double T = 1.0) {
    BenchmarkCase c;
    c.name = "manufactured";
    c.domain = Rect{0.0, 1.0, 0.0, 1.0};
    c.coeffs = gpe_rotating(omega, harmonic_potential(1.0, 1.0), beta);
    const double pi = M_PI;
    c.exact = [pi](const Point& p, double t) {
        return std::exp(Complex(0.0, -t)) * (std::sin(pi * p.x()) * std::sin(pi * p.y()));
    };
    c.exact_gradient = [pi](const Point& p, double t) {
        const Complex ph = std::exp(Complex(0.0, -t));
        return ComplexGradient(ph * pi * std::cos(pi * p.x()) * std::sin(pi * p.y()),
                               ph * pi * std::sin(pi * p.x()) * std::cos(pi * p.y()));
    };
    c.source = [pi, beta, omega](const Point& p, double t) {
        const double x = p.x(), y = p.y();
        const double s = std::sin(pi * x) * std::sin(pi * y);
        const double sx = pi * std::cos(pi * x) * std::sin(pi * y);
        const double sy = pi * std::sin(pi * x) * std::cos(pi * y);
        const Complex ph = std::exp(Complex(0.0, -t));
        const double V = 0.5 * (x * x + y * y);
        const Complex rot = Complex(0.0, omega) * (-y * sx + x * sy);
        return ph * ((1.0 - pi * pi - V - beta * s * s) * s - rot);
    };
    c.T = T;
    return c;
}

/// u = 0 with zero data.
inline BenchmarkCase zero_case(double T = 1.0) {
    BenchmarkCase c;
    c.name = "zero";
    c.domain = Rect{0.0, 1.0, 0.0, 1.0};
    c.coeffs = gpe_rotating(0.8, harmonic_potential(1.0, 1.0), 1.0);
    c.exact = [](const Point&, double) { return Complex(0.0, 0.0); };
    c.exact_gradient = [](const Point&, double) { return ComplexGradient::Zero().eval(); };
    c.T = T;
    return c;
}

inline BenchmarkCase benchmark_case(const std::string& name) {
    if (name == "eigenmode") return eigenmode_case();
    if (name == "manufactured") return manufactured_case();
    if (name == "zero") return zero_case();
    throw InvalidParameter("unknown benchmark case '" + name + "' (expected eigenmode|manufactured|zero)");
}

/// Errors per refinement level and observed orders log2(e_prev / e).
struct EOCTable {
    std::string parameter;      // "h" or "tau"
    std::vector<double> level;  // h or tau per row
    std::vector<double> err_l2;
    std::vector<double> err_e;
    std::vector<double> oracle_l2;  // optional independent prediction of err_l2

    static double order(double coarse, double fine) {
        if (!(coarse > 0.0) || !(fine > 0.0)) return std::numeric_limits<double>::quiet_NaN();
        return std::log2(coarse / fine);
    }
    double eoc_l2(std::size_t i) const { return i == 0 ? std::nan("") : order(err_l2[i - 1], err_l2[i]); }
    double eoc_e(std::size_t i) const { return i == 0 || err_e.empty() ? std::nan("") : order(err_e[i - 1], err_e[i]); }
    double final_eoc_l2() const { return eoc_l2(level.size() - 1); }
    double final_eoc_e() const { return eoc_e(level.size() - 1); }

    void write_csv(std::ostream& os) const {
        os << parameter << ",err_l2,eoc_l2,err_e,eoc_e" << (oracle_l2.empty() ? "" : ",oracle_l2") << '\n';
        os << std::setprecision(17);
        for (std::size_t i = 0; i < level.size(); ++i) {
            os << level[i] << ',' << err_l2[i] << ',' << eoc_l2(i) << ',' << (err_e.empty() ? std::nan("") : err_e[i])
               << ',' << eoc_e(i);
            if (!oracle_l2.empty()) os << ',' << oracle_l2[i];
            os << '\n';
        }
    }

    void write_text(std::ostream& os) const {
        const auto old = os.flags();
        os << std::setw(12) << parameter << std::setw(14) << "err_l2" << std::setw(8) << "eoc" << std::setw(14)
           << "err_e" << std::setw(8) << "eoc" << '\n';
        for (std::size_t i = 0; i < level.size(); ++i) {
            os << std::scientific << std::setprecision(4) << std::setw(12) << level[i] << std::setw(14) << err_l2[i]
               << std::fixed << std::setprecision(3) << std::setw(8) << eoc_l2(i) << std::scientific
               << std::setprecision(4) << std::setw(14) << (err_e.empty() ? std::nan("") : err_e[i]) << std::fixed
               << std::setprecision(3) << std::setw(8) << eoc_e(i) << '\n';
        }
        os.flags(old);
    }
};

/// Lowest discrete eigenpair of L v = lambda M v near shift sigma by inverse
/// iteration. v is M-normalized.
struct DiscreteEigenpair {
    double lambda = 0.0;
    ComplexVector v;
};

inline DiscreteEigenpair discrete_eigenpair(const GpeSystem& sys, const ComplexVector& start, double sigma = 0.0,
                                            double tol = 1e-14, int max_iter = 500) {
    const SparseComplexMatrix& M = sys.mass_matrix();
    const SparseComplexMatrix H = sys.L_matrix() + sys.kappa_matrix();
    SparseSolver<Complex> solver;
    solver.factorize(Eigen::SparseMatrix<Complex, Eigen::ColMajor, int>(H - sigma * M));
    DiscreteEigenpair ep;
    ep.v = start / mass(start, M);
    ep.lambda = ep.v.dot(H * ep.v).real();
    for (int it = 0; it < max_iter; ++it) {
        ComplexVector w = solver.solve(M * ep.v);
        w /= mass(w, M);
        const double lam = w.dot(H * w).real();
        const double r = mass(H * w - lam * (M * w), M);
        ep.v = std::move(w);
        const bool done = std::abs(lam - ep.lambda) <= tol * std::abs(lam) && r <= 1e-12 * std::abs(lam);
        ep.lambda = lam;
        if (done) break;
    }
    return ep;
}

/// Time-stepping amplification factor of one step on the scalar problem
/// i y' = lambda y: Cayley map for IRK, resolvent for backward Euler.
inline Complex amplification(Scheme s, double tau, double lambda) {
    const Complex z(0.0, tau * lambda);
    if (s == Scheme::BackwardEuler) return 1.0 / (1.0 + z);
    return (1.0 - 0.5 * z) / (1.0 + 0.5 * z);
}

namespace detail {

inline double mesh_width(const Rect& d, int n) { return std::max((d.x1 - d.x0) / n, (d.y1 - d.y0) / n); }

inline int steps_for(double T, double tau_max) { return std::max(1, static_cast<int>(std::ceil(T / tau_max - 1e-12))); }

inline void require_nested(const std::vector<int>& levels) {
    if (levels.size() < 2) throw InvalidParameter("EOC needs at least two levels");
    for (std::size_t i = 1; i < levels.size(); ++i)
        if (levels[i] != 2 * levels[i - 1]) throw InvalidParameter("EOC levels must be nested (each n doubled)");
}

inline void require_halved(const std::vector<double>& taus) {
    if (taus.size() < 2) throw InvalidParameter("EOC needs at least two levels");
    for (std::size_t i = 1; i < taus.size(); ++i)
        if (std::abs(taus[i] - 0.5 * taus[i - 1]) > 1e-12 * taus[i - 1])
            throw InvalidParameter("EOC time levels must be nested (each tau halved)");
}

inline ComplexVector run_to_end(const GpeSystem& sys, const ComplexVector& u0, Scheme scheme, double tau, double T,
                                double newton_tol) {
    StepperConfig cfg;
    cfg.scheme = scheme;
    cfg.tau = tau;
    cfg.T = T;
    cfg.newton_tol = newton_tol;
    cfg.record_every = std::numeric_limits<int>::max();
    RunResult r = run(sys, ComplexField(u0, 0.0), cfg);
    if (!r.ok()) throw NonConvergence("benchmark run failed: " + *r.failure, r.failure_residuals);
    return r.final_field().values;
}

}  // namespace detail

struct SpaceEocOptions {
    std::vector<int> levels{16, 32, 64};  // cells per direction, each doubled
    Scheme scheme = Scheme::IRK;
    /// Step size; 0 selects tau = h_finest^2 (h = cell width), rounded so
    /// that T is an integer number of steps.
    double tau = 0.0;
    double newton_tol = 1e-12;
};

/// Errors ||u(T) - u_h^N|| in L2 and E-norm on nested meshes, starting from
/// the Lagrange interpolant of u(., 0).
inline EOCTable run_space_eoc(const BenchmarkCase& c, const SpaceEocOptions& opt = {}) {
    detail::require_nested(opt.levels);
    const double h_fine = detail::mesh_width(c.domain, opt.levels.back());
    const double tau_target = opt.tau > 0.0 ? opt.tau : h_fine * h_fine;
    const int n_steps = detail::steps_for(c.T, tau_target);
    const double tau = c.T / n_steps;

    EOCTable t;
    t.parameter = "h";
    for (int n : opt.levels) {
        GpeSystem sys(build_rect_mesh(c.domain, n, n), c.coeffs, triangle_rule_degree4(), c.source);
        const FeSpace& V = sys.space();
        const ComplexVector u0 = interpolate(V, [&](const Point& p) { return c.exact(p, 0.0); }).values;
        const ComplexVector uT = c.T > 0.0 ? detail::run_to_end(sys, u0, opt.scheme, tau, c.T, opt.newton_tol) : u0;
        const auto f = [&](const Point& p) { return c.exact(p, c.T); };
        const auto g = [&](const Point& p) { return c.exact_gradient(p, c.T); };
        t.level.push_back(detail::mesh_width(c.domain, n));
        t.err_l2.push_back(std::sqrt(l2_error_squared(V, uT, f)));
        t.err_e.push_back(std::sqrt(std::max(0.0, energy_error_squared(V, c.coeffs, uT, f, g))));
    }
    return t;
}

struct TimeEocOptions {
    int n = 64;  // fixed mesh, cells per direction
    std::vector<double> taus{0.2, 0.1, 0.05, 0.025};
    Scheme scheme = Scheme::IRK;
    /// Reference at T: for cases with an eigenvalue the exactly propagated
    /// discrete eigenvector exp(-i lambda_h T) v_h; otherwise (or when set)
    /// a same-mesh run with tau_finest / reference_factor.
    bool self_convergence = false;
    int reference_factor = 8;
    double newton_tol = 1e-12;
    /// Optional initial field on the fixed mesh (self-convergence only).
    std::optional<ComplexVector> initial;
};

/// Temporal errors on a fixed mesh, so that the spatial error cancels. For
/// the eigenmode reference the table also carries the scalar oracle
/// |r(tau lambda_h)^N - exp(-i lambda_h T)| ||v_h||.
inline EOCTable run_time_eoc(const BenchmarkCase& c, const TimeEocOptions& opt = {}) {
    detail::require_halved(opt.taus);
    for (double tau : opt.taus) {
        const double n = c.T / tau;
        if (std::abs(n - std::round(n)) > 1e-9 * n) throw InvalidParameter("T must be a multiple of every tau");
    }
    GpeSystem sys(build_rect_mesh(c.domain, opt.n, opt.n), c.coeffs, triangle_rule_degree4(), c.source);
    const FeSpace& V = sys.space();
    const SparseComplexMatrix& M = sys.mass_matrix();

    EOCTable t;
    t.parameter = "tau";
    const bool eigen = c.eigenvalue.has_value() && !opt.self_convergence && !c.source && c.coeffs.beta == 0.0;
    ComplexVector u0, ref;
    double lambda_h = 0.0;
    if (eigen) {
        const ComplexVector I0 = interpolate(V, [&](const Point& p) { return c.exact(p, 0.0); }).values;
        DiscreteEigenpair ep = discrete_eigenpair(sys, I0, *c.eigenvalue * 0.9);
        lambda_h = ep.lambda;
        const Complex scale = ep.v.dot(M * I0);  // aligns phase and size with the interpolant
        u0 = scale * ep.v;
        ref = std::exp(Complex(0.0, -lambda_h * c.T)) * u0;
    } else {
        u0 = opt.initial ? *opt.initial : interpolate(V, [&](const Point& p) { return c.exact(p, 0.0); }).values;
        if (opt.reference_factor < 1) throw InvalidParameter("reference_factor must be >= 1");
        ref = detail::run_to_end(sys, u0, opt.scheme, opt.taus.back() / opt.reference_factor, c.T, opt.newton_tol);
    }
    for (double tau : opt.taus) {
        const ComplexVector uT = detail::run_to_end(sys, u0, opt.scheme, tau, c.T, opt.newton_tol);
        const ComplexVector d = uT - ref;
        t.level.push_back(tau);
        t.err_l2.push_back(mass(d, M));
        t.err_e.push_back(std::sqrt(std::max(0.0, d.dot(sys.E_matrix() * d).real())));
        if (eigen) {
            const int N = static_cast<int>(std::round(c.T / tau));
            const Complex rN = std::pow(amplification(opt.scheme, tau, lambda_h), N);
            t.oracle_l2.push_back(std::abs(rN - std::exp(Complex(0.0, -lambda_h * c.T))) * mass(u0, M));
        }
    }
    return t;
}

/// Ritz projection errors ||f - P_h f|| in L2 and E-norm on nested meshes.
inline EOCTable run_projection_eoc(const ScalarFunction& f, const GradientFunction& grad_f, const Rect& domain,
                                   const Coefficients& k, const std::vector<int>& levels) {
    detail::require_nested(levels);
    EOCTable t;
    t.parameter = "h";
    for (int n : levels) {
        FeSpace V(build_rect_mesh(domain, n, n));
        const ComplexVector p = ritz_project(V, k, f, grad_f).values;
        t.level.push_back(detail::mesh_width(domain, n));
        t.err_l2.push_back(std::sqrt(l2_error_squared(V, p, f)));
        t.err_e.push_back(std::sqrt(std::max(0.0, energy_error_squared(V, k, p, f, grad_f))));
    }
    return t;
}

/// One row of the backward-Euler versus IRK comparison after a fixed number
/// of steps.
struct Table1Row {
    double tau = 0.0;
    double T = 0.0;
    double be_mass = 0.0, irk_mass = 0.0;
    double be_energy = 0.0, irk_energy = 0.0;
    std::string be_failure, irk_failure;  // empty on success
};

struct Table1Options {
    std::vector<double> taus{1.0, 0.1, 0.01, 0.001};
    int steps = 100;
    double newton_tol = 1e-10;
    int newton_max_iter = 50;
    bool predictor = true;
    std::function<void(const Table1Row&)> on_row;
};

inline std::vector<Table1Row> table1_experiment(const GpeSystem& sys, const ComplexVector& u0,
                                                const Table1Options& opt = {}) {
    if (opt.steps < 1) throw InvalidParameter("table1: steps must be >= 1");
    std::vector<Table1Row> rows;
    for (double tau : opt.taus) {
        if (!(tau > 0.0)) throw InvalidParameter("table1: tau must be > 0");
        Table1Row row;
        row.tau = tau;
        row.T = tau * opt.steps;
        for (Scheme s : {Scheme::BackwardEuler, Scheme::IRK}) {
            StepperConfig cfg;
            cfg.scheme = s;
            cfg.schedule.assign(static_cast<std::size_t>(opt.steps), tau);
            cfg.newton_tol = opt.newton_tol;
            cfg.newton_max_iter = opt.newton_max_iter;
            cfg.predictor = opt.predictor;
            cfg.record_every = opt.steps;
            RunResult r = run(sys, ComplexField(u0, 0.0), cfg);
            const ComplexVector& u = r.final_field().values;
            const double m = sys.mass(u), e = sys.energy(u);
            if (s == Scheme::BackwardEuler) {
                row.be_mass = m;
                row.be_energy = e;
                if (!r.ok()) row.be_failure = *r.failure;
            } else {
                row.irk_mass = m;
                row.irk_energy = e;
                if (!r.ok()) row.irk_failure = *r.failure;
            }
        }
        if (opt.on_row) opt.on_row(row);
        rows.push_back(row);
    }
    return rows;
}

inline void write_table1_csv(std::ostream& os, const std::vector<Table1Row>& rows) {
    os << "tau,T,be_mass,irk_mass,be_energy,irk_energy\n" << std::setprecision(17);
    for (const auto& r : rows)
        os << r.tau << ',' << r.T << ',' << r.be_mass << ',' << r.irk_mass << ',' << r.be_energy << ','
           << r.irk_energy << '\n';
}

}  // namespace gpefem
