#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gpefem/assembly.hpp"
#include "gpefem/diagnostics.hpp"
#include "gpefem/error.hpp"
#include "gpefem/log.hpp"
#include "gpefem/newton.hpp"
#include "gpefem/regularizer.hpp"

namespace gpefem {

/// All assembled operators of one problem: mass, L-form, E-form and kappa
/// matrices on a fixed space, plus an optional source term F(x, t) for the
/// forced equation i u_t = L u + (kappa + beta|u|^2) u + F.
class GpeSystem {
public:
    using Source = std::function<Complex(const Point&, double)>;

    GpeSystem(FeSpace space, Coefficients coeffs, Source source = {})
        : V_(std::move(space)), k_(std::move(coeffs)), source_(std::move(source)), pattern_(V_) {
        M_ = assemble_mass(V_);
        L_ = assemble_L(V_, k_);
        E_ = assemble_E(V_, k_);
        K_ = assemble_kappa(V_, k_);
        kappa_im_sup_ = 0.0;
        for (const auto& e : V_.elements())
            for (const auto& lam : V_.rule().points)
                kappa_im_sup_ = std::max(kappa_im_sup_, std::abs(k_.kappa(e.map(lam)).imag()));
    }

    GpeSystem(Mesh mesh, Coefficients coeffs, QuadratureRule rule = triangle_rule_degree4(), Source source = {})
        : GpeSystem(FeSpace(std::move(mesh), std::move(rule)), std::move(coeffs), std::move(source)) {}

    const FeSpace& space() const { return V_; }
    const Coefficients& coefficients() const { return k_; }
    double beta() const { return k_.beta; }
    const SparseComplexMatrix& mass_matrix() const { return M_; }
    const SparseComplexMatrix& L_matrix() const { return L_; }
    const SparseComplexMatrix& E_matrix() const { return E_; }
    const SparseComplexMatrix& kappa_matrix() const { return K_; }
    const BlockPattern& pattern() const { return pattern_; }
    const Source& source() const { return source_; }
    double kappa_im_sup() const { return kappa_im_sup_; }

    double mass(const ComplexVector& u) const { return gpefem::mass(u, M_); }
    double energy(const ComplexVector& u) const { return gpefem::energy(V_, u, E_, K_, k_.beta); }

    ComplexVector source_load(double t) const {
        if (!source_) return ComplexVector::Zero(V_.n_dofs());
        return load_vector(V_, [&](const Point& x) { return source_(x, t); });
    }

private:
    FeSpace V_;
    Coefficients k_;
    Source source_;
    BlockPattern pattern_;
    SparseComplexMatrix M_, L_, E_, K_;
    double kappa_im_sup_ = 0.0;
};

enum class Scheme { IRK, BackwardEuler, IRKRegularized };

inline Scheme parse_scheme(const std::string& s) {
    if (s == "irk") return Scheme::IRK;
    if (s == "be" || s == "backward_euler") return Scheme::BackwardEuler;
    if (s == "irk_regularized") return Scheme::IRKRegularized;
    throw InvalidParameter("unknown scheme '" + s + "' (expected irk|be|irk_regularized)");
}

inline std::string scheme_name(Scheme s) {
    switch (s) {
        case Scheme::IRK: return "irk";
        case Scheme::BackwardEuler: return "be";
        case Scheme::IRKRegularized: return "irk_regularized";
    }
    return "?";
}

struct StepperConfig {
    Scheme scheme = Scheme::IRK;
    double tau = 0.1;
    double T = 1.0;
    std::vector<double> schedule;  // optional per-step sizes; overrides tau/T when non-empty
    double newton_tol = 1e-8;
    int newton_max_iter = 50;
    int record_every = 1;
    double M = 0.0;          // cutoff for IRKRegularized
    bool predictor = false;  // linear extrapolation of the Newton initial guess
    LinearSolverKind linear_solver = LinearSolverKind::Direct;

    void validate() const {
        if (schedule.empty()) {
            if (!(tau > 0.0)) throw InvalidParameter("tau must be > 0");
            if (!(T >= 0.0)) throw InvalidParameter("T must be >= 0");
        } else {
            for (double s : schedule)
                if (!(s > 0.0)) throw InvalidParameter("schedule entries must be > 0");
        }
        if (!(newton_tol > 0.0)) throw InvalidParameter("newton_tol must be > 0");
        if (newton_max_iter < 1) throw InvalidParameter("newton_max_iter must be >= 1");
        if (record_every < 1) throw InvalidParameter("record_every must be >= 1");
        if (scheme == Scheme::IRKRegularized && !(M > 0.0)) throw InvalidParameter("irk_regularized needs M > 0");
    }

    /// Step sizes of the run: the explicit schedule, or T/tau equal steps.
    std::vector<double> steps() const {
        if (!schedule.empty()) return schedule;
        if (T == 0.0) return {};
        const double n = T / tau;
        const double rounded = std::round(n);
        if (std::abs(n - rounded) > 1e-12 * std::max(1.0, n) || rounded < 1)
            throw InvalidParameter("T/tau must be an integer (T=" + std::to_string(T) + ", tau=" + std::to_string(tau) + ")");
        return std::vector<double>(static_cast<std::size_t>(rounded), tau);
    }
};

struct StepResult {
    ComplexField field;
    int newton_iters = 0;
    double final_residual = 0.0;
    double mass = 0.0;
    double energy = 0.0;
    std::vector<double> residual_history;
};

/// Uniqueness step-size bound for the regularized scheme,
/// 2 / (sup|Im kappa| + 10 beta M^2); +infinity when the denominator vanishes.
inline double uniqueness_bound(double M, double kappa_im_sup, double beta) {
    if (!(M > 0.0)) throw InvalidParameter("uniqueness_bound: M must be > 0");
    if (!(beta >= 0.0)) throw InvalidParameter("uniqueness_bound: beta must be >= 0");
    const double denom = kappa_im_sup + 10.0 * beta * M * M;
    if (denom == 0.0) return std::numeric_limits<double>::infinity();
    return 2.0 / denom;
}

/// One-step time integrator for
///   (u^n, v) + tau i <L w, v> + tau i ((kappa + beta g(|w|^2)) w, v) + tau i (F, v) = (u^{n-1}, v)
/// with w = (u^n + u^{n-1})/2 (IRK, mass conserving for real kappa) or
/// w = u^n (backward Euler). The nonlinear system is solved by Newton's
/// method on the real split; for beta = 0 the factorization is reused
/// between steps of equal size.
class TimeStepper {
public:
    TimeStepper(const GpeSystem& sys, StepperConfig cfg) : sys_(sys), cfg_(std::move(cfg)) { cfg_.validate(); }

    const StepperConfig& config() const { return cfg_; }

    /// Advances u_prev from t_prev to t_prev + tau. u_prev2 (the state one
    /// step earlier) is only used by the predictor.
    StepResult step(const ComplexVector& u_prev, double t_prev, double tau,
                    const ComplexVector* u_prev2 = nullptr, double tau_prev = 0.0) {
        switch (cfg_.scheme) {
            case Scheme::IRK: return advance(u_prev, t_prev, tau, 0.5, CubicGamma{}, u_prev2, tau_prev);
            case Scheme::BackwardEuler: return advance(u_prev, t_prev, tau, 1.0, CubicGamma{}, u_prev2, tau_prev);
            case Scheme::IRKRegularized: {
                const double bound = uniqueness_bound(cfg_.M, sys_.kappa_im_sup(), sys_.beta());
                if (tau >= bound)
                    warn("irk_regularized: tau = " + std::to_string(tau) + " >= uniqueness bound " +
                         std::to_string(bound));
                return advance(u_prev, t_prev, tau, 0.5, RegularizedCubic(cfg_.M), u_prev2, tau_prev);
            }
        }
        throw InvalidParameter("unknown scheme");
    }

private:
    struct LinearPart {
        SparseComplexMatrix A_plus;   // M + i tau theta (L + K)
        SparseComplexMatrix A_minus;  // M - i tau (1 - theta)(L + K)
        SparseRealMatrix A_plus_split;
        std::unique_ptr<SparseSolver<double>> frozen;
    };

    LinearPart& linear_part(double tau, double theta) {
        const auto key = std::make_pair(tau, theta);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        if (cache_.size() > 8) cache_.clear();
        const Complex I(0.0, 1.0);
        LinearPart lp;
        const SparseComplexMatrix H = sys_.L_matrix() + sys_.kappa_matrix();
        lp.A_plus = sys_.mass_matrix() + (I * (tau * theta)) * H;
        lp.A_minus = sys_.mass_matrix() - (I * (tau * (1.0 - theta))) * H;
        lp.A_plus_split = sys_.pattern().split(lp.A_plus);
        if (sys_.beta() == 0.0) {
            lp.frozen = std::make_unique<SparseSolver<double>>(cfg_.linear_solver);
            lp.frozen->factorize(lp.A_plus_split);
        }
        return cache_.emplace(key, std::move(lp)).first->second;
    }

    template <typename Gamma>
    StepResult advance(const ComplexVector& u_prev, double t_prev, double tau, double theta, const Gamma& g,
                       const ComplexVector* u_prev2, double tau_prev) {
        if (!(tau > 0.0)) throw InvalidParameter("step size must be > 0");
        const Complex I(0.0, 1.0);
        const double beta = sys_.beta();
        const FeSpace& V = sys_.space();
        LinearPart& lp = linear_part(tau, theta);

        ComplexVector rhs = lp.A_minus * u_prev;
        if (sys_.source()) {
            // scheme-consistent source: average of the endpoints for IRK, new endpoint for BE
            const ComplexVector S = theta == 1.0 ? sys_.source_load(t_prev + tau)
                                                 : 0.5 * (sys_.source_load(t_prev) + sys_.source_load(t_prev + tau));
            rhs -= (I * tau) * S;
        }

        const auto midpoint = [&](const ComplexVector& u) -> ComplexVector {
            return theta == 1.0 ? u : ComplexVector(theta * u + (1.0 - theta) * u_prev);
        };
        const auto residual = [&](const RealVector& x) -> RealVector {
            const ComplexVector u = to_complex(x);
            ComplexVector r = lp.A_plus * u - rhs;
            if (beta != 0.0) r += (I * tau) * nonlinear_residual(V, midpoint(u), beta, g);
            return to_real(r);
        };
        const auto jacobian = [&](const RealVector& x) -> SparseRealMatrix {
            SparseRealMatrix J = lp.A_plus_split;
            add_nonlinear_jacobian(V, sys_.pattern(), midpoint(to_complex(x)), beta, tau * theta, true, J, g);
            return J;
        };

        ComplexVector guess = u_prev;
        if (cfg_.predictor && u_prev2 && tau_prev > 0.0) guess = u_prev + (tau / tau_prev) * (u_prev - *u_prev2);

        NewtonOptions opt;
        opt.tol = cfg_.newton_tol;
        opt.max_iter = cfg_.newton_max_iter;
        opt.linear_solver = cfg_.linear_solver;
        // at least one update, also when the guess already meets the absolute tol
        opt.min_iter = 1;
        NewtonResult nr = newton_solve(residual, jacobian, to_real(guess), opt, lp.frozen.get());

        StepResult out;
        out.field = ComplexField(to_complex(nr.x), t_prev + tau);
        out.newton_iters = nr.iterations;
        out.final_residual = nr.final_residual();
        out.residual_history = std::move(nr.residual_norms);
        out.mass = sys_.mass(out.field.values);
        out.energy = sys_.energy(out.field.values);
        return out;
    }

    const GpeSystem& sys_;
    StepperConfig cfg_;
    std::map<std::pair<double, double>, LinearPart> cache_;
};

inline StepResult irk_step(const GpeSystem& sys, const ComplexVector& u_prev, double tau, StepperConfig cfg = {},
                           double t_prev = 0.0) {
    cfg.scheme = Scheme::IRK;
    cfg.tau = tau;
    return TimeStepper(sys, cfg).step(u_prev, t_prev, tau);
}

inline StepResult be_step(const GpeSystem& sys, const ComplexVector& u_prev, double tau, StepperConfig cfg = {},
                          double t_prev = 0.0) {
    cfg.scheme = Scheme::BackwardEuler;
    cfg.tau = tau;
    return TimeStepper(sys, cfg).step(u_prev, t_prev, tau);
}

inline StepResult irk_regularized_step(const GpeSystem& sys, const ComplexVector& u_prev, double tau, double M,
                                       StepperConfig cfg = {}, double t_prev = 0.0) {
    cfg.scheme = Scheme::IRKRegularized;
    cfg.tau = tau;
    cfg.M = M;
    return TimeStepper(sys, cfg).step(u_prev, t_prev, tau);
}

struct RunResult {
    std::vector<ComplexField> trajectory;  // recorded fields, starting with u0
    std::vector<DiagnosticsRecord> records;
    std::optional<std::string> failure;    // set when a step failed; trajectory is partial
    std::vector<double> failure_residuals;
    double existence_indicator = 0.0;      // ell_h (h_max + tau_max^2), reported only
    bool ok() const { return !failure.has_value(); }
    const ComplexField& final_field() const { return trajectory.back(); }
};

using DiagnosticsSink = std::function<void(const DiagnosticsRecord&)>;

/// Time loop. Records u0 and every record_every-th step (and always the last
/// step). A failed step stops the run and is reported in RunResult::failure.
inline RunResult run(const GpeSystem& sys, const ComplexField& u0, const StepperConfig& cfg,
                     const DiagnosticsSink& sink = {},
                     const std::function<void(long, double, const ComplexVector&)>& on_record = {}) {
    cfg.validate();
    const std::vector<double> steps = cfg.steps();
    RunResult res;
    TimeStepper stepper(sys, cfg);

    double tau_max = 0.0;
    for (double s : steps) tau_max = std::max(tau_max, s);
    try {
        res.existence_indicator = log_factor(sys.space().mesh()) * (sys.space().mesh().h_max() + tau_max * tau_max);
    } catch (const Error&) {
        res.existence_indicator = std::numeric_limits<double>::quiet_NaN();
    }

    const double t0 = u0.t.value_or(0.0);
    double t = t0;
    ComplexVector u = u0.values;
    ComplexVector u_old;
    double tau_old = 0.0;

    DiagnosticsRecord r0{0, t, sys.mass(u), sys.energy(u), 0, 0.0};
    res.records.push_back(r0);
    res.trajectory.emplace_back(u, t);
    if (sink) sink(r0);
    if (on_record) on_record(0, t, u);

    for (std::size_t n = 0; n < steps.size(); ++n) {
        StepResult sr;
        try {
            sr = stepper.step(u, t, steps[n], u_old.size() ? &u_old : nullptr, tau_old);
        } catch (const NonConvergence& e) {
            res.failure = "step " + std::to_string(n + 1) + " at t=" + std::to_string(t) + ": " + e.what();
            res.failure_residuals = e.residual_history();
            return res;
        } catch (const FactorizationError& e) {
            res.failure = "step " + std::to_string(n + 1) + " at t=" + std::to_string(t) + ": " + e.what();
            return res;
        }
        u_old = std::move(u);
        tau_old = steps[n];
        u = std::move(sr.field.values);
        t = n + 1 == steps.size() && cfg.schedule.empty() ? t0 + cfg.T : t + steps[n];
        const long step_no = static_cast<long>(n + 1);
        if (step_no % cfg.record_every == 0 || n + 1 == steps.size()) {
            DiagnosticsRecord r{step_no, t, sr.mass, sr.energy, sr.newton_iters, sr.final_residual};
            res.records.push_back(r);
            res.trajectory.emplace_back(u, t);
            if (sink) sink(r);
            if (on_record) on_record(step_no, t, u);
        }
    }
    return res;
}

}  // namespace gpefem
