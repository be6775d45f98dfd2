// gpefem: command-line driver for the rotating Gross-Pitaevskii FEM solver.
//
// Exit codes: 0 success, 1 I/O or internal error, 2 configuration error,
// 3 solver failure, 4 verification failure.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gpefem/gpefem.hpp"

#ifndef GPEFEM_VERSION
#define GPEFEM_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using namespace gpefem;

namespace {

enum ExitCode { kOk = 0, kIoError = 1, kConfigError = 2, kSolverFailure = 3, kVerificationFailure = 4 };

struct Common {
    std::string config;
    std::vector<std::string> sets;
    std::string out;
};

RunConfig load(const Common& c) {
    if (c.config.empty()) throw ConfigError("--config is required");
    RunConfig cfg = parse_config(c.config, c.sets);
    if (!c.out.empty()) cfg.output = c.out;
    return cfg;
}

fs::path prepare_output(const std::string& dir) {
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw Error("cannot create output directory " + dir + ": " + ec.message());
    return p;
}

class Manifest {
public:
    Manifest(std::string command, std::vector<std::string> argv)
        : command_(std::move(command)), argv_(std::move(argv)), start_(std::chrono::steady_clock::now()) {}

    void config(const RunConfig& c) { kv_ = c.resolved; }
    void add(const std::string& k, const std::string& v) { extra_.emplace_back(k, v); }
    void add(const std::string& k, double v) {
        std::ostringstream os;
        os << std::setprecision(17) << v;
        add(k, os.str());
    }

    void write(const fs::path& dir, const std::string& status) const {
        std::ofstream os(dir / "manifest.txt");
        if (!os) throw Error("cannot write " + (dir / "manifest.txt").string());
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        const std::time_t now = std::time(nullptr);
        os << "# gpefem manifest\n";
        os << "version = " << GPEFEM_VERSION << '\n';
        os << "command = " << command_ << '\n';
        os << "argv =";
        for (const auto& a : argv_) os << ' ' << a;
        os << '\n';
        os << "finished = " << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ") << '\n';
        os << "wall_seconds = " << std::setprecision(6) << secs << '\n';
        os << "status = " << status << '\n';
        if (!kv_.empty()) os << "# resolved configuration\n";
        for (const auto& [k, v] : kv_) os << k << " = " << v << '\n';
        if (!extra_.empty()) os << "# results\n";
        for (const auto& [k, v] : extra_) os << k << " = " << v << '\n';
    }

private:
    std::string command_;
    std::vector<std::string> argv_;
    std::chrono::steady_clock::time_point start_;
    std::vector<std::pair<std::string, std::string>> kv_;
    std::vector<std::pair<std::string, std::string>> extra_;
};

GroundState compute_groundstate(const RunConfig& cfg, const FeSpace& V, bool verbose) {
    GradientFlowConfig g = cfg.gradient_flow();
    if (verbose)
        g.progress = [](int n, double e, double ch) {
            if (n % 500 == 0)
                std::cerr << "groundstate: step " << n << " energy " << std::setprecision(10) << e << " change " << ch
                          << '\n';
        };
    return dngf(V, cfg.groundstate_coefficients(), g);
}

ComplexVector initial_field(const RunConfig& cfg, const FeSpace& V, Manifest& man) {
    if (cfg.initial == "groundstate") {
        GroundState gs = compute_groundstate(cfg, V, false);
        man.add("groundstate_energy", gs.energy);
        man.add("groundstate_steps", std::to_string(gs.steps));
        return gs.field.values;
    }
    if (cfg.initial == "gaussian") {
        GradientFlowConfig g;
        g.seed_profile = SeedProfile::Gaussian;
        return groundstate_seed(V, g);
    }
    return read_field_csv(V, cfg.initial);
}

int cmd_run(const Common& c, const std::vector<std::string>& argv) {
    const RunConfig cfg = load(c);
    const fs::path dir = prepare_output(cfg.output);
    Manifest man("run", argv);
    man.config(cfg);
    GpeSystem sys(cfg.mesh(), cfg.coefficients(), cfg.rule());
    const FeSpace& V = sys.space();
    const ComplexVector u0 = initial_field(cfg, V, man);

    std::ofstream csv(dir / "diagnostics.csv");
    if (!csv) throw Error("cannot write " + (dir / "diagnostics.csv").string());
    DiagnosticsCsv diag(csv);

    StepperConfig sc = cfg.stepper();
    if (cfg.snapshot_every > 0) sc.record_every = std::gcd(cfg.record_every, cfg.snapshot_every);
    const long n_steps = static_cast<long>(sc.steps().size());
    const auto snapshot = [&](long step, double, const ComplexVector& u) {
        if (step == 0 || step == n_steps || (cfg.snapshot_every > 0 && step % cfg.snapshot_every == 0))
            export_vtk(V, u, (dir / ("snapshot_" + std::to_string(step) + ".vtk")).string());
    };
    const auto sink = [&](const DiagnosticsRecord& r) {
        if (r.step % cfg.record_every == 0 || r.step == n_steps) diag(r);
    };
    RunResult res = run(sys, ComplexField(u0, 0.0), sc, sink, snapshot);
    write_field_csv(V, res.final_field().values, (dir / "final_field.csv").string());

    double m0 = res.records.front().mass, e0 = res.records.front().energy, dm = 0.0, de = 0.0;
    for (const auto& r : res.records) {
        dm = std::max(dm, std::abs(r.mass - m0) / m0);
        de = std::max(de, std::abs(r.energy - e0) / std::abs(e0));
    }
    man.add("steps_completed", std::to_string(res.records.back().step));
    man.add("max_relative_mass_drift", dm);
    man.add("max_relative_energy_drift", de);
    man.add("existence_indicator", res.existence_indicator);
    std::cout << "steps " << res.records.back().step << "  mass drift " << std::scientific << std::setprecision(3) << dm
              << "  energy drift " << de << '\n';
    if (!res.ok()) {
        man.add("failure", *res.failure);
        man.write(dir, "solver_failure");
        std::cerr << "error: " << *res.failure << '\n';
        return kSolverFailure;
    }
    man.write(dir, "ok");
    return kOk;
}

int cmd_groundstate(const Common& c, const std::vector<std::string>& argv) {
    const RunConfig cfg = load(c);
    const fs::path dir = prepare_output(cfg.output);
    Manifest man("groundstate", argv);
    man.config(cfg);
    FeSpace V(cfg.mesh(), cfg.rule());
    GroundState gs = compute_groundstate(cfg, V, true);
    export_vtk(V, gs.field.values, (dir / "groundstate.vtk").string());
    write_field_csv(V, gs.field.values, (dir / "groundstate.csv").string());
    man.add("energy", gs.energy);
    man.add("steps", std::to_string(gs.steps));
    man.add("final_change", gs.final_change);
    man.add("energy_increased", gs.energy_increased ? "true" : "false");
    man.write(dir, "ok");
    std::cout << "ground state energy " << std::setprecision(10) << gs.energy << " after " << gs.steps << " steps\n";
    return kOk;
}

int cmd_convergence(const std::string& case_name, const std::string& kind, int levels, int coarse,
                    const std::string& scheme, const std::string& out, const std::vector<std::string>& argv) {
    if (levels < 2) throw ConfigError("--levels must be >= 2");
    if (coarse < 1) throw ConfigError("--coarse must be >= 1");
    Scheme sch;
    try {
        sch = parse_scheme(scheme);
    } catch (const InvalidParameter& e) {
        throw ConfigError(e.what());
    }
    const BenchmarkCase bc = [&] {
        try {
            return benchmark_case(case_name);
        } catch (const InvalidParameter& e) {
            throw ConfigError(e.what());
        }
    }();
    EOCTable t;
    if (kind == "space") {
        SpaceEocOptions o;
        o.scheme = sch;
        o.levels.clear();
        for (int i = 0, n = coarse; i < levels; ++i, n *= 2) o.levels.push_back(n);
        t = run_space_eoc(bc, o);
    } else if (kind == "time") {
        TimeEocOptions o;
        o.scheme = sch;
        o.taus.clear();
        for (int i = 0; i < levels; ++i) o.taus.push_back(0.2 / (1 << i));
        t = run_time_eoc(bc, o);
    } else if (kind == "projection") {
        std::vector<int> lv;
        for (int i = 0, n = coarse; i < levels; ++i, n *= 2) lv.push_back(n);
        const double t0 = 0.0;
        t = run_projection_eoc([&](const Point& p) { return bc.exact(p, t0); },
                               [&](const Point& p) { return bc.exact_gradient(p, t0); }, bc.domain, bc.coeffs, lv);
    } else {
        throw ConfigError("--kind must be space|time|projection");
    }
    const fs::path dir = prepare_output(out);
    std::ofstream csv(dir / "eoc.csv");
    if (!csv) throw Error("cannot write " + (dir / "eoc.csv").string());
    t.write_csv(csv);
    t.write_text(std::cout);
    Manifest man("convergence", argv);
    man.add("case", case_name);
    man.add("kind", kind);
    man.add("scheme", scheme);
    man.write(dir, "ok");
    return kOk;
}

int cmd_table1(const Common& c, const std::vector<double>& taus, int steps, const std::vector<std::string>& argv) {
    const RunConfig cfg = load(c);
    const fs::path dir = prepare_output(cfg.output);
    Manifest man("table1", argv);
    man.config(cfg);
    GpeSystem sys(cfg.mesh(), cfg.coefficients(), cfg.rule());
    const ComplexVector u0 = initial_field(cfg, sys.space(), man);
    Table1Options o;
    o.taus = taus;
    o.steps = steps;
    o.newton_tol = cfg.newton_tol;
    o.newton_max_iter = cfg.newton_max_iter;
    o.on_row = [](const Table1Row& r) {
        std::cout << std::setw(8) << r.tau << std::setw(8) << r.T << std::scientific << std::setprecision(5)
                  << std::setw(14) << r.be_mass << std::setw(14) << r.irk_mass << std::setw(14) << r.be_energy
                  << std::setw(14) << r.irk_energy << std::defaultfloat << '\n';
        if (!r.be_failure.empty()) std::cerr << "be: " << r.be_failure << '\n';
        if (!r.irk_failure.empty()) std::cerr << "irk: " << r.irk_failure << '\n';
    };
    std::cout << std::setw(8) << "tau" << std::setw(8) << "T" << std::setw(14) << "mass_BE" << std::setw(14)
              << "mass_IRK" << std::setw(14) << "energy_BE" << std::setw(14) << "energy_IRK" << '\n';
    const auto rows = table1_experiment(sys, u0, o);
    std::ofstream csv(dir / "table1.csv");
    if (!csv) throw Error("cannot write " + (dir / "table1.csv").string());
    write_table1_csv(csv, rows);
    bool failed = false;
    for (const auto& r : rows) failed = failed || !r.be_failure.empty() || !r.irk_failure.empty();
    man.write(dir, failed ? "solver_failure" : "ok");
    return failed ? kSolverFailure : kOk;
}

int cmd_verify_fm(double M, std::size_t samples, std::uint64_t seed) {
    if (!(M > 0.0)) throw ConfigError("--M must be > 0");
    if (samples == 0) throw ConfigError("--samples must be > 0");
    const FmPropertyReport rep = verify_f_M_properties(M, samples, seed);
    std::cout << rep.summary() << '\n';
    for (const auto& w : rep.witnesses) std::cout << "  " << w << '\n';
    std::cout << (rep.passed() ? "f_M properties: PASS" : "f_M properties: FAIL") << '\n';
    return rep.passed() ? kOk : kVerificationFailure;
}

int cmd_verify_assumptions(const Common& c) {
    const RunConfig cfg = load(c);
    const Coefficients k = cfg.coefficients();
    const Mesh mesh = cfg.mesh();
    const AssumptionReport rep = validate_assumptions(k, mesh, cfg.zeta1, cfg.rule());
    const auto& cert = rep.certificate;
    std::cout << "gamma_min " << cert.gamma_min << "  gamma_max " << cert.gamma_max << "  zeta0 " << cert.zeta0
              << "  zeta1 " << cert.zeta1 << '\n';
    const double div = max_divergence(k, mesh);
    std::cout << "max |div b| " << div << '\n';
    if (!rep.ok()) {
        std::cout << rep.violations.size() << " sample points violate the assumptions, e.g.\n";
        for (std::size_t i = 0; i < std::min<std::size_t>(5, rep.violations.size()); ++i) {
            const auto& v = rep.violations[i];
            std::cout << "  (" << v.where.x() << ", " << v.where.y() << "): " << v.what << " [" << v.value << "]\n";
        }
        std::cout << "assumptions: FAIL\n";
        return kVerificationFailure;
    }
    std::cout << "assumptions: PASS\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv, argv + argc);
    CLI::App app{"P1 finite elements for the rotating Gross-Pitaevskii equation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", GPEFEM_VERSION);

    Common common;
    const auto add_common = [&](CLI::App* s) {
        s->add_option("--config", common.config, "key = value configuration file")->required();
        s->add_option("--set", common.sets, "override key=value (repeatable)");
        s->add_option("--out", common.out, "output directory (overrides the output key)");
    };

    auto* run_cmd = app.add_subcommand("run", "time integration with diagnostics and snapshots");
    add_common(run_cmd);
    auto* gs_cmd = app.add_subcommand("groundstate", "ground state by normalized gradient flow");
    add_common(gs_cmd);

    std::string case_name = "eigenmode", kind = "space", scheme = "irk", conv_out = "out";
    int levels = 3, coarse = 16;
    auto* conv = app.add_subcommand("convergence", "experimental orders of convergence");
    conv->add_option("--case", case_name, "eigenmode|manufactured|zero")->capture_default_str();
    conv->add_option("--kind", kind, "space|time|projection")->capture_default_str();
    conv->add_option("--levels", levels, "number of nested levels")->capture_default_str();
    conv->add_option("--coarse", coarse, "cells per direction on the coarsest mesh")->capture_default_str();
    conv->add_option("--scheme", scheme, "irk|be")->capture_default_str();
    conv->add_option("--out", conv_out, "output directory")->capture_default_str();

    std::vector<double> taus{1.0, 0.1, 0.01, 0.001};
    int t1_steps = 100;
    auto* t1 = app.add_subcommand("table1", "backward Euler versus IRK mass and energy after a fixed step count");
    add_common(t1);
    t1->add_option("--taus", taus, "step sizes")->capture_default_str();
    t1->add_option("--steps", t1_steps, "steps per run")->capture_default_str();

    double fm_M = 1.0;
    std::size_t fm_samples = 100000;
    std::uint64_t fm_seed = kDefaultFmSeed;
    auto* fm = app.add_subcommand("verify-fm", "sampled check of the regularized nonlinearity");
    fm->add_option("--M", fm_M, "cutoff M")->capture_default_str();
    fm->add_option("--samples", fm_samples, "number of samples")->capture_default_str();
    fm->add_option("--seed", fm_seed, "random seed")->capture_default_str();

    auto* va = app.add_subcommand("verify-assumptions", "pointwise coefficient checks and ellipticity certificate");
    add_common(va);

    std::string what;
    auto* verify = app.add_subcommand("verify", "verify f_M | assumptions");
    verify->add_option("what", what, "f_M or assumptions")->required();
    verify->add_option("--M", fm_M, "cutoff M");
    verify->add_option("--samples", fm_samples, "number of samples");
    verify->add_option("--seed", fm_seed, "random seed");
    verify->add_option("--config", common.config, "configuration file (assumptions)");
    verify->add_option("--set", common.sets, "override key=value (repeatable)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }

    try {
        if (*run_cmd) return cmd_run(common, args);
        if (*gs_cmd) return cmd_groundstate(common, args);
        if (*conv) return cmd_convergence(case_name, kind, levels, coarse, scheme, conv_out, args);
        if (*t1) return cmd_table1(common, taus, t1_steps, args);
        if (*fm) return cmd_verify_fm(fm_M, fm_samples, fm_seed);
        if (*va) return cmd_verify_assumptions(common);
        if (*verify) {
            if (what == "f_M" || what == "fm" || what == "f_m") return cmd_verify_fm(fm_M, fm_samples, fm_seed);
            if (what == "assumptions") return cmd_verify_assumptions(common);
            throw ConfigError("verify: expected f_M or assumptions, got '" + what + "'");
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const InvalidParameter& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const InvalidDomain& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const NonConvergence& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kSolverFailure;
    } catch (const FactorizationError& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kSolverFailure;
    } catch (const VerificationFailure& e) {
        std::cerr << "verification failure: " << e.what() << '\n';
        return kVerificationFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIoError;
    }
    return kIoError;
}
