#pragma once

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gpefem/error.hpp"
#include "gpefem/groundstate.hpp"
#include "gpefem/linear_solver.hpp"
#include "gpefem/mesh.hpp"
#include "gpefem/model.hpp"
#include "gpefem/steppers.hpp"

namespace gpefem {

/// Fully resolved run configuration. Every field has passed validation.
struct RunConfig {
    Rect domain;
    int nx = 0, ny = 0;

    std::string model = "gpe_rotating";
    double omega = 0.0;
    double beta = 0.0;
    double gamma_x = 1.0, gamma_y = 1.0;
    double kappa = 0.0;     // constant real part of kappa
    double kappa_im = 0.0;  // constant imaginary part of kappa

    Scheme scheme = Scheme::IRK;
    double tau = 0.0;
    double T = 0.0;
    double newton_tol = 1e-8;
    int newton_max_iter = 50;
    int record_every = 1;
    int snapshot_every = 0;  // 0: first and last state only
    double M = 0.0;
    bool predictor = false;
    LinearSolverKind linear_solver = LinearSolverKind::Direct;
    int quadrature_degree = 4;

    std::string output = "out";
    std::uint64_t seed = 12345;
    double zeta1 = 1.01;

    /// "groundstate", "gaussian", or a path to a coefficient dump.
    std::string initial = "groundstate";
    double gs_omega = 0.8;
    double gs_beta = 100.0;
    double gs_gamma_x = 1.0, gs_gamma_y = 1.0;
    double gs_tau = 0.05;
    double gs_tol = 1e-8;
    int gs_max_steps = 20000;
    SeedProfile gs_seed_profile = SeedProfile::Vortex;
    double gs_noise = 0.0;
    double gs_lattice_radius = 3.0;
    CubicTreatment gs_cubic = CubicTreatment::Frozen;

    /// Resolved key/value pairs in canonical order, for manifests.
    std::vector<std::pair<std::string, std::string>> resolved;

    Mesh mesh() const { return build_rect_mesh(domain, nx, ny); }
    QuadratureRule rule() const { return triangle_rule(quadrature_degree); }

    Coefficients coefficients() const {
        if (model == "laplacian") {
            Coefficients k = Coefficients::laplacian(0.5);
            k.beta = beta;
            return k;
        }
        Coefficients k = gpe_rotating(omega, harmonic_potential(gamma_x, gamma_y), beta);
        if (kappa != 0.0 || kappa_im != 0.0) k.kappa = [z = Complex(kappa, kappa_im)](const Point&) { return z; };
        return k;
    }

    /// Operator whose ground state seeds initial = groundstate.
    Coefficients groundstate_coefficients() const {
        return gpe_rotating(gs_omega, harmonic_potential(gs_gamma_x, gs_gamma_y), gs_beta);
    }

    StepperConfig stepper() const {
        StepperConfig s;
        s.scheme = scheme;
        s.tau = tau;
        s.T = T;
        s.newton_tol = newton_tol;
        s.newton_max_iter = newton_max_iter;
        s.record_every = record_every;
        s.M = M;
        s.predictor = predictor;
        s.linear_solver = linear_solver;
        return s;
    }

    GradientFlowConfig gradient_flow() const {
        GradientFlowConfig g;
        g.tau_flow = gs_tau;
        g.tol = gs_tol;
        g.max_steps = gs_max_steps;
        g.seed_profile = gs_seed_profile;
        g.seed_omega = gs_omega;
        g.seed_noise = gs_noise;
        g.lattice_radius = gs_lattice_radius;
        g.seed = seed;
        g.cubic = gs_cubic;
        g.linear_solver = linear_solver;
        return g;
    }
};

namespace detail {

struct ConfigEntry {
    std::string value;
    int line = 0;  // 0 for command-line overrides
};

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline const std::vector<std::string>& required_config_keys() {
    static const std::vector<std::string> k{"x_min", "x_max", "y_min", "y_max", "nx", "ny", "tau", "T"};
    return k;
}

inline const std::vector<std::string>& optional_config_keys() {
    static const std::vector<std::string> k{
        "model",         "omega",       "beta",        "gamma_x",     "gamma_y",         "kappa",
        "kappa_im",      "scheme",      "newton_tol",  "newton_max_iter", "record_every", "snapshot_every",
        "M",             "predictor",   "linear_solver", "quadrature_degree", "output",  "seed",
        "zeta1",         "initial",     "gs_omega",    "gs_beta",     "gs_gamma_x",      "gs_gamma_y",
        "gs_tau",        "gs_tol",      "gs_max_steps", "gs_seed_profile", "gs_noise",  "gs_lattice_radius", "gs_cubic"};
    return k;
}

class ConfigReader {
public:
    explicit ConfigReader(std::map<std::string, ConfigEntry> entries) : e_(std::move(entries)) {}

    bool has(const std::string& key) const { return e_.count(key) > 0; }

    std::string str(const std::string& key, const std::string& def) const {
        return has(key) ? e_.at(key).value : def;
    }

    double num(const std::string& key, double def) const {
        if (!has(key)) return def;
        const auto& en = e_.at(key);
        errno = 0;
        char* end = nullptr;
        const double v = std::strtod(en.value.c_str(), &end);
        if (en.value.empty() || *end != '\0' || errno == ERANGE || !std::isfinite(v))
            throw ConfigError("key '" + key + "': cannot parse '" + en.value + "' as a number", en.line);
        return v;
    }

    long long integer(const std::string& key, long long def) const {
        if (!has(key)) return def;
        const auto& en = e_.at(key);
        errno = 0;
        char* end = nullptr;
        const long long v = std::strtoll(en.value.c_str(), &end, 10);
        if (en.value.empty() || *end != '\0' || errno == ERANGE)
            throw ConfigError("key '" + key + "': cannot parse '" + en.value + "' as an integer", en.line);
        return v;
    }

    bool boolean(const std::string& key, bool def) const {
        if (!has(key)) return def;
        const auto& en = e_.at(key);
        if (en.value == "true" || en.value == "1" || en.value == "yes") return true;
        if (en.value == "false" || en.value == "0" || en.value == "no") return false;
        throw ConfigError("key '" + key + "': expected true|false, got '" + en.value + "'", en.line);
    }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        throw ConfigError("key '" + key + "': " + what, has(key) ? e_.at(key).line : 0);
    }

    /// Converts parser exceptions from enum parsing into ConfigErrors on key.
    template <typename F>
    auto parsed(const std::string& key, const std::string& def, F&& f) const {
        try {
            return f(str(key, def));
        } catch (const InvalidParameter& ex) {
            fail(key, ex.what());
        }
    }

private:
    std::map<std::string, ConfigEntry> e_;
};

inline void add_entry(std::map<std::string, ConfigEntry>& entries, const std::string& text, int line,
                      bool allow_override) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value', got '" + text + "'", line);
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key", line);
    const auto& req = required_config_keys();
    const auto& opt = optional_config_keys();
    if (std::find(req.begin(), req.end(), key) == req.end() && std::find(opt.begin(), opt.end(), key) == opt.end())
        throw ConfigError("unknown key '" + key + "'", line);
    if (!allow_override && entries.count(key))
        throw ConfigError("duplicate key '" + key + "' (first set on line " + std::to_string(entries[key].line) + ")",
                          line);
    entries[key] = ConfigEntry{value, line};
}

}  // namespace detail

/// Parses flat `key = value` text. Blank lines and lines starting with '#'
/// are ignored; trailing "# ..." comments are stripped. Each override is a
/// "key=value" string applied after the file (and may replace its keys).
inline RunConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides = {}) {
    std::map<std::string, detail::ConfigEntry> entries;
    std::istringstream is(text);
    std::string raw;
    int line = 0;
    while (std::getline(is, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string s = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (s.empty()) continue;
        detail::add_entry(entries, s, line, false);
    }
    for (const auto& o : overrides) {
        try {
            detail::add_entry(entries, o, 0, true);
        } catch (const ConfigError& e) {
            throw ConfigError(std::string("--set ") + e.what());
        }
    }
    for (const auto& k : detail::required_config_keys())
        if (!entries.count(k)) throw ConfigError("missing required key '" + k + "'");

    const detail::ConfigReader r(entries);
    RunConfig c;
    c.domain = Rect{r.num("x_min", 0), r.num("x_max", 0), r.num("y_min", 0), r.num("y_max", 0)};
    if (!(c.domain.x1 > c.domain.x0)) r.fail("x_max", "must exceed x_min");
    if (!(c.domain.y1 > c.domain.y0)) r.fail("y_max", "must exceed y_min");
    const auto positive_int = [&](const std::string& k, long long def, long long lo = 1) {
        const long long v = r.integer(k, def);
        if (v < lo || v > 1000000) r.fail(k, "must be in [" + std::to_string(lo) + ", 1000000]");
        return static_cast<int>(v);
    };
    c.nx = positive_int("nx", 0);
    c.ny = positive_int("ny", 0);

    c.model = r.str("model", c.model);
    if (c.model != "gpe_rotating" && c.model != "laplacian") r.fail("model", "expected gpe_rotating|laplacian");
    c.omega = r.num("omega", c.omega);
    c.beta = r.num("beta", c.beta);
    if (c.beta < 0) r.fail("beta", "must be >= 0");
    c.gamma_x = r.num("gamma_x", c.gamma_x);
    c.gamma_y = r.num("gamma_y", c.gamma_y);
    c.kappa = r.num("kappa", c.kappa);
    c.kappa_im = r.num("kappa_im", c.kappa_im);
    if (c.kappa_im > 0) r.fail("kappa_im", "must be <= 0 (non-positive imaginary part)");

    c.scheme = r.parsed("scheme", "irk", parse_scheme);
    c.tau = r.num("tau", 0);
    if (!(c.tau > 0)) r.fail("tau", "must be > 0");
    c.T = r.num("T", 0);
    if (!(c.T >= 0)) r.fail("T", "must be >= 0");
    {
        const double n = c.T / c.tau;
        if (std::abs(n - std::round(n)) > 1e-12 * std::max(1.0, n)) r.fail("T", "must be an integer multiple of tau");
    }
    c.newton_tol = r.num("newton_tol", c.newton_tol);
    if (!(c.newton_tol > 0)) r.fail("newton_tol", "must be > 0");
    c.newton_max_iter = positive_int("newton_max_iter", c.newton_max_iter);
    c.record_every = positive_int("record_every", c.record_every);
    c.snapshot_every = positive_int("snapshot_every", c.snapshot_every, 0);
    c.M = r.num("M", c.M);
    if (c.M < 0) r.fail("M", "must be >= 0");
    if (c.scheme == Scheme::IRKRegularized && !(c.M > 0)) r.fail("M", "scheme irk_regularized needs M > 0");
    c.predictor = r.boolean("predictor", c.predictor);
    c.linear_solver = r.parsed("linear_solver", "direct", parse_linear_solver_kind);
    c.quadrature_degree = positive_int("quadrature_degree", c.quadrature_degree);
    if (c.quadrature_degree != 4 && c.quadrature_degree != 6) r.fail("quadrature_degree", "expected 4 or 6");

    c.output = r.str("output", c.output);
    if (c.output.empty()) r.fail("output", "must not be empty");
    {
        const long long s = r.integer("seed", static_cast<long long>(c.seed));
        if (s < 0) r.fail("seed", "must be >= 0");
        c.seed = static_cast<std::uint64_t>(s);
    }
    c.zeta1 = r.num("zeta1", c.zeta1);
    if (!(c.zeta1 > 1)) r.fail("zeta1", "must be > 1");

    c.initial = r.str("initial", c.initial);
    if (c.initial.empty()) r.fail("initial", "must not be empty");
    c.gs_omega = r.num("gs_omega", c.gs_omega);
    c.gs_beta = r.num("gs_beta", c.gs_beta);
    if (c.gs_beta < 0) r.fail("gs_beta", "must be >= 0");
    c.gs_gamma_x = r.num("gs_gamma_x", c.gs_gamma_x);
    c.gs_gamma_y = r.num("gs_gamma_y", c.gs_gamma_y);
    c.gs_tau = r.num("gs_tau", c.gs_tau);
    if (!(c.gs_tau > 0)) r.fail("gs_tau", "must be > 0");
    c.gs_tol = r.num("gs_tol", c.gs_tol);
    if (!(c.gs_tol > 0)) r.fail("gs_tol", "must be > 0");
    c.gs_max_steps = positive_int("gs_max_steps", c.gs_max_steps);
    c.gs_seed_profile = r.parsed("gs_seed_profile", "vortex", parse_seed_profile);
    c.gs_noise = r.num("gs_noise", c.gs_noise);
    if (c.gs_noise < 0) r.fail("gs_noise", "must be >= 0");
    c.gs_lattice_radius = r.num("gs_lattice_radius", c.gs_lattice_radius);
    if (!(c.gs_lattice_radius > 0)) r.fail("gs_lattice_radius", "must be > 0");
    c.gs_cubic = r.parsed("gs_cubic", "frozen", parse_cubic_treatment);

    for (const auto& k : detail::required_config_keys()) c.resolved.emplace_back(k, entries.at(k).value);
    for (const auto& k : detail::optional_config_keys()) c.resolved.emplace_back(k, "");
    std::ostringstream v;
    v.precision(17);
    const auto set = [&](const std::string& k, const auto& val) {
        v.str("");
        v << val;
        for (auto& kv : c.resolved)
            if (kv.first == k) kv.second = v.str();
    };
    set("model", c.model);
    set("omega", c.omega);
    set("beta", c.beta);
    set("gamma_x", c.gamma_x);
    set("gamma_y", c.gamma_y);
    set("kappa", c.kappa);
    set("kappa_im", c.kappa_im);
    set("scheme", scheme_name(c.scheme));
    set("newton_tol", c.newton_tol);
    set("newton_max_iter", c.newton_max_iter);
    set("record_every", c.record_every);
    set("snapshot_every", c.snapshot_every);
    set("M", c.M);
    set("predictor", c.predictor ? "true" : "false");
    set("linear_solver", c.linear_solver == LinearSolverKind::Direct ? "direct" : "iterative");
    set("quadrature_degree", c.quadrature_degree);
    set("output", c.output);
    set("seed", c.seed);
    set("zeta1", c.zeta1);
    set("initial", c.initial);
    set("gs_omega", c.gs_omega);
    set("gs_beta", c.gs_beta);
    set("gs_gamma_x", c.gs_gamma_x);
    set("gs_gamma_y", c.gs_gamma_y);
    set("gs_tau", c.gs_tau);
    set("gs_tol", c.gs_tol);
    set("gs_max_steps", c.gs_max_steps);
    set("gs_seed_profile", c.gs_seed_profile == SeedProfile::Vortex    ? "vortex"
                           : c.gs_seed_profile == SeedProfile::Lattice ? "lattice"
                                                                       : "gaussian");
    set("gs_lattice_radius", c.gs_lattice_radius);
    set("gs_noise", c.gs_noise);
    set("gs_cubic", c.gs_cubic == CubicTreatment::Frozen ? "frozen" : "explicit");
    return c;
}

inline RunConfig parse_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    try {
        return parse_config_text(ss.str(), overrides);
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

}  // namespace gpefem
