#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gpefem/assembly.hpp"
#include "gpefem/error.hpp"

namespace gpefem {

/// Globally Lipschitz truncation of z -> |z|^2 z:
///   f_M(z) = gamma(|z|^2) z
/// with gamma(s) = s on [0, theta], a C^2 quintic blend on [theta, 2 theta]
/// and the constant 2 theta beyond, theta = M^2.
class RegularizedCubic {
public:
    explicit RegularizedCubic(double M) : M_(M), theta_(M * M) {
        if (!(M > 0.0) || !std::isfinite(M)) throw InvalidParameter("RegularizedCubic: M must be positive and finite");
    }

    double M() const { return M_; }
    double theta() const { return theta_; }

    /// Blend polynomial g(s) = 3 s^5/theta^4 - 7 s^4/theta^3 + 4 s^3/theta^2 + s.
    double blend(double s) const {
        const double t = theta_;
        return ((3.0 * s / t - 7.0) * s / t + 4.0) * s * s * s / (t * t) + s;
    }
    /// g'(s) = (15 s^2/theta^4 + 2 s/theta^3 + 1/theta^2) (s - theta)^2.
    double blend_d1(double s) const {
        const double t = theta_;
        return (15.0 * s * s / (t * t * t * t) + 2.0 * s / (t * t * t) + 1.0 / (t * t)) * (s - t) * (s - t);
    }
    /// g''(s) = 60 s (theta - s)(2 theta/5 - s) / theta^4.
    double blend_d2(double s) const {
        const double t = theta_;
        return 60.0 * s * (t - s) * (0.4 * t - s) / (t * t * t * t);
    }

    double gamma(double s) const {
        if (s <= theta_) return s;
        if (s >= 2.0 * theta_) return 2.0 * theta_;
        return blend(s - theta_) + theta_;
    }
    double dgamma(double s) const {
        if (s <= theta_) return 1.0;
        if (s >= 2.0 * theta_) return 0.0;
        return blend_d1(s - theta_);
    }
    double d2gamma(double s) const {
        if (s <= theta_ || s >= 2.0 * theta_) return 0.0;
        return blend_d2(s - theta_);
    }

    Complex operator()(Complex z) const { return gamma(std::norm(z)) * z; }

private:
    double M_;
    double theta_;
};

inline Complex f_M(double M, Complex z) { return RegularizedCubic(M)(z); }

struct FmPropertyReport {
    std::size_t samples = 0;
    std::size_t identity_checked = 0;
    std::size_t identity_violations = 0;
    std::size_t positivity_violations = 0;
    std::size_t growth_violations = 0;
    std::size_t lipschitz_violations = 0;
    double max_lipschitz_ratio = 0.0;  // sampled |f(z)-f(w)| / (theta |z-w|)
    double max_growth_ratio = 0.0;     // sampled |f(z)| / (theta |z|)
    double junction_mismatch = 0.0;    // worst value/derivative jump of gamma at theta and 2 theta
    bool monotone = true;
    std::vector<std::string> witnesses;

    bool passed() const {
        return identity_violations == 0 && positivity_violations == 0 && growth_violations == 0 &&
               lipschitz_violations == 0 && junction_mismatch <= 1e-9 && monotone;
    }
    std::string summary() const {
        std::ostringstream os;
        os << "samples=" << samples << " identity=" << identity_violations << "/" << identity_checked
           << " positivity=" << positivity_violations << " growth=" << growth_violations
           << " lipschitz=" << lipschitz_violations << " max|f|/(M^2|z|)=" << max_growth_ratio
           << " max_lip/M^2=" << max_lipschitz_ratio << " junction=" << junction_mismatch
           << " monotone=" << (monotone ? "yes" : "no");
        return os.str();
    }
};

inline constexpr std::uint64_t kDefaultFmSeed = 0x5eed2016ULL;

/// Sampled check of f_M: identity on |z| <= M, Re(f_M(z) conj z) >= 0,
/// |f_M(z)| <= 2 M^2 |z|, |f_M(z) - f_M(w)| <= 10 M^2 |z - w|, plus C^2
/// continuity of gamma at the junctions and monotonicity on [0, 3 theta].
/// Pairs are drawn uniformly from the disk of radius 4M.
inline FmPropertyReport verify_f_M_properties(double M, std::size_t n_samples, std::uint64_t seed = kDefaultFmSeed) {
    if (n_samples < 1) throw InvalidParameter("verify_f_M_properties: need at least one sample");
    const RegularizedCubic f(M);
    const double theta = f.theta();
    FmPropertyReport rep;
    rep.samples = n_samples;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto draw = [&] {
        const double r = 4.0 * M * std::sqrt(unit(rng));
        const double phi = 2.0 * M_PI * unit(rng);
        return std::polar(r, phi);
    };
    const auto witness = [&](const char* what, Complex z, Complex w) {
        if (rep.witnesses.size() < 16) {
            std::ostringstream os;
            os.precision(17);
            os << what << ": z=" << z << " w=" << w;
            rep.witnesses.push_back(os.str());
        }
    };

    for (std::size_t n = 0; n < n_samples; ++n) {
        // every fourth pair is drawn close together to probe the Lipschitz bound locally
        const Complex z = draw();
        const Complex w = (n % 4 == 3) ? z + 1e-3 * M * draw() : draw();
        const Complex fz = f(z), fw = f(w);
        if (std::abs(z) <= M) {
            ++rep.identity_checked;
            if (fz != std::norm(z) * z) {
                ++rep.identity_violations;
                witness("identity", z, w);
            }
        }
        if ((fz * std::conj(z)).real() < 0.0) {
            ++rep.positivity_violations;
            witness("positivity", z, w);
        }
        const double az = std::abs(z);
        if (az > 0.0) {
            const double ratio = std::abs(fz) / (theta * az);
            rep.max_growth_ratio = std::max(rep.max_growth_ratio, ratio);
            if (std::abs(fz) > 2.0 * theta * az * (1.0 + 1e-14)) {
                ++rep.growth_violations;
                witness("growth", z, w);
            }
        }
        const double dzw = std::abs(z - w);
        if (dzw > 0.0) {
            const double lip = std::abs(fz - fw) / (theta * dzw);
            rep.max_lipschitz_ratio = std::max(rep.max_lipschitz_ratio, lip);
            if (std::abs(fz - fw) > 10.0 * theta * dzw * (1.0 + 1e-12)) {
                ++rep.lipschitz_violations;
                witness("lipschitz", z, w);
            }
        }
    }

    // junctions: compare the analytic pieces on both sides
    const double jumps[] = {
        std::abs((f.blend(0.0) + theta) - theta) / theta,          // value at theta
        std::abs(f.blend_d1(0.0) - 1.0),                            // slope at theta
        std::abs(f.blend_d2(0.0) - 0.0) * theta,                    // curvature at theta
        std::abs((f.blend(theta) + theta) - 2.0 * theta) / theta,  // value at 2 theta
        std::abs(f.blend_d1(theta) - 0.0),                          // slope at 2 theta
        std::abs(f.blend_d2(theta) - 0.0) * theta,                  // curvature at 2 theta
    };
    for (double j : jumps) rep.junction_mismatch = std::max(rep.junction_mismatch, j);

    const int grid = 30000;
    double prev = f.gamma(0.0);
    for (int i = 1; i <= grid; ++i) {
        const double g = f.gamma(3.0 * theta * i / grid);
        if (g < prev) rep.monotone = false;
        prev = g;
    }
    return rep;
}

/// Practical stand-in for the analytic cutoff: factor * max over the given
/// fields of (nodal sup |u_h| + elementwise sup |grad u_h|).
inline double estimate_M(const FeSpace& V, const std::vector<ComplexVector>& trajectory, double safety_factor = 2.0) {
    if (trajectory.empty()) throw InvalidParameter("estimate_M: empty trajectory");
    double best = 0.0;
    for (const auto& u : trajectory) {
        const double sup_u = u.size() ? u.cwiseAbs().maxCoeff() : 0.0;
        double sup_grad = 0.0;
        for (const auto& e : V.elements()) sup_grad = std::max(sup_grad, V.gradient(u, e).norm());
        best = std::max(best, sup_u + sup_grad);
    }
    const double M = safety_factor * best;
    if (!(M > 0.0)) throw InvalidParameter("estimate_M: M must be positive (zero trajectory?)");
    return M;
}

}  // namespace gpefem
