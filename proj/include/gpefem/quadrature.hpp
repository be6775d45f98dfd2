#pragma once

#include <array>
#include <vector>

#include "gpefem/error.hpp"

namespace gpefem {

/// Symmetric rule on the reference triangle. Points are barycentric
/// coordinates; weights are normalized to sum to 1, so an element integral is
/// area * sum_q w_q f(x_q).
struct QuadratureRule {
    std::vector<std::array<double, 3>> points;
    std::vector<double> weights;
    int degree = 0;

    std::size_t size() const { return weights.size(); }
};

namespace detail {

inline void add_orbit3(QuadratureRule& r, double a, double w) {
    const double b = 1.0 - 2.0 * a;
    r.points.push_back({a, a, b});
    r.points.push_back({a, b, a});
    r.points.push_back({b, a, a});
    for (int i = 0; i < 3; ++i) r.weights.push_back(w);
}

inline void add_orbit6(QuadratureRule& r, double a, double b, double w) {
    const double c = 1.0 - a - b;
    r.points.push_back({a, b, c});
    r.points.push_back({a, c, b});
    r.points.push_back({b, a, c});
    r.points.push_back({b, c, a});
    r.points.push_back({c, a, b});
    r.points.push_back({c, b, a});
    for (int i = 0; i < 6; ++i) r.weights.push_back(w);
}

}  // namespace detail

/// 6-point rule, exact for polynomials of degree 4. Every P1 integrand in
/// this library (cubic term, quartic energy, linear drift against products,
/// quadratic trap against products) is at most degree 4.
inline QuadratureRule triangle_rule_degree4() {
    QuadratureRule r;
    r.degree = 4;
    detail::add_orbit3(r, 0.44594849091596488632, 0.22338158967801146570);
    detail::add_orbit3(r, 0.09157621350977074346, 0.10995174365532186764);
    return r;
}

/// 12-point Dunavant rule, exact for degree 6.
inline QuadratureRule triangle_rule_degree6() {
    QuadratureRule r;
    r.degree = 6;
    detail::add_orbit3(r, 0.063089014491502228340, 0.050844906370206816921);
    detail::add_orbit3(r, 0.24928674517091042129, 0.11678627572637936603);
    detail::add_orbit6(r, 0.053145049844816947353, 0.31035245103378440542, 0.082851075618373575194);
    return r;
}

inline QuadratureRule triangle_rule(int degree) {
    if (degree <= 4) return triangle_rule_degree4();
    if (degree <= 6) return triangle_rule_degree6();
    throw InvalidParameter("no triangle rule above degree 6");
}

}  // namespace gpefem
