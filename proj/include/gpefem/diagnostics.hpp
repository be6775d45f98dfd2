#pragma once

#include <cmath>
#include <complex>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "gpefem/assembly.hpp"
#include "gpefem/error.hpp"
#include "gpefem/mesh.hpp"
#include "gpefem/model.hpp"

namespace gpefem {

struct DiagnosticsRecord {
    long step = 0;
    double t = 0.0;
    double mass = 0.0;
    double energy = 0.0;
    int newton_iters = 0;
    double residual = 0.0;
};

/// ||u_h||_{L2} = sqrt(u^H M u).
inline double mass(const ComplexVector& u, const SparseComplexMatrix& M) {
    return std::sqrt(std::max(0.0, u.dot(M * u).real()));
}

/// beta/2 int |u_h|^4, exact for P1 with the degree-4 rule.
inline double quartic_energy(const FeSpace& V, const ComplexVector& u, double beta) {
    if (beta == 0.0) return 0.0;
    double s = 0.0;
    const auto& rule = V.rule();
    for (const auto& e : V.elements())
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const double a = std::norm(V.value(u, e, rule.points[q]));
            s += rule.weights[q] * e.area * a * a;
        }
    return 0.5 * beta * s;
}

/// Energy (u,u)_E + int kappa |u|^2 + beta/2 int |u|^4 through the assembled
/// matrices. For complex kappa only the real part is returned.
inline double energy(const FeSpace& V, const ComplexVector& u, const SparseComplexMatrix& E,
                     const SparseComplexMatrix& K, double beta) {
    return u.dot(E * u).real() + u.dot(K * u).real() + quartic_energy(V, u, beta);
}

/// Same functional by direct pointwise quadrature of the completed-square
/// integrand; shares no code with assemble_E.
inline double energy_direct(const FeSpace& V, const Coefficients& k, const ComplexVector& u) {
    const Complex I(0.0, 1.0);
    double s = 0.0;
    const auto& rule = V.rule();
    for (const auto& e : V.elements()) {
        const ComplexGradient g = V.gradient(u, e);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto& lam = rule.points[q];
            const Point x = e.map(lam);
            const MatrixRoots R = matrix_roots(k.A(x));
            const Eigen::Vector2d drift = R.inv_sqrt * k.b(x);
            const Complex uq = V.value(u, e, lam);
            const Eigen::Vector2cd z = R.sqrt.cast<Complex>() * g - (0.5 * I * uq) * drift.cast<Complex>();
            const double dens = std::norm(uq);
            s += rule.weights[q] * e.area *
                 (z.squaredNorm() + (k.c(x) - 0.25 * drift.squaredNorm()) * dens + k.kappa(x).real() * dens +
                  0.5 * k.beta * dens * dens);
        }
    }
    return s;
}

/// Legacy-VTK ASCII snapshot with point data density, re_u, im_u.
inline void export_vtk(const FeSpace& V, const ComplexVector& u, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path + " for writing");
    detail::write_vtk_geometry(os, V.mesh(), "gpefem field");
    const ComplexVector full = V.nodal_values(u);
    os << "POINT_DATA " << full.size() << '\n';
    const auto block = [&](const char* name, auto&& f) {
        os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
        for (Eigen::Index i = 0; i < full.size(); ++i) os << f(full[i]) << '\n';
    };
    block("density", [](Complex z) { return std::norm(z); });
    block("re_u", [](Complex z) { return z.real(); });
    block("im_u", [](Complex z) { return z.imag(); });
    if (!os) throw Error("write failed: " + path);
}

/// Minimal reader for files written by export_vtk: point coordinates and the
/// named point-data arrays.
struct VtkData {
    std::vector<Point> points;
    std::map<std::string, std::vector<double>> point_data;
};

inline VtkData read_vtk(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open " + path);
    VtkData d;
    std::string tok;
    while (is >> tok) {
        if (tok == "POINTS") {
            std::size_t n;
            std::string type;
            is >> n >> type;
            d.points.resize(n);
            for (auto& p : d.points) {
                double z;
                is >> p.x() >> p.y() >> z;
            }
        } else if (tok == "SCALARS") {
            std::string name, type, lt, def;
            int comps;
            is >> name >> type >> comps >> lt >> def;
            auto& v = d.point_data[name];
            v.resize(d.points.size());
            for (auto& x : v) is >> x;
        }
    }
    return d;
}

/// Coefficient dump: one line "node,x,y,re,im" per mesh node.
inline void write_field_csv(const FeSpace& V, const ComplexVector& u, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path + " for writing");
    os << "node,x,y,re,im\n" << std::setprecision(17);
    const ComplexVector full = V.nodal_values(u);
    for (std::size_t i = 0; i < V.mesh().num_nodes(); ++i) {
        const Point& p = V.mesh().nodes()[i];
        os << i << ',' << p.x() << ',' << p.y() << ',' << full[static_cast<Eigen::Index>(i)].real() << ','
           << full[static_cast<Eigen::Index>(i)].imag() << '\n';
    }
    if (!os) throw Error("write failed: " + path);
}

/// Reads a dump written by write_field_csv onto the same mesh.
inline ComplexVector read_field_csv(const FeSpace& V, const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open " + path);
    std::string line;
    std::getline(is, line);
    ComplexVector full = ComplexVector::Zero(static_cast<Eigen::Index>(V.mesh().num_nodes()));
    std::size_t count = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string f[5];
        for (auto& s : f)
            if (!std::getline(ls, s, ',')) throw Error(path + ": malformed line '" + line + "'");
        const std::size_t node = std::stoul(f[0]);
        if (node >= V.mesh().num_nodes()) throw Error(path + ": node index out of range");
        const Point& p = V.mesh().nodes()[node];
        const double x = std::stod(f[1]), y = std::stod(f[2]);
        if (std::abs(x - p.x()) > 1e-9 * (1 + std::abs(p.x())) || std::abs(y - p.y()) > 1e-9 * (1 + std::abs(p.y())))
            throw Error(path + ": node coordinates do not match the mesh");
        full[static_cast<Eigen::Index>(node)] = Complex(std::stod(f[3]), std::stod(f[4]));
        ++count;
    }
    if (count != V.mesh().num_nodes()) throw Error(path + ": node count does not match the mesh");
    ComplexVector u(V.n_dofs());
    for (int d = 0; d < V.n_dofs(); ++d) u[d] = full[V.dofmap().interior_nodes[d]];
    return u;
}

/// CSV diagnostics stream: step,t,mass,energy,newton_iters,residual.
class DiagnosticsCsv {
public:
    explicit DiagnosticsCsv(std::ostream& os) : os_(os) {
        os_ << "step,t,mass,energy,newton_iters,residual\n";
        os_ << std::setprecision(17);
    }
    void operator()(const DiagnosticsRecord& r) {
        os_ << r.step << ',' << r.t << ',' << r.mass << ',' << r.energy << ',' << r.newton_iters << ',' << r.residual
            << '\n';
    }

private:
    std::ostream& os_;
};

}  // namespace gpefem
