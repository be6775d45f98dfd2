#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gpefem/error.hpp"

namespace gpefem {

using Point = Eigen::Vector2d;

/// Axis-aligned rectangle [x0,x1] x [y0,y1].
struct Rect {
    double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;

    double area() const { return (x1 - x0) * (y1 - y0); }
    double diameter() const { return std::hypot(x1 - x0, y1 - y0); }
    bool on_boundary(const Point& p) const {
        return p.x() == x0 || p.x() == x1 || p.y() == y0 || p.y() == y1;
    }
};

using Triangle = std::array<int, 3>;

/// Conforming triangulation of a rectangle. Immutable once built; use
/// Mesh::from_triangles to construct one from raw connectivity.
class Mesh {
public:
    static constexpr int dim = 2;

    static Mesh from_triangles(Rect bounds, std::vector<Point> nodes, std::vector<Triangle> triangles) {
        Mesh m;
        m.bounds_ = bounds;
        m.nodes_ = std::move(nodes);
        m.triangles_ = std::move(triangles);
        m.finalize();
        return m;
    }

    const std::vector<Point>& nodes() const { return nodes_; }
    const std::vector<Triangle>& triangles() const { return triangles_; }
    const std::vector<int>& boundary_nodes() const { return boundary_nodes_; }
    bool is_boundary(int node) const { return on_boundary_[node] != 0; }
    const std::vector<double>& h_per_element() const { return h_; }
    double h_min() const { return h_min_; }
    double h_max() const { return h_max_; }
    const Rect& bounds() const { return bounds_; }

    std::size_t num_nodes() const { return nodes_.size(); }
    std::size_t num_triangles() const { return triangles_.size(); }

    /// Signed area of triangle k (positive for counterclockwise orientation).
    double signed_area(std::size_t k) const {
        const auto& t = triangles_[k];
        const Point e1 = nodes_[t[1]] - nodes_[t[0]];
        const Point e2 = nodes_[t[2]] - nodes_[t[0]];
        return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
    }

    Point barycenter(std::size_t k) const {
        const auto& t = triangles_[k];
        return (nodes_[t[0]] + nodes_[t[1]] + nodes_[t[2]]) / 3.0;
    }

private:
    void finalize() {
        if (!(bounds_.x0 < bounds_.x1) || !(bounds_.y0 < bounds_.y1))
            throw InvalidDomain("degenerate rectangle bounds");
        on_boundary_.assign(nodes_.size(), 0);
        boundary_nodes_.clear();
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            if (bounds_.on_boundary(nodes_[i])) {
                on_boundary_[i] = 1;
                boundary_nodes_.push_back(static_cast<int>(i));
            }
        }
        h_.resize(triangles_.size());
        h_min_ = std::numeric_limits<double>::infinity();
        h_max_ = 0.0;
        for (std::size_t k = 0; k < triangles_.size(); ++k) {
            const auto& t = triangles_[k];
            for (int v : t)
                if (v < 0 || static_cast<std::size_t>(v) >= nodes_.size())
                    throw InvalidParameter("triangle references a node out of range");
            if (!(signed_area(k) > 0.0))
                throw InvalidParameter("triangle " + std::to_string(k) + " has non-positive signed area");
            double h = 0.0;
            for (int e = 0; e < 3; ++e)
                h = std::max(h, (nodes_[t[e]] - nodes_[t[(e + 1) % 3]]).norm());
            h_[k] = h;
            h_min_ = std::min(h_min_, h);
            h_max_ = std::max(h_max_, h);
        }
    }

    Rect bounds_;
    std::vector<Point> nodes_;
    std::vector<Triangle> triangles_;
    std::vector<int> boundary_nodes_;
    std::vector<std::uint8_t> on_boundary_;
    std::vector<double> h_;
    double h_min_ = 0.0, h_max_ = 0.0;
};

/// Structured triangulation with (nx+1)(ny+1) nodes numbered row by row.
/// Every cell is split along its lower-left to upper-right diagonal.
inline Mesh build_rect_mesh(const Rect& bounds, int nx, int ny) {
    if (!(bounds.x0 < bounds.x1) || !(bounds.y0 < bounds.y1))
        throw InvalidDomain("degenerate rectangle bounds");
    if (nx < 1 || ny < 1) throw InvalidParameter("nx and ny must be >= 1");

    std::vector<Point> nodes;
    nodes.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
    const double dx = (bounds.x1 - bounds.x0) / nx;
    const double dy = (bounds.y1 - bounds.y0) / ny;
    for (int j = 0; j <= ny; ++j) {
        // pin the last row/column to the bound so boundary detection is exact
        const double y = j == ny ? bounds.y1 : bounds.y0 + j * dy;
        for (int i = 0; i <= nx; ++i) {
            const double x = i == nx ? bounds.x1 : bounds.x0 + i * dx;
            nodes.emplace_back(x, y);
        }
    }
    std::vector<Triangle> tris;
    tris.reserve(static_cast<std::size_t>(2) * nx * ny);
    const auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int n00 = id(i, j), n10 = id(i + 1, j), n01 = id(i, j + 1), n11 = id(i + 1, j + 1);
            tris.push_back({n00, n10, n11});
            tris.push_back({n00, n11, n01});
        }
    }
    return Mesh::from_triangles(bounds, std::move(nodes), std::move(tris));
}

/// Red refinement: every triangle is split into four by its edge midpoints.
inline Mesh refine_uniform(const Mesh& mesh) {
    std::vector<Point> nodes = mesh.nodes();
    std::map<std::pair<int, int>, int> midpoint;
    const auto mid = [&](int a, int b) {
        const auto key = std::minmax(a, b);
        auto it = midpoint.find(key);
        if (it != midpoint.end()) return it->second;
        const int idx = static_cast<int>(nodes.size());
        nodes.push_back(0.5 * (mesh.nodes()[a] + mesh.nodes()[b]));
        midpoint.emplace(key, idx);
        return idx;
    };
    std::vector<Triangle> tris;
    tris.reserve(4 * mesh.num_triangles());
    for (const auto& t : mesh.triangles()) {
        const int a = t[0], b = t[1], c = t[2];
        const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
        tris.push_back({a, ab, ca});
        tris.push_back({ab, b, bc});
        tris.push_back({ca, bc, c});
        tris.push_back({ab, bc, ca});
    }
    return Mesh::from_triangles(mesh.bounds(), std::move(nodes), std::move(tris));
}

/// min over elements of diam(B_K)/diam(K), with B_K the inscribed ball.
inline double shape_regularity(const Mesh& mesh) {
    double rho = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < mesh.num_triangles(); ++k) {
        const auto& t = mesh.triangles()[k];
        double perimeter = 0.0;
        for (int e = 0; e < 3; ++e) perimeter += (mesh.nodes()[t[e]] - mesh.nodes()[t[(e + 1) % 3]]).norm();
        const double inradius = 2.0 * mesh.signed_area(k) / perimeter;
        rho = std::min(rho, 2.0 * inradius / mesh.h_per_element()[k]);
    }
    return rho;
}

/// Inverse-inequality factor |ln h_min|^{1/2} for d = 2.
inline double log_factor(const Mesh& mesh, int d = 2) {
    if (d == 3) throw NotImplemented("log_factor: d = 3 is not supported");
    if (d != 2) throw InvalidParameter("log_factor: dimension must be 2");
    if (mesh.h_min() >= 1.0) throw InvalidDomain("log_factor: requires h_min < 1 in two dimensions");
    return std::sqrt(std::abs(std::log(mesh.h_min())));
}

inline double log_factor(double h_min, int d = 2) {
    if (d == 3) throw NotImplemented("log_factor: d = 3 is not supported");
    if (d != 2) throw InvalidParameter("log_factor: dimension must be 2");
    if (h_min >= 1.0) throw InvalidDomain("log_factor: requires h_min < 1 in two dimensions");
    return std::sqrt(std::abs(std::log(h_min)));
}

namespace detail {

inline void write_vtk_geometry(std::ostream& os, const Mesh& mesh, const std::string& title) {
    os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << std::setprecision(17);
    os << "POINTS " << mesh.num_nodes() << " double\n";
    for (const auto& p : mesh.nodes()) os << p.x() << ' ' << p.y() << " 0\n";
    os << "CELLS " << mesh.num_triangles() << ' ' << 4 * mesh.num_triangles() << '\n';
    for (const auto& t : mesh.triangles()) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    os << "CELL_TYPES " << mesh.num_triangles() << '\n';
    for (std::size_t k = 0; k < mesh.num_triangles(); ++k) os << "5\n";
}

}  // namespace detail

/// Legacy-VTK ASCII export of the bare mesh.
inline void export_mesh_vtk(const Mesh& mesh, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path + " for writing");
    detail::write_vtk_geometry(os, mesh, "gpefem mesh");
    if (!os) throw Error("write failed: " + path);
}

}  // namespace gpefem
