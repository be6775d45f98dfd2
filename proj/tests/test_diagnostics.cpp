#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "gpefem/assembly.hpp"
#include "gpefem/diagnostics.hpp"
#include "gpefem/mesh.hpp"
#include "gpefem/model.hpp"

using namespace gpefem;

namespace {

ComplexVector random_field(int n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d;
    ComplexVector u(n);
    for (auto& z : u) z = Complex(d(rng), d(rng));
    return u;
}

std::filesystem::path tmp(const std::string& name) { return std::filesystem::temp_directory_path() / name; }

}  // namespace

TEST(Mass, Examples) {
    FeSpace V(build_rect_mesh({0, 2, 0, 3}, 4, 6), triangle_rule_degree4(), false);
    const SparseComplexMatrix M = assemble_mass(V);
    EXPECT_EQ(mass(ComplexVector::Zero(V.n_dofs()), M), 0.0);
    const Complex c0(0.6, -0.8 * 2);
    EXPECT_NEAR(mass(ComplexVector::Constant(V.n_dofs(), c0), M), std::abs(c0) * std::sqrt(6.0), 1e-13);
    ComplexVector u = random_field(V.n_dofs(), 3);
    u /= mass(u, M);
    EXPECT_NEAR(mass(u, M), 1.0, 1e-14);
    EXPECT_NEAR(mass(std::exp(Complex(0, 1.234)) * u, M), 1.0, 1e-14);
}

TEST(Energy, ReducesToEnergyNorm) {
    const Coefficients k = gpe_rotating(0.8, harmonic_potential(1, 1), 0.0);
    FeSpace V(build_rect_mesh({-2, 2, -2, 2}, 8, 8));
    const SparseComplexMatrix E = assemble_E(V, k);
    const ComplexVector u = random_field(V.n_dofs(), 5);
    EXPECT_NEAR(energy(V, u, E, assemble_kappa(V, k), 0.0), u.dot(E * u).real(), 1e-12);
}

TEST(Energy, QuarticTermOfConstantField) {
    FeSpace V(build_rect_mesh({0, 1, 0, 2}, 3, 5), triangle_rule_degree4(), false);
    const ComplexVector u = ComplexVector::Constant(V.n_dofs(), Complex(0, 2));
    EXPECT_NEAR(quartic_energy(V, u, 3.0), 0.5 * 3.0 * 16.0 * 2.0, 1e-12);
    EXPECT_EQ(quartic_energy(V, u, 0.0), 0.0);
}

TEST(Energy, MatrixAndDirectQuadratureAgree) {
    const Coefficients k = gpe_rotating(0.8, harmonic_potential(0.9, 1.1), 100.0);
    FeSpace V(build_rect_mesh({-6, 6, -6, 6}, 16, 16));
    for (unsigned s : {1u, 2u, 3u}) {
        const ComplexVector u = random_field(V.n_dofs(), s) * 0.1;
        const double e1 = energy(V, u, assemble_E(V, k), assemble_kappa(V, k), k.beta);
        const double e2 = energy_direct(V, k, u);
        EXPECT_NEAR(e1, e2, 1e-10 * std::abs(e1));
    }
}

TEST(Vtk, RoundTrip) {
    FeSpace V(build_rect_mesh({-1, 1, 0, 1}, 4, 2));
    const ComplexVector u = random_field(V.n_dofs(), 9);
    const auto p = tmp("gpefem_diag_test.vtk");
    export_vtk(V, u, p.string());
    const VtkData d = read_vtk(p.string());
    ASSERT_EQ(d.points.size(), V.mesh().num_nodes());
    const ComplexVector full = V.nodal_values(u);
    for (std::size_t i = 0; i < d.points.size(); ++i) {
        EXPECT_NEAR((d.points[i] - V.mesh().nodes()[i]).norm(), 0.0, 1e-12);
        const Complex z = full[static_cast<Eigen::Index>(i)];
        EXPECT_NEAR(d.point_data.at("re_u")[i], z.real(), 1e-12);
        EXPECT_NEAR(d.point_data.at("im_u")[i], z.imag(), 1e-12);
        EXPECT_NEAR(d.point_data.at("density")[i], std::norm(z), 1e-12);
    }
    std::filesystem::remove(p);
}

TEST(FieldCsv, RoundTripIsExact) {
    FeSpace V(build_rect_mesh({-1, 1, 0, 1}, 5, 3));
    const ComplexVector u = random_field(V.n_dofs(), 11);
    const auto p = tmp("gpefem_diag_test.csv");
    write_field_csv(V, u, p.string());
    EXPECT_EQ(read_field_csv(V, p.string()), u);
    FeSpace other(build_rect_mesh({-1, 1, 0, 1}, 6, 3));
    EXPECT_THROW(read_field_csv(other, p.string()), Error);
    std::filesystem::remove(p);
    EXPECT_THROW(read_field_csv(V, p.string()), Error);
}

TEST(DiagnosticsCsv, Format) {
    std::ostringstream os;
    DiagnosticsCsv sink(os);
    sink({3, 0.3, 1.0, 2.5, 4, 1e-9});
    EXPECT_EQ(os.str(), "step,t,mass,energy,newton_iters,residual\n3,0.29999999999999999,1,2.5,4,1.0000000000000001e-09\n");
}
