#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "gpefem/error.hpp"
#include "gpefem/linear_solver.hpp"

namespace gpefem {

struct NewtonOptions {
    double tol = 1e-8;
    int max_iter = 50;
    LinearSolverKind linear_solver = LinearSolverKind::Direct;
    /// Halve the update while the residual norm grows (at most this many times).
    int max_backtracks = 8;
    /// Iterations taken even when the initial residual is already below tol
    /// (skipped only for an exactly zero residual).
    int min_iter = 0;
};

struct NewtonResult {
    Eigen::VectorXd x;
    int iterations = 0;
    std::vector<double> residual_norms;  // entry k: ||F(x_k)||_2, k = 0 is the initial guess
    double final_residual() const { return residual_norms.back(); }
};

/// Newton's method for F(x) = 0 in R^n with a sparse Jacobian. residual(x)
/// returns F(x); jacobian(x) returns dF/dx as a column-major sparse matrix
/// with a fixed pattern. A backtracking halving step is taken only when the
/// full update increases the residual norm.
///
/// If frozen is given it must hold a factorization of the (constant)
/// Jacobian; jacobian() is then never called. This is the affine case.
template <typename ResidualFn, typename JacobianFn>
NewtonResult newton_solve(ResidualFn&& residual, JacobianFn&& jacobian, Eigen::VectorXd x0,
                          const NewtonOptions& opt = {}, const SparseSolver<double>* frozen = nullptr) {
    if (!(opt.tol > 0.0)) throw InvalidParameter("newton_solve: tol must be positive");
    NewtonResult res;
    res.x = std::move(x0);
    Eigen::VectorXd F = residual(res.x);
    double norm = F.norm();
    res.residual_norms.push_back(norm);
    SparseSolver<double> solver(opt.linear_solver);
    const auto last = [&] { return std::vector<double>(res.x.data(), res.x.data() + res.x.size()); };
    while (norm > opt.tol || (res.iterations < opt.min_iter && norm > 0.0)) {
        if (res.iterations >= opt.max_iter)
            throw NonConvergence("Newton did not converge in " + std::to_string(opt.max_iter) +
                                     " iterations (residual " + std::to_string(norm) + ")",
                                 res.residual_norms, last());
        if (!std::isfinite(norm)) throw NonConvergence("Newton residual is not finite", res.residual_norms, last());
        if (!frozen) solver.factorize(jacobian(res.x));
        const Eigen::VectorXd dx = frozen ? frozen->solve(-F) : solver.solve(-F);
        double step = 1.0;
        Eigen::VectorXd x_new = res.x + dx;
        Eigen::VectorXd F_new = residual(x_new);
        double norm_new = F_new.norm();
        for (int k = 0; k < opt.max_backtracks && !(norm_new < norm); ++k) {
            step *= 0.5;
            x_new = res.x + step * dx;
            F_new = residual(x_new);
            norm_new = F_new.norm();
        }
        res.x = std::move(x_new);
        F = std::move(F_new);
        norm = norm_new;
        ++res.iterations;
        res.residual_norms.push_back(norm);
    }
    return res;
}

}  // namespace gpefem
