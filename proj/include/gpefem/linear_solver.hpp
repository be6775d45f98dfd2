#pragma once

#include <complex>
#include <memory>
#include <string>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "gpefem/error.hpp"

namespace gpefem {

enum class LinearSolverKind { Direct, Iterative };

inline LinearSolverKind parse_linear_solver_kind(const std::string& s) {
    if (s == "direct") return LinearSolverKind::Direct;
    if (s == "iterative") return LinearSolverKind::Iterative;
    throw InvalidParameter("unknown linear solver '" + s + "' (expected direct|iterative)");
}

/// Sparse solver wrapper: LU with COLAMD ordering, or BiCGSTAB with a
/// Jacobi preconditioner. The symbolic analysis is reused as long as the
/// sparsity pattern does not change.
template <typename Scalar>
class SparseSolver {
public:
    using Matrix = Eigen::SparseMatrix<Scalar, Eigen::ColMajor, int>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    explicit SparseSolver(LinearSolverKind kind = LinearSolverKind::Direct, double iterative_tol = 1e-13)
        : kind_(kind), iterative_tol_(iterative_tol) {}

    void factorize(const Matrix& A) {
        if (kind_ == LinearSolverKind::Direct) {
            if (!lu_ || A.rows() != rows_ || A.nonZeros() != nnz_) {
                lu_ = std::make_unique<Eigen::SparseLU<Matrix, Eigen::COLAMDOrdering<int>>>();
                lu_->analyzePattern(A);
                rows_ = A.rows();
                nnz_ = A.nonZeros();
            }
            lu_->factorize(A);
            if (lu_->info() != Eigen::Success)
                throw FactorizationError("sparse LU factorization failed: " + lu_->lastErrorMessage());
        } else {
            krylov_ = std::make_unique<Eigen::BiCGSTAB<Matrix, Eigen::DiagonalPreconditioner<Scalar>>>();
            krylov_->setTolerance(iterative_tol_);
            krylov_->setMaxIterations(std::max<Eigen::Index>(1000, 4 * A.rows()));
            krylov_->compute(A);
            if (krylov_->info() != Eigen::Success) throw FactorizationError("Krylov preconditioner setup failed");
        }
    }

    Vector solve(const Vector& rhs) const {
        if (kind_ == LinearSolverKind::Direct) {
            if (!lu_) throw FactorizationError("solve called before factorize");
            Vector x = lu_->solve(rhs);
            if (lu_->info() != Eigen::Success) throw FactorizationError("sparse LU solve failed");
            return x;
        }
        if (!krylov_) throw FactorizationError("solve called before factorize");
        Vector x = krylov_->solve(rhs);
        if (krylov_->info() != Eigen::Success) throw FactorizationError("BiCGSTAB did not converge");
        return x;
    }

    LinearSolverKind kind() const { return kind_; }

private:
    LinearSolverKind kind_;
    double iterative_tol_;
    Eigen::Index rows_ = -1, nnz_ = -1;
    std::unique_ptr<Eigen::SparseLU<Matrix, Eigen::COLAMDOrdering<int>>> lu_;
    std::unique_ptr<Eigen::BiCGSTAB<Matrix, Eigen::DiagonalPreconditioner<Scalar>>> krylov_;
};

}  // namespace gpefem
