#pragma once

#include "dbarlab/discretize.hpp"
#include "dbarlab/eigensolve.hpp"

#include <stdexcept>
#include <vector>

namespace dbarlab {

// The normal operator Dbar Dadj (or the box operator handed to the Neumann
// solve) has 0 in its approximate spectrum at the requested tolerance.
class SingularOperator : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SolveOptions {
    double tol = 1e-10;  // relative residual of the inner CG solve
    int max_iterations = 0;  // 0: 20 * dimension
};

struct SolveResult {
    Vec solution;
    double residual = 0.0;               // ||Dbar v - g||
    double orthogonality_defect = 0.0;   // ||component of v in ker Dbar||
    int iterations = 0;
};

// Least-norm solution of Dbar v = g: v = Dadj w with (Dbar Dadj) w = g solved
// by conjugate gradients. ker Dbar is the orthogonal complement of the range
// of Dadj; the defect is measured by a second solve that projects v onto it.
SolveResult canonical_solve(const DbarOperators& ops, const Vec& g, const SolveOptions& opt = {});

// Conjugate gradients on a hermitian positive operator; throws
// SingularOperator when the iteration breaks down or stalls.
Vec hermitian_cg(const SpMat& A, const Vec& b, const SolveOptions& opt, int* iterations = nullptr);

struct SingularValues {
    std::vector<double> values;        // descending
    std::vector<double> power_values;  // the same values from an unshifted Krylov iteration on S S*
    double max_route_difference = 0.0;
    bool converged = false;
};

// k largest singular values of the canonical solution map, as inverse square
// roots of the k smallest eigenvalues of Dbar Dadj; cross-checked by
// iterating S S* = Dadj (Dbar Dadj)^-2 Dbar directly.
SingularValues solution_singular_values(const DbarOperators& ops, int k, const EigenOptions& opt = {},
                                        bool cross_check = true);

// Inverse of the (0,1) box operator. Construction computes the lowest
// eigenvalue and refuses operators that are not invertible at `tol`.
class NeumannSolver {
public:
    explicit NeumannSolver(const SparseOperator& box01, double tol = 1e-8);

    Vec apply(const Vec& v) const;
    double lowest_eigenvalue() const { return lambda0_; }

private:
    SparseOperator box_;
    double lambda0_ = 0.0;
    SolveOptions cg_;
};

Vec apply_neumann(const SparseOperator& box01, const Vec& v);

}  // namespace dbarlab
