#include "dbarlab/solve.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace dbarlab {

Vec hermitian_cg(const SpMat& A, const Vec& b, const SolveOptions& opt, int* iterations) {
    Vec x = Vec::Zero(b.size());
    const double bn = b.norm();
    if (iterations) *iterations = 0;
    if (bn == 0.0) return x;
    Vec r = b, p = r;
    double rr = r.squaredNorm();
    const double stop = opt.tol * opt.tol * bn * bn;
    const long max_it = opt.max_iterations > 0 ? opt.max_iterations : 20L * std::max<long>(b.size(), 50);
    long it = 0;
    for (; it < max_it && rr > stop; ++it) {
        Vec ap = A * p;
        double pap = std::real(p.dot(ap));
        if (!(pap > 0.0)) break;
        double alpha = rr / pap;
        x += alpha * p;
        r -= alpha * ap;
        double rr_new = r.squaredNorm();
        p = r + (rr_new / rr) * p;
        rr = rr_new;
    }
    if (iterations) *iterations = static_cast<int>(it);
    // The recursive residual can drift; confirm with the true one.
    double true_res = (b - A * x).norm();
    if (!(true_res <= 10.0 * opt.tol * bn))
        throw SingularOperator("0 lies in the approximate spectrum of the operator: conjugate gradients reached "
                               "relative residual " +
                               std::to_string(true_res / bn) + " after " + std::to_string(it) + " iterations");
    return x;
}

SolveResult canonical_solve(const DbarOperators& ops, const Vec& g, const SolveOptions& opt) {
    if (g.size() != ops.Dbar.rows()) throw std::invalid_argument("right-hand side has the wrong length");
    const SpMat& D = ops.Dbar.matrix();
    const SpMat& Da = ops.Dadj.matrix();
    SpMat normal = D * Da;
    SolveResult out;
    if (g.norm() == 0.0) {
        out.solution = Vec::Zero(D.cols());
        return out;
    }
    Vec w;
    try {
        w = hermitian_cg(normal, g, opt, &out.iterations);
    } catch (const SingularOperator& e) {
        throw SingularOperator(std::string("0 in the approximate spectrum of the (0,1) box operator: Dbar Dadj is "
                                           "numerically singular (") +
                               e.what() + ")");
    }
    out.solution = Da * w;
    out.residual = (D * out.solution - g).norm();
    // Projection onto ker Dbar: v - Dadj (Dbar Dadj)^-1 Dbar v.
    Vec dv = D * out.solution;
    Vec w2 = hermitian_cg(normal, dv, opt);
    out.orthogonality_defect = (out.solution - Da * w2).norm();
    return out;
}

SingularValues solution_singular_values(const DbarOperators& ops, int k, const EigenOptions& opt,
                                        bool cross_check) {
    if (k < 1) throw std::invalid_argument("number of singular values must be at least 1");
    SparseOperator normal = assemble_normal(ops);
    EigenOptions eo = opt;
    eo.keep_vectors = false;
    SpectrumResult sr = smallest_eigenvalues(normal, k, eo);
    SingularValues out;
    out.converged = sr.converged;
    for (double lam : sr.eigenvalues) {
        if (!(lam > 0.0))
            throw SingularOperator("0 in the approximate spectrum of the (0,1) box operator: Dbar Dadj has eigenvalue " +
                                   std::to_string(lam));
        out.values.push_back(1.0 / std::sqrt(lam));
    }
    if (!cross_check) return out;

    // Power-type route: Krylov iteration (no shift) on T = S S* = Dadj N^2 Dbar,
    // N the inverse of Dbar Dadj, whose largest eigenvalues are sigma_j^2.
    ShiftedFactorization f(normal);
    f.factor(0.0);
    const SpMat& D = ops.Dbar.matrix();
    const SpMat& Da = ops.Dadj.matrix();
    EigenOptions po = opt;
    po.tol = 1e-10;
    po.seed = opt.seed ^ 0x5bd1e995ULL;
    po.keep_vectors = false;
    SpectrumResult pr = largest_eigenvalues([&](const Vec& x) { return Vec(Da * f.solve(f.solve(D * x))); },
                                            D.cols(), k, po);
    out.converged = out.converged && pr.converged;
    for (int i = 0; i < k; ++i) {
        out.power_values.push_back(std::sqrt(std::max(pr.eigenvalues[i], 0.0)));
        out.max_route_difference =
            std::max(out.max_route_difference, std::abs(out.power_values[i] - out.values[i]));
    }
    return out;
}

NeumannSolver::NeumannSolver(const SparseOperator& box01, double tol) : box_(box01) {
    cg_.tol = 1e-12;
    EigenOptions eo;
    eo.deflation_rounds = 0;
    SpectrumResult sr = smallest_eigenvalues(box_, 1, eo);
    lambda0_ = sr.eigenvalues.front();
    if (!(lambda0_ > tol))
        throw SingularOperator("box operator is not invertible at tolerance " + std::to_string(tol) +
                               ": lowest eigenvalue " + std::to_string(lambda0_) +
                               "; the hypothesis that the lowest Levi eigenvalue stays bounded away from 0 at "
                               "infinity fails on this grid");
}

Vec NeumannSolver::apply(const Vec& v) const {
    if (v.size() != box_.dim()) throw std::invalid_argument("vector has the wrong length for the box operator");
    return hermitian_cg(box_.matrix(), v, cg_);
}

Vec apply_neumann(const SparseOperator& box01, const Vec& v) { return NeumannSolver(box01).apply(v); }

}  // namespace dbarlab
