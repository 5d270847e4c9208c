#pragma once

#include "dbarlab/grid.hpp"
#include "dbarlab/sparse_operator.hpp"
#include "dbarlab/weights.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dbarlab {

class DimensionOverCap : public std::length_error {
public:
    using std::length_error::length_error;
};

// Shifted operator is not positive definite where CG needs it to be.
class IndefiniteShift : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FactorizationFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Cluster {
    double center = 0.0;  // median member
    double low = 0.0;
    double high = 0.0;
    std::size_t count = 0;
};

struct SpectrumResult {
    std::vector<double> eigenvalues;  // ascending
    std::vector<double> residuals;    // ||A u - lambda u|| / ||u||
    double residual_bound = 0.0;      // converged pairs have residuals at most this
    std::vector<Cluster> clusters;
    bool converged = false;
    std::string operator_name;
    std::string method;
    double shift = 0.0;
    int restarts = 0;
    Eigen::MatrixXcd vectors;  // filled when requested, columns match eigenvalues
};

enum class InnerSolver { LDLT, CG };

struct EigenOptions {
    double tol = 1e-8;          // residual bound per pair, relative to a norm bound of A (absolute for callbacks)
    double cluster_tol = 0.05;  // relative grouping width
    int max_restarts = 300;
    int krylov_dim = 0;         // 0: chosen from k
    int deflation_rounds = 4;   // extra restarts from fresh vectors to catch degenerate copies
    bool shift_invert = true;
    InnerSolver inner = InnerSolver::LDLT;
    bool has_shift = false;     // otherwise chosen below the spectrum automatically
    double shift = 0.0;
    std::uint64_t seed = 20240601;
    bool keep_vectors = false;
};

// LDL^H factorization of A - sigma I with the sparsity analysis done once.
// The diagonal of D gives the inertia of A - sigma I.
class ShiftedFactorization {
public:
    explicit ShiftedFactorization(const SparseOperator& A);

    void factor(double sigma);
    double sigma() const { return sigma_; }
    Vec solve(const Vec& b) const;
    std::size_t negative_count() const;
    std::size_t zero_count() const;

private:
    using ColMat = Eigen::SparseMatrix<cplx, Eigen::ColMajor>;
    ColMat shifted_;
    std::vector<cplx*> diag_;
    std::vector<cplx> base_diag_;
    Eigen::SimplicialLDLT<ColMat, Eigen::Lower> ldlt_;
    double sigma_ = 0.0;
    bool factored_ = false;
};

// k smallest eigenpairs by thick-restart Lanczos (Krylov-Schur) with full
// reorthogonalization, normally applied to (A - sigma)^-1 with sigma below the
// spectrum. Non-convergence returns the partial result with converged=false.
SpectrumResult smallest_eigenvalues(const SparseOperator& A, int k, const EigenOptions& opt = {});

// k largest eigenvalues (descending) of a hermitian map given as a callback,
// by the same Krylov iteration without any shift.
SpectrumResult largest_eigenvalues(const std::function<Vec(const Vec&)>& op, Eigen::Index dim, int k,
                                   const EigenOptions& opt = {});

// In-place LAPACK eigendecomposition of a dense hermitian matrix (lower
// triangle referenced); eigenvalues ascending, eigenvectors overwrite `a`.
void dense_hermitian_eig(Eigen::MatrixXcd& a, Eigen::VectorXd& w, bool vectors);

// Full spectrum by dense diagonalization.
SpectrumResult dense_reference(const SparseOperator& A, std::size_t cap = 4096, double cluster_tol = 0.05,
                               bool keep_vectors = false);

// Number of eigenvalues strictly below E, from the inertia of A - E.
std::size_t count_below(const SparseOperator& A, double E);

// Consecutive grouping: a value joins the current cluster while it is within
// tol * max(|first member|, 1) of the first member.
std::vector<Cluster> group_clusters(const std::vector<double>& sorted_values, double tol);

// Locates dense eigenvalue clusters in [E_lo, E_hi] from inertia counts
// alone, without eigenvectors. Energies are scanned on a geometric grid of
// relative step `rel_width`; a window is dense when it holds at least
// `min_count` eigenvalues and `density_factor` times the median window count.
// Adjacent dense windows merge; each center is the median member, located by
// inertia bisection.
struct LevelScanOptions {
    double rel_width = 0.05;
    std::size_t min_count = 10;
    double density_factor = 3.0;
    double center_rel_precision = 1e-4;
};

std::vector<Cluster> find_level_clusters(const SparseOperator& A, double E_lo, double E_hi,
                                         const LevelScanOptions& opt = {});

struct CountingRow {
    double L = 0.0;
    std::size_t count = 0;
    double count_per_area = 0.0;  // count / L^2
};

struct CountingResult {
    std::string operator_name;
    double E = 0.0;
    std::vector<CountingRow> rows;
    bool monotone_in_L = true;
};

// N(E, L) for the named operator reassembled on [-L, L]^2 at the template's
// spacing, for each L of the strictly increasing sequence.
CountingResult counting_function(const std::string& operator_name, double E, const std::vector<double>& Ls,
                                 const WeightSpec& w, const GridSpec& grid_template);

}  // namespace dbarlab
