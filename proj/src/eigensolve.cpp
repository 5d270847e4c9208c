#include "dbarlab/eigensolve.hpp"

#include "dbarlab/discretize.hpp"

#include <Eigen/Dense>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <random>

namespace dbarlab {

ShiftedFactorization::ShiftedFactorization(const SparseOperator& A) {
    if (!A.is_hermitian()) throw std::invalid_argument(A.name() + ": eigensolver needs a hermitian operator");
    const Eigen::Index n = A.dim();
    std::vector<Eigen::Triplet<cplx>> t;
    t.reserve(static_cast<std::size_t>(A.matrix().nonZeros() + n));
    for (Eigen::Index r = 0; r < A.matrix().outerSize(); ++r)
        for (SpMat::InnerIterator it(A.matrix(), r); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
    // Explicit diagonal so that every shift reuses one pattern.
    for (Eigen::Index i = 0; i < n; ++i) t.emplace_back(i, i, cplx(0.0, 0.0));
    shifted_.resize(n, n);
    shifted_.setFromTriplets(t.begin(), t.end());
    shifted_.makeCompressed();
    diag_.resize(static_cast<std::size_t>(n));
    base_diag_.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        diag_[i] = &shifted_.coeffRef(i, i);
        base_diag_[i] = *diag_[i];
    }
    ldlt_.analyzePattern(shifted_);
}

void ShiftedFactorization::factor(double sigma) {
    // Without pivoting an exactly zero pivot can occur even when A - sigma is
    // regular; nudging the shift down by a few ulps of the operator scale
    // avoids it and changes counts only for eigenvalues within the nudge.
    double scale = 1.0;
    for (const cplx& d : base_diag_) scale = std::max(scale, std::abs(d));
    double s = sigma;
    for (int attempt = 0; attempt < 4; ++attempt) {
        for (std::size_t i = 0; i < diag_.size(); ++i) *diag_[i] = base_diag_[i] - s;
        ldlt_.factorize(shifted_);
        if (ldlt_.info() == Eigen::Success && zero_count() == 0) {
            sigma_ = s;
            factored_ = true;
            return;
        }
        s = sigma - std::pow(16.0, attempt) * 64.0 * 2.220446049250313e-16 * scale;
    }
    factored_ = false;
    throw FactorizationFailure("LDL factorization of the shifted operator failed at shift " + std::to_string(sigma));
}

Vec ShiftedFactorization::solve(const Vec& b) const {
    if (!factored_) throw std::logic_error("shifted operator not factored");
    return ldlt_.solve(b);
}

std::size_t ShiftedFactorization::negative_count() const {
    const auto d = ldlt_.vectorD();
    std::size_t c = 0;
    for (Eigen::Index i = 0; i < d.size(); ++i)
        if (std::real(d[i]) < 0.0) ++c;
    return c;
}

std::size_t ShiftedFactorization::zero_count() const {
    const auto d = ldlt_.vectorD();
    std::size_t c = 0;
    for (Eigen::Index i = 0; i < d.size(); ++i)
        if (std::real(d[i]) == 0.0) ++c;
    return c;
}

namespace {

using Apply = std::function<Vec(const Vec&)>;

class ComplexNormal {
public:
    explicit ComplexNormal(std::uint64_t seed) : rng_(seed) {}
    Vec draw(Eigen::Index n) {
        Vec v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = cplx(gauss(), gauss());
        return v;
    }

private:
    double unit() { return (static_cast<double>(rng_() >> 11) + 0.5) * (1.0 / 9007199254740992.0); }
    double gauss() { return std::sqrt(-2.0 * std::log(unit())) * std::cos(2.0 * M_PI * unit()); }
    std::mt19937_64 rng_;
};

void project_out(const Eigen::MatrixXcd& X, Vec& w) {
    if (X.cols() == 0) return;
    for (int pass = 0; pass < 2; ++pass) w -= X * (X.adjoint() * w);
}

// Orthonormal vector orthogonal to X and the first `cols` columns of V, or
// zero when the space is exhausted.
Vec fresh_direction(ComplexNormal& rng, const Eigen::MatrixXcd& X, const Eigen::MatrixXcd& V, Eigen::Index cols) {
    Vec w = rng.draw(V.rows());
    for (int pass = 0; pass < 2; ++pass) {
        project_out(X, w);
        if (cols > 0) w -= V.leftCols(cols) * (V.leftCols(cols).adjoint() * w);
    }
    double nw = w.norm();
    if (nw < 1e-10 * std::sqrt(static_cast<double>(V.rows()))) return Vec::Zero(V.rows());
    return w / nw;
}

struct PairSet {
    std::vector<double> values;
    std::vector<double> residuals;
    Eigen::MatrixXcd vectors;
    bool converged = false;
    int restarts = 0;
};

// Rayleigh quotient and explicit residual of a unit vector.
std::pair<double, double> rayleigh(const Apply& A, const Vec& u) {
    Vec au = A(u);
    double lam = std::real(u.dot(au));
    return {lam, (au - lam * u).norm()};
}

// Thick-restart Lanczos for the `nev` largest eigenvalues of the hermitian
// map `op`, restricted to the orthogonal complement of the columns of X. The
// convergence test uses explicit residuals with respect to `target`.
PairSet krylov_schur(Eigen::Index n, const Apply& target, const Apply& op, int nev, int m, const Eigen::MatrixXcd& X,
                     double tol, int max_restarts, ComplexNormal& rng) {
    Eigen::MatrixXcd V = Eigen::MatrixXcd::Zero(n, m + 1);
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(m + 1, m);
    V.col(0) = fresh_direction(rng, X, V, 0);
    int p = 0;
    PairSet out;
    for (int restart = 0; restart <= max_restarts; ++restart) {
        out.restarts = restart;
        for (int j = p; j < m; ++j) {
            Vec w = op(V.col(j));
            for (int pass = 0; pass < 2; ++pass) {
                project_out(X, w);
                Vec c = V.leftCols(j + 1).adjoint() * w;
                w -= V.leftCols(j + 1) * c;
                H.col(j).head(j + 1) += c;
            }
            double beta = w.norm();
            double scale = H.col(j).head(j + 1).norm();
            if (beta <= 1e-13 * std::max(scale, 1e-300)) {
                // Invariant subspace: continue with a new direction.
                H(j + 1, j) = 0.0;
                V.col(j + 1) = fresh_direction(rng, X, V, j + 1);
            } else {
                H(j + 1, j) = beta;
                V.col(j + 1) = w / beta;
            }
        }
        Eigen::MatrixXcd T = H.topRows(m);
        T = (0.5 * (T + T.adjoint())).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(T);
        // Descending order: wanted values first.
        Eigen::MatrixXcd Y = es.eigenvectors().rowwise().reverse();
        Eigen::VectorXd theta = es.eigenvalues().reverse();

        Eigen::MatrixXcd U = V.leftCols(m) * Y.leftCols(nev);
        out.values.assign(nev, 0.0);
        out.residuals.assign(nev, 0.0);
        bool all = true;
        for (int i = 0; i < nev; ++i) {
            Vec u = U.col(i);
            u.normalize();
            U.col(i) = u;
            auto [lam, res] = rayleigh(target, u);
            out.values[i] = lam;
            out.residuals[i] = res;
            if (!(res <= tol)) all = false;
        }
        out.vectors = U;
        if (all) {
            out.converged = true;
            return out;
        }
        if (restart == max_restarts) break;

        int keep = std::min(std::max(nev + (m - nev) / 2, nev + 1), m - 1);
        Eigen::RowVectorXcd b = H.row(m) * Y.leftCols(keep);
        Eigen::MatrixXcd Vk = V.leftCols(m) * Y.leftCols(keep);
        V.leftCols(keep) = Vk;
        V.col(keep) = V.col(m);
        V.rightCols(m - keep).setZero();
        H.setZero();
        for (int i = 0; i < keep; ++i) H(i, i) = theta[i];
        H.row(keep).head(keep) = b;
        p = keep;
    }
    return out;
}

Vec conjugate_gradient(const SpMat& A, double sigma, const Vec& b) {
    Vec x = Vec::Zero(b.size());
    Vec r = b, p = r;
    double rr = r.squaredNorm();
    const double stop = 1e-28 * std::max(rr, 1e-300);
    const Eigen::Index max_it = std::max<Eigen::Index>(20 * b.size(), 1000);
    for (Eigen::Index it = 0; it < max_it && rr > stop; ++it) {
        Vec ap = A * p - sigma * p;
        double pap = std::real(p.dot(ap));
        if (!(pap > 0.0))
            throw IndefiniteShift("conjugate gradients broke down: shifted operator is not positive definite");
        double alpha = rr / pap;
        x += alpha * p;
        r -= alpha * ap;
        double rr_new = r.squaredNorm();
        p = r + (rr_new / rr) * p;
        rr = rr_new;
    }
    return x;
}

double gershgorin_lower_bound(const SpMat& A) {
    double lo = INFINITY;
    for (Eigen::Index r = 0; r < A.outerSize(); ++r) {
        double d = 0.0, off = 0.0;
        for (SpMat::InnerIterator it(A, r); it; ++it) {
            if (it.col() == r)
                d = std::real(it.value());
            else
                off += std::abs(it.value());
        }
        lo = std::min(lo, d - off);
    }
    return A.rows() == 0 ? 0.0 : lo;
}

// Largest absolute row sum, an upper bound for the spectral norm.
double row_sum_norm(const SpMat& A) {
    double hi = 0.0;
    for (Eigen::Index r = 0; r < A.outerSize(); ++r) {
        double sum = 0.0;
        for (SpMat::InnerIterator it(A, r); it; ++it) sum += std::abs(it.value());
        hi = std::max(hi, sum);
    }
    return hi;
}

void sort_pairs(PairSet& s, bool ascending) {
    std::vector<std::size_t> idx(s.values.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return ascending ? s.values[a] < s.values[b] : s.values[a] > s.values[b];
    });
    PairSet o;
    o.converged = s.converged;
    o.restarts = s.restarts;
    o.vectors.resize(s.vectors.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
        o.values.push_back(s.values[idx[i]]);
        o.residuals.push_back(s.residuals[idx[i]]);
        o.vectors.col(static_cast<Eigen::Index>(i)) = s.vectors.col(static_cast<Eigen::Index>(idx[i]));
    }
    s = std::move(o);
}

// k extremal eigenpairs of the hermitian map `target` (smallest when
// ascending, else largest), driven by Krylov spaces of `op` whose largest
// eigenvalues correspond to the wanted ones.
PairSet extremal_pairs(Eigen::Index n, const Apply& target, const Apply& op, bool ascending, int k,
                       const EigenOptions& opt, ComplexNormal& rng) {
    auto krylov_dim = [&](int want, Eigen::Index avail) {
        int m = opt.krylov_dim > 0 ? opt.krylov_dim : std::max(2 * want + 20, 40);
        m = std::max(m, want + 2);
        return static_cast<int>(std::min<Eigen::Index>(m, avail));
    };
    PairSet cur;
    int m = krylov_dim(k, n);
    if (m <= k + 1) {
        // Tiny operators: the whole space fits in the Krylov basis.
        Eigen::MatrixXcd D(n, n);
        for (Eigen::Index j = 0; j < n; ++j) D.col(j) = target(Vec::Unit(n, j));
        D = (0.5 * (D + D.adjoint())).eval();
        Eigen::VectorXd ev;
        dense_hermitian_eig(D, ev, true);
        for (int i = 0; i < k; ++i) {
            Eigen::Index c = ascending ? i : n - 1 - i;
            Vec u = D.col(c);
            auto [lam, r] = rayleigh(target, u);
            cur.values.push_back(lam);
            cur.residuals.push_back(r);
        }
        cur.vectors.resize(n, k);
        for (int i = 0; i < k; ++i) cur.vectors.col(i) = D.col(ascending ? i : n - 1 - i);
        cur.converged = true;
        return cur;
    }
    Eigen::MatrixXcd none(n, 0);
    cur = krylov_schur(n, target, op, k, m, none, opt.tol, opt.max_restarts, rng);
    sort_pairs(cur, ascending);
    // Fresh starts orthogonal to the found pairs catch copies of degenerate
    // eigenvalues that a single Krylov space cannot see.
    for (int round = 0; cur.converged && round < opt.deflation_rounds; ++round) {
        Eigen::Index avail = n - k;
        int want = static_cast<int>(std::min<Eigen::Index>(k, avail));
        if (want < 1) break;
        int m2 = krylov_dim(want, avail);
        if (m2 <= want + 1) break;
        PairSet extra = krylov_schur(n, target, op, want, m2, cur.vectors, opt.tol, opt.max_restarts, rng);
        cur.restarts += extra.restarts;
        if (!extra.converged) break;
        const double kth = cur.values.back();
        bool improved = false;
        for (double v : extra.values)
            if (ascending ? v < kth - 10.0 * opt.tol : v > kth + 10.0 * opt.tol) improved = true;
        if (!improved) break;
        PairSet merged;
        merged.converged = true;
        merged.restarts = cur.restarts;
        merged.values = cur.values;
        merged.residuals = cur.residuals;
        merged.values.insert(merged.values.end(), extra.values.begin(), extra.values.end());
        merged.residuals.insert(merged.residuals.end(), extra.residuals.begin(), extra.residuals.end());
        merged.vectors.resize(n, cur.vectors.cols() + extra.vectors.cols());
        merged.vectors << cur.vectors, extra.vectors;
        sort_pairs(merged, ascending);
        merged.values.resize(k);
        merged.residuals.resize(k);
        merged.vectors = merged.vectors.leftCols(k).eval();
        cur = std::move(merged);
    }
    return cur;
}

}  // namespace

SpectrumResult smallest_eigenvalues(const SparseOperator& A, int k, const EigenOptions& opt) {
    if (!A.is_hermitian()) throw std::invalid_argument(A.name() + ": eigensolver needs a hermitian operator");
    if (k < 1) throw std::invalid_argument("number of eigenvalues must be at least 1");
    const Eigen::Index n = A.dim();
    if (k > n) throw std::invalid_argument("more eigenvalues requested than the operator dimension");
    const SpMat& M = A.matrix();

    SpectrumResult res;
    res.operator_name = A.name();
    ComplexNormal rng(opt.seed);

    Apply op;
    std::unique_ptr<ShiftedFactorization> fact;
    if (opt.shift_invert) {
        const double gersh = gershgorin_lower_bound(M);
        double sigma = opt.has_shift ? opt.shift : A.psd_claimed() ? -1e-2 : gersh - 1e-2;
        if (opt.inner == InnerSolver::LDLT) {
            fact = std::make_unique<ShiftedFactorization>(A);
            fact->factor(sigma);
            if (!opt.has_shift && fact->negative_count() > 0) {
                sigma = gersh - 1e-2;
                fact->factor(sigma);
            }
            if (fact->negative_count() > 0)
                throw std::invalid_argument("shift " + std::to_string(sigma) +
                                            " lies inside the spectrum; smallest eigenvalues need a shift below it");
            if (!opt.has_shift) {
                // A shift far below a degenerate low level resolves it slowly.
                // A few restarts give a Rayleigh quotient, which bounds the
                // lowest eigenvalue from above; the shift then moves just below
                // it whenever the inertia shows nothing lies underneath.
                EigenOptions pre_opt = opt;
                pre_opt.tol = opt.tol * std::max(1.0, row_sum_norm(M));
                pre_opt.deflation_rounds = 0;
                pre_opt.max_restarts = 5;
                ComplexNormal pre_rng(opt.seed + 1);
                PairSet pre = extremal_pairs(
                    n, [&M](const Vec& v) { return Vec(M * v); },
                    [f = fact.get()](const Vec& v) { return f->solve(v); }, true, 1, pre_opt, pre_rng);
                const double top = pre.values.front();
                double delta = 5e-3 * std::max(1.0, std::abs(top));
                for (int attempt = 0; attempt < 6 && top - delta > sigma; ++attempt, delta *= 4) {
                    fact->factor(top - delta);
                    if (fact->negative_count() == 0) {
                        sigma = top - delta;
                        break;
                    }
                }
                if (fact->sigma() != sigma) fact->factor(sigma);
            }
            res.method = "krylov-schur, shift-invert (LDL)";
            op = [f = fact.get()](const Vec& v) { return f->solve(v); };
        } else {
            // No factorization here: a shift inside the spectrum surfaces as a
            // CG breakdown.
            res.method = "krylov-schur, shift-invert (CG)";
            op = [&M, sigma](const Vec& v) { return conjugate_gradient(M, sigma, v); };
        }
        res.shift = sigma;
    } else {
        res.method = "krylov-schur";
        op = [&M](const Vec& v) { return Vec(-(M * v)); };
    }

    // Backward-error test: an absolute bound would sit below the rounding
    // floor of shift-invert once the norm of A is large.
    EigenOptions scaled = opt;
    scaled.tol = opt.tol * std::max(1.0, row_sum_norm(M));
    res.residual_bound = scaled.tol;
    PairSet cur = extremal_pairs(n, [&M](const Vec& v) { return Vec(M * v); }, op, true, k, scaled, rng);
    res.eigenvalues = cur.values;
    res.residuals = cur.residuals;
    res.restarts = cur.restarts;
    res.converged = cur.converged;
    // Re-check every reported pair against its own bound.
    for (int i = 0; i < k && res.converged; ++i) {
        Vec au = M * cur.vectors.col(i);
        double r = (au - cur.values[i] * cur.vectors.col(i)).norm();
        res.residuals[i] = r;
        if (!(r <= scaled.tol)) res.converged = false;
    }
    if (opt.keep_vectors) res.vectors = cur.vectors;
    res.clusters = group_clusters(res.eigenvalues, opt.cluster_tol);
    return res;
}

void dense_hermitian_eig(Eigen::MatrixXcd& a, Eigen::VectorXd& w, bool vectors) {
    const auto n = static_cast<lapack_int>(a.rows());
    if (a.cols() != a.rows()) throw std::invalid_argument("dense eigensolve needs a square matrix");
    w.resize(n);
    if (n == 0) return;
    lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, vectors ? 'V' : 'N', 'L', n, a.data(), n, w.data());
    if (info != 0) throw std::runtime_error("dense hermitian eigensolve failed (zheevd info " + std::to_string(info) + ")");
}

SpectrumResult largest_eigenvalues(const std::function<Vec(const Vec&)>& op, Eigen::Index dim, int k,
                                   const EigenOptions& opt) {
    if (k < 1 || k > dim) throw std::invalid_argument("number of eigenvalues must lie in [1, dimension]");
    ComplexNormal rng(opt.seed);
    PairSet cur = extremal_pairs(dim, op, op, false, k, opt, rng);
    SpectrumResult res;
    res.operator_name = "callback";
    res.method = "krylov-schur";
    res.eigenvalues = cur.values;
    res.residuals = cur.residuals;
    res.converged = cur.converged;
    res.restarts = cur.restarts;
    res.residual_bound = opt.tol;
    if (opt.keep_vectors) res.vectors = cur.vectors;
    return res;
}

SpectrumResult dense_reference(const SparseOperator& A, std::size_t cap, double cluster_tol, bool keep_vectors) {
    if (!A.is_hermitian()) throw std::invalid_argument(A.name() + ": dense reference needs a hermitian operator");
    if (static_cast<std::size_t>(A.dim()) > cap)
        throw DimensionOverCap(A.name() + ": dimension " + std::to_string(A.dim()) + " exceeds the dense cap " +
                               std::to_string(cap));
    Eigen::MatrixXcd Z = A.matrix().toDense();
    Eigen::VectorXd ev;
    dense_hermitian_eig(Z, ev, true);
    SpectrumResult res;
    res.operator_name = A.name();
    res.method = "dense";
    res.converged = true;
    res.eigenvalues.assign(ev.data(), ev.data() + ev.size());
    for (Eigen::Index i = 0; i < Z.cols(); ++i) {
        Vec z = Z.col(i);
        res.residuals.push_back((A.matrix() * z - ev[i] * z).norm());
    }
    if (keep_vectors) res.vectors = std::move(Z);
    res.clusters = group_clusters(res.eigenvalues, cluster_tol);
    return res;
}

std::size_t count_below(const SparseOperator& A, double E) {
    ShiftedFactorization f(A);
    f.factor(E);
    return f.negative_count();
}

std::vector<Cluster> group_clusters(const std::vector<double>& v, double tol) {
    std::vector<Cluster> out;
    std::size_t i = 0;
    while (i < v.size()) {
        std::size_t j = i + 1;
        const double width = tol * std::max(std::abs(v[i]), 1.0);
        while (j < v.size() && v[j] - v[i] <= width) ++j;
        Cluster c;
        c.low = v[i];
        c.high = v[j - 1];
        c.count = j - i;
        c.center = v[i + (j - i - 1) / 2];
        out.push_back(c);
        i = j;
    }
    return out;
}

std::vector<Cluster> find_level_clusters(const SparseOperator& A, double E_lo, double E_hi,
                                         const LevelScanOptions& opt) {
    if (!(E_lo > 0.0) || !(E_hi > E_lo)) throw std::invalid_argument("level scan needs 0 < E_lo < E_hi");
    if (!(opt.rel_width > 0.0)) throw std::invalid_argument("level scan width must be positive");
    ShiftedFactorization f(A);
    auto count = [&](double E) {
        f.factor(E);
        return f.negative_count();
    };
    std::vector<double> e;
    for (double x = E_lo; x < E_hi * (1.0 + opt.rel_width); x *= 1.0 + opt.rel_width) e.push_back(x);
    std::vector<std::size_t> c;
    for (double x : e) c.push_back(count(x));
    const std::size_t W = e.size() - 1;
    std::vector<std::size_t> win(W);
    for (std::size_t i = 0; i < W; ++i) win[i] = c[i + 1] - c[i];
    std::vector<std::size_t> sorted = win;
    std::sort(sorted.begin(), sorted.end());
    const double median = W ? static_cast<double>(sorted[W / 2]) : 0.0;
    const double threshold = std::max(static_cast<double>(opt.min_count), opt.density_factor * median);

    std::vector<Cluster> out;
    std::size_t i = 0;
    while (i < W) {
        if (static_cast<double>(win[i]) < threshold) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < W && static_cast<double>(win[j + 1]) >= threshold) ++j;
        Cluster cl;
        cl.low = e[i];
        cl.high = e[j + 1];
        cl.count = c[j + 1] - c[i];
        // The median member is the target-th eigenvalue overall.
        const std::size_t target = c[i] + (cl.count + 1) / 2;
        double lo = cl.low, hi = cl.high;
        while (hi - lo > opt.center_rel_precision * hi) {
            double mid = 0.5 * (lo + hi);
            if (count(mid) >= target)
                hi = mid;
            else
                lo = mid;
        }
        cl.center = 0.5 * (lo + hi);
        out.push_back(cl);
        i = j + 1;
    }
    return out;
}

CountingResult counting_function(const std::string& operator_name, double E, const std::vector<double>& Ls,
                                 const WeightSpec& w, const GridSpec& grid_template) {
    if (Ls.empty()) throw std::invalid_argument("empty L sequence");
    for (std::size_t i = 1; i < Ls.size(); ++i)
        if (!(Ls[i] > Ls[i - 1])) throw std::invalid_argument("L sequence must be strictly increasing");
    CountingResult out;
    out.operator_name = operator_name;
    out.E = E;
    for (double L : Ls) {
        GridSpec g = GridSpec::make(grid_template.n, L, grid_template.h);
        SparseOperator A = build_named_operator(operator_name, w, g);
        CountingRow row;
        row.L = L;
        row.count = count_below(A, E);
        row.count_per_area = static_cast<double>(row.count) / (L * L);
        if (!out.rows.empty() && row.count < out.rows.back().count) out.monotone_in_L = false;
        out.rows.push_back(row);
    }
    return out;
}

}  // namespace dbarlab
