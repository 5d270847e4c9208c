#include "dbarlab/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <tuple>

namespace dbarlab {

namespace {

using Triplets = std::vector<Eigen::Triplet<cplx>>;
const cplx I1(0.0, 1.0);

SpMat from_triplets(Eigen::Index rows, Eigen::Index cols, const Triplets& t) {
    SpMat m(rows, cols);
    m.setFromTriplets(t.begin(), t.end());
    m.makeCompressed();
    return m;
}

void require_one_variable(const WeightSpec& w, const GridSpec& g, const char* what) {
    if (w.n != 1 || g.n != 1)
        throw UnsupportedDimension(std::string(what) + " is only defined for one complex variable (n = 1)");
}

void require_matching(const WeightSpec& w, const GridSpec& g) {
    if (w.n != g.n) throw std::invalid_argument("weight and grid have different complex dimensions");
}

void require_psh(const WeightSpec& w, const GridSpec& g) {
    if (w.certificate == PshCertificate::Failed) throw NonPlurisubharmonic("non-plurisubharmonic weight");
    if (w.certificate == PshCertificate::VerifiedOnSamples) return;
    LeviEvaluator ev(w);
    std::vector<double> pt(g.axes());
    for (std::size_t p = 0; p < g.size(); ++p) {
        g.point(p, pt.data());
        if (ev.lowest_eigenvalue(pt.data()) < -1e-12)
            throw NonPlurisubharmonic("non-plurisubharmonic weight (negative Levi eigenvalue on the grid)");
    }
}

}  // namespace

Eigen::VectorXd sample_on_grid(const Polynomial& p, const GridSpec& g) {
    CompiledPolynomial c(p.promoted(std::max<std::size_t>(p.num_vars(), g.axes())));
    Eigen::VectorXd out(static_cast<Eigen::Index>(g.size()));
    std::vector<double> pt(std::max<std::size_t>(p.num_vars(), g.axes()), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        g.point(i, pt.data());
        out[static_cast<Eigen::Index>(i)] = c(pt.data());
    }
    return out;
}

std::vector<DbarFlavours> assemble_dbar_flavours(const WeightSpec& w, const GridSpec& g) {
    require_matching(w, g);
    const auto M = static_cast<Eigen::Index>(g.size());
    const double h = g.h;
    std::vector<DbarFlavours> out;
    std::vector<double> pt(g.axes()), q(g.axes());
    for (int j = 0; j < w.n; ++j) {
        const int ax = 2 * j, ay = 2 * j + 1;
        CompiledPolynomial phx(w.phi.derivative(ax)), phy(w.phi.derivative(ay));
        const auto sx = static_cast<Eigen::Index>(g.stride(ax)), sy = static_cast<Eigen::Index>(g.stride(ay));
        Triplets tf, tb;
        tf.reserve(4 * M);
        tb.reserve(4 * M);
        for (Eigen::Index p = 0; p < M; ++p) {
            g.point(static_cast<std::size_t>(p), pt.data());
            const int ix = g.index_along(static_cast<std::size_t>(p), ax);
            const int iy = g.index_along(static_cast<std::size_t>(p), ay);
            // Each flavour is (1/2)[(dx + phi_x) + i (dy + phi_y)] on one-sided links.
            for (int dir : {+1, -1}) {
                Triplets& t = dir > 0 ? tf : tb;
                for (int axis : {ax, ay}) {
                    q = pt;
                    q[axis] += 0.5 * dir * h;
                    const double a = axis == ax ? phx(q.data()) : phy(q.data());
                    const cplx c = axis == ax ? cplx(0.5, 0.0) : cplx(0.0, 0.5);
                    const int i = axis == ax ? ix : iy;
                    const Eigen::Index s = axis == ax ? sx : sy;
                    // Link from p to p + dir*e: dir*(u(p+dir e) - u(p))/h + a (u(p) + u(p+dir e))/2.
                    t.emplace_back(p, p, c * (-dir / h + 0.5 * a));
                    const bool inside = dir > 0 ? i + 1 < g.N : i > 0;
                    if (inside) t.emplace_back(p, p + dir * s, c * (dir / h + 0.5 * a));
                }
            }
        }
        out.push_back({from_triplets(M, M, tf), from_triplets(M, M, tb)});
    }
    return out;
}

DbarOperators assemble_dbar(const WeightSpec& w, const GridSpec& g) {
    auto fl = assemble_dbar_flavours(w, g);
    const auto M = static_cast<Eigen::Index>(g.size());
    const double r = 1.0 / std::sqrt(2.0);
    Triplets t;
    for (int k = 0; k < w.n; ++k) {
        for (int f = 0; f < 2; ++f) {
            const SpMat& blk = f == 0 ? fl[k].forward : fl[k].backward;
            for (Eigen::Index row = 0; row < blk.outerSize(); ++row)
                for (SpMat::InnerIterator it(blk, row); it; ++it)
                    t.emplace_back(k * M + it.row(), f * M + it.col(), r * it.value());
        }
    }
    DbarOperators ops;
    ops.Dbar = SparseOperator(from_triplets(w.n * M, 2 * M, t), "Dbar");
    ops.Dadj = ops.Dbar.adjoint("Dadj");
    ops.grid_size = g.size();
    ops.n = w.n;
    return ops;
}

SpMat flavour_embedding(std::size_t grid_size) {
    const auto M = static_cast<Eigen::Index>(grid_size);
    const double r = 1.0 / std::sqrt(2.0);
    Triplets t;
    t.reserve(2 * M);
    for (Eigen::Index i = 0; i < M; ++i) {
        t.emplace_back(i, i, r);
        t.emplace_back(M + i, i, r);
    }
    return from_triplets(2 * M, M, t);
}

Vec flavour_merge(const Vec& v) {
    const Eigen::Index M = v.size() / 2;
    return (v.head(M) + v.tail(M)) / std::sqrt(2.0);
}

SpMat levi_coupling(const WeightSpec& w, const GridSpec& g, double scale) {
    require_matching(w, g);
    const auto M = static_cast<Eigen::Index>(g.size());
    Triplets t;
    std::vector<double> pt(g.axes());
    for (int k = 0; k < w.n; ++k) {
        for (int j = 0; j < w.n; ++j) {
            ComplexPolynomial m = mixed_wirtinger(w.phi, j, k);
            if (m.re.is_zero() && m.im.is_zero()) continue;
            CompiledPolynomial re(m.re), im(m.im);
            for (Eigen::Index p = 0; p < M; ++p) {
                g.point(static_cast<std::size_t>(p), pt.data());
                cplx v(scale * re(pt.data()), scale * im(pt.data()));
                if (v != cplx(0.0, 0.0)) t.emplace_back(k * M + p, j * M + p, v);
            }
        }
    }
    return from_triplets(w.n * M, w.n * M, t);
}

SparseOperator assemble_box(const WeightSpec& w, const GridSpec& g, int level) {
    if (level != 0 && level != 1) throw std::invalid_argument("box level must be 0 or 1");
    require_matching(w, g);
    require_psh(w, g);
    auto fl = assemble_dbar_flavours(w, g);
    const auto M = static_cast<Eigen::Index>(g.size());
    SpMat box00(M, M);
    for (const auto& f : fl) {
        SpMat fa = f.forward.adjoint(), ba = f.backward.adjoint();
        SpMat ff = fa * f.forward;
        SpMat bb = ba * f.backward;
        box00 += ff + bb;
    }
    box00 *= cplx(0.5, 0.0);
    if (level == 0) return SparseOperator::hermitian(box00, "box00", true);
    SpMat box01 = kron(identity_matrix(w.n), box00) + levi_coupling(w, g, 2.0);
    return SparseOperator::hermitian(box01, "box01", true);
}

namespace {

struct LinkPhases {
    std::vector<double> x;  // phase of the link p -> p + e_x
    std::vector<double> y;  // phase of the link p -> p + e_y
};

LinkPhases link_phases(const WeightSpec& w, const GridSpec& g) {
    auto f = derivative_fields(w);
    // Integrals of A along x and y, exact for polynomial A.
    CompiledPolynomial ia1(f.A[0].antiderivative(0)), ia2(f.A[1].antiderivative(1));
    LinkPhases lp;
    lp.x.resize(g.size());
    lp.y.resize(g.size());
    double pt[2], q[2];
    for (std::size_t p = 0; p < g.size(); ++p) {
        g.point(p, pt);
        q[0] = pt[0] + g.h;
        q[1] = pt[1];
        lp.x[p] = ia1(q) - ia1(pt);
        q[0] = pt[0];
        q[1] = pt[1] + g.h;
        lp.y[p] = ia2(q) - ia2(pt);
    }
    return lp;
}

}  // namespace

MagneticOperators assemble_magnetic(const WeightSpec& w, const GridSpec& g) {
    require_one_variable(w, g, "the magnetic Laplacian");
    const auto M = static_cast<Eigen::Index>(g.size());
    const double h2 = g.h * g.h;
    LinkPhases lp = link_phases(w, g);
    Triplets t;
    t.reserve(5 * M);
    for (Eigen::Index p = 0; p < M; ++p) {
        t.emplace_back(p, p, cplx(4.0 / h2, 0.0));
        const int ix = g.index_along(static_cast<std::size_t>(p), 0);
        const int iy = g.index_along(static_cast<std::size_t>(p), 1);
        if (ix + 1 < g.N) {
            cplx v = -std::polar(1.0, -lp.x[p]) / h2;
            t.emplace_back(p, p + g.N, v);
            t.emplace_back(p + g.N, p, std::conj(v));
        }
        if (iy + 1 < g.N) {
            cplx v = -std::polar(1.0, -lp.y[p]) / h2;
            t.emplace_back(p, p + 1, v);
            t.emplace_back(p + 1, p, std::conj(v));
        }
    }
    SpMat lap = from_triplets(M, M, t);
    MagneticOperators ops;
    ops.B = sample_on_grid(derivative_fields(w).laplacian, g);
    SpMat Bd = diagonal_matrix(ops.B.cast<cplx>());
    ops.minusDeltaA = SparseOperator(lap, "minusDeltaA", true, true);
    SpMat plus = lap + Bd, minus = lap - Bd;
    SpMat s = plus * cplx(0.25, 0.0);
    ops.S = SparseOperator(s, "S", true, true);
    ops.Pplus = SparseOperator(plus, "Pplus", true, false);
    ops.Pminus = SparseOperator(minus, "Pminus", true, false);
    return ops;
}

CovariantCentral assemble_covariant_central(const WeightSpec& w, const GridSpec& g) {
    require_one_variable(w, g, "the Dirac operator");
    const auto M = static_cast<Eigen::Index>(g.size());
    LinkPhases lp = link_phases(w, g);
    Triplets tx, ty;
    // Central difference at node q couples q - e and q + e, each transported
    // to q along its own link.
    for (Eigen::Index q = 0; q < M; ++q) {
        const int ix = g.index_along(static_cast<std::size_t>(q), 0);
        const int iy = g.index_along(static_cast<std::size_t>(q), 1);
        // (Pi_x u)(q) = -i [e^{-i th(q->q+e)} u(q+e) - e^{+i th(q-e->q)} u(q-e)] / (2h)
        if (ix + 1 < g.N) tx.emplace_back(q, q + g.N, cplx(0.0, -1.0) * std::polar(1.0, -lp.x[q]) / (2.0 * g.h));
        if (ix > 0) tx.emplace_back(q, q - g.N, cplx(0.0, 1.0) * std::polar(1.0, lp.x[q - g.N]) / (2.0 * g.h));
        if (iy + 1 < g.N) ty.emplace_back(q, q + 1, cplx(0.0, -1.0) * std::polar(1.0, -lp.y[q]) / (2.0 * g.h));
        if (iy > 0) ty.emplace_back(q, q - 1, cplx(0.0, 1.0) * std::polar(1.0, lp.y[q - 1]) / (2.0 * g.h));
    }
    return {from_triplets(M, M, tx), from_triplets(M, M, ty)};
}

SparseOperator assemble_dirac(const WeightSpec& w, const GridSpec& g) {
    if (pauli_anticommutator_defect() != 0.0) throw std::logic_error("Pauli matrix self-test failed");
    CovariantCentral pi = assemble_covariant_central(w, g);
    const auto M = static_cast<Eigen::Index>(g.size());
    // sigma1 Pi_x + sigma2 Pi_y = [[0, Pi_x - i Pi_y], [Pi_x + i Pi_y, 0]]
    SpMat upper = pi.Pix - I1 * pi.Piy;
    SpMat lower = upper.adjoint();
    Triplets t;
    for (Eigen::Index r = 0; r < M; ++r) {
        for (SpMat::InnerIterator it(upper, r); it; ++it) t.emplace_back(it.row(), M + it.col(), it.value());
        for (SpMat::InnerIterator it(lower, r); it; ++it) t.emplace_back(M + it.row(), it.col(), it.value());
    }
    return SparseOperator(from_triplets(2 * M, 2 * M, t), "Dirac", true, false);
}

double pauli_anticommutator_defect() {
    Eigen::Matrix2cd s1, s2;
    s1 << 0, 1, 1, 0;
    s2 << 0, -I1, I1, 0;
    return (s1 * s2 + s2 * s1).cwiseAbs().maxCoeff();
}

std::vector<double> decoupled_spectrum_synthesis(const std::vector<std::vector<double>>& lists, std::size_t k,
                                                 std::size_t count) {
    if (lists.empty()) throw std::invalid_argument("no per-variable spectra given");
    if (k >= lists.size()) throw std::out_of_range("distinguished variable index out of range");
    for (const auto& l : lists)
        if (l.empty()) throw std::invalid_argument("empty per-variable spectrum");
    auto sorted = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v;
    };
    std::vector<double> acc = sorted(lists[0]);
    std::size_t cap = count == 0 ? static_cast<std::size_t>(-1) : count;
    if (acc.size() > cap) acc.resize(cap);
    for (std::size_t j = 1; j < lists.size(); ++j) {
        std::vector<double> b = sorted(lists[j]);
        // Smallest sums of two sorted lists via a frontier heap.
        using Item = std::tuple<double, std::size_t, std::size_t>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
        for (std::size_t i = 0; i < acc.size(); ++i) heap.emplace(acc[i] + b[0], i, 0);
        std::vector<double> next;
        std::size_t total = acc.size() * b.size();
        std::size_t want = std::min(cap, total);
        while (next.size() < want) {
            auto [s, i, m] = heap.top();
            heap.pop();
            next.push_back(s);
            if (m + 1 < b.size()) heap.emplace(acc[i] + b[m + 1], i, m + 1);
        }
        acc = std::move(next);
    }
    return acc;
}

SparseOperator assemble_normal(const DbarOperators& ops) {
    SpMat n = ops.Dbar.matrix() * ops.Dadj.matrix();
    return SparseOperator::hermitian(n, "normal", true);
}

const std::vector<std::string>& operator_names() {
    static const std::vector<std::string> names = {"S",     "minusDeltaA", "Pplus",  "Pminus",
                                                   "box00", "box01",       "normal", "dirac"};
    return names;
}

SparseOperator build_named_operator(const std::string& name, const WeightSpec& w, const GridSpec& g) {
    if (name == "S") return assemble_magnetic(w, g).S;
    if (name == "minusDeltaA") return assemble_magnetic(w, g).minusDeltaA;
    if (name == "Pplus") return assemble_magnetic(w, g).Pplus;
    if (name == "Pminus") return assemble_magnetic(w, g).Pminus;
    if (name == "box00") return assemble_box(w, g, 0);
    if (name == "box01") return assemble_box(w, g, 1);
    if (name == "normal") return assemble_normal(assemble_dbar(w, g));
    if (name == "dirac") return assemble_dirac(w, g);
    throw std::invalid_argument("unknown operator '" + name + "'");
}

}  // namespace dbarlab
