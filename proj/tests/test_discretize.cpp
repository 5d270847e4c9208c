#include "doctest.h"

#include "dbarlab/discretize.hpp"
#include "dbarlab/test_fields.hpp"

#include <cmath>
#include <sstream>

using namespace dbarlab;

namespace {

// Plain 5-point stencil (-Laplacian) in one complex variable, used as an
// independent reference.
SpMat five_point(const GridSpec& g) {
    const auto M = static_cast<Eigen::Index>(g.size());
    std::vector<Eigen::Triplet<cplx>> t;
    const double h2 = g.h * g.h;
    for (Eigen::Index p = 0; p < M; ++p) {
        int ix = g.index_along(p, 0), iy = g.index_along(p, 1);
        t.emplace_back(p, p, 4.0 / h2);
        if (ix + 1 < g.N) t.emplace_back(p, p + g.N, -1.0 / h2);
        if (ix > 0) t.emplace_back(p, p - g.N, -1.0 / h2);
        if (iy + 1 < g.N) t.emplace_back(p, p + 1, -1.0 / h2);
        if (iy > 0) t.emplace_back(p, p - 1, -1.0 / h2);
    }
    SpMat m(M, M);
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

// Central first difference along one axis with Dirichlet truncation.
SpMat central_1d(int N, double h) {
    SpMat m(N, N);
    std::vector<Eigen::Triplet<cplx>> t;
    for (int i = 0; i < N; ++i) {
        if (i + 1 < N) t.emplace_back(i, i + 1, 1.0 / (2 * h));
        if (i > 0) t.emplace_back(i, i - 1, -1.0 / (2 * h));
    }
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

double max_abs(const SpMat& m) {
    double w = 0.0;
    for (Eigen::Index k = 0; k < m.outerSize(); ++k)
        for (SpMat::InnerIterator it(m, k); it; ++it) w = std::max(w, std::abs(it.value()));
    return w;
}

cplx dot(const Vec& a, const Vec& b) { return a.dot(b); }

}  // namespace

TEST_CASE("adjointness holds to rounding for random vectors") {
    FieldSampler fs(101);
    for (const char* src : {"abs2(z1)", "abs2(z1)^2", "0"}) {
        WeightSpec w = parse_weight(src);
        GridSpec g = GridSpec::make(1, 3.0, 0.15);
        auto ops = assemble_dbar(w, g);
        CHECK(ops.Dbar.rows() == static_cast<Eigen::Index>(g.size()));
        CHECK(ops.Dbar.cols() == static_cast<Eigen::Index>(2 * g.size()));
        for (int trial = 0; trial < 20; ++trial) {
            Vec u = fs.white_noise(ops.Dbar.cols()), v = fs.white_noise(ops.Dbar.rows());
            cplx lhs = dot(v, ops.Dbar.apply(u));
            cplx rhs = dot(ops.Dadj.apply(v), u);
            CHECK(std::abs(lhs - rhs) < 1e-13 * u.norm() * v.norm());
        }
    }
    WeightSpec w2 = parse_weight("abs2(z1)+abs2(z2)^2");
    GridSpec g2 = GridSpec::make(2, 1.0, 0.25);
    auto ops2 = assemble_dbar(w2, g2);
    for (int trial = 0; trial < 20; ++trial) {
        Vec u = fs.white_noise(ops2.Dbar.cols()), v = fs.white_noise(ops2.Dbar.rows());
        CHECK(std::abs(dot(v, ops2.Dbar.apply(u)) - dot(ops2.Dadj.apply(v), u)) < 1e-13 * u.norm() * v.norm());
    }
}

TEST_CASE("zero weight: Dbar is the plain dzbar") {
    GridSpec g = GridSpec::make(1, 2.0, 0.25);
    auto ops = assemble_dbar(parse_weight("0"), g);
    SpMat E = flavour_embedding(g.size());
    Vec zbar(g.size()), z(g.size());
    for (std::size_t p = 0; p < g.size(); ++p) {
        auto pt = g.point(p);
        zbar[p] = cplx(pt[0], -pt[1]);
        z[p] = cplx(pt[0], pt[1]);
    }
    Vec a = ops.Dbar.matrix() * (E * zbar);
    Vec b = ops.Dbar.matrix() * (E * z);
    for (std::size_t p = 0; p < g.size(); ++p) {
        if (g.boundary_distance(p) < 1) continue;
        CHECK(std::abs(a[p] - 1.0) < 1e-12);
        CHECK(std::abs(b[p]) < 1e-12);
    }
}

TEST_CASE("Dbar of the constant under |z|^2 approximates z") {
    for (double h : {0.2, 0.1}) {
        GridSpec g = GridSpec::make(1, 2.0, h);
        auto ops = assemble_dbar(parse_weight("abs2(z1)"), g);
        auto fl = assemble_dbar_flavours(parse_weight("abs2(z1)"), g);
        Vec one = Vec::Ones(g.size());
        Vec pair(2 * g.size());
        pair << one, one;
        Vec d = ops.Dbar.apply(pair) / std::sqrt(2.0);
        Vec df = fl[0].forward * one;
        for (std::size_t p = 0; p < g.size(); ++p) {
            if (g.boundary_distance(p) < 1) continue;
            auto pt = g.point(p);
            cplx zz(pt[0], pt[1]);
            CHECK(std::abs(d[p] - zz) <= h);
            CHECK(std::abs(df[p] - zz) <= h);
        }
    }
}

TEST_CASE("box01 minus box00 is half the laplacian of phi in one variable") {
    for (const char* src : {"abs2(z1)", "abs2(z1)^2", "x1^4 + abs2(z1)"}) {
        WeightSpec w = parse_weight(src);
        GridSpec g = GridSpec::make(1, 2.0, 0.2);
        SparseOperator b0 = assemble_box(w, g, 0), b1 = assemble_box(w, g, 1);
        Eigen::VectorXd lap = sample_on_grid(derivative_fields(w).laplacian, g);
        SpMat diff = b1.matrix() - b0.matrix() - diagonal_matrix((0.5 * lap).cast<cplx>());
        CHECK(max_abs(diff) <= 1e-12 * (1.0 + lap.cwiseAbs().maxCoeff()));
        CHECK(b0.is_hermitian());
        CHECK(b1.hermitian_defect() == 0.0);
        CHECK(b0.psd_claimed());
    }
}

TEST_CASE("zero weight: box00 is a quarter of the 5-point Laplacian away from the boundary") {
    GridSpec g = GridSpec::make(1, 2.0, 0.25);
    SparseOperator b0 = assemble_box(parse_weight("0"), g, 0);
    SpMat ref = five_point(g) * cplx(0.25, 0.0);
    SpMat diff = b0.matrix() - ref;
    for (Eigen::Index r = 0; r < diff.outerSize(); ++r) {
        if (g.boundary_distance(r) < 1) continue;
        for (SpMat::InnerIterator it(diff, r); it; ++it) CHECK(std::abs(it.value()) < 1e-12);
    }
    // Same for S, which has exact Dirichlet rows everywhere.
    auto mag = assemble_magnetic(parse_weight("0"), g);
    CHECK(max_abs(mag.S.matrix() - ref) < 1e-12);
    CHECK(max_abs(mag.Pplus.matrix() - mag.Pminus.matrix()) == 0.0);
}

TEST_CASE("decoupled weights give a block-diagonal box01") {
    WeightSpec w = parse_weight("abs2(z1)+abs2(z2)");
    GridSpec g = GridSpec::make(2, 1.0, 0.25);
    SparseOperator b0 = assemble_box(w, g, 0), b1 = assemble_box(w, g, 1);
    const auto M = static_cast<Eigen::Index>(g.size());
    for (Eigen::Index r = 0; r < b1.matrix().outerSize(); ++r)
        for (SpMat::InnerIterator it(b1.matrix(), r); it; ++it)
            CHECK((it.row() / M) == (it.col() / M));
    // Each diagonal block is box00 + 2 * d^2 phi/dz_k dzbar_k = box00 + 2.
    SpMat blk = b1.matrix().block(M, M, M, M);
    SpMat expect = b0.matrix() + identity_matrix(M) * cplx(2.0, 0.0);
    CHECK(max_abs(blk - expect) < 1e-12);
}

TEST_CASE("non-plurisubharmonic weights are refused") {
    WeightSpec w = parse_weight("x1^2 - 2*y1^2");
    GridSpec g = GridSpec::make(1, 1.0, 0.25);
    CHECK_THROWS_AS(assemble_box(w, g, 0), NonPlurisubharmonic);
    w.certificate = PshCertificate::Failed;
    CHECK_THROWS_WITH_AS(assemble_box(w, g, 1), "non-plurisubharmonic weight", NonPlurisubharmonic);
}

TEST_CASE("magnetic operators: exact algebra and hermiticity") {
    for (const char* src : {"abs2(z1)", "abs2(z1)^2", "x1^3*y1 + abs2(z1)^2"}) {
        WeightSpec w = parse_weight(src);
        GridSpec g = GridSpec::make(1, 2.0, 0.1);
        auto m = assemble_magnetic(w, g);
        // Off-diagonal parts are bitwise identical; the diagonals differ by 2B up
        // to the rounding of the two stored entries.
        SpMat diff = m.Pplus.matrix() - m.Pminus.matrix();
        const double diag_scale = 4.0 / (g.h * g.h) + m.B.cwiseAbs().maxCoeff();
        for (Eigen::Index r = 0; r < diff.outerSize(); ++r)
            for (SpMat::InnerIterator it(diff, r); it; ++it) {
                if (it.row() != it.col()) {
                    CHECK(it.value() == cplx(0.0, 0.0));
                } else {
                    CHECK(std::abs(it.value() - 2.0 * m.B[r]) <= 4e-16 * diag_scale);
                }
            }
        CHECK(m.minusDeltaA.hermitian_defect() == 0.0);
        CHECK(m.S.hermitian_defect() == 0.0);
        CHECK(m.Pplus.hermitian_defect() == 0.0);
        CHECK(m.Pminus.hermitian_defect() == 0.0);
        SpMat s4 = m.S.matrix() * cplx(4.0, 0.0) - m.Pplus.matrix();
        CHECK(max_abs(s4) < 1e-9);
    }
    CHECK_THROWS_AS(assemble_magnetic(parse_weight("abs2(z1)+abs2(z2)"), GridSpec::make(2, 1.0, 0.25)),
                    UnsupportedDimension);
}

TEST_CASE("Dirac operator: zero weight squares to the wide Laplacian exactly") {
    CHECK(pauli_anticommutator_defect() == 0.0);
    GridSpec g = GridSpec::make(1, 2.0, 0.25);
    SparseOperator D = assemble_dirac(parse_weight("0"), g);
    CHECK(D.hermitian_defect() == 0.0);
    SpMat c = central_1d(g.N, g.h);
    SpMat I = identity_matrix(g.N);
    SpMat dx = kron(c, I), dy = kron(I, c);
    SpMat wide = -(dx * dx + dy * dy);
    SpMat D2 = D.matrix() * D.matrix();
    const auto M = static_cast<Eigen::Index>(g.size());
    SpMat expect = kron(identity_matrix(2), wide);
    CHECK(max_abs(D2 - expect) <= 1e-12 * max_abs(expect));
    CHECK(D2.rows() == 2 * M);
    CHECK_THROWS_AS(assemble_dirac(parse_weight("abs2(z2)", 2), GridSpec::make(2, 1.0, 0.25)), UnsupportedDimension);
}

TEST_CASE("Dirac square approaches diag(P-, P+) under refinement") {
    WeightSpec w = parse_weight("abs2(z1)");
    std::vector<double> err;
    for (double h : {0.2, 0.1, 0.05}) {
        GridSpec g = GridSpec::make(1, 4.0, h);
        FieldSampler fs(5);
        FieldOptions opt;
        opt.support_radius = 1.0;
        Vec u1 = fs.smooth(g, opt), u2 = fs.smooth(g, opt);
        Vec u(2 * g.size());
        u << u1, u2;
        SparseOperator D = assemble_dirac(w, g);
        auto m = assemble_magnetic(w, g);
        Vec Du = D.apply(D.apply(u));
        Vec ref(2 * g.size());
        ref << m.Pminus.apply(u1), m.Pplus.apply(u2);
        err.push_back((Du - ref).norm() / u.norm());
    }
    MESSAGE("Dirac square deviation: " << err[0] << " " << err[1] << " " << err[2]);
    CHECK(err[1] < 0.6 * err[0]);
    CHECK(err[2] < 0.6 * err[1]);
}

TEST_CASE("gauge and magnetic pictures agree: 4 box00 ~ P- on smooth interior fields") {
    struct Case {
        const char* src;
        double L, support, h0;
    };
    // The quartic weight has |A| ~ 4|z|^3, so its fields are kept closer to the
    // origin and the grids are finer before the asymptotic rate shows.
    for (Case c : {Case{"abs2(z1)", 4.0, 1.0, 0.2}, Case{"abs2(z1)^2", 3.0, 0.5, 0.1}}) {
        WeightSpec w = parse_weight(c.src);
        std::vector<double> err;
        for (double h : {c.h0, c.h0 / 2, c.h0 / 4}) {
            GridSpec g = GridSpec::make(1, c.L, h);
            FieldSampler fs(9);
            FieldOptions opt;
            opt.support_radius = c.support;
            opt.min_width = 0.3;
            opt.max_width = 0.6;
            Vec u = fs.smooth(g, opt);
            auto m = assemble_magnetic(w, g);
            SparseOperator b0 = assemble_box(w, g, 0);
            err.push_back((4.0 * b0.apply(u) - m.Pminus.apply(u)).norm() / u.norm());
        }
        MESSAGE(std::string(c.src) << " gauge/magnetic deviation: " << err[0] << " " << err[1] << " " << err[2]);
        CHECK(err[1] < 0.6 * err[0]);
        CHECK(err[2] < 0.6 * err[1]);
    }
}

TEST_CASE("property: diamagnetic sandwich on random interior fields") {
    for (const char* src : {"abs2(z1)", "abs2(z1)^2", "0"}) {
        WeightSpec w = parse_weight(src);
        GridSpec g = GridSpec::make(1, 3.0, 0.1);
        auto m = assemble_magnetic(w, g);
        FieldSampler fs(21);
        FieldOptions opt;
        opt.support_radius = 1.0;
        const double ch = 10 * g.h * g.h;
        for (int trial = 0; trial < 50; ++trial) {
            Vec u = fs.smooth(g, opt);
            double nu = u.squaredNorm();
            double b = u.dot(m.B.cast<cplx>().cwiseProduct(u)).real();
            double lap = u.dot(m.minusDeltaA.apply(u)).real();
            double plus = u.dot(m.Pplus.apply(u)).real();
            double minus = u.dot(m.Pminus.apply(u)).real();
            CHECK(b >= 0.0);
            CHECK(lap <= plus);
            CHECK(plus <= 2 * lap + ch * nu);
            CHECK(minus >= -ch * nu);
        }
    }
}

TEST_CASE("decoupled spectrum synthesis") {
    std::vector<double> pminus = {0, 8, 16, 24, 32}, pplus = {8, 16, 24, 32};
    auto s = decoupled_spectrum_synthesis({pminus, pplus}, 1, 4);
    REQUIRE(s.size() == 4);
    CHECK(s[0] == 8);
    CHECK(s[1] == 16);
    CHECK(s[2] == 16);
    CHECK(s[3] == 24);
    auto one = decoupled_spectrum_synthesis({pplus}, 0, 0);
    CHECK(one == pplus);
    auto three = decoupled_spectrum_synthesis({{1, 5}, {2, 3}, {0.5, 9}}, 2, 1);
    CHECK(three[0] == doctest::Approx(1 + 2 + 0.5));
    CHECK_THROWS(decoupled_spectrum_synthesis({{1.0}, {}}, 0, 3));
    CHECK_THROWS(decoupled_spectrum_synthesis({}, 0, 3));
}

TEST_CASE("grid validation and triplet export") {
    CHECK_THROWS(GridSpec::make(1, 1.0, 0.3));
    CHECK_THROWS(GridSpec::make(1, 0.5, 0.25));
    CHECK_THROWS_AS(GridSpec::make(2, 8.0, 0.05, 1000000), std::length_error);
    GridSpec g = GridSpec::make(1, 1.0, 0.25);
    CHECK(g.N == 8);
    CHECK(g.coord(0) == doctest::Approx(-0.875));
    auto m = assemble_magnetic(parse_weight("abs2(z1)"), g);
    std::ostringstream os;
    m.S.export_triplets(os);
    std::istringstream is(os.str());
    long r, c;
    double re, im;
    long count = 0;
    while (is >> r >> c >> re >> im) ++count;
    CHECK(count == m.S.matrix().nonZeros());
}
