#include "doctest.h"

#include "dbarlab/discretize.hpp"
#include "dbarlab/eigensolve.hpp"

#include <algorithm>
#include <cmath>

using namespace dbarlab;

namespace {

// Spectrum of the Dirichlet 5-point Laplacian on an N x N cell-centred grid
// with zero ghost values: sums of 1-D values (4/h^2) sin^2(pi k / (2(N+1))).
std::vector<double> separable_laplacian_spectrum(int N, double h) {
    std::vector<double> one;
    for (int k = 1; k <= N; ++k) {
        double s = std::sin(M_PI * k / (2.0 * (N + 1)));
        one.push_back(4.0 / (h * h) * s * s);
    }
    std::vector<double> all;
    for (double a : one)
        for (double b : one) all.push_back(a + b);
    std::sort(all.begin(), all.end());
    return all;
}

SparseOperator free_laplacian(double L, double h) {
    return assemble_magnetic(parse_weight("0"), GridSpec::make(1, L, h)).minusDeltaA;
}

SparseOperator two_by_two() {
    SpMat m(2, 2);
    m.insert(0, 0) = 2.0;
    m.insert(0, 1) = 1.0;
    m.insert(1, 0) = 1.0;
    m.insert(1, 1) = 2.0;
    return SparseOperator(m, "2x2", true);
}

}  // namespace

TEST_CASE("2x2 example") {
    auto A = two_by_two();
    auto d = dense_reference(A);
    REQUIRE(d.eigenvalues.size() == 2);
    CHECK(d.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(d.eigenvalues[1] == doctest::Approx(3.0).epsilon(1e-14));
    auto k = smallest_eigenvalues(A, 2);
    CHECK(k.converged);
    CHECK(k.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(k.eigenvalues[1] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(count_below(A, 2.0) == 1);
    CHECK(count_below(A, 3.5) == 2);
}

TEST_CASE("free Dirichlet Laplacian ground state") {
    const double L = 4.0, h = 0.025;
    auto A = free_laplacian(L, h);
    auto r = smallest_eigenvalues(A, 1);
    REQUIRE(r.converged);
    const double continuum = 2.0 * std::pow(M_PI / (2.0 * L), 2);
    CHECK(std::abs(r.eigenvalues[0] / continuum - 1.0) < 0.01);
    const int N = static_cast<int>(std::lround(2 * L / h));
    CHECK(r.eigenvalues[0] == doctest::Approx(separable_laplacian_spectrum(N, h)[0]).epsilon(1e-10));
}

TEST_CASE("degenerate pairs of the square are all found") {
    const double L = 2.0, h = 0.1;
    auto A = free_laplacian(L, h);
    auto exact = separable_laplacian_spectrum(40, h);
    auto r = smallest_eigenvalues(A, 10);
    REQUIRE(r.converged);
    for (int i = 0; i < 10; ++i) {
        CHECK(r.eigenvalues[i] == doctest::Approx(exact[i]).epsilon(1e-10));
        CHECK(r.residuals[i] <= r.residual_bound);
    }
}

TEST_CASE("Krylov and dense paths agree") {
    const GridSpec g = GridSpec::make(1, 3.0, 0.2);
    for (const char* src : {"abs2(z1)", "abs2(z1)^2", "0"}) {
        WeightSpec w = parse_weight(src);
        for (const char* name : {"S", "Pminus", "box00", "normal"}) {
            auto A = build_named_operator(name, w, g);
            auto d = dense_reference(A);
            auto k = smallest_eigenvalues(A, 12);
            CAPTURE(std::string(src));
            CAPTURE(std::string(name));
            REQUIRE(k.converged);
            for (int i = 0; i < 12; ++i) CHECK(std::abs(k.eigenvalues[i] - d.eigenvalues[i]) <= 1e-8);
        }
    }
}

TEST_CASE("CG inner solves match the factorized path") {
    auto A = build_named_operator("S", parse_weight("abs2(z1)^2"), GridSpec::make(1, 3.0, 0.15));
    EigenOptions cg;
    cg.inner = InnerSolver::CG;
    auto a = smallest_eigenvalues(A, 4);
    auto b = smallest_eigenvalues(A, 4, cg);
    REQUIRE(a.converged);
    REQUIRE(b.converged);
    for (int i = 0; i < 4; ++i) CHECK(std::abs(a.eigenvalues[i] - b.eigenvalues[i]) <= 1e-8);

    EigenOptions inside = cg;
    inside.has_shift = true;
    inside.shift = a.eigenvalues[2];
    CHECK_THROWS_AS(smallest_eigenvalues(A, 2, inside), IndefiniteShift);
}

TEST_CASE("fixed seed gives bitwise identical results") {
    auto A = build_named_operator("S", parse_weight("abs2(z1)"), GridSpec::make(1, 3.0, 0.15));
    auto a = smallest_eigenvalues(A, 3);
    auto b = smallest_eigenvalues(A, 3);
    CHECK(a.eigenvalues == b.eigenvalues);
    CHECK(a.residuals == b.residuals);
}

TEST_CASE("inertia counts match dense counts") {
    const GridSpec g = GridSpec::make(1, 2.4, 0.2);
    for (const char* src : {"abs2(z1)", "abs2(z1)^2"}) {
        WeightSpec w = parse_weight(src);
        for (const char* name : {"S", "minusDeltaA", "Pminus", "Pplus", "dirac"}) {
            auto A = build_named_operator(name, w, g);
            Eigen::MatrixXcd D = A.matrix().toDense();
            Eigen::VectorXd ev;
            dense_hermitian_eig(D, ev, false);
            std::vector<double> d(ev.data(), ev.data() + ev.size());
            const double lo = d.front(), hi = d.back();
            for (int s = 1; s < 20; ++s) {
                double E = lo + (hi - lo) * std::pow(s / 20.0, 3);
                auto dense_count = static_cast<std::size_t>(
                    std::lower_bound(d.begin(), d.end(), E) - d.begin());
                CAPTURE(std::string(src));
                CAPTURE(std::string(name));
                CAPTURE(E);
                CHECK(count_below(A, E) == dense_count);
            }
        }
    }
}

TEST_CASE("counting is monotone in E and in L") {
    WeightSpec w = parse_weight("abs2(z1)");
    auto A = build_named_operator("S", w, GridSpec::make(1, 3.0, 0.1));
    std::size_t prev = 0;
    for (double E = 0.5; E < 12.0; E += 0.5) {
        std::size_t c = count_below(A, E);
        CHECK(c >= prev);
        prev = c;
    }
    auto cr = counting_function("S", 3.0, {2.0, 3.0, 4.0}, w, GridSpec::make(1, 2.0, 0.1));
    CHECK(cr.monotone_in_L);
    REQUIRE(cr.rows.size() == 3);
    for (std::size_t i = 1; i < cr.rows.size(); ++i) CHECK(cr.rows[i].count >= cr.rows[i - 1].count);
    CHECK(cr.rows[2].count_per_area == doctest::Approx(cr.rows[2].count / 16.0));
    CHECK_THROWS_AS(counting_function("S", 3.0, {3.0, 2.0}, w, GridSpec::make(1, 2.0, 0.1)), std::invalid_argument);
}

TEST_CASE("free Laplacian counts grow with the area") {
    WeightSpec w = parse_weight("0");
    auto cr = counting_function("minusDeltaA", 4.0, {2.0, 4.0}, w, GridSpec::make(1, 2.0, 0.1));
    // Weyl: N ~ E (2L)^2 / (4 pi).
    for (const auto& row : cr.rows) CHECK(row.count_per_area == doctest::Approx(4.0 * 4.0 / (4 * M_PI)).epsilon(0.25));
    CHECK(cr.rows[1].count > 3 * cr.rows[0].count);
}

TEST_CASE("40x40 constant field: lowest clusters near 2 and 4 for S") {
    auto A = build_named_operator("S", parse_weight("abs2(z1)"), GridSpec::make(1, 4.0, 0.2));
    auto d = dense_reference(A, 4096, 0.05);
    REQUIRE(d.clusters.size() >= 2);
    CHECK(std::abs(d.clusters[0].center / 2.0 - 1.0) < 0.05);
    CHECK(d.clusters[0].count >= 10);
    // The second bulk level sits near 4; edge states fill in between.
    std::size_t near4 = 0;
    for (double e : d.eigenvalues)
        if (std::abs(e / 4.0 - 1.0) < 0.05) ++near4;
    CHECK(near4 >= 10);
}

TEST_CASE("quartic weight: ground state of S is isolated") {
    auto A = build_named_operator("S", parse_weight("abs2(z1)^2"), GridSpec::make(1, 4.0, 0.2));
    auto d = dense_reference(A);
    CHECK(d.eigenvalues[1] - d.eigenvalues[0] > 0.1);
}

TEST_CASE("Landau clusters found from inertia alone") {
    auto A = build_named_operator("minusDeltaA", parse_weight("abs2(z1)"), GridSpec::make(1, 6.0, 0.1));
    auto cl = find_level_clusters(A, 2.0, 24.0);
    REQUIRE(cl.size() >= 3);
    const double levels[] = {4.0, 12.0, 20.0};
    for (int i = 0; i < 3; ++i) {
        CAPTURE(cl[i].center);
        CHECK(std::abs(cl[i].center / levels[i] - 1.0) < 0.05);
        CHECK(cl[i].count >= 30);
    }
}

TEST_CASE("grouping and error paths") {
    auto c = group_clusters({1.0, 1.01, 1.04, 2.0, 2.05, 5.0}, 0.05);
    REQUIRE(c.size() == 3);
    CHECK(c[0].count == 3);
    CHECK(c[0].center == 1.01);
    CHECK(c[1].count == 2);
    CHECK(c[2].count == 1);
    CHECK(group_clusters({}, 0.05).empty());

    auto A = free_laplacian(4.0, 0.1);
    CHECK_THROWS_AS(dense_reference(A), DimensionOverCap);
    CHECK_THROWS_AS(smallest_eigenvalues(A, 0), std::invalid_argument);
    SpMat nh(2, 2);
    nh.insert(0, 1) = 1.0;
    CHECK_THROWS(smallest_eigenvalues(SparseOperator(nh, "nh"), 1));
}

TEST_CASE("non-convergence reports a partial result") {
    auto A = free_laplacian(2.0, 0.1);
    EigenOptions o;
    o.max_restarts = 0;
    o.krylov_dim = 6;
    o.tol = 1e-14;
    auto r = smallest_eigenvalues(A, 3, o);
    CHECK_FALSE(r.converged);
    CHECK(r.eigenvalues.size() == 3);
}
