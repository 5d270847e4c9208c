#include "doctest.h"

#include "dbarlab/verify.hpp"

#include <cmath>

using namespace dbarlab;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

CheckOptions quick(int trials = 8) {
    CheckOptions o;
    o.trials = trials;
    return o;
}

}  // namespace

TEST_CASE("adjointness and the box01 identity hold to rounding") {
    for (const char* src : {"abs2(z1)", "abs2(z1)^2", "0"}) {
        WeightSpec w = parse_weight(src, 1);
        GridSpec g = GridSpec::make(1, 3.0, 0.1);
        CheckResult a = check_adjointness(w, g, quick());
        CHECK(a.pass);
        CHECK(a.max_violation <= 1e-13);
        CheckResult id = check_identity_box01(w, g, quick());
        CHECK(id.pass);
        CHECK(id.value("max_relative_deviation") <= 1e-12);
    }
}

TEST_CASE("box01 identity in two variables") {
    GridSpec g = GridSpec::make(2, 1.5, 0.25);
    SUBCASE("decoupled weight has no off-diagonal blocks") {
        CheckResult r = check_identity_box01(parse_weight("abs2(z1)+abs2(z2)^2", 2), g, quick(3));
        CHECK(r.pass);
        CHECK(r.value("off_diagonal_max") == 0.0);
    }
    SUBCASE("zero weight gives box00 on each component") {
        CheckResult r = check_identity_box01(parse_weight("0", 2), g, quick(3));
        CHECK(r.pass);
        CHECK(r.value("zero_weight_deviation") == 0.0);
    }
    SUBCASE("coupled weight") {
        CheckResult r = check_identity_box01(parse_weight("(abs2(z1)+abs2(z2))^2", 2), g, quick(3));
        CHECK(r.pass);
        CHECK(r.value("off_diagonal_max") > 0.0);
    }
}

TEST_CASE("Pauli relations for the Gaussian weight") {
    WeightSpec w = parse_weight("abs2(z1)", 1);
    GridSpec g = GridSpec::make(1, 4.0, 0.1);
    auto rs = check_pauli_relations(w, g, quick());
    REQUIRE(rs.size() == 3);
    CHECK(rs[0].pass);
    CHECK(rs[1].pass);
    MESSAGE("dirac deviation " << rs[1].value("deviation_h") << " -> " << rs[1].value("deviation_h_half"));
    CHECK(rs[2].pass);
    // B = 4: Landau levels 2B k, so the nonzero clusters sit at 8 and 16.
    CHECK(rs[2].value("plus_center_0") == doctest::Approx(8.0).epsilon(0.05));
    CHECK(rs[2].value("plus_center_1") == doctest::Approx(16.0).epsilon(0.05));
    CHECK(rs[2].value("minus_center_0") == doctest::Approx(8.0).epsilon(0.05));
    CHECK(rs[2].value("kernel_count") == doctest::Approx(rs[2].value("kernel_expected")).epsilon(0.25));
    CHECK(rs[2].value("kernel_count_wider") > rs[2].value("kernel_count"));
}

TEST_CASE("Pauli spectra are skipped without a constant field") {
    auto rs = check_pauli_relations(parse_weight("abs2(z1)^2", 1), GridSpec::make(1, 2.0, 0.1), quick(2));
    CHECK(rs[0].pass);
    CHECK(rs[2].skipped);
    CHECK_THROWS_AS(check_pauli_relations(parse_weight("abs2(z1)+abs2(z2)", 2), GridSpec::make(2, 1.0, 0.25)),
                    UnsupportedDimension);
}

TEST_CASE("Brascamp-Lieb is saturated by the lowest mode of the Gaussian weight") {
    WeightSpec w = parse_weight("abs2(z1)", 1);
    GridSpec g = GridSpec::make(1, 4.0, 0.05);
    CheckResult r = check_brascamp_lieb(w, g, quick());
    MESSAGE("BL |z|^2 slack " << -r.max_violation << " ratio " << r.value("lowest_mode_ratio"));
    CHECK(r.pass);
    CHECK(r.value("lowest_mode_ratio") == doctest::Approx(1.0).epsilon(0.10));
}

TEST_CASE("Brascamp-Lieb and Hormander hold for the quartic weight") {
    WeightSpec w = parse_weight("abs2(z1)^2", 1);
    GridSpec g = GridSpec::make(1, 3.0, 0.1);
    CheckResult bl = check_brascamp_lieb(w, g, quick());
    CheckResult ho = check_hormander(w, g, quick());
    MESSAGE("BL |z|^4 slack " << bl.value("min_slack") << " Hormander slack " << ho.value("min_slack"));
    CHECK(bl.pass);
    CHECK(bl.value("min_slack") > 0.0);
    CHECK(ho.pass);
}

TEST_CASE("a singular Levi matrix is a precondition failure") {
    GridSpec g = GridSpec::make(1, 2.0, 0.1);
    CHECK_THROWS_AS(check_brascamp_lieb(parse_weight("0", 1), g, quick(2)), PreconditionFailure);
    CHECK_THROWS_AS(check_ruelle(parse_weight("0", 1), g, quick(2)), PreconditionFailure);
    auto all = verify_all(parse_weight("0", 1), g, quick(2));
    bool saw_skip = false;
    for (const auto& r : all)
        if (r.id == "brascamp_lieb") saw_skip = r.skipped && !r.pass;
    CHECK(saw_skip);
}

TEST_CASE("compNS, Ruelle and the diamagnetic sandwich") {
    for (const char* src : {"abs2(z1)", "abs2(z1)^2"}) {
        WeightSpec w = parse_weight(src, 1);
        GridSpec g = GridSpec::make(1, 3.0, 0.1);
        CheckResult ns = check_comp_ns(w, g, quick());
        CheckResult ru = check_ruelle(w, g, quick());
        CheckResult di = check_diamagnetic(w, g, quick());
        MESSAGE(std::string(src) << ": compNS " << ns.value("min_slack") << " ruelle " << ru.value("min_slack") << " dia "
                    << di.value("min_slack"));
        CHECK(ns.pass);
        CHECK(ru.pass);
        CHECK(di.pass);
    }
}

TEST_CASE("Ruelle in two variables") {
    CheckResult r = check_ruelle(parse_weight("(abs2(z1)+abs2(z2))^2", 2), GridSpec::make(2, 1.5, 0.25), quick(3));
    CHECK(r.pass);
}

TEST_CASE("decoupled Rayleigh quotients stay bounded on an orthonormal family") {
    WeightSpec w = parse_weight("abs2(z1)+abs2(z2)", 2);
    GridSpec g1 = GridSpec::make(1, 8.0, 0.05);
    RayleighSequence s = decoupled_rayleigh_sequence(w, 0, 1, 9, g1);
    CHECK(s.analytic_norms);
    CHECK(s.gram_deviation <= 1e-6);
    CHECK(s.unresolved.empty());
    CHECK(s.hypothesis_converged);
    // Both factors lie in the kernel; what is left is 2 phi_{k kbar} = 2.
    for (double q : s.quotients) CHECK(q == doctest::Approx(2.0).epsilon(0.02));
    CHECK(s.kernel_residuals[0] < 0.05);
    for (std::size_t i = 1; i < s.kernel_residuals.size(); ++i)
        CHECK(s.kernel_residuals[i] > s.kernel_residuals[i - 1]);
    CHECK(s.kernel_residuals.back() < 0.25);
    CHECK(s.hypothesis_integral == doctest::Approx(kPi / 2).epsilon(1e-6));
}

TEST_CASE("decoupled Rayleigh quotients for a non-Gaussian factor") {
    WeightSpec w = parse_weight("abs2(z1)^2+abs2(z2)", 2);
    RayleighSequence s = decoupled_rayleigh_sequence(w, 0, 1, 5, GridSpec::make(1, 5.0, 0.05));
    CHECK_FALSE(s.analytic_norms);
    CHECK(s.gram_deviation <= 1e-10);
    for (double q : s.quotients) CHECK(q == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("Kronecker evaluation matches the assembled four-dimensional box01") {
    WeightSpec w = parse_weight("abs2(z1)+abs2(z2)", 2);
    CheckResult r = check_kronecker_consistency(w, 0, 1, 3, GridSpec::make(2, 2.5, 0.25));
    CHECK(r.pass);
    CHECK_THROWS(check_kronecker_consistency(parse_weight("(abs2(z1)+abs2(z2))^2", 2), 0, 1, 2,
                                             GridSpec::make(2, 1.0, 0.25)));
}

TEST_CASE("decoupled solutions: |zbar - P zbar|^2 = pi/4 and the residual converges") {
    WeightSpec w = parse_weight("abs2(z1)+abs2(z2)", 2);
    SolutionSequence s = decoupled_solution_sequence(w, 0, 1, 6, GridSpec::make(1, 6.0, 0.05));
    CHECK(s.hypotheses_converged);
    CHECK(s.complement_norm2 == doctest::Approx(kPi / 4).epsilon(0.02));
    CHECK(s.norm_spread <= 0.02);
    CHECK(s.constant_integral == doctest::Approx(kPi / 2).epsilon(1e-6));
    CHECK(s.zbar_integral == doctest::Approx(kPi / 4).epsilon(1e-6));
    CheckResult c = check_decoupled_solution(w, 0, 1, 4, GridSpec::make(1, 6.0, 0.1));
    MESSAGE("residual " << c.value("residual_h") << " -> " << c.value("residual_h_half"));
    CHECK(c.pass);
}

TEST_CASE("check results report their values") {
    CheckResult r = check_adjointness(parse_weight("abs2(z1)", 1), GridSpec::make(1, 1.0, 0.25), quick(1));
    CHECK_THROWS_AS(r.value("missing"), std::out_of_range);
}
