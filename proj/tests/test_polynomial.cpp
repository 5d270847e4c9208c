#include "doctest.h"

#include "dbarlab/polynomial.hpp"
#include "dbarlab/weights.hpp"

#include <random>

using namespace dbarlab;

TEST_CASE("arithmetic is exact") {
    Polynomial x = Polynomial::variable(2, 0), y = Polynomial::variable(2, 1);
    Polynomial p = (x + y) * (x - y);
    CHECK(p == x * x - y * y);
    Polynomial third = Polynomial::constant(2, Rational(1, 3));
    Polynomial s = third + third + third;
    CHECK(s == Polynomial::constant(2, Rational(1)));
    CHECK((x - x).is_zero());
    CHECK((x - x).terms().empty());
}

TEST_CASE("differentiation") {
    Polynomial x = Polynomial::variable(2, 0), y = Polynomial::variable(2, 1);
    Polynomial p = x.pow(3) * y * Rational(2, 5);
    CHECK(p.derivative(0) == x.pow(2) * y * Rational(6, 5));
    CHECK(p.derivative(1) == x.pow(3) * Rational(2, 5));
    CHECK(p.derivative(0).derivative(0).derivative(0).derivative(0).is_zero());
    CHECK(p.degree() == 4);
}

TEST_CASE("exact and double evaluation agree") {
    Polynomial x = Polynomial::variable(2, 0), y = Polynomial::variable(2, 1);
    Polynomial p = x.pow(2) * Rational(3, 7) - y.pow(3) + Polynomial::constant(2, Rational(1, 2));
    Rational v = p.evaluate_exact({Rational(1, 2), Rational(-2)});
    CHECK(v == Rational(3, 28) + 8 + Rational(1, 2));
    CHECK(p.evaluate({0.5, -2.0}) == doctest::Approx(to_double(v)).epsilon(1e-15));
}

TEST_CASE("canonical printout") {
    Polynomial x = Polynomial::variable(2, 0), y = Polynomial::variable(2, 1);
    CHECK((x * x + y * y).to_string() == "x1^2 + y1^2");
    CHECK((x * Rational(-3, 2) + Polynomial::constant(2, Rational(1))).to_string() == "-3/2*x1 + 1");
    CHECK(Polynomial(2).to_string() == "0");
}

TEST_CASE("property: printout reparses to the identical polynomial") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> coeff(-9, 9), den(1, 5), ex(0, 3), nterms(1, 6);
    for (int trial = 0; trial < 200; ++trial) {
        Polynomial p(4);
        int t = nterms(rng);
        for (int i = 0; i < t; ++i) {
            Polynomial m = Polynomial::constant(4, Rational(coeff(rng), den(rng)));
            for (std::size_t v = 0; v < 4; ++v) m = m * Polynomial::variable(4, v).pow(ex(rng));
            p += m;
        }
        WeightSpec w = parse_weight(p.to_string(), 2);
        CHECK(w.phi == p);
    }
}

TEST_CASE("compiled evaluation matches") {
    Polynomial x = Polynomial::variable(4, 0), y2 = Polynomial::variable(4, 3);
    Polynomial p = x.pow(5) * y2 - x * Rational(1, 3);
    CompiledPolynomial c(p);
    double pt[4] = {1.25, 7.0, -3.0, 0.5};
    CHECK(c(pt) == doctest::Approx(std::pow(1.25, 5) * 0.5 - 1.25 / 3.0).epsilon(1e-14));
}
