#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace dbarlab {

using Rational = boost::multiprecision::cpp_rational;
using Exponents = std::vector<unsigned>;

// Multivariate polynomial with exact rational coefficients. Variables are
// ordered (x1, y1, x2, y2, ...): index 2j is x_{j+1}, index 2j+1 is y_{j+1}.
class Polynomial {
public:
    explicit Polynomial(std::size_t nvars = 0) : nvars_(nvars) {}

    static Polynomial constant(std::size_t nvars, const Rational& c);
    static Polynomial variable(std::size_t nvars, std::size_t index);

    std::size_t num_vars() const { return nvars_; }
    const std::map<Exponents, Rational>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    bool is_constant() const;
    unsigned degree() const;
    bool depends_on(std::size_t var) const;

    // Same polynomial viewed in a larger variable set.
    Polynomial promoted(std::size_t nvars) const;
    // Relabel variables: new index of old variable i is map[i].
    Polynomial relabeled(const std::vector<std::size_t>& map, std::size_t nvars) const;

    Polynomial operator-() const;
    Polynomial operator+(const Polynomial& o) const;
    Polynomial operator-(const Polynomial& o) const;
    Polynomial operator*(const Polynomial& o) const;
    Polynomial operator*(const Rational& c) const;
    Polynomial& operator+=(const Polynomial& o);
    Polynomial pow(unsigned e) const;
    Polynomial derivative(std::size_t var) const;
    // Antiderivative in one variable with zero constant of integration.
    Polynomial antiderivative(std::size_t var) const;

    bool operator==(const Polynomial& o) const;
    bool operator!=(const Polynomial& o) const { return !(*this == o); }

    Rational evaluate_exact(const std::vector<Rational>& x) const;
    double evaluate(const std::vector<double>& x) const;

    // Canonical printout; parses back to the identical polynomial.
    std::string to_string() const;

    static std::string variable_name(std::size_t index);

private:
    void add_term(const Exponents& e, const Rational& c);

    std::size_t nvars_;
    std::map<Exponents, Rational> terms_;
};

// Flattened double-precision form for fast repeated evaluation on grids.
class CompiledPolynomial {
public:
    CompiledPolynomial() = default;
    explicit CompiledPolynomial(const Polynomial& p);

    double operator()(const double* x) const;
    double operator()(const std::vector<double>& x) const { return (*this)(x.data()); }
    std::size_t num_vars() const { return nvars_; }

private:
    std::size_t nvars_ = 0;
    unsigned max_degree_ = 0;
    std::vector<double> coeffs_;
    std::vector<unsigned> exps_;  // row-major, nvars_ per term
};

// Complex-valued polynomial as a (real, imaginary) pair.
struct ComplexPolynomial {
    Polynomial re;
    Polynomial im;
};

double to_double(const Rational& r);

}  // namespace dbarlab
