#pragma once

#include "dbarlab/polynomial.hpp"

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dbarlab {

enum class WeightKind { Generic, RadialPower, Decoupled };
enum class PshCertificate { VerifiedOnSamples, Assumed, Failed };

std::string to_string(WeightKind k);
std::string to_string(PshCertificate c);

struct WeightSpec {
    int n = 1;
    Polynomial phi{2};
    WeightKind kind = WeightKind::Generic;
    int radial_power = 0;                // meaningful for RadialPower
    std::vector<Polynomial> components;  // per-variable parts for Decoupled (in all 2n variables)
    PshCertificate certificate = PshCertificate::Assumed;
    std::string source;
};

class WeightSyntaxError : public std::runtime_error {
public:
    WeightSyntaxError(const std::string& msg, std::size_t offset)
        : std::runtime_error(msg + " at offset " + std::to_string(offset)), offset_(offset) {}
    // 1-based character position in the source text.
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

class WeightDimensionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Parse the weight DSL. declared_n = 0 means "infer from the variables used".
WeightSpec parse_weight(const std::string& source, int declared_n = 0);

// Build a weight directly from a polynomial in 2n variables; kind is inferred
// from the term structure (radial powers are only detected syntactically).
WeightSpec make_weight(const Polynomial& phi, int n);

// Split phi into per-variable parts if no term mixes two complex variables.
std::optional<std::vector<Polynomial>> split_by_variable(const Polynomial& phi, int n);

// Part of a decoupled weight depending on z_j, as a polynomial in (x, y) only.
Polynomial component_in_one_variable(const WeightSpec& w, int j);

// Canonical text form; reparses to the same polynomial.
std::string canonical_text(const WeightSpec& w);

struct DerivativeFields {
    std::vector<Polynomial> grad;  // (phi_x1, phi_y1, ...)
    std::vector<Polynomial> A;     // (-phi_y1, phi_x1, -phi_y2, phi_x2, ...)
    Polynomial laplacian;
};

DerivativeFields derivative_fields(const WeightSpec& w);

// Wirtinger derivative d/dz_j as a complex polynomial, and the mixed second
// derivative d^2 phi / dz_j dzbar_k.
ComplexPolynomial dz(const Polynomial& p, int j);
ComplexPolynomial dzbar(const Polynomial& p, int j);
ComplexPolynomial mixed_wirtinger(const Polynomial& p, int j, int k);

// Levi matrix entries (j,k) = d^2 phi / dz_j dzbar_k, exact.
std::vector<std::vector<ComplexPolynomial>> levi_matrix_symbolic(const WeightSpec& w);

// Pointwise evaluation helper; compiles the symbolic Levi matrix once.
class LeviEvaluator {
public:
    explicit LeviEvaluator(const WeightSpec& w);
    Eigen::MatrixXcd matrix(const double* pt) const;
    double lowest_eigenvalue(const double* pt) const;
    int n() const { return n_; }

private:
    int n_;
    std::vector<CompiledPolynomial> re_, im_;
};

struct LeviMatrix {
    int n = 1;
    std::vector<Eigen::MatrixXcd> at;  // one Hermitian n x n matrix per point
};

LeviMatrix levi_matrix_field(const WeightSpec& w, const std::vector<std::vector<double>>& pts);
std::vector<double> levi_eigenvalue_field(const WeightSpec& w, const std::vector<std::vector<double>>& pts);

// Sample the lowest Levi eigenvalue; certificate becomes VerifiedOnSamples or Failed.
WeightSpec certify_plurisubharmonic(const WeightSpec& w, const std::vector<std::vector<double>>& pts,
                                    double tol = 1e-12);

}  // namespace dbarlab
