#include "dbarlab/weights.hpp"

#include <cmath>

namespace dbarlab {

std::string to_string(WeightKind k) {
    switch (k) {
        case WeightKind::Generic: return "generic";
        case WeightKind::RadialPower: return "radial-power";
        case WeightKind::Decoupled: return "decoupled";
    }
    return "unknown";
}

std::string to_string(PshCertificate c) {
    switch (c) {
        case PshCertificate::VerifiedOnSamples: return "verified-on-samples";
        case PshCertificate::Assumed: return "assumed";
        case PshCertificate::Failed: return "failed";
    }
    return "unknown";
}

DerivativeFields derivative_fields(const WeightSpec& w) {
    DerivativeFields f;
    f.laplacian = Polynomial(2 * w.n);
    for (int j = 0; j < w.n; ++j) {
        Polynomial px = w.phi.derivative(2 * j), py = w.phi.derivative(2 * j + 1);
        f.grad.push_back(px);
        f.grad.push_back(py);
        f.A.push_back(-py);
        f.A.push_back(px);
        f.laplacian += px.derivative(2 * j) + py.derivative(2 * j + 1);
    }
    return f;
}

ComplexPolynomial dz(const Polynomial& p, int j) {
    const Rational half(1, 2);
    return {p.derivative(2 * j) * half, p.derivative(2 * j + 1) * Rational(-1, 2)};
}

ComplexPolynomial dzbar(const Polynomial& p, int j) {
    const Rational half(1, 2);
    return {p.derivative(2 * j) * half, p.derivative(2 * j + 1) * half};
}

ComplexPolynomial mixed_wirtinger(const Polynomial& p, int j, int k) {
    const Rational quarter(1, 4);
    Polynomial xj_xk = p.derivative(2 * j).derivative(2 * k);
    Polynomial yj_yk = p.derivative(2 * j + 1).derivative(2 * k + 1);
    Polynomial xj_yk = p.derivative(2 * j).derivative(2 * k + 1);
    Polynomial yj_xk = p.derivative(2 * j + 1).derivative(2 * k);
    return {(xj_xk + yj_yk) * quarter, (xj_yk - yj_xk) * quarter};
}

std::vector<std::vector<ComplexPolynomial>> levi_matrix_symbolic(const WeightSpec& w) {
    std::vector<std::vector<ComplexPolynomial>> m(w.n);
    for (int j = 0; j < w.n; ++j)
        for (int k = 0; k < w.n; ++k) m[j].push_back(mixed_wirtinger(w.phi, j, k));
    return m;
}

LeviEvaluator::LeviEvaluator(const WeightSpec& w) : n_(w.n) {
    auto m = levi_matrix_symbolic(w);
    for (int j = 0; j < n_; ++j)
        for (int k = 0; k < n_; ++k) {
            re_.emplace_back(m[j][k].re);
            im_.emplace_back(m[j][k].im);
        }
}

Eigen::MatrixXcd LeviEvaluator::matrix(const double* pt) const {
    Eigen::MatrixXcd m(n_, n_);
    for (int j = 0; j < n_; ++j)
        for (int k = 0; k < n_; ++k) {
            std::size_t idx = static_cast<std::size_t>(j * n_ + k);
            m(j, k) = {re_[idx](pt), im_[idx](pt)};
        }
    return m;
}

double LeviEvaluator::lowest_eigenvalue(const double* pt) const {
    Eigen::MatrixXcd m = matrix(pt);
    if (!m.allFinite()) throw std::runtime_error("non-finite Levi matrix entry: invalid weight evaluation");
    if (n_ == 1) return m(0, 0).real();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw std::runtime_error("Levi matrix eigen-decomposition failed");
    return es.eigenvalues()(0);
}

namespace {
void check_point(const std::vector<double>& p, int n) {
    if (p.size() != static_cast<std::size_t>(2 * n))
        throw std::invalid_argument("point has wrong number of real coordinates");
}
}  // namespace

LeviMatrix levi_matrix_field(const WeightSpec& w, const std::vector<std::vector<double>>& pts) {
    LeviEvaluator ev(w);
    LeviMatrix out;
    out.n = w.n;
    out.at.reserve(pts.size());
    for (const auto& p : pts) {
        check_point(p, w.n);
        out.at.push_back(ev.matrix(p.data()));
    }
    return out;
}

std::vector<double> levi_eigenvalue_field(const WeightSpec& w, const std::vector<std::vector<double>>& pts) {
    LeviEvaluator ev(w);
    std::vector<double> out;
    out.reserve(pts.size());
    for (const auto& p : pts) {
        check_point(p, w.n);
        out.push_back(ev.lowest_eigenvalue(p.data()));
    }
    return out;
}

WeightSpec certify_plurisubharmonic(const WeightSpec& w, const std::vector<std::vector<double>>& pts, double tol) {
    WeightSpec out = w;
    auto lam = levi_eigenvalue_field(w, pts);
    out.certificate = PshCertificate::VerifiedOnSamples;
    for (double l : lam)
        if (!(l >= -tol)) {
            out.certificate = PshCertificate::Failed;
            break;
        }
    return out;
}

}  // namespace dbarlab
