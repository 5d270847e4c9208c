#include "dbarlab/sparse_operator.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace dbarlab {

SparseOperator::SparseOperator(SpMat m, std::string name, bool hermitian, bool psd_claimed)
    : m_(std::move(m)), name_(std::move(name)), hermitian_(hermitian), psd_(psd_claimed) {
    m_.makeCompressed();
    if (hermitian_) {
        if (m_.rows() != m_.cols()) throw std::invalid_argument(name_ + ": hermitian operator must be square");
        if (hermitian_defect() != 0.0) throw std::logic_error(name_ + ": hermitian flag set on a non-hermitian matrix");
    }
}

SparseOperator SparseOperator::hermitian(const SpMat& m, std::string name, bool psd_claimed) {
    return SparseOperator(exact_hermitian_part(m), std::move(name), true, psd_claimed);
}

bool SparseOperator::is_real() const {
    for (Eigen::Index k = 0; k < m_.outerSize(); ++k)
        for (SpMat::InnerIterator it(m_, k); it; ++it)
            if (it.value().imag() != 0.0) return false;
    return true;
}

double SparseOperator::hermitian_defect() const {
    if (m_.rows() != m_.cols()) return INFINITY;
    SpMat at = m_.adjoint();
    SpMat d = m_ - at;
    double worst = 0.0;
    for (Eigen::Index k = 0; k < d.outerSize(); ++k)
        for (SpMat::InnerIterator it(d, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
    return worst;
}

SparseOperator SparseOperator::adjoint(std::string name) const {
    SpMat a = m_.adjoint();
    return SparseOperator(std::move(a), std::move(name), hermitian_, psd_);
}

void SparseOperator::export_triplets(std::ostream& os) const {
    os << std::setprecision(17);
    for (Eigen::Index r = 0; r < m_.outerSize(); ++r)
        for (SpMat::InnerIterator it(m_, r); it; ++it)
            os << it.row() << ' ' << it.col() << ' ' << it.value().real() << ' ' << it.value().imag() << '\n';
}

SpMat exact_hermitian_part(const SpMat& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("hermitian part needs a square matrix");
    SpMat at = m.adjoint();
    SpMat s = m + at;
    s *= cplx(0.5, 0.0);
    // a_ij + conj(a_ji) and a_ji + conj(a_ij) are exact conjugates in floating
    // point, so the stored matrix is hermitian bit for bit.
    s.prune(cplx(0.0, 0.0), 0.0);
    s.makeCompressed();
    return s;
}

SpMat identity_matrix(Eigen::Index n) {
    SpMat I(n, n);
    I.setIdentity();
    return I;
}

SpMat diagonal_matrix(const Eigen::VectorXcd& d) {
    SpMat D(d.size(), d.size());
    std::vector<Eigen::Triplet<cplx>> t;
    t.reserve(d.size());
    for (Eigen::Index i = 0; i < d.size(); ++i)
        if (d[i] != cplx(0.0, 0.0)) t.emplace_back(i, i, d[i]);
    D.setFromTriplets(t.begin(), t.end());
    return D;
}

SpMat kron(const SpMat& a, const SpMat& b) {
    SpMat r(a.rows() * b.rows(), a.cols() * b.cols());
    std::vector<Eigen::Triplet<cplx>> t;
    t.reserve(static_cast<std::size_t>(a.nonZeros()) * static_cast<std::size_t>(b.nonZeros()));
    for (Eigen::Index i = 0; i < a.outerSize(); ++i)
        for (SpMat::InnerIterator ia(a, i); ia; ++ia)
            for (Eigen::Index j = 0; j < b.outerSize(); ++j)
                for (SpMat::InnerIterator ib(b, j); ib; ++ib)
                    t.emplace_back(ia.row() * b.rows() + ib.row(), ia.col() * b.cols() + ib.col(),
                                   ia.value() * ib.value());
    r.setFromTriplets(t.begin(), t.end());
    return r;
}

}  // namespace dbarlab
