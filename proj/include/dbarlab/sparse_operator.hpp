#pragma once

#include <Eigen/Sparse>

#include <complex>
#include <iosfwd>
#include <string>

namespace dbarlab {

using cplx = std::complex<double>;
using SpMat = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;
using Vec = Eigen::VectorXcd;

// Assembled discrete operator in compressed row storage.
class SparseOperator {
public:
    SparseOperator() = default;
    SparseOperator(SpMat m, std::string name, bool hermitian = false, bool psd_claimed = false);

    // Exact Hermitian part (A + A^H)/2; the result has hermitian defect 0.
    static SparseOperator hermitian(const SpMat& m, std::string name, bool psd_claimed = false);

    const SpMat& matrix() const { return m_; }
    const std::string& name() const { return name_; }
    Eigen::Index rows() const { return m_.rows(); }
    Eigen::Index cols() const { return m_.cols(); }
    Eigen::Index dim() const { return m_.rows(); }
    bool is_hermitian() const { return hermitian_; }
    bool psd_claimed() const { return psd_; }
    bool is_real() const;

    Vec apply(const Vec& v) const { return m_ * v; }
    double hermitian_defect() const;
    SparseOperator adjoint(std::string name) const;

    // One "row col re im" line per stored entry.
    void export_triplets(std::ostream& os) const;

private:
    SpMat m_;
    std::string name_;
    bool hermitian_ = false;
    bool psd_ = false;
};

SpMat exact_hermitian_part(const SpMat& m);
SpMat identity_matrix(Eigen::Index n);
SpMat diagonal_matrix(const Eigen::VectorXcd& d);
SpMat kron(const SpMat& a, const SpMat& b);

}  // namespace dbarlab
