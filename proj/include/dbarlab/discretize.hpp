#pragma once

#include "dbarlab/grid.hpp"
#include "dbarlab/sparse_operator.hpp"
#include "dbarlab/weights.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace dbarlab {

class UnsupportedDimension : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NonPlurisubharmonic : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Weighted dzbar_j = d/dzbar_j + (d phi/dzbar_j) on one variable, as the
// forward and the backward one-sided stencil. The weight coupling is sampled at
// the link midpoint and multiplies the average of the two link values.
struct DbarFlavours {
    SpMat forward;
    SpMat backward;
};

std::vector<DbarFlavours> assemble_dbar_flavours(const WeightSpec& w, const GridSpec& g);

// The discrete dzbar on functions acts on flavour pairs (v_f, v_b) of grid
// functions: Dbar v = sum_k (F_k v_f + B_k v_b)/sqrt2 dzbar_k. Columns are
// ordered [forward copy; backward copy], rows are n stacked form components.
// A single one-sided stencil has spurious near-zero modes of Dbar Dbar^H;
// pairing the two flavours removes them.
struct DbarOperators {
    SparseOperator Dbar;
    SparseOperator Dadj;
    std::size_t grid_size = 0;  // unknowns per grid function
    int n = 1;
};

DbarOperators assemble_dbar(const WeightSpec& w, const GridSpec& g);

// u -> (u, u)/sqrt2, an isometry from grid functions into flavour pairs.
SpMat flavour_embedding(std::size_t grid_size);
// Flavour-pair vector back to a grid function: (v_f + v_b)/sqrt2.
Vec flavour_merge(const Vec& v);

// level 0: box00 = flavour trace of Dadj*Dbar = (1/2) sum_k (F_k^H F_k + B_k^H B_k)
// level 1: box01 = box00 (x) I_n + 2 Levi coupling, with the Levi matrix
//          sampled at the nodes.
SparseOperator assemble_box(const WeightSpec& w, const GridSpec& g, int level);

// Block operator coupling form components through the Levi matrix: output
// component k receives sum_j scale * (d^2 phi/dz_j dzbar_k) g_j.
SpMat levi_coupling(const WeightSpec& w, const GridSpec& g, double scale);

struct MagneticOperators {
    SparseOperator minusDeltaA;
    SparseOperator S;
    SparseOperator Pplus;
    SparseOperator Pminus;
    Eigen::VectorXd B;  // field sampled at the nodes
};

// Gauge-covariant 5-point magnetic Laplacian with link phases exp(-i * integral
// of A along the link), integrated exactly for polynomial A. n = 1 only.
MagneticOperators assemble_magnetic(const WeightSpec& w, const GridSpec& g);

// Covariant central differences Pi_x, Pi_y (n = 1).
struct CovariantCentral {
    SpMat Pix;
    SpMat Piy;
};
CovariantCentral assemble_covariant_central(const WeightSpec& w, const GridSpec& g);

// 2-D Dirac operator sigma1 Pi_x + sigma2 Pi_y on spinors [upper; lower].
SparseOperator assemble_dirac(const WeightSpec& w, const GridSpec& g);

// Max |sigma1 sigma2 + sigma2 sigma1|; zero for the matrices used in assembly.
double pauli_anticommutator_defect();

// Smallest `count` sums taken over the Cartesian product of sorted spectra.
// Position k holds the P+ list, the others P- lists; the sums are the
// spectrum of the Kronecker sum.
std::vector<double> decoupled_spectrum_synthesis(const std::vector<std::vector<double>>& per_variable_spectra,
                                                 std::size_t k, std::size_t count);

// Dbar * Dadj on (0,1)-forms, the normal operator of the canonical solve.
SparseOperator assemble_normal(const DbarOperators& ops);

// Operators addressable by name: S, minusDeltaA, Pplus, Pminus, box00, box01,
// normal, dirac.
const std::vector<std::string>& operator_names();
SparseOperator build_named_operator(const std::string& name, const WeightSpec& w, const GridSpec& g);

// Field values of a polynomial sampled at every node of the grid.
Eigen::VectorXd sample_on_grid(const Polynomial& p, const GridSpec& g);

}  // namespace dbarlab
