#pragma once

#include "dbarlab/discretize.hpp"
#include "dbarlab/grid.hpp"
#include "dbarlab/weights.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dbarlab {

// A check's hypothesis fails on this grid (e.g. a singular Levi matrix).
class PreconditionFailure : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// pass <=> max_violation <= tolerance. For inequalities the violation is the
// negated minimal slack, normalised by the squared norm of the test vector,
// so a negative value means the inequality held with room to spare.
struct CheckResult {
    std::string id;
    std::string statement;
    double max_violation = 0.0;
    double tolerance = 0.0;
    int samples = 0;
    bool pass = false;
    bool skipped = false;  // precondition failed; no samples taken
    std::vector<std::pair<std::string, double>> values;
    std::vector<std::string> notes;

    double value(const std::string& name) const;  // throws std::out_of_range
};

struct CheckOptions {
    int trials = 50;
    std::uint64_t seed = 20240601;
    double slack_factor = 10.0;  // inequality allowance: slack >= -slack_factor * h^2
};

// <Dbar u, v> = <u, Dadj v> on random vectors, relative to |Dbar u| |v|.
CheckResult check_adjointness(const WeightSpec& w, const GridSpec& g, const CheckOptions& opt = {});

// box01 from the identity against the componentwise formula: box00 taken as
// the flavour trace of Dadj Dbar and the Levi entries evaluated pointwise.
// Also reports the largest off-diagonal block entry (zero for decoupled
// weights) and the distance of box01 - box00 (x) I from 0 when phi = 0.
CheckResult check_identity_box01(const WeightSpec& w, const GridSpec& g, const CheckOptions& opt = {});

// n = 1. Three results: P+ - P- = 2 diag(B); Dirac square against
// blockdiag(P-, P+) on smooth interior fields (with the deviation at h/2 for
// the rate); nonzero low clusters of P- and P+ coincide within 5%, together
// with the near-zero count of P- against B (2L)^2 / 2pi.
std::vector<CheckResult> check_pauli_relations(const WeightSpec& w, const GridSpec& g, const CheckOptions& opt = {});

// ||v||^2 <= (1/2) <M^-1 Dbar v, Dbar v> for v orthogonal to ker Dbar. The
// value "lowest_mode_ratio" is the right side over the left side on v = Dadj
// times the lowest eigenvector of Dbar Dadj (1 means saturation).
CheckResult check_brascamp_lieb(const WeightSpec& w, const GridSpec& g, const CheckOptions& opt = {});

// ||v||^2 <= <Dbar v, Dbar v / lambda> for v orthogonal to ker Dbar.
CheckResult check_hormander(const WeightSpec& w, const GridSpec& g, const CheckOptions& opt = {});

// ||S v||^2 <= <N v, v>, S the canonical solution operator and N the inverse
// of box01. n = 1.
CheckResult check_comp_ns(const WeightSpec& w, const GridSpec& g, const CheckOptions& opt = {});

// <N v, v> <= (1/2) <M^-1 v, v>.
CheckResult check_ruelle(const WeightSpec& w, const GridSpec& g, const CheckOptions& opt = {});

// 0 <= <B u, u>, <-Delta_A u, u> <= <(-Delta_A + B) u, u> <= 2 <-Delta_A u, u> + c_h |u|^2,
// and <P- u, u> >= -c_h |u|^2, on smooth interior fields. n = 1.
CheckResult check_diamagnetic(const WeightSpec& w, const GridSpec& g, const CheckOptions& opt = {});

// Decoupled weight, variables ell != k (0-based). u_nu = f_nu(z_ell) e^-phi
// with f_nu orthonormalised monomials, evaluated through the Kronecker
// structure on a one-variable grid.
struct RayleighSequence {
    std::vector<double> quotients;         // <S_k u, u>/|u|^2, S_k = box00 + 2 phi_{k kbar}
    std::vector<double> kernel_residuals;  // |Dbar u_nu| / |u_nu|
    std::vector<double> boundary_mass;     // fraction of |u_nu|^2 within one unit of the box faces
    std::vector<int> unresolved;           // nu whose mass reaches the truncation
    double gram_deviation = 0.0;           // max |Gram - I|
    bool analytic_norms = false;
    double hypothesis_integral = 0.0;      // integral of |phi_{k kbar}|^2 e^(-2 phi_k)
    bool hypothesis_converged = false;     // unchanged between [-L/2, L/2]^2 and [-L, L]^2
};
RayleighSequence decoupled_rayleigh_sequence(const WeightSpec& w, int ell, int k, int count, const GridSpec& g1);

// The Kronecker evaluation above against the full box01 assembled on a
// (coarse) grid in all variables, for the first `count` members.
CheckResult check_kronecker_consistency(const WeightSpec& w, int ell, int k, int count, const GridSpec& g);

struct SolutionSequence {
    double complement_norm2 = 0.0;    // |zbar - P zbar|^2 in the weighted space of variable k
    std::vector<double> h_norms;      // |h_nu|
    std::vector<double> residuals;    // |Dbar h_nu - f_nu dzbar_k| / |f_nu dzbar_k|
    double norm_spread = 0.0;         // max | |h_nu| / |h_0| - 1 |
    double constant_integral = 0.0;   // integral of e^(-2 phi_j), worst j
    double zbar_integral = 0.0;       // integral of |z|^2 e^(-2 phi_k)
    bool hypotheses_converged = false;
};
SolutionSequence decoupled_solution_sequence(const WeightSpec& w, int ell, int k, int count, const GridSpec& g1);

// Norm spread of h_nu within 2%, and the residual at h/2 at most 0.55 of
// the residual at h.
CheckResult check_decoupled_solution(const WeightSpec& w, int ell, int k, int count, const GridSpec& g1);

// Every check applicable to the weight, in a fixed order. Checks whose
// preconditions fail are returned with skipped = true.
std::vector<CheckResult> verify_all(const WeightSpec& w, const GridSpec& g, const CheckOptions& opt = {});

}  // namespace dbarlab
