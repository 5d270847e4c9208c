#include "dbarlab/verify.hpp"

#include "dbarlab/eigensolve.hpp"
#include "dbarlab/solve.hpp"
#include "dbarlab/test_fields.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace dbarlab {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

CheckResult finish(CheckResult r) {
    r.pass = !r.skipped && r.max_violation <= r.tolerance;
    return r;
}

CheckResult skipped_result(const std::string& id, const std::string& statement, const std::string& why) {
    CheckResult r;
    r.id = id;
    r.statement = statement;
    r.skipped = true;
    r.notes.push_back(why);
    return r;
}

void require_one_variable(const WeightSpec& w, const char* what) {
    if (w.n != 1) throw UnsupportedDimension(std::string(what) + " is only defined for one complex variable (n = 1)");
}

double inner_real(const Vec& a, const Vec& b) { return std::real(a.dot(b)); }

// Solves with a hermitian positive definite matrix: sparse LDL^H in one
// variable, conjugate gradients on the larger grids of several variables.
class PositiveInverse {
public:
    PositiveInverse(const SpMat& A, bool direct) : A_(A) {
        if (direct) {
            f_ = std::make_unique<ShiftedFactorization>(SparseOperator(A, "inverse", true, true));
            f_->factor(0.0);
            if (f_->negative_count() > 0 || f_->zero_count() > 0)
                throw SingularOperator("operator is not positive definite on this grid");
        }
        cg_.tol = 1e-11;
    }
    Vec solve(const Vec& b) const { return f_ ? f_->solve(b) : hermitian_cg(A_, b, cg_); }

private:
    SpMat A_;
    std::unique_ptr<ShiftedFactorization> f_;
    SolveOptions cg_;
};

// Pointwise Levi data in the orientation used by box01: at node p the block
// (k, j) is phi_{z_j zbar_k}.
struct LeviField {
    int n = 1;
    Eigen::Index M = 0;
    std::vector<Eigen::MatrixXcd> inverse;
    Eigen::VectorXd lowest;
};

LeviField levi_field(const WeightSpec& w, const GridSpec& g) {
    LeviField lf;
    lf.n = w.n;
    lf.M = static_cast<Eigen::Index>(g.size());
    lf.inverse.assign(static_cast<std::size_t>(lf.M), Eigen::MatrixXcd::Zero(w.n, w.n));
    lf.lowest.resize(lf.M);
    std::vector<Eigen::MatrixXcd> blocks(static_cast<std::size_t>(lf.M), Eigen::MatrixXcd::Zero(w.n, w.n));
    SpMat c = levi_coupling(w, g, 1.0);
    for (Eigen::Index r = 0; r < c.outerSize(); ++r)
        for (SpMat::InnerIterator it(c, r); it; ++it)
            blocks[static_cast<std::size_t>(it.row() % lf.M)](it.row() / lf.M, it.col() / lf.M) = it.value();
    double scale = 0.0;
    for (const auto& b : blocks) scale = std::max(scale, b.cwiseAbs().maxCoeff());
    std::vector<double> pt(g.axes());
    for (Eigen::Index p = 0; p < lf.M; ++p) {
        const auto& b = blocks[static_cast<std::size_t>(p)];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(b);
        double lo = es.eigenvalues()[0];
        if (!(lo > 1e-14 * std::max(scale, 1.0))) {
            g.point(static_cast<std::size_t>(p), pt.data());
            std::string where = "(";
            for (std::size_t a = 0; a < pt.size(); ++a) where += (a ? ", " : "") + std::to_string(pt[a]);
            throw PreconditionFailure("Levi matrix is singular at grid point " + where + ")");
        }
        lf.lowest[p] = lo;
        lf.inverse[static_cast<std::size_t>(p)] = es.eigenvectors() *
                                                   es.eigenvalues().cwiseInverse().asDiagonal() *
                                                   es.eigenvectors().adjoint();
    }
    return lf;
}

Vec apply_levi_inverse(const LeviField& lf, const Vec& y) {
    Vec out = Vec::Zero(y.size());
    for (Eigen::Index p = 0; p < lf.M; ++p) {
        Eigen::VectorXcd local(lf.n);
        for (int j = 0; j < lf.n; ++j) local[j] = y[j * lf.M + p];
        Eigen::VectorXcd z = lf.inverse[static_cast<std::size_t>(p)] * local;
        for (int k = 0; k < lf.n; ++k) out[k * lf.M + p] = z[k];
    }
    return out;
}

Vec divide_by_lowest(const LeviField& lf, const Vec& y) {
    Vec out = y;
    for (int k = 0; k < lf.n; ++k)
        for (Eigen::Index p = 0; p < lf.M; ++p) out[k * lf.M + p] /= lf.lowest[p];
    return out;
}

// Gaussian bumps whose tails are below 1e-9 on the outermost nodes, so the
// truncation does not leak into stencils that differentiate four times.
FieldOptions interior_fields(const GridSpec& g) {
    FieldOptions fo;
    fo.max_width = std::min(1.0, g.L / 10);
    fo.min_width = fo.max_width / 2;
    fo.support_radius = std::min(2.0, g.L - 6.5 * fo.max_width);
    return fo;
}

Vec smooth_form(FieldSampler& fs, const GridSpec& g, int n) {
    const auto M = static_cast<Eigen::Index>(g.size());
    Vec v(n * M);
    for (int k = 0; k < n; ++k) v.segment(k * M, M) = fs.smooth(g, interior_fields(g));
    return v;
}

// Random smooth function lifted to flavour pairs and projected onto the
// orthogonal complement of ker Dbar, i.e. the range of Dadj.
struct KernelComplement {
    const DbarOperators& ops;
    PositiveInverse normal_inv;
    SpMat embed;
    KernelComplement(const DbarOperators& o, bool direct)
        : ops(o), normal_inv(SpMat(o.Dbar.matrix() * o.Dadj.matrix()), direct), embed(flavour_embedding(o.grid_size)) {}
    Vec project(const Vec& u) const { return ops.Dadj.matrix() * normal_inv.solve(ops.Dbar.matrix() * u); }
};

template <class Slack>
CheckResult inequality(const std::string& id, const std::string& statement, const GridSpec& g, const CheckOptions& opt,
                       Slack slack_of_trial) {
    CheckResult r;
    r.id = id;
    r.statement = statement;
    r.tolerance = opt.slack_factor * g.h * g.h;
    double worst = std::numeric_limits<double>::infinity();
    for (int t = 0; t < opt.trials; ++t) worst = std::min(worst, slack_of_trial(t));
    r.samples = opt.trials;
    r.max_violation = -worst;
    r.values.push_back({"min_slack", worst});
    return r;
}

Eigen::VectorXd field_of(const Polynomial& p, const GridSpec& g) { return sample_on_grid(p, g); }

bool is_gaussian(const Polynomial& p) { return p == parse_weight("abs2(z1)").phi; }

double weighted_norm2(const Vec& v, double cell) { return v.squaredNorm() * cell; }

// Grid function of one variable: e^(-phi) times z^nu.
Vec gaussian_monomial(const Polynomial& phi, const GridSpec& g1, int nu) {
    Eigen::VectorXd ph = field_of(phi, g1);
    Vec v(ph.size());
    double pt[2];
    for (Eigen::Index p = 0; p < ph.size(); ++p) {
        g1.point(static_cast<std::size_t>(p), pt);
        v[p] = std::pow(cplx(pt[0], pt[1]), nu) * std::exp(-ph[p]);
    }
    return v;
}

struct VariableFactors {
    std::vector<Polynomial> phi;      // per variable, in (x, y)
    std::vector<SparseOperator> box;  // one-variable box00
    std::vector<Vec> ground;          // e^-phi_j, normalised
};

VariableFactors variable_factors(const WeightSpec& w, const GridSpec& g1) {
    if (!split_by_variable(w.phi, w.n)) throw std::invalid_argument("weight is not decoupled");
    VariableFactors vf;
    const double cell = g1.h * g1.h;
    for (int j = 0; j < w.n; ++j) {
        Polynomial pj = component_in_one_variable(w, j);
        vf.phi.push_back(pj);
        vf.box.push_back(assemble_box(make_weight(pj, 1), g1, 0));
        Vec e = gaussian_monomial(pj, g1, 0);
        double nrm2 = is_gaussian(pj) ? kPi / 2 : weighted_norm2(e, cell);
        vf.ground.push_back(e / std::sqrt(nrm2));
    }
    return vf;
}

double quotient(const SparseOperator& A, const Vec& v) { return inner_real(v, A.apply(v)) / v.squaredNorm(); }

// f_nu(z) e^-phi for nu < count, orthonormal in the weighted space.
std::vector<Vec> orthonormal_monomials(const Polynomial& phi, const GridSpec& g1, int count, bool& analytic) {
    const double cell = g1.h * g1.h;
    analytic = is_gaussian(phi);
    std::vector<Vec> out;
    double fact = 1.0;
    for (int nu = 0; nu < count; ++nu) {
        if (nu > 0) fact *= nu;
        Vec v = gaussian_monomial(phi, g1, nu);
        if (analytic) {
            // Integral of |z|^(2 nu) e^(-2|z|^2) over the plane.
            v /= std::sqrt(kPi * fact / std::pow(2.0, nu + 1));
        } else {
            for (const auto& q : out) v -= q * (q.dot(v) * cell);
            v /= std::sqrt(weighted_norm2(v, cell));
        }
        out.push_back(v);
    }
    return out;
}

double boundary_mass(const GridSpec& g1, const Vec& v) {
    const int layers = std::max(1, static_cast<int>(std::ceil(1.0 / g1.h)));
    double edge = 0.0;
    for (std::size_t p = 0; p < g1.size(); ++p)
        if (g1.boundary_distance(p) < layers) edge += std::norm(v[static_cast<Eigen::Index>(p)]);
    return edge / v.squaredNorm();
}

// Integral of a nonnegative grid density over [-L, L]^2 and over the inner
// half box; equal values mean the integral has converged.
std::pair<double, double> whole_and_inner(const GridSpec& g1, const Eigen::VectorXd& density) {
    double whole = 0.0, inner = 0.0, pt[2];
    for (std::size_t p = 0; p < g1.size(); ++p) {
        g1.point(p, pt);
        double d = density[static_cast<Eigen::Index>(p)] * g1.h * g1.h;
        whole += d;
        if (std::abs(pt[0]) <= g1.L / 2 && std::abs(pt[1]) <= g1.L / 2) inner += d;
    }
    return {whole, inner};
}

bool converged(const std::pair<double, double>& wi) {
    return std::abs(wi.first - wi.second) <= 1e-6 * std::max(std::abs(wi.first), 1e-300);
}

Vec kron_vectors(const std::vector<Vec>& factors) {
    Vec out = Vec::Ones(1);
    for (const auto& f : factors) {
        Vec next(out.size() * f.size());
        for (Eigen::Index i = 0; i < out.size(); ++i) next.segment(i * f.size(), f.size()) = out[i] * f;
        out = std::move(next);
    }
    return out;
}

void check_pair(const WeightSpec& w, int ell, int k) {
    if (w.n < 2) throw std::invalid_argument("decoupled witnesses need at least two variables");
    if (ell == k || ell < 0 || k < 0 || ell >= w.n || k >= w.n)
        throw std::invalid_argument("variables ell and k must be distinct and within 0..n-1");
}

}  // namespace

double CheckResult::value(const std::string& name) const {
    for (const auto& [k, v] : values)
        if (k == name) return v;
    throw std::out_of_range("check " + id + " has no value '" + name + "'");
}

CheckResult check_adjointness(const WeightSpec& w, const GridSpec& g, const CheckOptions& opt) {
    auto ops = assemble_dbar(w, g);
    FieldSampler fs(opt.seed);
    CheckResult r;
    r.id = "adjointness";
    r.statement = "<Dbar u, v> = <u, Dadj v>";
    r.tolerance = 1e-13;
    const int trials = std::min(opt.trials, 10);
    for (int t = 0; t < trials; ++t) {
        Vec u = fs.white_noise(ops.Dbar.cols()), v = fs.white_noise(ops.Dbar.rows());
        Vec du = ops.Dbar.apply(u);
        double dev = std::abs(du.dot(v) - u.dot(ops.Dadj.apply(v))) / (du.norm() * v.norm());
        r.max_violation = std::max(r.max_violation, dev);
    }
    r.samples = trials;
    return finish(r);
}

CheckResult check_identity_box01(const WeightSpec& w, const GridSpec& g, const CheckOptions& opt) {
    CheckResult r;
    r.id = "identity_box01";
    r.statement = "box01 = box00 (x) I + 2 M, against the componentwise formula";
    r.tolerance = 1e-12;
    const auto M = static_cast<Eigen::Index>(g.size());
    const int n = w.n;
    SparseOperator box01 = assemble_box(w, g, 1);

    // Componentwise route: box00 as the flavour trace of Dadj Dbar.
    auto ops = assemble_dbar(w, g);
    SpMat K = ops.Dadj.matrix() * ops.Dbar.matrix();
    auto box00_apply = [&](const Vec& x) {
        Vec a = Vec::Zero(2 * M), b = Vec::Zero(2 * M);
        a.head(M) = x;
        b.tail(M) = x;
        return Vec((K * a).head(M) + (K * b).tail(M));
    };
    LeviEvaluator levi(w);
    std::vector<Eigen::MatrixXcd> mats(static_cast<std::size_t>(M));
    std::vector<double> pt(g.axes());
    for (Eigen::Index p = 0; p < M; ++p) {
        g.point(static_cast<std::size_t>(p), pt.data());
        mats[static_cast<std::size_t>(p)] = levi.matrix(pt.data());
    }

    FieldSampler fs(opt.seed);
    const int trials = std::min(opt.trials, 5);
    for (int t = 0; t < trials; ++t) {
        Vec x = fs.white_noise(n * M);
        Vec ya = box01.apply(x);
        Vec yb(n * M);
        for (int k = 0; k < n; ++k) yb.segment(k * M, M) = box00_apply(x.segment(k * M, M));
        for (Eigen::Index p = 0; p < M; ++p)
            for (int k = 0; k < n; ++k)
                for (int j = 0; j < n; ++j) yb[k * M + p] += 2.0 * mats[static_cast<std::size_t>(p)](j, k) * x[j * M + p];
        r.max_violation = std::max(r.max_violation, (ya - yb).cwiseAbs().maxCoeff() / ya.cwiseAbs().maxCoeff());
    }
    r.samples = trials;
    r.values.push_back({"max_relative_deviation", r.max_violation});

    double off = 0.0;
    const SpMat& B = box01.matrix();
    for (Eigen::Index row = 0; row < B.outerSize(); ++row)
        for (SpMat::InnerIterator it(B, row); it; ++it)
            if (it.row() / M != it.col() / M) off = std::max(off, std::abs(it.value()));
    r.values.push_back({"off_diagonal_max", off});
    if (n > 1 && split_by_variable(w.phi, n)) {
        r.notes.push_back("decoupled weight: off-diagonal blocks must vanish");
        r.max_violation = std::max(r.max_violation, off);
    }
    if (w.phi.is_zero()) {
        SpMat diff = B - kron(identity_matrix(n), assemble_box(w, g, 0).matrix());
        double dev = 0.0;
        for (Eigen::Index row = 0; row < diff.outerSize(); ++row)
            for (SpMat::InnerIterator it(diff, row); it; ++it) dev = std::max(dev, std::abs(it.value()));
        r.values.push_back({"zero_weight_deviation", dev});
        r.max_violation = std::max(r.max_violation, dev);
    }
    return finish(r);
}

std::vector<CheckResult> check_pauli_relations(const WeightSpec& w, const GridSpec& g, const CheckOptions& opt) {
    require_one_variable(w, "Pauli relations");
    std::vector<CheckResult> out;
    MagneticOperators mo = assemble_magnetic(w, g);
    const auto M = static_cast<Eigen::Index>(g.size());

    {
        CheckResult r;
        r.id = "pauli_difference";
        r.statement = "P+ - P- = 2 diag(B)";
        r.tolerance = 1e-14;
        SpMat diff = mo.Pplus.matrix() - mo.Pminus.matrix() - diagonal_matrix((2.0 * mo.B).cast<cplx>());
        double dev = 0.0, scale = 0.0;
        for (Eigen::Index row = 0; row < diff.outerSize(); ++row)
            for (SpMat::InnerIterator it(diff, row); it; ++it) dev = std::max(dev, std::abs(it.value()));
        for (Eigen::Index i = 0; i < M; ++i) scale = std::max(scale, std::abs(mo.Pplus.matrix().coeff(i, i)));
        r.max_violation = dev / scale;
        r.samples = 1;
        r.notes.push_back("relative to the largest diagonal entry; off-diagonal entries agree bit for bit");
        out.push_back(finish(r));
    }
    {
        CheckResult r;
        r.id = "dirac_square";
        r.statement = "Dirac^2 -> blockdiag(P-, P+) at O(h) on interior fields";
        auto deviation = [&](const GridSpec& gg) {
            MagneticOperators m = assemble_magnetic(w, gg);
            SparseOperator d = assemble_dirac(w, gg);
            FieldSampler fs(opt.seed);
            const auto Mg = static_cast<Eigen::Index>(gg.size());
            double worst = 0.0;
            for (int t = 0; t < 5; ++t) {
                Vec u(2 * Mg);
                u.head(Mg) = fs.smooth(gg, interior_fields(gg));
                u.tail(Mg) = fs.smooth(gg, interior_fields(gg));
                Vec d2 = d.apply(d.apply(u));
                Vec blk(2 * Mg);
                blk.head(Mg) = m.Pminus.apply(u.head(Mg));
                blk.tail(Mg) = m.Pplus.apply(u.tail(Mg));
                worst = std::max(worst, (d2 - blk).norm() / u.norm());
            }
            return worst;
        };
        double dh = deviation(g);
        double dh2 = deviation(GridSpec::make(1, g.L, g.h / 2));
        r.values.push_back({"deviation_h", dh});
        r.values.push_back({"deviation_h_half", dh2});
        r.tolerance = 0.6;
        r.max_violation = dh > 1e-12 ? dh2 / dh : 0.0;
        r.samples = 10;
        r.notes.push_back("violation is the deviation ratio between h/2 and h");
        out.push_back(finish(r));
    }
    {
        CheckResult r;
        r.id = "pauli_spectra";
        r.statement = "nonzero low spectra of P- and P+ coincide";
        r.tolerance = 0.05;
        const Polynomial lap = derivative_fields(w).laplacian;
        if (!lap.is_constant() || lap.is_zero()) {
            r.skipped = true;
            r.notes.push_back(lap.is_zero() ? "zero field: P+ = P- exactly (see pauli_difference)"
                                            : "cluster comparison needs a constant field; not applicable");
            out.push_back(r);
            return out;
        }
        const double b = to_double(lap.terms().begin()->second);
        if (!(b > 0.0)) {
            r.skipped = true;
            r.notes.push_back("constant field must be positive");
            out.push_back(r);
            return out;
        }
        auto lower = find_level_clusters(mo.Pminus, b, 5 * b);
        auto upper = find_level_clusters(mo.Pplus, b, 5 * b);
        std::size_t m = std::min(lower.size(), upper.size());
        r.values.push_back({"clusters_minus", double(lower.size())});
        r.values.push_back({"clusters_plus", double(upper.size())});
        if (m == 0) {
            r.max_violation = 1.0;
            r.notes.push_back("no clusters found in [B, 5B]");
        }
        for (std::size_t i = 0; i < m; ++i) {
            r.values.push_back({"minus_center_" + std::to_string(i), lower[i].center});
            r.values.push_back({"plus_center_" + std::to_string(i), upper[i].center});
            r.max_violation = std::max(r.max_violation, std::abs(lower[i].center - upper[i].center) / upper[i].center);
        }
        // Near-zero modes of P-: the lowest level's degeneracy B (2L)^2 / 2pi.
        std::size_t k1 = count_below(mo.Pminus, b);
        GridSpec wider = GridSpec::make(1, 1.5 * g.L, g.h);
        std::size_t k2 = count_below(assemble_magnetic(w, wider).Pminus, b);
        r.values.push_back({"kernel_count", double(k1)});
        r.values.push_back({"kernel_expected", b * 4 * g.L * g.L / (2 * kPi)});
        r.values.push_back({"kernel_count_wider", double(k2)});
        r.values.push_back({"kernel_expected_wider", b * 9 * g.L * g.L / (2 * kPi)});
        if (k2 <= k1) {
            r.max_violation = std::max(r.max_violation, 1.0);
            r.notes.push_back("near-zero count of P- does not grow with L");
        }
        r.samples = static_cast<int>(m);
        out.push_back(finish(r));
    }
    return out;
}

CheckResult check_brascamp_lieb(const WeightSpec& w, const GridSpec& g, const CheckOptions& opt) {
    if (w.n != 1) throw UnsupportedDimension("the projected inequalities use the one-variable kernel of Dbar (n = 1)");
    LeviField lf = levi_field(w, g);
    auto ops = assemble_dbar(w, g);
    KernelComplement kc(ops, true);
    FieldSampler fs(opt.seed);
    auto ratio = [&](const Vec& v) {
        Vec dv = ops.Dbar.apply(v);
        return 0.5 * inner_real(dv, apply_levi_inverse(lf, dv)) / v.squaredNorm();
    };
    CheckResult r = inequality("brascamp_lieb", "|v|^2 <= (1/2) <M^-1 Dbar v, Dbar v> for v orthogonal to ker Dbar", g,
                               opt, [&](int) {
                                   Vec v = kc.project(kc.embed * fs.smooth(g, interior_fields(g)));
                                   return ratio(v) - 1.0;
                               });
    EigenOptions eo;
    eo.keep_vectors = true;
    SpectrumResult low = smallest_eigenvalues(assemble_normal(ops), 1, eo);
    double sat = ratio(ops.Dadj.apply(low.vectors.col(0)));
    r.values.push_back({"lowest_mode_ratio", sat});
    r.values.push_back({"lowest_normal_eigenvalue", low.eigenvalues[0]});
    return finish(r);
}

CheckResult check_hormander(const WeightSpec& w, const GridSpec& g, const CheckOptions& opt) {
    if (w.n != 1) throw UnsupportedDimension("the projected inequalities use the one-variable kernel of Dbar (n = 1)");
    LeviField lf = levi_field(w, g);
    auto ops = assemble_dbar(w, g);
    KernelComplement kc(ops, true);
    FieldSampler fs(opt.seed);
    return finish(inequality("hormander", "|v|^2 <= <Dbar v, Dbar v / lambda> for v orthogonal to ker Dbar", g, opt,
                             [&](int) {
                                 Vec v = kc.project(kc.embed * fs.smooth(g, interior_fields(g)));
                                 Vec dv = ops.Dbar.apply(v);
                                 return inner_real(dv, divide_by_lowest(lf, dv)) / v.squaredNorm() - 1.0;
                             }));
}

CheckResult check_comp_ns(const WeightSpec& w, const GridSpec& g, const CheckOptions& opt) {
    if (w.n != 1) throw UnsupportedDimension("the canonical solve is one-variable here (n = 1)");
    auto ops = assemble_dbar(w, g);
    PositiveInverse normal_inv(SpMat(ops.Dbar.matrix() * ops.Dadj.matrix()), true);
    SparseOperator box = assemble_box(w, g, 1);
    std::unique_ptr<PositiveInverse> box_inv;
    try {
        box_inv = std::make_unique<PositiveInverse>(box.matrix(), true);
    } catch (const SingularOperator& e) {
        throw PreconditionFailure(std::string("box01 is not invertible: ") + e.what());
    }
    FieldSampler fs(opt.seed);
    return finish(inequality("comp_ns", "|S v|^2 <= <N v, v>", g, opt, [&](int) {
        Vec v = fs.smooth(g, interior_fields(g));
        // |S v|^2 = <(Dbar Dadj)^-1 v, v> for S v = Dadj (Dbar Dadj)^-1 v.
        double sv2 = inner_real(v, normal_inv.solve(v));
        double nv = inner_real(v, box_inv->solve(v));
        return (nv - sv2) / v.squaredNorm();
    }));
}

CheckResult check_ruelle(const WeightSpec& w, const GridSpec& g, const CheckOptions& opt) {
    LeviField lf = levi_field(w, g);
    SparseOperator box = assemble_box(w, g, 1);
    PositiveInverse box_inv(box.matrix(), w.n == 1);
    FieldSampler fs(opt.seed);
    return finish(inequality("ruelle", "<N v, v> <= (1/2) <M^-1 v, v>", g, opt, [&](int) {
        Vec v = smooth_form(fs, g, w.n);
        double nv = inner_real(v, box_inv.solve(v));
        return (0.5 * inner_real(v, apply_levi_inverse(lf, v)) - nv) / v.squaredNorm();
    }));
}

CheckResult check_diamagnetic(const WeightSpec& w, const GridSpec& g, const CheckOptions& opt) {
    require_one_variable(w, "the diamagnetic sandwich");
    MagneticOperators mo = assemble_magnetic(w, g);
    SpMat Bd = diagonal_matrix(mo.B.cast<cplx>());
    FieldSampler fs(opt.seed);
    return finish(inequality("diamagnetic",
                             "0 <= <B u,u>, <-Delta_A u,u> <= <(-Delta_A + B) u,u> <= 2 <-Delta_A u,u> + c_h |u|^2",
                             g, opt, [&](int) {
                                 Vec u = fs.smooth(g, interior_fields(g));
                                 double qb = inner_real(u, Bd * u);
                                 double qa = inner_real(u, mo.minusDeltaA.apply(u));
                                 double qplus = inner_real(u, mo.Pplus.apply(u));
                                 double qminus = inner_real(u, mo.Pminus.apply(u));
                                 double s = std::min({qb, qplus - qa, 2 * qa - qplus, qminus});
                                 return s / u.squaredNorm();
                             }));
}

RayleighSequence decoupled_rayleigh_sequence(const WeightSpec& w, int ell, int k, int count, const GridSpec& g1) {
    check_pair(w, ell, k);
    if (count < 1) throw std::invalid_argument("count must be at least 1");
    if (g1.n != 1) throw std::invalid_argument("Kronecker evaluation needs a one-variable grid");
    VariableFactors vf = variable_factors(w, g1);
    RayleighSequence out;
    const double cell = g1.h * g1.h;

    // Hypothesis: the k-th Levi entry lies in L^2 of the k-th weight.
    const Polynomial ckk = derivative_fields(make_weight(vf.phi[k], 1)).laplacian * Rational(1, 4);
    Eigen::VectorXd c = field_of(ckk, g1), ph = field_of(vf.phi[k], g1);
    Eigen::VectorXd dens = (c.array().square() * (-2.0 * ph.array()).exp()).matrix();
    auto wi = whole_and_inner(g1, dens);
    out.hypothesis_integral = wi.first;
    out.hypothesis_converged = converged(wi);

    // Following the right-hand side of the displayed identity: S_k acts on
    // u_nu as box00 plus multiplication by 2 phi_{k kbar}.
    const Vec& b = vf.ground[k];
    double rest = 0.0;
    for (int j = 0; j < w.n; ++j)
        if (j != ell) rest += quotient(vf.box[j], vf.ground[j]);
    const double field_term = 2.0 * inner_real(b, c.cast<cplx>().cwiseProduct(b)) / b.squaredNorm();

    auto family = orthonormal_monomials(vf.phi[ell], g1, count, out.analytic_norms);
    double others_norm2 = 1.0;
    for (int j = 0; j < w.n; ++j)
        if (j != ell) others_norm2 *= weighted_norm2(vf.ground[j], cell);
    for (int mu = 0; mu < count; ++mu)
        for (int nu = 0; nu < count; ++nu) {
            cplx gram = family[mu].dot(family[nu]) * cell * others_norm2;
            out.gram_deviation = std::max(out.gram_deviation, std::abs(gram - cplx(mu == nu ? 1.0 : 0.0)));
        }
    for (int nu = 0; nu < count; ++nu) {
        double q_ell = quotient(vf.box[ell], family[nu]);
        out.quotients.push_back(q_ell + rest + field_term);
        out.kernel_residuals.push_back(std::sqrt(std::max(0.0, q_ell + rest)));
        double bm = boundary_mass(g1, family[nu]);
        out.boundary_mass.push_back(bm);
        if (bm > 1e-8) out.unresolved.push_back(nu);
    }
    return out;
}

CheckResult check_kronecker_consistency(const WeightSpec& w, int ell, int k, int count, const GridSpec& g) {
    check_pair(w, ell, k);
    if (g.n != w.n) throw std::invalid_argument("grid and weight dimensions differ");
    GridSpec g1 = one_variable_grid(g);
    CheckResult r;
    r.id = "kronecker_consistency";
    r.statement = "Rayleigh quotients from one-variable factors equal those of the assembled box01";
    r.tolerance = 1e-12;
    RayleighSequence seq = decoupled_rayleigh_sequence(w, ell, k, count, g1);
    VariableFactors vf = variable_factors(w, g1);
    bool analytic = false;
    auto family = orthonormal_monomials(vf.phi[ell], g1, count, analytic);
    SparseOperator box = assemble_box(w, g, 1);
    const auto M = static_cast<Eigen::Index>(g.size());
    for (int nu = 0; nu < count; ++nu) {
        std::vector<Vec> factors;
        for (int j = 0; j < w.n; ++j) factors.push_back(j == ell ? family[nu] : vf.ground[j]);
        Vec u = kron_vectors(factors);
        Vec x = Vec::Zero(w.n * M);
        x.segment(k * M, M) = u;
        Vec y = box.apply(x);
        double direct = inner_real(u, y.segment(k * M, M)) / u.squaredNorm();
        double off = 0.0;
        for (int j = 0; j < w.n; ++j)
            if (j != k) off = std::max(off, y.segment(j * M, M).norm() / u.norm());
        r.max_violation = std::max({r.max_violation, std::abs(direct - seq.quotients[nu]) / std::abs(direct), off});
    }
    r.samples = count;
    return finish(r);
}

SolutionSequence decoupled_solution_sequence(const WeightSpec& w, int ell, int k, int count, const GridSpec& g1) {
    check_pair(w, ell, k);
    if (count < 1) throw std::invalid_argument("count must be at least 1");
    if (g1.n != 1) throw std::invalid_argument("the sequence is built on a one-variable grid");
    VariableFactors vf = variable_factors(w, g1);
    SolutionSequence out;
    const double cell = g1.h * g1.h;

    // Hypotheses: 1 in every weighted space, zbar in the k-th.
    out.hypotheses_converged = true;
    for (int j = 0; j < w.n; ++j) {
        Eigen::VectorXd ph = field_of(vf.phi[j], g1);
        auto wi = whole_and_inner(g1, (-2.0 * ph.array()).exp().matrix());
        out.constant_integral = std::max(out.constant_integral, wi.first);
        out.hypotheses_converged = out.hypotheses_converged && converged(wi);
        if (j == k) {
            Eigen::VectorXd r2 = field_of(parse_weight("abs2(z1)").phi, g1);
            auto wz = whole_and_inner(g1, (r2.array() * (-2.0 * ph.array()).exp()).matrix());
            out.zbar_integral = wz.first;
            out.hypotheses_converged = out.hypotheses_converged && converged(wz);
        }
    }

    // zbar - P zbar in gauge form is the canonical solution of Dbar r = Dbar(zbar e^-phi_k).
    auto ops_k = assemble_dbar(make_weight(vf.phi[k], 1), g1);
    const SpMat embed = flavour_embedding(g1.size());
    Vec zbar(static_cast<Eigen::Index>(g1.size()));
    {
        Eigen::VectorXd ph = field_of(vf.phi[k], g1);
        double pt[2];
        for (Eigen::Index p = 0; p < zbar.size(); ++p) {
            g1.point(static_cast<std::size_t>(p), pt);
            zbar[p] = cplx(pt[0], -pt[1]) * std::exp(-ph[p]);
        }
    }
    SolveOptions so;
    so.tol = 1e-12;
    Vec rhs = ops_k.Dbar.apply(embed * zbar);
    Vec r = canonical_solve(ops_k, rhs, so).solution;
    out.complement_norm2 = weighted_norm2(r, cell);
    if (!(out.complement_norm2 > 1e-12))
        throw std::runtime_error("zbar - P zbar vanishes on this grid: the Bergman projection is not resolved");

    Vec target = gaussian_monomial(vf.phi[k], g1, 0);  // gauge form of dzbar_k
    const double k_defect = (ops_k.Dbar.apply(r) - target).norm();
    double others = 1.0, others_res2 = 0.0;
    for (int j = 0; j < w.n; ++j) {
        if (j == ell || j == k) continue;
        auto ops_j = assemble_dbar(make_weight(vf.phi[j], 1), g1);
        double nj = vf.ground[j].norm();
        others_res2 += std::pow(ops_j.Dbar.apply(embed * vf.ground[j]).norm() / nj, 2);
        others *= nj;
    }
    auto ops_l = assemble_dbar(make_weight(vf.phi[ell], 1), g1);
    bool analytic = false;
    auto family = orthonormal_monomials(vf.phi[ell], g1, count, analytic);
    for (int nu = 0; nu < count; ++nu) {
        const Vec& a = family[nu];
        double an = a.norm(), rn = r.norm();
        out.h_norms.push_back(std::sqrt(weighted_norm2(a, cell) * out.complement_norm2) * others * std::sqrt(cell));
        // Components of Dbar h_nu - f_nu dzbar_k: the ell-derivative of the
        // holomorphic factor, the k-defect, and the remaining variables.
        double l_part = ops_l.Dbar.apply(embed * a).norm() * rn;
        double k_part = an * k_defect;
        double o_part = std::sqrt(others_res2) * an * rn;
        double scale = an * target.norm();
        out.residuals.push_back(std::sqrt(l_part * l_part + k_part * k_part + o_part * o_part) / scale);
    }
    for (double hn : out.h_norms) out.norm_spread = std::max(out.norm_spread, std::abs(hn / out.h_norms[0] - 1.0));
    return out;
}

CheckResult check_decoupled_solution(const WeightSpec& w, int ell, int k, int count, const GridSpec& g1) {
    CheckResult r;
    r.id = "decoupled_solution";
    r.statement = "|h_nu| constant along nu and Dbar h_nu -> f_nu dzbar_k under refinement";
    r.tolerance = 0.0;
    SolutionSequence coarse = decoupled_solution_sequence(w, ell, k, count, g1);
    SolutionSequence fine = decoupled_solution_sequence(w, ell, k, count, GridSpec::make(1, g1.L, g1.h / 2));
    double rc = *std::max_element(coarse.residuals.begin(), coarse.residuals.end());
    double rf = *std::max_element(fine.residuals.begin(), fine.residuals.end());
    r.values.push_back({"complement_norm2", coarse.complement_norm2});
    r.values.push_back({"complement_norm2_fine", fine.complement_norm2});
    r.values.push_back({"norm_spread", coarse.norm_spread});
    r.values.push_back({"residual_h", rc});
    r.values.push_back({"residual_h_half", rf});
    r.values.push_back({"residual_ratio", rf / rc});
    // Each part is scored against its own bound; the check passes when both are within.
    r.max_violation = std::max(coarse.norm_spread - 0.02, rf / rc - 0.55);
    if (!coarse.hypotheses_converged) {
        r.notes.push_back("weighted integrals of 1 or zbar did not converge on the box");
        r.max_violation = std::max(r.max_violation, 1.0);
    }
    r.samples = count;
    r.notes.push_back("violation is max(norm spread - 0.02, residual ratio - 0.55)");
    return finish(r);
}

std::vector<CheckResult> verify_all(const WeightSpec& w, const GridSpec& g, const CheckOptions& opt) {
    std::vector<CheckResult> out;
    auto guarded = [&](const std::string& id, const std::string& statement, auto&& fn) {
        try {
            out.push_back(fn());
        } catch (const PreconditionFailure& e) {
            out.push_back(skipped_result(id, statement, e.what()));
        }
    };
    out.push_back(check_adjointness(w, g, opt));
    out.push_back(check_identity_box01(w, g, opt));
    if (w.n == 1) {
        for (auto& r : check_pauli_relations(w, g, opt)) out.push_back(std::move(r));
        guarded("brascamp_lieb", "|v|^2 <= (1/2) <M^-1 Dbar v, Dbar v>", [&] { return check_brascamp_lieb(w, g, opt); });
        guarded("hormander", "|v|^2 <= <Dbar v, Dbar v / lambda>", [&] { return check_hormander(w, g, opt); });
        guarded("comp_ns", "|S v|^2 <= <N v, v>", [&] { return check_comp_ns(w, g, opt); });
    }
    guarded("ruelle", "<N v, v> <= (1/2) <M^-1 v, v>", [&] { return check_ruelle(w, g, opt); });
    if (w.n == 1) out.push_back(check_diamagnetic(w, g, opt));
    if (w.n >= 2 && split_by_variable(w.phi, w.n)) out.push_back(check_kronecker_consistency(w, 0, 1, 3, g));
    return out;
}

}  // namespace dbarlab
