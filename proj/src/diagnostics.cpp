#include "dbarlab/diagnostics.hpp"

#include "dbarlab/discretize.hpp"
#include "dbarlab/moments.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

namespace dbarlab {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

void require_one_variable(const WeightSpec& w, const char* what) {
    if (w.n != 1)
        throw UnsupportedDimension(std::string(what) + " is only defined for one complex variable (n = 1)");
}

// Uniform in [0, 1) from the top 53 bits; identical on every platform.
double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double std_normal(std::mt19937_64& rng) {
    double u1 = unit_uniform(rng), u2 = unit_uniform(rng);
    return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * kPi * u2);
}

double norm2(const Point2& p) { return std::hypot(p[0], p[1]); }

// For each distinct |c| (rounded to 1e-9) keep the smallest (or largest) value.
std::pair<std::vector<double>, std::vector<double>> profile_by_radius(const std::vector<double>& r,
                                                                      const std::vector<double>& v, bool take_max) {
    std::map<long long, std::pair<double, double>> best;
    for (std::size_t i = 0; i < r.size(); ++i) {
        long long key = std::llround(r[i] * 1e9);
        auto it = best.find(key);
        if (it == best.end())
            best.emplace(key, std::make_pair(r[i], v[i]));
        else
            it->second.second = take_max ? std::max(it->second.second, v[i]) : std::min(it->second.second, v[i]);
    }
    std::vector<double> xs, ys;
    for (const auto& [k, p] : best) {
        xs.push_back(p.first);
        ys.push_back(p.second);
    }
    return {xs, ys};
}

double outer_min(const std::vector<double>& y) {
    return *std::min_element(y.begin() + static_cast<long>(y.size() / 2), y.end());
}

Verdict growth_to_verdict(const std::string& label) {
    if (label == "divergent") return Verdict::Satisfied;
    if (label == "bounded") return Verdict::Violated;
    return Verdict::Inconclusive;
}

// Lowest eigenvalue of a real sparse matrix with a positive ground state
// (M-matrix), by inverse iteration shifted to `sigma` below the spectrum.
double lowest_by_inverse_iteration(const Eigen::SparseMatrix<double>& A, double sigma) {
    using RMat = Eigen::SparseMatrix<double>;
    RMat shifted = A;
    for (Eigen::Index i = 0; i < A.rows(); ++i) shifted.coeffRef(i, i) -= sigma;
    shifted.makeCompressed();
    Eigen::SparseLU<RMat> lu;
    lu.compute(shifted);
    if (lu.info() != Eigen::Success) throw std::runtime_error("local eigensolve: factorization failed");
    Eigen::VectorXd x = Eigen::VectorXd::Ones(A.rows());
    x.normalize();
    double lambda = std::numeric_limits<double>::quiet_NaN();
    for (int it = 0; it < 20000; ++it) {
        Eigen::VectorXd y = lu.solve(x);
        double mu = x.dot(y);
        double next = sigma + 1.0 / mu;
        x = y.normalized();
        if (it > 2 && std::abs(next - lambda) <= 1e-13 * std::abs(next)) {
            double res = (A * x - next * x).norm();
            if (res <= 1e-7 * (1.0 + std::abs(next))) return next;
        }
        lambda = next;
    }
    throw std::runtime_error("local eigensolve: inverse iteration did not converge");
}

std::vector<std::size_t> sorted_by_radius(const std::vector<Point2>& pts) {
    std::vector<std::size_t> order(pts.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return norm2(pts[a]) < norm2(pts[b]);
    });
    return order;
}

// Degree in t of p(t * dir), ignoring coefficients that cancel to rounding level.
int ray_degree(const Polynomial& p, const std::vector<double>& dir) {
    if (p.is_zero()) return -1;
    std::map<unsigned, double> coeff;
    double scale = 0.0;
    for (const auto& [e, c] : p.terms()) {
        double cd = to_double(c);
        double m = cd;
        unsigned d = 0;
        for (std::size_t v = 0; v < e.size(); ++v) {
            for (unsigned k = 0; k < e[v]; ++k) m *= dir[v];
            d += e[v];
        }
        coeff[d] += m;
        scale += std::abs(cd);
    }
    int deg = -1;
    for (const auto& [d, c] : coeff)
        if (std::abs(c) > 1e-10 * scale) deg = static_cast<int>(d);
    return deg;
}

int ray_degree(const std::vector<Polynomial>& terms, const std::vector<double>& dir) {
    int deg = -1;
    for (const auto& p : terms) deg = std::max(deg, ray_degree(p, dir));
    return deg;
}

std::vector<std::vector<double>> sample_directions(int dim, int random, std::uint64_t seed) {
    std::vector<std::vector<double>> dirs;
    if (dim == 2) {
        for (int k = 0; k < 16; ++k) dirs.push_back({std::cos(2 * kPi * k / 16), std::sin(2 * kPi * k / 16)});
    } else {
        for (int a = 0; a < dim; ++a)
            for (double s : {1.0, -1.0}) {
                std::vector<double> d(dim, 0.0);
                d[a] = s;
                dirs.push_back(d);
            }
    }
    std::mt19937_64 rng(seed);
    for (int k = 0; k < random; ++k) {
        std::vector<double> d(dim);
        double nn = 0.0;
        for (auto& x : d) {
            x = std_normal(rng);
            nn += x * x;
        }
        for (auto& x : d) x /= std::sqrt(nn);
        dirs.push_back(d);
    }
    return dirs;
}

std::vector<CompiledPolynomial> compile_all(const std::vector<Polynomial>& ps) {
    std::vector<CompiledPolynomial> out;
    for (const auto& p : ps) out.emplace_back(p);
    return out;
}

std::vector<Polynomial> terms_up_to(const WeightSpec& w, int r) {
    std::vector<Polynomial> all;
    for (int q = 1; q <= r; ++q) {
        auto t = field_derivative_terms(w, q);
        all.insert(all.end(), t.begin(), t.end());
    }
    return all;
}

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

}  // namespace

std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::Satisfied: return "satisfied";
    case Verdict::Violated: return "violated";
    case Verdict::Inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

double CriterionReport::constant(const std::string& name) const {
    for (const auto& [k, v] : constants)
        if (k == name) return v;
    throw std::out_of_range("report " + id + " has no constant '" + name + "'");
}

bool CriterionReport::has_constant(const std::string& name) const {
    for (const auto& [k, v] : constants)
        if (k == name) return true;
    return false;
}

GrowthFit classify_growth(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("growth fit needs at least two samples");
    GrowthFit out;
    const std::size_t start = x.size() / 2;
    double scale = 0.0;
    for (double v : y) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) {
        out.label = "bounded";
        return out;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (std::size_t i = start; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
        double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++m;
    }
    if (m >= 2 && m * sxx - sx * sx > 0.0) out.power = (m * sxy - sx * sy) / (m * sxx - sx * sx);

    double lo = y[start], hi = y[start];
    bool increasing = true, non_increasing = true;
    for (std::size_t i = start; i < x.size(); ++i) {
        lo = std::min(lo, y[i]);
        hi = std::max(hi, y[i]);
        if (i > start) {
            const double tol = 1e-9 * scale;
            if (y[i] < y[i - 1] - tol) increasing = false;
            if (y[i] > y[i - 1] + tol) non_increasing = false;
        }
    }
    const bool flat = hi - lo <= 0.05 * std::max(std::abs(hi), std::abs(lo));
    if (flat || non_increasing)
        out.label = "bounded";
    else if (increasing && out.power > 0.3)
        out.label = "divergent";
    else
        out.label = "inconclusive";
    return out;
}

std::vector<Point2> ray_points(const std::vector<double>& radii, int angles) {
    if (angles < 1) throw std::invalid_argument("need at least one ray");
    std::vector<Point2> pts;
    for (double r : radii)
        for (int a = 0; a < angles; ++a) {
            if (r == 0.0 && a > 0) break;
            double t = 2 * kPi * a / angles;
            pts.push_back({r * std::cos(t), r * std::sin(t)});
        }
    return pts;
}

CriterionReport doubling_check(const WeightSpec& w, const std::vector<Point2>& centers,
                               const std::vector<double>& radii) {
    require_one_variable(w, "doubling check");
    if (centers.empty() || radii.empty()) throw std::invalid_argument("doubling check needs centres and radii");
    for (double r : radii)
        if (!(r > 0.0)) throw std::invalid_argument("doubling radii must be positive");
    const Polynomial V = derivative_fields(w).laplacian;

    CriterionReport rep;
    rep.id = "doubling";
    rep.statement = "nu = (Laplacian of phi) dx is doubling and nu(B(z,1)) is bounded below";
    rep.anchor = "class of weights with doubling Laplacian measure";
    rep.columns = {"cx", "cy", "center_abs", "r", "nu_r", "nu_2r", "ratio"};

    double sup_ratio = 0.0, delta = std::numeric_limits<double>::infinity();
    bool undefined = false, infinite = false;
    std::vector<double> rad, worst;
    for (std::size_t i : sorted_by_radius(centers)) {
        const auto& c = centers[i];
        double unit = disc_integral(V, c[0], c[1], 1.0);
        delta = std::min(delta, unit);
        double worst_here = 0.0;
        for (double r : radii) {
            double a = disc_integral(V, c[0], c[1], r), b = disc_integral(V, c[0], c[1], 2 * r);
            double ratio = std::numeric_limits<double>::quiet_NaN();
            if (a > 0.0) {
                ratio = b / a;
                sup_ratio = std::max(sup_ratio, ratio);
                worst_here = std::max(worst_here, ratio);
            } else if (b > 0.0) {
                infinite = true;
            } else {
                undefined = true;
            }
            rep.rows.push_back({c[0], c[1], norm2(c), r, a, b, ratio});
        }
        rad.push_back(norm2(c));
        worst.push_back(worst_here);
    }
    auto [xs, ys] = profile_by_radius(rad, worst, true);
    rep.constants.push_back({"delta", delta});
    if (sup_ratio > 0.0) rep.constants.push_back({"doubling_constant", sup_ratio});

    if (undefined) rep.notes.push_back("nu vanishes on some sampled balls; the doubling ratio is undefined there");
    if (xs.size() >= 2) {
        GrowthFit g = classify_growth(xs, ys);
        rep.growth = g.label;
    } else {
        rep.growth = "inconclusive";
    }
    if (!(delta > 0.0)) {
        rep.verdict = Verdict::Violated;
        rep.notes.push_back("inf nu(B(z,1)) = " + fmt(delta) + ": the lower bound on unit balls fails");
    } else if (infinite) {
        rep.verdict = Verdict::Violated;
        rep.notes.push_back("some ball has nu(B(c,r)) = 0 < nu(B(c,2r))");
    } else if (undefined || rep.growth == "divergent") {
        rep.verdict = Verdict::Inconclusive;
    } else {
        rep.verdict = rep.growth == "bounded" ? Verdict::Satisfied : Verdict::Inconclusive;
    }
    return rep;
}

CriterionReport reverse_holder_check(const WeightSpec& w, const std::vector<Cube>& cubes) {
    require_one_variable(w, "reverse Hoelder check");
    if (cubes.empty()) throw std::invalid_argument("reverse Hoelder check needs cubes");
    const Polynomial V = derivative_fields(w).laplacian;
    const Polynomial V2 = V * V;

    CriterionReport rep;
    rep.id = "reverse_holder";
    rep.statement = "V = Laplacian of phi is in the reverse Hoelder class B2";
    rep.anchor = "reverse Hoelder class of the Laplacian of the weight";
    rep.columns = {"cx", "cy", "side", "mean_V", "rms_V", "ratio"};

    std::vector<std::size_t> order(cubes.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        double ra = std::hypot(cubes[a].cx, cubes[a].cy), rb = std::hypot(cubes[b].cx, cubes[b].cy);
        return ra != rb ? ra < rb : cubes[a].side < cubes[b].side;
    });
    double sup = 0.0;
    int skipped = 0;
    std::vector<double> rad, ratio;
    for (std::size_t i : order) {
        const Cube& q = cubes[i];
        if (!(q.side > 0.0)) throw std::invalid_argument("cube side must be positive");
        double area = q.side * q.side;
        double mean = square_integral(V, q.cx, q.cy, q.side) / area;
        double rms = std::sqrt(std::max(0.0, square_integral(V2, q.cx, q.cy, q.side) / area));
        if (!(mean > 0.0)) {
            ++skipped;
            rep.rows.push_back({q.cx, q.cy, q.side, mean, rms, std::numeric_limits<double>::quiet_NaN()});
            continue;
        }
        double r = rms / mean;
        sup = std::max(sup, r);
        rep.rows.push_back({q.cx, q.cy, q.side, mean, rms, r});
        rad.push_back(std::hypot(q.cx, q.cy));
        ratio.push_back(r);
    }
    if (skipped) rep.notes.push_back(std::to_string(skipped) + " cube(s) with zero integral of V skipped");
    if (ratio.empty()) {
        rep.verdict = Verdict::Inconclusive;
        rep.growth = "inconclusive";
        return rep;
    }
    rep.constants.push_back({"b2_constant", sup});
    auto [xs, ys] = profile_by_radius(rad, ratio, true);
    rep.growth = xs.size() >= 2 ? classify_growth(xs, ys).label : "bounded";
    rep.verdict = rep.growth == "divergent" ? Verdict::Inconclusive : Verdict::Satisfied;
    return rep;
}

CriterionReport mass_growth(const WeightSpec& w, const MassGrowthOptions& opt) {
    require_one_variable(w, "mass growth");
    if (opt.radii.size() < 2) throw std::invalid_argument("mass growth needs at least two radii");
    double rmax = *std::max_element(opt.radii.begin(), opt.radii.end());
    if (!(rmax >= 0.8 * opt.L_eval))
        throw std::invalid_argument("mass growth centres must reach 0.8 L_eval (" + fmt(0.8 * opt.L_eval) + ")");
    const Polynomial V = derivative_fields(w).laplacian;
    const Polynomial V2 = V * V;

    CriterionReport rep;
    rep.id = "mass_growth";
    rep.statement = "integral of the Laplacian of phi over B(z,1) tends to infinity";
    rep.anchor = "compactness criterion by unit-disc mass of the Laplacian";
    rep.columns = {"center_abs", "mass", "mass_of_square"};

    std::vector<double> radii = opt.radii;
    std::sort(radii.begin(), radii.end());
    radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
    std::vector<double> mass, mass2;
    for (double r : radii) {
        double m = std::numeric_limits<double>::infinity(), m2 = m;
        for (const auto& c : ray_points({r}, opt.angles)) {
            m = std::min(m, disc_integral(V, c[0], c[1], 1.0));
            m2 = std::min(m2, disc_integral(V2, c[0], c[1], 1.0));
        }
        mass.push_back(m);
        mass2.push_back(m2);
        rep.rows.push_back({r, m, m2});
    }
    GrowthFit g = classify_growth(radii, mass);
    GrowthFit g2 = classify_growth(radii, mass2);
    rep.growth = g.label;
    rep.verdict = growth_to_verdict(g.label);
    rep.constants.push_back({"fitted_power", g.power});
    double lim = outer_min(mass);
    rep.constants.push_back({"liminf_estimate", lim});
    rep.constants.push_back({"field_square_fitted_power", g2.power});
    rep.notes.push_back("field-square profile (necessary condition for constant-sign fields): " + g2.label);
    rep.notes.push_back(lim > 0.0 ? "unit-disc mass stays positive on the outer samples"
                                  : "unit-disc mass vanishes on the outer samples: the positivity condition fails");
    return rep;
}

double disc_ground_energy(const Polynomial& V, double cx, double cy, double radius, double h) {
    if (!(radius > 0.0) || !(h > 0.0) || h > radius / 4)
        throw std::invalid_argument("disc eigensolve needs radius > 0 and 0 < h <= radius / 4");
    const CompiledPolynomial v(V.num_vars() >= 2 ? V : V.promoted(2));
    const int K = static_cast<int>(std::ceil(radius / h));
    const int W = 2 * K + 1;
    std::vector<int> index(static_cast<std::size_t>(W) * W, -1);
    auto at = [&](int i, int j) -> int& { return index[static_cast<std::size_t>(i + K) * W + (j + K)]; };
    auto inside = [&](int i, int j) {
        return std::abs(i) <= K && std::abs(j) <= K && std::hypot(i * h, j * h) < radius * (1 - 1e-12);
    };
    int count = 0;
    for (int i = -K; i <= K; ++i)
        for (int j = -K; j <= K; ++j)
            if (inside(i, j)) at(i, j) = count++;

    std::vector<Eigen::Triplet<double>> trip;
    double vmin = std::numeric_limits<double>::infinity();
    for (int i = -K; i <= K; ++i)
        for (int j = -K; j <= K; ++j) {
            if (!inside(i, j)) continue;
            const int row = at(i, j);
            const double x = i * h, y = j * h;
            const double reach_x = std::sqrt(radius * radius - y * y), reach_y = std::sqrt(radius * radius - x * x);
            // Arm lengths: h to an interior neighbour, else the distance to the circle.
            double e = inside(i + 1, j) ? h : reach_x - x;
            double wv = inside(i - 1, j) ? h : reach_x + x;
            double n = inside(i, j + 1) ? h : reach_y - y;
            double s = inside(i, j - 1) ? h : reach_y + y;
            double ae = 2 / (e * (e + wv)), aw = 2 / (wv * (e + wv));
            double an = 2 / (n * (n + s)), as = 2 / (s * (n + s));
            double pt[2] = {cx + x, cy + y};
            double pot = v(pt);
            vmin = std::min(vmin, pot);
            trip.emplace_back(row, row, ae + aw + an + as + pot);
            if (inside(i + 1, j)) trip.emplace_back(row, at(i + 1, j), -ae);
            if (inside(i - 1, j)) trip.emplace_back(row, at(i - 1, j), -aw);
            if (inside(i, j + 1)) trip.emplace_back(row, at(i, j + 1), -an);
            if (inside(i, j - 1)) trip.emplace_back(row, at(i, j - 1), -as);
        }
    Eigen::SparseMatrix<double> A(count, count);
    A.setFromTriplets(trip.begin(), trip.end());
    return lowest_by_inverse_iteration(A, vmin);
}

double square_ground_energy(const Polynomial& V, double cx, double cy, double side, int nodes) {
    if (!(side > 0.0) || nodes < 3) throw std::invalid_argument("square eigensolve needs side > 0 and nodes >= 3");
    const CompiledPolynomial v(V.num_vars() >= 2 ? V : V.promoted(2));
    const double h = side / (nodes + 1);
    const double inv = 1.0 / (h * h);
    auto id = [&](int i, int j) { return i * nodes + j; };
    std::vector<Eigen::Triplet<double>> trip;
    double vmin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < nodes; ++i)
        for (int j = 0; j < nodes; ++j) {
            double pt[2] = {cx - side / 2 + (i + 1) * h, cy - side / 2 + (j + 1) * h};
            double pot = v(pt);
            vmin = std::min(vmin, pot);
            trip.emplace_back(id(i, j), id(i, j), 4 * inv + pot);
            if (i > 0) trip.emplace_back(id(i, j), id(i - 1, j), -inv);
            if (i + 1 < nodes) trip.emplace_back(id(i, j), id(i + 1, j), -inv);
            if (j > 0) trip.emplace_back(id(i, j), id(i, j - 1), -inv);
            if (j + 1 < nodes) trip.emplace_back(id(i, j), id(i, j + 1), -inv);
        }
    Eigen::SparseMatrix<double> A(nodes * nodes, nodes * nodes);
    A.setFromTriplets(trip.begin(), trip.end());
    return lowest_by_inverse_iteration(A, vmin);
}

CriterionReport ground_energy_profile(const WeightSpec& w, const GroundEnergyOptions& opt) {
    require_one_variable(w, "ground energy profile");
    if (opt.radii.size() < 2) throw std::invalid_argument("ground energy profile needs at least two radii");
    const Polynomial V = derivative_fields(w).laplacian;

    CriterionReport rep;
    rep.id = "ground_energy";
    rep.statement = "lowest Dirichlet eigenvalue of -Laplacian + V in B(z,1) tends to infinity";
    rep.anchor = "compactness criterion by local ground energies";
    rep.columns = {"center_abs", "lambda0"};

    std::vector<double> radii = opt.radii;
    std::sort(radii.begin(), radii.end());
    radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
    std::vector<double> lam;
    for (double r : radii) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& c : ray_points({r}, opt.angles))
            best = std::min(best, disc_ground_energy(V, c[0], c[1], 1.0, opt.h));
        lam.push_back(best);
        rep.rows.push_back({r, best});
    }
    GrowthFit g = classify_growth(radii, lam);
    rep.growth = g.label;
    rep.verdict = growth_to_verdict(g.label);
    rep.constants.push_back({"fitted_power", g.power});
    rep.constants.push_back({"min_lambda0", *std::min_element(lam.begin(), lam.end())});
    return rep;
}

double fefferman_phong_profile(double t, double beta) { return t <= 1.0 ? t : std::pow(t, beta); }

CriterionReport fefferman_phong_fit(const WeightSpec& w, const FeffermanPhongOptions& opt) {
    require_one_variable(w, "Fefferman-Phong fit");
    if (opt.training < 2 || opt.training >= opt.cubes)
        throw std::invalid_argument("need 2 <= training cubes < total cubes");
    const Polynomial V = derivative_fields(w).laplacian;

    CriterionReport rep;
    rep.id = "fefferman_phong";
    rep.statement = "C m(R^2 Theta_Q)/R^2 <= lambda0(Q) on squares, with m(t) = t (t <= 1), t^beta (t > 1)";
    rep.anchor = "Fefferman-Phong type lower bound for local ground energies";
    rep.columns = {"cx", "cy", "side", "theta", "lambda0", "training", "bound", "slack"};

    std::mt19937_64 rng(opt.seed);
    struct Sample {
        Cube q;
        double theta, lambda0;
    };
    std::vector<Sample> cubes;
    for (int k = 0; k < opt.cubes; ++k) {
        double rho = opt.max_center_radius * unit_uniform(rng);
        double ang = 2 * kPi * unit_uniform(rng);
        double side = opt.min_side * std::pow(opt.max_side / opt.min_side, unit_uniform(rng));
        Cube q{rho * std::cos(ang), rho * std::sin(ang), side};
        double theta = square_integral(V, q.cx, q.cy, side) / (side * side);
        cubes.push_back({q, theta, square_ground_energy(V, q.cx, q.cy, side, opt.nodes)});
    }

    // Slope of log(lambda0 R^2) against log(R^2 Theta) where the profile is a power.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (int k = 0; k < opt.training; ++k) {
        double t = cubes[k].q.side * cubes[k].q.side * cubes[k].theta;
        if (!(t > 1.0)) continue;
        double lx = std::log(t), ly = std::log(cubes[k].lambda0 * cubes[k].q.side * cubes[k].q.side);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++m;
    }
    double beta = 0.5;
    if (m >= 2 && m * sxx - sx * sx > 0.0)
        beta = std::clamp((m * sxy - sx * sy) / (m * sxx - sx * sx), 0.05, 0.95);
    else
        rep.notes.push_back("fewer than two training squares with R^2 Theta > 1; beta set to 1/2");

    double C = std::numeric_limits<double>::infinity();
    for (int k = 0; k < opt.training; ++k) {
        double R2 = cubes[k].q.side * cubes[k].q.side;
        double mt = fefferman_phong_profile(R2 * cubes[k].theta, beta);
        if (mt > 0.0) C = std::min(C, cubes[k].lambda0 * R2 / mt);
    }
    const bool trivial = std::isinf(C);
    int violations = 0;
    double min_slack = std::numeric_limits<double>::infinity();
    for (int k = 0; k < opt.cubes; ++k) {
        const auto& s = cubes[k];
        double R2 = s.q.side * s.q.side;
        double bound = trivial ? 0.0 : C * fefferman_phong_profile(R2 * s.theta, beta) / R2;
        double slack = s.lambda0 - bound;
        bool training = k < opt.training;
        if (!training) {
            min_slack = std::min(min_slack, slack / s.lambda0);
            if (slack < 0.0) ++violations;
        }
        rep.rows.push_back({s.q.cx, s.q.cy, s.q.side, s.theta, s.lambda0, training ? 1.0 : 0.0, bound, slack});
    }
    rep.constants.push_back({"beta", beta});
    if (!trivial) rep.constants.push_back({"C", C});
    rep.constants.push_back({"heldout_violations", static_cast<double>(violations)});
    rep.constants.push_back({"heldout_min_relative_slack", min_slack});
    rep.notes.push_back("V is assumed in A_infinity; see the reverse Hoelder report");
    if (trivial) {
        rep.notes.push_back("Theta_Q = 0 on every training square: the bound reads 0 <= lambda0");
        rep.verdict = Verdict::Satisfied;
    } else {
        rep.verdict = (C > 0.0 && violations == 0) ? Verdict::Satisfied : Verdict::Violated;
    }
    return rep;
}

std::vector<Polynomial> magnetic_field_components(const WeightSpec& w) {
    const DerivativeFields f = derivative_fields(w);
    std::vector<Polynomial> out;
    const std::size_t d = f.A.size();
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t k = j + 1; k < d; ++k) out.push_back(f.A[k].derivative(j) - f.A[j].derivative(k));
    return out;
}

std::vector<Polynomial> field_derivative_terms(const WeightSpec& w, int q) {
    if (q < 1) throw std::invalid_argument("field derivative order q must be at least 1");
    const std::size_t d = static_cast<std::size_t>(2 * w.n);
    std::vector<Polynomial> level = magnetic_field_components(w);
    // Each multi-index alpha is visited once: derivatives are applied in
    // non-decreasing variable order.
    std::vector<std::pair<Polynomial, std::size_t>> cur;
    for (auto& b : level) cur.push_back({b, 0});
    for (int step = 1; step < q; ++step) {
        std::vector<std::pair<Polynomial, std::size_t>> next;
        for (const auto& [p, from] : cur)
            for (std::size_t v = from; v < d; ++v) next.push_back({p.derivative(v), v});
        cur = std::move(next);
    }
    std::vector<Polynomial> out;
    for (auto& [p, v] : cur)
        if (!p.is_zero()) out.push_back(p);
    return out;
}

double sum_abs(const std::vector<CompiledPolynomial>& terms, const double* x) {
    double s = 0.0;
    for (const auto& t : terms) s += std::abs(t(x));
    return s;
}

CriterionReport hm_quantities(const WeightSpec& w, const HmOptions& opt) {
    if (opt.r_max < 1) throw std::invalid_argument("r_max must be at least 1");
    CriterionReport rep;
    rep.id = "helffer_mohamed";
    rep.statement = "m^r -> infinity and m_{r+1} <= C m^r for some r";
    rep.anchor = "compactness criterion by derivatives of the magnetic field";
    rep.columns = {"r", "min_ray_degree_mr", "max_degree_excess", "sup_ratio", "certified"};
    rep.notes.push_back("m^r = 1 + m_1 + ... + m_r (the q = 0 term is taken as 0)");

    const int dim = 2 * w.n;
    const auto dirs = sample_directions(dim, opt.random_directions, opt.seed);
    int certified = -1;
    double certified_C = 0.0;
    for (int r = 1; r <= opt.r_max; ++r) {
        const auto low = terms_up_to(w, r);
        const auto high = field_derivative_terms(w, r + 1);
        const auto low_c = compile_all(low), high_c = compile_all(high);
        int min_deg = std::numeric_limits<int>::max(), excess = std::numeric_limits<int>::min();
        for (const auto& dir : dirs) {
            int dl = std::max(0, ray_degree(low, dir));  // the constant 1 has degree 0
            int dh = ray_degree(high, dir);
            min_deg = std::min(min_deg, dl);
            excess = std::max(excess, dh < 0 ? -1 : dh - dl);
        }
        double sup = 0.0;
        std::vector<double> pt(dim);
        for (const auto& dir : dirs)
            for (int s = 0; s <= opt.samples_per_ray; ++s) {
                double t = opt.sample_radius * s / opt.samples_per_ray;
                for (int a = 0; a < dim; ++a) pt[a] = t * dir[a];
                sup = std::max(sup, sum_abs(high_c, pt.data()) / (1.0 + sum_abs(low_c, pt.data())));
            }
        const bool ok = min_deg >= 1 && excess <= 0;
        rep.rows.push_back({double(r), double(min_deg), double(excess), sup, ok ? 1.0 : 0.0});
        if (ok && certified < 0) {
            certified = r;
            certified_C = sup;
        }
    }
    if (certified > 0) {
        rep.verdict = Verdict::Satisfied;
        rep.constants.push_back({"r", double(certified)});
        rep.constants.push_back({"C", certified_C});
    } else {
        rep.verdict = Verdict::Violated;
        rep.notes.push_back("criterion not satisfied up to r_max = " + std::to_string(opt.r_max));
        const auto& first = rep.rows.front();
        if (first[1] < 1) rep.notes.push_back("m^r stays bounded along some ray");
    }
    return rep;
}

std::vector<CriterionReport> levi_conditions(const WeightSpec& w, const LeviOptions& opt) {
    if (opt.radii.size() < 2) throw std::invalid_argument("Levi conditions need at least two radii");
    std::vector<double> radii = opt.radii;
    std::sort(radii.begin(), radii.end());
    radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
    if (!(radii.front() > 0.0)) throw std::invalid_argument("Levi sphere radii must be positive");

    const int dim = 2 * w.n;
    std::vector<std::vector<double>> dirs;
    for (int a = 0; a < dim; ++a)
        for (double s : {1.0, -1.0}) {
            std::vector<double> d(dim, 0.0);
            d[a] = s;
            dirs.push_back(d);
        }
    for (auto& d : sample_directions(dim, opt.directions, opt.seed)) dirs.push_back(d);

    const LeviEvaluator levi(w);
    const CompiledPolynomial lap(derivative_fields(w).laplacian);
    std::vector<double> lam, lam_r2, t_at;
    std::vector<double> pt(dim);
    for (double R : radii) {
        double lmin = std::numeric_limits<double>::infinity(), tmin = std::numeric_limits<double>::infinity();
        for (const auto& d : dirs) {
            for (int a = 0; a < dim; ++a) pt[a] = R * d[a];
            double l = levi.lowest_eigenvalue(pt.data());
            double trace_lap = lap(pt.data());
            lmin = std::min(lmin, l);
            if (trace_lap > 1e-12) tmin = std::min(tmin, l / trace_lap);
        }
        lam.push_back(lmin);
        lam_r2.push_back(R * R * lmin);
        t_at.push_back(tmin);
    }
    // t(R): best t valid on all sampled points with |z| >= R.
    std::vector<double> t_out(t_at.size());
    double run = std::numeric_limits<double>::infinity();
    for (std::size_t i = t_at.size(); i-- > 0;) {
        run = std::min(run, t_at[i]);
        t_out[i] = run;
    }

    auto base = [&](const std::string& id, const std::string& statement, const std::string& anchor) {
        CriterionReport r;
        r.id = id;
        r.statement = statement;
        r.anchor = anchor;
        r.columns = {"radius", "min_levi", "radius2_min_levi", "trace_ratio_t"};
        for (std::size_t i = 0; i < radii.size(); ++i)
            r.rows.push_back({radii[i], lam[i], lam_r2[i], std::isinf(t_out[i]) ? -1.0 : t_out[i]});
        return r;
    };
    double lscale = 1.0;
    for (double l : lam) lscale = std::max(lscale, std::abs(l));

    std::vector<CriterionReport> out;
    {
        CriterionReport r = base("levi_positive", "liminf of the lowest Levi eigenvalue is positive",
                                 "compactness of the Neumann operator under a positive Levi bound");
        double tail = outer_min(lam);
        r.constants.push_back({"liminf_estimate", tail});
        std::vector<double> outer(lam.begin() + static_cast<long>(lam.size() / 2), lam.end());
        bool non_decreasing = std::is_sorted(outer.begin(), outer.end());
        double hi = *std::max_element(outer.begin(), outer.end());
        if (tail <= 1e-12 * lscale) {
            r.verdict = Verdict::Violated;
            r.notes.push_back("lowest Levi eigenvalue vanishes at sampled points far out");
        } else if (non_decreasing || tail >= 0.95 * hi) {
            r.verdict = Verdict::Satisfied;
        } else {
            r.verdict = Verdict::Inconclusive;
            r.notes.push_back("lowest Levi eigenvalue decreases over the sampled range");
        }
        out.push_back(std::move(r));
    }
    {
        CriterionReport r = base("levi_divergent", "lowest Levi eigenvalue tends to infinity",
                                 "compact resolvent of the (0,1) box operator");
        GrowthFit g = classify_growth(radii, lam);
        r.growth = g.label;
        r.verdict = growth_to_verdict(g.label);
        r.constants.push_back({"fitted_power", g.power});
        out.push_back(std::move(r));
    }
    {
        CriterionReport r = base("levi_radial", "|z|^2 times the lowest Levi eigenvalue tends to infinity",
                                 "infinite-dimensional weighted Bergman space");
        GrowthFit g = classify_growth(radii, lam_r2);
        r.growth = g.label;
        r.verdict = growth_to_verdict(g.label);
        r.constants.push_back({"fitted_power", g.power});
        out.push_back(std::move(r));
    }
    {
        CriterionReport r = base("levi_trace_ratio", "M >= t (Laplacian of phi) I outside a compact set, t in (0,1/4)",
                                 "compactness transfer from the weighted Laplacian to the box operator");
        r.notes.push_back("the accompanying compact-resolvent hypothesis is read as the function-level weighted "
                          "Laplacian (4 box00 + Laplacian of phi); it is measured by the counting function, not here");
        const std::size_t mid = t_out.size() / 2;
        if (std::isinf(t_out[mid])) {
            r.verdict = Verdict::Inconclusive;
            r.notes.push_back("Laplacian of phi vanishes on the outer samples; t is undefined");
        } else if (t_out[mid] > 1e-12) {
            r.verdict = Verdict::Satisfied;
            r.constants.push_back({"t_max", t_out[mid]});
            r.constants.push_back({"t_used", std::min(t_out[mid], 0.125)});
            if (t_out[mid] >= 0.25 - 1e-12) r.notes.push_back("t = 1/4 is attained; every t in (0,1/4) works");
        } else {
            r.verdict = Verdict::Violated;
            r.constants.push_back({"t_max", t_out[mid]});
        }
        out.push_back(std::move(r));
    }
    return out;
}

CriterionReport hr_condition(const WeightSpec& w, const HrOptions& opt) {
    auto parts = split_by_variable(w.phi, w.n);
    if (!parts) throw std::invalid_argument("condition on disjoint balls needs a decoupled weight");
    if (opt.balls < 2) throw std::invalid_argument("need at least two balls");

    CriterionReport rep;
    rep.id = "hr_condition";
    rep.statement = "some component satisfies m_{r+1} <= C m^r on a sequence of disjoint unit balls";
    rep.anchor = "non-compactness of the box operator for decoupled weights";
    rep.columns = {"component", "r", "ray", "ball", "center_abs", "sup_ratio"};

    std::mt19937_64 rng(opt.seed);
    std::vector<Point2> offsets{{0.0, 0.0}};
    for (int s = 1; s < opt.samples_per_ball; ++s) {
        double rho = std::sqrt(unit_uniform(rng)), ang = 2 * kPi * unit_uniform(rng);
        offsets.push_back({rho * std::cos(ang), rho * std::sin(ang)});
    }
    const std::vector<Point2> rays{{1.0, 0.0}, {std::sqrt(0.5), std::sqrt(0.5)}};

    bool any = false;
    for (int j = 0; j < w.n; ++j) {
        WeightSpec cw = make_weight(component_in_one_variable(w, j), 1);
        int found = -1;
        double found_C = 0.0;
        for (int r = 1; r <= opt.r_max && found < 0; ++r) {
            const auto low = compile_all(terms_up_to(cw, r));
            const auto high = compile_all(field_derivative_terms(cw, r + 1));
            for (std::size_t ray = 0; ray < rays.size() && found < 0; ++ray) {
                std::vector<double> dist, sups;
                for (int b = 1; b <= opt.balls; ++b) {
                    double d = opt.spacing * b;
                    double sup = 0.0;
                    for (const auto& o : offsets) {
                        double pt[2] = {d * rays[ray][0] + o[0], d * rays[ray][1] + o[1]};
                        sup = std::max(sup, sum_abs(high, pt) / (1.0 + sum_abs(low, pt)));
                    }
                    dist.push_back(d);
                    sups.push_back(sup);
                    rep.rows.push_back({double(j + 1), double(r), double(ray), double(b), d, sup});
                }
                if (classify_growth(dist, sups).label == "bounded") {
                    found = r;
                    found_C = *std::max_element(sups.begin(), sups.end());
                }
            }
        }
        rep.constants.push_back({"r_component_" + std::to_string(j + 1), double(found)});
        if (found > 0) {
            any = true;
            rep.constants.push_back({"C_component_" + std::to_string(j + 1), found_C});
        }
    }
    rep.verdict = any ? Verdict::Satisfied : Verdict::Inconclusive;
    if (any)
        rep.notes.push_back("a certifying component makes the (0,1) box operator non-compact; at least one of the "
                            "Pauli operators of that component has non-compact resolvent");
    return rep;
}

std::vector<CriterionReport> diagnose_all(const WeightSpec& w, const DiagnoseOptions& opt) {
    const double L = opt.L_eval;
    if (!(L > 0.0)) throw std::invalid_argument("evaluation range must be positive");
    std::vector<double> radii, positive;
    for (int k = 0; k <= 8; ++k) radii.push_back(L * k / 8);
    for (int k = 1; k <= 8; ++k) positive.push_back(L * k / 8);

    std::vector<CriterionReport> out;
    if (w.n == 1) {
        out.push_back(doubling_check(w, ray_points({0, L / 4, L / 2, 3 * L / 4, L}, 4), {0.5, 1.0, 2.0}));
        std::vector<Cube> cubes;
        for (double d : {0.0, L / 4, L / 2, 3 * L / 4, L})
            for (double s : {1.0, 2.0}) cubes.push_back({d, 0.0, s});
        out.push_back(reverse_holder_check(w, cubes));
        MassGrowthOptions mg;
        mg.radii = radii;
        mg.L_eval = L;
        out.push_back(mass_growth(w, mg));
        GroundEnergyOptions ge;
        ge.radii = radii;
        out.push_back(ground_energy_profile(w, ge));
        FeffermanPhongOptions fp;
        fp.seed = opt.seed;
        out.push_back(fefferman_phong_fit(w, fp));
    }
    HmOptions hm;
    hm.seed = opt.seed;
    out.push_back(hm_quantities(w, hm));
    LeviOptions lo;
    lo.radii = positive;
    lo.seed = opt.seed;
    for (auto& r : levi_conditions(w, lo)) out.push_back(std::move(r));
    if (split_by_variable(w.phi, w.n)) {
        HrOptions hr;
        hr.seed = opt.seed;
        out.push_back(hr_condition(w, hr));
    }
    return out;
}

}  // namespace dbarlab
