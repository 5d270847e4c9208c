#pragma once

#include "dbarlab/polynomial.hpp"
#include "dbarlab/weights.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace dbarlab {

enum class Verdict { Satisfied, Violated, Inconclusive };
std::string to_string(Verdict v);

// Outcome of one analytic criterion evaluated on samples. Criteria are limits
// as |z| -> infinity, so a verdict is only as good as the sampled range; when
// the samples cannot tell bounded from divergent the verdict is Inconclusive.
struct CriterionReport {
    std::string id;
    std::string statement;  // the condition being tested, in words
    std::string anchor;     // short pointer to the result it instantiates
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<std::pair<std::string, double>> constants;
    Verdict verdict = Verdict::Inconclusive;
    std::string growth;  // "bounded", "divergent", "inconclusive" or "" when not a growth test
    std::vector<std::string> notes;

    double constant(const std::string& name) const;  // throws std::out_of_range
    bool has_constant(const std::string& name) const;
};

// Growth of a sampled profile y(x) for large x, judged on the outer half of
// the samples: "bounded" if it is flat within 5% or non-increasing there,
// "divergent" if it increases monotonically with log-log slope above 0.3,
// otherwise "inconclusive". The slope is returned either way.
struct GrowthFit {
    std::string label;
    double power = 0.0;
};
GrowthFit classify_growth(const std::vector<double>& x, const std::vector<double>& y);

using Point2 = std::array<double, 2>;

// Points at the given radii on `angles` equally spaced rays starting at angle 0.
std::vector<Point2> ray_points(const std::vector<double>& radii, int angles);

// Sup over centres and radii of nu(B(c,2r))/nu(B(c,r)) for nu = (Laplacian of
// phi) dx, and inf over centres of nu(B(c,1)). n = 1.
CriterionReport doubling_check(const WeightSpec& w, const std::vector<Point2>& centers,
                               const std::vector<double>& radii);

struct Cube {
    double cx = 0.0;
    double cy = 0.0;
    double side = 1.0;
};

// Empirical reverse Hoelder B2 constant of V = Laplacian of phi:
// sqrt(mean of V^2) / mean of V over each square. n = 1.
CriterionReport reverse_holder_check(const WeightSpec& w, const std::vector<Cube>& cubes);

struct MassGrowthOptions {
    std::vector<double> radii;  // distances of the centres from 0
    int angles = 8;
    double L_eval = 0.0;  // max radius must reach 0.8 * L_eval
};

// Profiles of the integrals of V and V^2 over unit discs, minimised over
// directions at each distance. Satisfied when the V profile diverges.
CriterionReport mass_growth(const WeightSpec& w, const MassGrowthOptions& opt);

// Lowest Dirichlet eigenvalue of -Laplacian + V on the disc B(c, radius),
// Shortley-Weller stencil with spacing h.
double disc_ground_energy(const Polynomial& V, double cx, double cy, double radius = 1.0, double h = 0.05);
// Same on the square of side `side` centred at (cx, cy), `nodes` interior
// nodes per side on a vertex-aligned grid.
double square_ground_energy(const Polynomial& V, double cx, double cy, double side, int nodes = 40);

struct GroundEnergyOptions {
    std::vector<double> radii;
    int angles = 4;
    double h = 0.05;
};

// Profile of the unit-disc ground energy of -Laplacian + V with V the
// Laplacian of phi. Satisfied when it diverges.
CriterionReport ground_energy_profile(const WeightSpec& w, const GroundEnergyOptions& opt);

struct FeffermanPhongOptions {
    int cubes = 30;
    int training = 20;
    double max_center_radius = 4.0;
    double min_side = 0.25;
    double max_side = 4.0;
    int nodes = 40;
    std::uint64_t seed = 20240601;
};

// m(t) = t for t <= 1 and t^beta above.
double fefferman_phong_profile(double t, double beta);

// Fits beta in (0,1) and the largest C with C m(R^2 Theta)/R^2 <= lambda0 on
// the training squares, then counts violations on the held-out ones.
CriterionReport fefferman_phong_fit(const WeightSpec& w, const FeffermanPhongOptions& opt = {});

// Field components B_jk = d_j A_k - d_k A_j (j < k, real coordinates) of the
// magnetic potential A of the weight.
std::vector<Polynomial> magnetic_field_components(const WeightSpec& w);

// m_q = sum over |alpha| = q-1 and j < k of |d^alpha B_jk|, as the list of
// polynomials whose absolute values are summed. q >= 1.
std::vector<Polynomial> field_derivative_terms(const WeightSpec& w, int q);
double sum_abs(const std::vector<CompiledPolynomial>& terms, const double* x);

struct HmOptions {
    int r_max = 3;
    double sample_radius = 10.0;
    int samples_per_ray = 400;
    int random_directions = 16;
    std::uint64_t seed = 20240601;
};

// First r for which m^r = 1 + m_1 + ... + m_r tends to infinity on every
// sampled ray and m_{r+1} <= C m^r (no faster growth along any ray, C the
// sampled sup of the ratio).
CriterionReport hm_quantities(const WeightSpec& w, const HmOptions& opt = {});

struct LeviOptions {
    std::vector<double> radii;
    int directions = 64;  // sphere samples per radius besides the coordinate axes
    std::uint64_t seed = 20240601;
};

// Four reports sharing one profile of the lowest Levi eigenvalue on spheres:
// positivity at infinity, divergence, divergence of |z|^2 times it, and the
// trace-ratio condition M >= t (Laplacian of phi) I for some t in (0, 1/4).
std::vector<CriterionReport> levi_conditions(const WeightSpec& w, const LeviOptions& opt);

struct HrOptions {
    int balls = 6;          // unit balls centred at distance 3, 6, ... along each axis
    double spacing = 3.0;
    int r_max = 3;
    int samples_per_ball = 200;
    std::uint64_t seed = 20240601;
};

// Per component of a decoupled weight: smallest r for which m_{r+1} <= C m^r
// on a sequence of disjoint unit balls with C bounded along the sequence.
CriterionReport hr_condition(const WeightSpec& w, const HrOptions& opt = {});

struct DiagnoseOptions {
    double L_eval = 8.0;
    std::uint64_t seed = 20240601;
};

// Every criterion applicable to the weight's dimension, in a fixed order.
std::vector<CriterionReport> diagnose_all(const WeightSpec& w, const DiagnoseOptions& opt);

}  // namespace dbarlab
