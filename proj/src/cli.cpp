#include "dbarlab/cli.hpp"

#include "dbarlab/discretize.hpp"
#include "dbarlab/report.hpp"
#include "dbarlab/solve.hpp"
#include "dbarlab/verify.hpp"
#include "dbarlab/weights.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace dbarlab {

namespace {

namespace fs = std::filesystem;

const std::vector<std::string> kCommands = {"spectrum", "svd", "counting", "diagnose", "verify", "solve"};

Json canonical_config(const RunConfig& cfg) {
    Json j;
    j["command"] = cfg.command;
    j["weight"] = cfg.weight;
    j["n"] = cfg.n;
    j["L"] = cfg.L;
    j["h"] = cfg.h;
    j["L_seq"] = cfg.L_seq;
    j["E"] = cfg.E;
    j["k"] = cfg.k;
    j["tol"] = cfg.tol;
    j["seed"] = cfg.seed;
    j["trials"] = cfg.trials;
    j["operator"] = cfg.op;
    j["rhs"] = cfg.rhs;
    return j;
}

WeightSpec load_weight(const RunConfig& cfg) {
    try {
        return parse_weight(cfg.weight, cfg.n);
    } catch (const WeightSyntaxError& e) {
        throw ConfigError(std::string("weight '") + cfg.weight + "': " + e.what());
    } catch (const WeightDimensionError& e) {
        throw ConfigError(std::string("weight '") + cfg.weight + "': " + e.what());
    }
}

std::string cat_file(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// Collects everything one run writes, then the summary.
class Run {
public:
    Run(const RunConfig& cfg, const WeightSpec& w) : cfg_(cfg), w_(w), dir_(cfg.out) {
        fs::create_directories(dir_);
        summary_["tool"] = "dbarlab";
        summary_["version"] = kVersion;
        summary_["command"] = cfg.command;
        Json canon = canonical_config(cfg);
        summary_["config"] = canon;
        summary_["config_hash"] = config_hash(canon);
        summary_["seed"] = cfg.seed;
        summary_["weight"] = {{"source", cfg.weight}, {"canonical", canonical_text(w)}, {"n", w.n},
                              {"kind", to_string(w.kind)}};
        summary_["verdicts"] = Json::array();
        summary_["checks"] = Json::array();
        summary_["results"] = Json::object();
        summary_["data_files"] = Json::array();
        summary_["timings"] = Json::object();
    }

    template <class Rows>
    void table(const std::string& name, const std::vector<std::string>& cols, const Rows& rows, bool primary = false) {
        write_csv(dir_ / name, cols, rows);
        summary_["data_files"].push_back(name);
        if (primary) primary_ = name;
    }

    template <class F>
    auto timed(const std::string& phase, F&& f) {
        auto t0 = std::chrono::steady_clock::now();
        auto result = f();
        if (cfg_.timings)
            summary_["timings"][phase] =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return result;
    }

    Json& summary() { return summary_; }
    Json& results() { return summary_["results"]; }

    void finish(std::ostream& out) {
        auto errors = validate_schema(summary_, report_schema());
        if (!errors.empty()) throw std::logic_error("summary does not match its schema: " + errors.front());
        std::ofstream os(dir_ / "summary.json", std::ios::binary);
        os << summary_.dump(2) << '\n';
        if (!os) throw std::runtime_error("cannot write " + (dir_ / "summary.json").string());
        if (cfg_.format == "json") out << summary_.dump(2) << '\n';
        else if (!primary_.empty()) out << cat_file(dir_ / primary_);
    }

private:
    const RunConfig& cfg_;
    const WeightSpec& w_;
    fs::path dir_;
    std::string primary_;
    Json summary_;
};

EigenOptions eigen_options(const RunConfig& cfg) {
    EigenOptions eo;
    eo.tol = cfg.tol;
    return eo;
}

int cmd_spectrum(const RunConfig& cfg, const WeightSpec& w, Run& run) {
    GridSpec g = GridSpec::make(w.n, cfg.L, cfg.h);
    SparseOperator A = run.timed("assemble", [&] { return build_named_operator(cfg.op, w, g); });
    SpectrumResult r = run.timed("eigensolve", [&] { return smallest_eigenvalues(A, cfg.k, eigen_options(cfg)); });
    std::vector<std::vector<double>> rows, crow;
    for (std::size_t i = 0; i < r.eigenvalues.size(); ++i)
        rows.push_back({double(i), r.eigenvalues[i], r.residuals[i]});
    for (const auto& c : r.clusters) crow.push_back({c.center, c.low, c.high, double(c.count)});
    run.table("spectrum.csv", {"index", "eigenvalue", "residual"}, rows, true);
    run.table("clusters.csv", {"center", "low", "high", "count"}, crow);
    run.results() = {{"operator", cfg.op}, {"dimension", A.dim()}, {"converged", r.converged}};
    return r.converged ? 0 : 1;
}

int cmd_svd(const RunConfig& cfg, const WeightSpec& w, Run& run) {
    GridSpec g = GridSpec::make(w.n, cfg.L, cfg.h);
    DbarOperators ops = assemble_dbar(w, g);
    SingularValues sv = run.timed("singular_values", [&] { return solution_singular_values(ops, cfg.k, eigen_options(cfg)); });
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < sv.values.size(); ++i)
        rows.push_back({double(i), sv.values[i], i < sv.power_values.size() ? sv.power_values[i] : std::nan("")});
    run.table("svd.csv", {"index", "singular_value", "power_value"}, rows, true);
    run.results() = {{"converged", sv.converged}, {"max_route_difference", sv.max_route_difference}};
    return sv.converged ? 0 : 1;
}

std::vector<std::vector<double>> counting_rows(const CountingResult& c) {
    std::vector<std::vector<double>> rows;
    for (const auto& r : c.rows) rows.push_back({r.L, c.E, double(r.count), r.count_per_area});
    return rows;
}

const std::vector<std::string> kCountingColumns = {"L", "E", "count", "count_per_area"};

int cmd_counting(const RunConfig& cfg, const WeightSpec& w, Run& run) {
    CountingResult c = run.timed("counting", [&] {
        return counting_function(cfg.op, cfg.E, cfg.L_seq, w, GridSpec::make(w.n, cfg.L_seq.front(), cfg.h));
    });
    run.table("counting.csv", kCountingColumns, counting_rows(c), true);
    run.results() = {{"operator", cfg.op}, {"monotone_in_L", c.monotone_in_L}, {"trend", spectral_trend(c)}};
    return 0;
}

const CriterionReport* find_report(const std::vector<CriterionReport>& reps, const std::string& id) {
    for (const auto& r : reps)
        if (r.id == id) return &r;
    return nullptr;
}

// Decoupled weights with the integrability hypotheses have an orthonormal
// family with bounded Rayleigh quotients: box01 has no compact inverse.
std::pair<std::string, std::string> decoupled_witness(const RunConfig& cfg, const WeightSpec& w, Run& run) {
    if (!split_by_variable(w.phi, w.n)) return {"inconclusive", "weight is not decoupled; no witness sequence"};
    GridSpec g1 = GridSpec::make(1, cfg.L, cfg.h);
    for (int ell = 0; ell < w.n; ++ell)
        for (int k = 0; k < w.n; ++k) {
            if (ell == k) continue;
            RayleighSequence s = decoupled_rayleigh_sequence(w, ell, k, 5, g1);
            auto [lo, hi] = std::minmax_element(s.quotients.begin(), s.quotients.end());
            bool bounded = *hi <= 1.5 * *lo + 1e-12;
            if (!(s.hypothesis_converged && s.unresolved.empty() && s.gram_deviation <= 1e-6 && bounded)) continue;
            std::vector<std::vector<double>> rows;
            for (std::size_t nu = 0; nu < s.quotients.size(); ++nu)
                rows.push_back({double(nu), s.quotients[nu], s.kernel_residuals[nu], s.boundary_mass[nu]});
            run.table("decoupled_rayleigh.csv", {"nu", "quotient", "kernel_residual", "boundary_mass"}, rows);
            return {"non-compact", "bounded Rayleigh quotients on an orthonormal family (variables z" +
                                       std::to_string(ell + 1) + ", z" + std::to_string(k + 1) + ")"};
        }
    return {"inconclusive", "no variable pair meets the witness hypotheses on this box"};
}

int cmd_diagnose(const RunConfig& cfg, const WeightSpec& w, Run& run) {
    DiagnoseOptions opt;
    opt.L_eval = cfg.L;
    opt.seed = cfg.seed;
    std::vector<CriterionReport> reps = run.timed("criteria", [&] { return diagnose_all(w, opt); });
    std::vector<std::vector<std::string>> table;
    for (const auto& r : reps) {
        std::string file = r.id + ".csv";
        run.table(file, r.columns, r.rows);
        run.summary()["verdicts"].push_back(to_json(r, file));
        table.push_back({r.id, r.anchor, to_string(r.verdict), r.growth, file});
    }
    run.table("verdicts.csv", {"criterion", "anchor", "verdict", "growth", "data_file"}, table, true);

    std::string analytic = "inconclusive", analytic_reason, spectral = "inconclusive", spectral_reason;
    if (w.n == 1) {
        const CriterionReport* mg = find_report(reps, "mass_growth");
        analytic_reason = "unit-disc mass of the field " + (mg ? mg->growth : std::string("unavailable"));
        if (mg && mg->verdict == Verdict::Satisfied) analytic = "compact";
        if (mg && mg->verdict == Verdict::Violated) analytic = "non-compact";
        CountingResult c = run.timed("counting", [&] {
            return counting_function("S", cfg.E, cfg.L_seq, w, GridSpec::make(1, cfg.L_seq.front(), cfg.h));
        });
        run.table("counting.csv", kCountingColumns, counting_rows(c));
        spectral = spectral_trend(c);
        spectral_reason = "N(" + format_number(cfg.E) + ", L) " +
                          (spectral == "non-compact" ? "grows with the area"
                                                     : spectral == "compact" ? "stable in L" : "undecided");
    } else {
        const CriterionReport* ld = find_report(reps, "levi_divergent");
        analytic_reason = "lowest Levi eigenvalue " + (ld ? ld->growth : std::string("unavailable"));
        if (ld && ld->verdict == Verdict::Satisfied) analytic = "compact";
        std::tie(spectral, spectral_reason) = run.timed("witness", [&] { return decoupled_witness(cfg, w, run); });
    }
    Headline hl = combine_verdicts(analytic, analytic_reason, spectral, spectral_reason);
    run.summary()["headline"] = {{"label", hl.label}, {"detail", hl.detail}};
    run.results() = {{"analytic", analytic}, {"analytic_reason", analytic_reason}, {"spectral", spectral},
                     {"spectral_reason", spectral_reason}};
    return hl.label == "inconsistent" ? 1 : 0;
}

int cmd_verify(const RunConfig& cfg, const WeightSpec& w, Run& run) {
    GridSpec g = GridSpec::make(w.n, cfg.L, cfg.h);
    CheckOptions opt;
    opt.trials = cfg.trials;
    opt.seed = cfg.seed;
    std::vector<CheckResult> checks = run.timed("checks", [&] { return verify_all(w, g, opt); });
    std::vector<std::vector<std::string>> rows;
    int failed = 0;
    for (const auto& c : checks) {
        run.summary()["checks"].push_back(to_json(c));
        rows.push_back({c.id, c.pass ? "true" : "false", c.skipped ? "true" : "false", format_number(c.max_violation),
                        format_number(c.tolerance), std::to_string(c.samples)});
        if (!c.skipped && !c.pass) ++failed;
    }
    run.table("checks.csv", {"id", "pass", "skipped", "max_violation", "tolerance", "samples"}, rows, true);
    run.results() = {{"failed", failed}, {"total", checks.size()}};
    return failed ? 1 : 0;
}

int cmd_solve(const RunConfig& cfg, const WeightSpec& w, Run& run) {
    std::vector<std::string> parts;
    std::stringstream ss(cfg.rhs);
    for (std::string item; std::getline(ss, item, ';');) parts.push_back(item);
    if (parts.size() == 1) parts.resize(static_cast<std::size_t>(w.n), parts.front());
    if (static_cast<int>(parts.size()) != w.n)
        throw ConfigError("--rhs needs 1 or n = " + std::to_string(w.n) + " ';'-separated components");
    GridSpec g = GridSpec::make(w.n, cfg.L, cfg.h);
    const auto M = static_cast<Eigen::Index>(g.size());
    Eigen::VectorXd phi = sample_on_grid(w.phi, g);
    Vec rhs(w.n * M);
    for (int k = 0; k < w.n; ++k) {
        Polynomial f;
        try {
            f = parse_weight(parts[static_cast<std::size_t>(k)], w.n).phi;
        } catch (const std::exception& e) {
            throw ConfigError("--rhs component " + std::to_string(k + 1) + ": " + e.what());
        }
        // Gauge form of the right-hand side: e^-phi f.
        rhs.segment(k * M, M) = (sample_on_grid(f, g).array() * (-phi.array()).exp()).matrix().cast<cplx>();
    }
    DbarOperators ops = assemble_dbar(w, g);
    SolveOptions so;
    so.tol = cfg.tol;
    SolveResult r = run.timed("solve", [&] { return canonical_solve(ops, rhs, so); });
    Vec u = flavour_merge(r.solution);
    std::vector<std::string> cols;
    for (int j = 1; j <= w.n; ++j) {
        cols.push_back("x" + std::to_string(j));
        cols.push_back("y" + std::to_string(j));
    }
    cols.push_back("re");
    cols.push_back("im");
    std::vector<std::vector<double>> rows;
    std::vector<double> pt(g.axes());
    for (Eigen::Index p = 0; p < M; ++p) {
        g.point(static_cast<std::size_t>(p), pt.data());
        std::vector<double> row = pt;
        row.push_back(u[p].real());
        row.push_back(u[p].imag());
        rows.push_back(std::move(row));
    }
    const double cell = std::pow(g.h, 2 * w.n);
    run.table("solve_summary.csv", {"residual", "orthogonality_defect", "iterations", "norm"},
              std::vector<std::vector<double>>{{r.residual, r.orthogonality_defect, double(r.iterations),
                                                std::sqrt(cell) * r.solution.norm()}},
              true);
    run.table("solution.csv", cols, rows);
    run.results() = {{"residual", r.residual},
                     {"orthogonality_defect", r.orthogonality_defect},
                     {"iterations", r.iterations},
                     {"norm", std::sqrt(cell) * r.solution.norm()}};
    return 0;
}

}  // namespace

void validate(const RunConfig& cfg) {
    if (std::find(kCommands.begin(), kCommands.end(), cfg.command) == kCommands.end())
        throw ConfigError("unknown command '" + cfg.command + "'");
    if (cfg.weight.empty()) throw ConfigError("--weight is required");
    if (cfg.n < 0) throw ConfigError("--n must be >= 0");
    if (!(cfg.L > 0) || !(cfg.h > 0)) throw ConfigError("--L and --h must be positive");
    if (cfg.h >= cfg.L) throw ConfigError("--h must be smaller than --L");
    if (cfg.L_seq.empty()) throw ConfigError("--L-seq must not be empty");
    for (std::size_t i = 0; i < cfg.L_seq.size(); ++i) {
        if (!(cfg.L_seq[i] > 0)) throw ConfigError("--L-seq entries must be positive");
        if (i > 0 && !(cfg.L_seq[i] > cfg.L_seq[i - 1])) throw ConfigError("--L-seq must be strictly increasing");
    }
    if (!std::isfinite(cfg.E)) throw ConfigError("--E must be finite");
    if (cfg.k < 1) throw ConfigError("--k must be at least 1");
    if (!(cfg.tol > 0)) throw ConfigError("--tol must be positive");
    if (cfg.trials < 1) throw ConfigError("--trials must be at least 1");
    if (cfg.format != "csv" && cfg.format != "json") throw ConfigError("--format must be csv or json");
    if (cfg.out.empty()) throw ConfigError("--out must not be empty");
}

std::string canonical_config_text(const RunConfig& cfg) { return canonical_config(cfg).dump(); }

Headline combine_verdicts(const std::string& analytic, const std::string& analytic_reason,
                          const std::string& spectral, const std::string& spectral_reason) {
    Headline h;
    h.detail = analytic_reason + "; " + spectral_reason;
    if (analytic == spectral) h.label = analytic;
    else if (analytic == "inconclusive") h.label = spectral;
    else if (spectral == "inconclusive") h.label = analytic;
    else h.label = "inconsistent";
    return h;
}

std::string spectral_trend(const CountingResult& c) {
    if (c.rows.size() < 2) return "inconclusive";
    const auto& first = c.rows.front();
    const auto& last = c.rows.back();
    const double area_ratio = (last.L * last.L) / (first.L * first.L);
    if (last.count >= 4 && last.count > first.count + 1 && double(last.count) >= 0.5 * area_ratio * double(first.count))
        return "non-compact";
    const auto& prev = c.rows[c.rows.size() - 2];
    if (last.count <= prev.count + 1 && prev.count <= last.count + 1) return "compact";
    return "inconclusive";
}

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        validate(cfg);
        WeightSpec w = load_weight(cfg);
        Run r(cfg, w);
        int status = 0;
        if (cfg.command == "spectrum") status = cmd_spectrum(cfg, w, r);
        else if (cfg.command == "svd") status = cmd_svd(cfg, w, r);
        else if (cfg.command == "counting") status = cmd_counting(cfg, w, r);
        else if (cfg.command == "diagnose") status = cmd_diagnose(cfg, w, r);
        else if (cfg.command == "verify") status = cmd_verify(cfg, w, r);
        else status = cmd_solve(cfg, w, r);
        r.finish(out);
        if (cfg.command == "diagnose")
            err << "headline: " << r.summary()["headline"]["label"].get<std::string>() << " ("
                << r.summary()["headline"]["detail"].get<std::string>() << ")\n";
        return status;
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    CLI::App app{"Numerical experiments with the weighted dbar problem and its box operators"};
    app.set_help_flag("--help", "Print this help and exit");
    app.set_version_flag("--version", kVersion);
    app.add_option("command", cfg.command, "spectrum | svd | counting | diagnose | verify | solve")->required();
    app.add_option("--weight", cfg.weight, "Weight expression, e.g. \"abs2(z1)^2\"");
    app.add_option("--n", cfg.n, "Complex dimension (0: inferred)");
    app.add_option("--L", cfg.L, "Half width of the box [-L, L]^(2n)");
    app.add_option("--h", cfg.h, "Grid spacing");
    app.add_option("--L-seq", cfg.L_seq, "Box half widths for counting, strictly increasing")->delimiter(',');
    app.add_option("--E", cfg.E, "Energy threshold for counting");
    app.add_option("--k", cfg.k, "Number of eigenvalues or singular values");
    app.add_option("--tol", cfg.tol, "Solver tolerance");
    app.add_option("--seed", cfg.seed, "Seed of every random choice");
    app.add_option("--trials", cfg.trials, "Random trials per inequality check");
    app.add_option("--operator", cfg.op, "Named operator for spectrum and counting");
    app.add_option("--rhs", cfg.rhs, "Right-hand side for solve, one polynomial per component separated by ';'");
    app.add_option("--out", cfg.out, "Output directory");
    app.add_option("--format", cfg.format, "Standard output: csv (main table) or json (summary)");
    app.add_flag("--timings", cfg.timings, "Record wall-clock timings in the summary");
    app.set_config("--config", "", "TOML or INI file with the same keys as the long flags");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "configuration error: " << e.what() << '\n';
        return 2;
    }
    return run(cfg, out, err);
}

}  // namespace dbarlab
