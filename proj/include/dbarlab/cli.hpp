#pragma once

#include "dbarlab/diagnostics.hpp"
#include "dbarlab/eigensolve.hpp"

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace dbarlab {

inline constexpr const char* kVersion = "0.1.0";

// Bad flags, bad config file, malformed weight: exit status 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct RunConfig {
    std::string command;
    std::string weight;
    int n = 0;  // 0: inferred from the variables in the weight
    double L = 8.0;
    double h = 0.05;
    std::vector<double> L_seq{4.0, 6.0, 8.0};
    double E = 3.0;
    int k = 6;
    double tol = 1e-8;
    std::uint64_t seed = 20240601;
    int trials = 50;
    std::string op = "S";  // named operator for spectrum and counting
    std::string rhs = "1";  // solve: one polynomial per form component, ';'-separated
    std::string out = "dbarlab-out";
    std::string format = "csv";  // what goes to stdout: the main table or the JSON summary
    bool timings = false;
};

// Throws ConfigError on the first invalid field.
void validate(const RunConfig& cfg);

// Fields that determine the results (not out, format, timings), with sorted keys.
std::string canonical_config_text(const RunConfig& cfg);

// Combined verdict of the diagnose command.
struct Headline {
    std::string label;  // compact, non-compact, inconsistent, inconclusive
    std::string detail;
};

// analytic/spectral: "compact", "non-compact" or "inconclusive". Agreement
// gives that label; a decisive side with an inconclusive one gives the
// decisive label; disagreement gives "inconsistent".
Headline combine_verdicts(const std::string& analytic, const std::string& analytic_reason,
                          const std::string& spectral, const std::string& spectral_reason);

// "non-compact" when N(E, L) grows with the area, "compact" when the last two
// counts differ by at most one, "inconclusive" otherwise.
std::string spectral_trend(const CountingResult& c);

// Runs one command; writes summary.json and the CSV files into cfg.out.
// Returns the exit status: 0 success, 1 computation error, failed check or
// inconsistent verdicts, 2 configuration error.
int run(const RunConfig& cfg, std::ostream& out, std::ostream& err);

// Flag and config-file parsing followed by run().
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dbarlab
