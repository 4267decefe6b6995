#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace geobound::cli {

enum ExitCode : int {
    kSuccess = 0,
    kConfigError = 2,
    kVerificationFailure = 3,
    kNumericalHalt = 4,
};

struct RunConfig {
    std::string command;
    std::string metric = "h2xh2";
    std::map<std::string, double> params;
    std::string direction = "diag";
    double t0 = 1e-3;
    double dt = 1e-3;
    std::optional<double> t_end;   // default 50/R_max
    std::optional<double> t_burn;  // default 5/R_max
    std::optional<int> n;          // default 64 d^2
    std::uint64_t seed = 7;
    std::optional<int> trials;     // per-suite default
    std::string suite = "all";
    std::string out;
    std::string format = "json";
    bool timestamp = true;
    // shuffle
    std::string k1 = "const:4";
    std::string k2 = "const:0";
    std::vector<double> deltas = {1e-1, 1e-2, 1e-3, 1e-4};
    double delta = 1e-2;
};

/// Parses `args` (without the program name), runs the command and writes the
/// report to `out` (or the --out file). Diagnostics go to `err`. Returns the
/// process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace geobound::cli
