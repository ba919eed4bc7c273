#pragma once

// Run configuration and the two commands behind the psilab executable. The
// executable only parses flags; everything else lives here so it can be tested.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "psilab/report.hpp"

namespace psilab {

/// Bad flags, grids, budgets or output location. Maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::size_t n = 1;
    std::uint64_t seed = 7;
    double radius_cap = 0.95;
    /// Named |z| grids and r / delta lists; see default_grids().
    std::map<std::string, std::vector<double>> grids;
    /// Sample and iteration counts; see default_budgets().
    std::map<std::string, double> budgets;
    std::string output_dir = "reports";
    std::string format = "json";
};

std::map<std::string, std::vector<double>> default_grids();
std::map<std::string, double> default_budgets();
RunConfig default_config();

/// "name=v1,v2,..." onto cfg.grids. Unknown names are rejected.
void apply_grid_arg(RunConfig& cfg, const std::string& arg);
/// "key=value" onto cfg.budgets. Unknown keys are rejected.
void apply_budget_arg(RunConfig& cfg, const std::string& arg);
/// Throws ConfigError on out-of-range dimension, cap, grid values or format.
void validate(const RunConfig& cfg);

std::string config_to_json(const RunConfig& cfg);
std::vector<std::pair<std::string, std::string>> config_rows(const RunConfig& cfg);

inline const std::vector<std::string> kVerifySuites = {"metric", "geometry", "kernel", "estimates", "all"};
inline const std::vector<std::string> kTableQuantities = {"diag_ratio", "offdiag_scatter", "volume_scaling",
                                                          "radial_distance"};

/// One module's merged report. Throws ConfigError for an unknown module.
VerificationReport run_module(const std::string& module, const RunConfig& cfg);

/// Runs the suite(s), writes <output_dir>/<module>.<format>, prints one line
/// per module. Returns 0 if all pass, 1 on any violation, 2 on errors.
int cmd_verify(const std::string& suite, const RunConfig& cfg, std::ostream& console);

/// CSV text of a table.
std::string make_table(const std::string& quantity, const RunConfig& cfg);
/// Writes <output_dir>/<quantity>.csv. Same exit codes as cmd_verify.
int cmd_table(const std::string& quantity, const RunConfig& cfg, std::ostream& console);

/// One console line: name, PASS/FAIL, counts, extrema, fitted constants.
std::string summary_line(const VerificationReport& r);

}  // namespace psilab
