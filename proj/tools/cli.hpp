#ifndef ACHAIN_TOOLS_CLI_HPP
#define ACHAIN_TOOLS_CLI_HPP

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "achain/scenario.hpp"
#include "report.hpp"

namespace achain::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

// Entry point shared by the executable and the tests. `args` excludes the
// program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Trajectory of the first ensemble member, the ensemble summary and its
// purity histogram.
Document simulate_document(const scenario::ScenarioConfig& cfg);

// Strategy comparison for the built-in qubit at `a` and at a = 0.
Document paper_example_document(double a, const scenario::ScenarioConfig& run);

// `param` is a, gamma or epsilon.
Document sweep_document(const scenario::ScenarioConfig& base, const std::string& param,
                        const std::vector<double>& grid);

Document covariance_document(const scenario::ScenarioConfig& cfg, std::uint64_t samples,
                             std::uint64_t seed);

// Comma-separated numbers; ConfigError("--grid") if empty or malformed.
std::vector<double> parse_grid(const std::string& text);

scenario::ScenarioConfig with_parameter(const scenario::ScenarioConfig& base,
                                        const std::string& param, double value);

}  // namespace achain::cli

#endif  // ACHAIN_TOOLS_CLI_HPP
