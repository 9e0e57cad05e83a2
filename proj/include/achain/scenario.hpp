#ifndef ACHAIN_SCENARIO_HPP
#define ACHAIN_SCENARIO_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "achain/chain.hpp"
#include "achain/ensemble.hpp"
#include "achain/measure.hpp"

namespace achain::scenario {

struct KernelConfig {
  std::string type = "table";  // markov | exponential | gaussian | table
  double g2 = 1.0;
  double gamma = 1.0;
  double sigma = 1.0;
  std::vector<std::pair<double, double>> points;  // (tau, alpha) for tables
};

/**
 * Everything a run needs. The on-disk form is a nested JSON object:
 *
 *   system   {dim, hamiltonian, coupling, initial_ket}  matrices row-major as
 *            [re, im] pairs
 *   bath     {kernel {type, g2, gamma | sigma | points | file}, epsilon,
 *             n_apparatus, kick_strength}
 *   strategy {type, steps}
 *   run      {master_seed, mode, n_samples, points_per_axis, range_sigmas}
 *   output   {format, path}
 *
 * Key order is irrelevant; missing optional keys take the defaults below.
 */
struct ScenarioConfig {
  chain::SystemSpec system;
  KernelConfig kernel;
  double epsilon = 1.0;
  int n_apparatus = 2;
  double kick_strength = 1.0;
  measure::Strategy strategy{measure::StrategyKind::diosi_monitoring, 0};
  std::uint64_t master_seed = 1;
  std::string mode = "mc";
  std::uint64_t n_samples = 10000;
  int points_per_axis = 201;
  double range_sigmas = 8.0;
  std::string format = "csv";
  std::string path;
};

// Two apparatuses, epsilon = 1, alpha(0) = 1, alpha(+-1) = a, qubit with
// coupling diag(1,-1), H = (pi/4) sigma_x, psi0 = (1,1)/sqrt 2.
ScenarioConfig paper_example_config(double a = 0.5);

// Throws ConfigError naming the offending field. `base_dir` resolves relative
// kernel table files.
ScenarioConfig from_json(const nlohmann::json& j, const std::string& base_dir = ".");
nlohmann::json to_json(const ScenarioConfig& cfg);

ScenarioConfig parse_config(const std::string& text, const std::string& base_dir = ".");
ScenarioConfig load_config(const std::string& path);
std::string emit_config(const ScenarioConfig& cfg);

// Two-column (tau, alpha) text; whitespace or comma separated, '#' comments.
std::vector<std::pair<double, double>> read_kernel_table(const std::string& path);

chain::CorrelationKernel build_kernel(const KernelConfig& k);
chain::ChainConfig build_chain_config(const ScenarioConfig& cfg);

// Validates (ConfigError for malformed input); NotPositiveDefinite propagates.
chain::Model build_model(const ScenarioConfig& cfg);

ensemble::CompareOptions compare_options(const ScenarioConfig& cfg);

}  // namespace achain::scenario

#endif  // ACHAIN_SCENARIO_HPP
