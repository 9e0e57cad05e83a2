#ifndef ACHAIN_ENSEMBLE_HPP
#define ACHAIN_ENSEMBLE_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "achain/chain.hpp"
#include "achain/measure.hpp"
#include "achain/state.hpp"

namespace achain::ensemble {

inline constexpr int kBatches = 16;
inline constexpr int kHistogramBins = 20;

// Independent stream for trajectory `index` of a run seeded with `master_seed`.
std::mt19937_64 trajectory_rng(std::uint64_t master_seed, std::uint64_t index);

// Weighted purity sample collection (weights 1 for Monte Carlo, outcome
// probability for quadrature).
class PurityStats {
 public:
  explicit PurityStats(int system_dim = 2);
  void add(double purity, double weight = 1.0);

  double mean() const;
  double min() const { return min_; }
  double max() const { return max_; }
  double total_weight() const { return total_; }
  std::size_t count() const { return values_.size(); }
  // Weighted fraction of samples with purity < threshold.
  double fraction_below(double threshold) const;
  // kHistogramBins equal bins on [1/d, 1]; weights normalized to sum to 1.
  std::vector<double> histogram() const;
  double histogram_lower() const { return lower_; }

 private:
  double lower_;
  std::vector<double> values_;
  std::vector<double> weights_;
  double total_ = 0.0;
  double weighted_sum_ = 0.0;
  double min_ = 1.0;
  double max_ = 0.0;
};

struct EnsembleReport {
  std::string strategy;
  std::string mode;  // "mc" or "quadrature"
  std::uint64_t n_samples = 0;
  std::uint64_t seed = 0;
  int points_per_axis = 0;
  double range_sigmas = 0.0;
  state::DensityMatrix average_density;    // normalized
  Mat standard_error_re;                   // elementwise, batch means
  Mat standard_error_im;
  // Frobenius norm of the elementwise errors over sqrt(2): the trace distance
  // a noise matrix of that size produces for a qubit.
  double standard_error = 0.0;
  state::DensityMatrix reference_density;  // unmeasured rho at the same step
  double trace_distance_to_reference = 0.0;
  double outcome_mass = 1.0;  // integral of the outcome density (quadrature only)
  PurityStats purity;         // final conditional state of each record
  // Per record, the smallest purity over the steps that end with a
  // measurement (every step when the strategy measures nothing).
  PurityStats step_min_purity;
};

// Unmeasured reduced state after `steps` interactions (0: the whole chain).
state::DensityMatrix unconditioned_density(const chain::Model& model, int steps = 0);

EnsembleReport mc_average(const chain::Model& model, const measure::Strategy& strategy,
                          std::uint64_t n_samples, std::uint64_t master_seed);

// Iterated trapezoid rule over every outcome of the strategy, each axis
// covering the current outcome density's support +- range_sigmas. Outcome
// dimension must be <= 3.
EnsembleReport quadrature_average(const chain::Model& model,
                                  const measure::Strategy& strategy, int points_per_axis,
                                  double range_sigmas);

PurityStats purity_stats(const chain::Model& model, const measure::Strategy& strategy,
                         std::uint64_t n_samples, std::uint64_t master_seed);

struct CovarianceReport {
  std::uint64_t n_samples = 0;
  Mat empirical;
  Mat expected;  // alpha(tau_l - tau_m)
  Mat sigma;     // one standard error of each empirical entry
  double max_abs_deviation = 0.0;
  double max_z = 0.0;  // max |deviation| / sigma
  bool within_3sigma = false;
};

// Sample z(tau_1..tau_N) from the bare apparatus chain through the
// measurement machinery and compare the empirical covariance to alpha.
CovarianceReport covariance_check(const chain::CorrelationKernel& kernel,
                                  const chain::ChainConfig& cfg, std::uint64_t n_samples,
                                  std::uint64_t seed);

struct CompareOptions {
  std::string mode = "mc";
  std::uint64_t n_samples = 10000;
  std::uint64_t seed = 1;
  int points_per_axis = 201;
  double range_sigmas = 8.0;
  int steps = 0;
};

struct CompareRow {
  std::string strategy;
  std::string mode;
  double mean_purity;
  double min_purity;
  double max_purity;
  double fraction_mixed;  // purity < 1 - 1e-6
  double trace_distance;
  double standard_error;
  std::uint64_t samples;
  std::uint64_t seed;
  double mean_step_min_purity;
  double fraction_step_mixed;  // step-minimum purity < 1 - 1e-6
  double histogram_lower;
  std::vector<double> purity_histogram;
};

CompareRow summarize(const EnsembleReport& report);

// One row per strategy in the order none, after_interaction, all_at_once,
// diosi_monitoring.
std::vector<CompareRow> compare_strategies(const chain::Model& model,
                                           const CompareOptions& options);

}  // namespace achain::ensemble

#endif  // ACHAIN_ENSEMBLE_HPP
