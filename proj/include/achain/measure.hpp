#ifndef ACHAIN_MEASURE_HPP
#define ACHAIN_MEASURE_HPP

#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "achain/chain.hpp"
#include "achain/state.hpp"
#include "achain/types.hpp"

namespace achain::measure {

/**
 * Outcome density p(y) = ||Pi(y)|Psi>||^2 of a linear bath observable
 * y = L . x on a path-sum state, as a mixture over branch pairs:
 *
 *     p(y) = sum_i weight_i N(y; mean_i, sigma^2)
 *
 * Pair weights can be negative (interference) but the sum is non-negative.
 * All components share sigma because all branches share one Gaussian form.
 */
class OutcomeDensity {
 public:
  OutcomeDensity(std::vector<double> weights, std::vector<double> means, double sigma);

  double pdf(double y) const;
  double cdf(double y) const;  // unnormalized, tends to total()
  double total() const { return total_; }
  double sigma() const { return sigma_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& means() const { return means_; }

  // [min mean - k sigma, max mean + k sigma] over components with positive weight.
  std::pair<double, double> support(double k_sigmas) const;

  // y with cdf(y) = u * total(), u in (0,1).
  double quantile(double u) const;

 private:
  std::vector<double> weights_;
  std::vector<double> means_;
  double sigma_;
  double total_;
};

OutcomeDensity outcome_density(const state::TotalState& st, const Vec& coefficients);

// Project onto L . x = y. The result is unnormalized with norm^2 = p(y).
// Throws DegenerateMeasurement if L has no component in the live subspace.
state::TotalState measure_linear(const state::TotalState& st, const Vec& coefficients,
                                 double outcome);

// Position projector on apparatus k (0-based).
state::TotalState measure_position(const state::TotalState& st, int k, double outcome);

std::pair<double, state::TotalState> sample_outcome(const state::TotalState& st,
                                                    const Vec& coefficients,
                                                    std::mt19937_64& rng);

enum class StrategyKind { none, after_interaction, all_at_once, diosi_monitoring };

std::string strategy_name(StrategyKind k);
StrategyKind parse_strategy(const std::string& name);  // InvalidArgument on failure

struct Strategy {
  StrategyKind kind = StrategyKind::none;
  int steps = 0;  // interactions to run; 0 means the whole chain

  int resolved_steps(const chain::Model& model) const;
};

struct PlanStep {
  enum class Type { interact, measure };
  Type type;
  int step;            // interaction index the event belongs to
  std::string tag;     // "x3", "y2", ... for measurements
  Vec coefficients;    // observable coefficients for measurements
};

// Ordered interactions and measurements for a strategy.
std::vector<PlanStep> build_plan(const chain::Model& model, const Strategy& strategy);

struct RecordEntry {
  int step;
  double time;
  std::string observable;
  double outcome;
  double log_density;  // log p(outcome | earlier outcomes)
};

struct MeasurementRecord {
  std::string strategy;
  std::vector<RecordEntry> entries;
};

// State of the conditioned system after one plan event.
struct Checkpoint {
  int step;
  double time;
  std::string event;  // "interact" or the observable tag
  std::optional<double> outcome;
  double log_weight;  // cumulative log of norm^2
  double purity;
  state::DensityMatrix rho;  // normalized
};

struct StrategyResult {
  MeasurementRecord record;
  state::TotalState conditional_state;
  state::DensityMatrix reduced;  // unnormalized; weight is the record density
  std::vector<double> purity_series;  // per interaction step, after its measurements
  std::vector<Checkpoint> trajectory;
};

StrategyResult run_strategy(const chain::Model& model, const Strategy& strategy,
                            std::mt19937_64& rng);

// Replay (step, observable, outcome) triples; step and observable must match
// the strategy's plan in order.
struct ReplayEntry {
  int step;
  std::string observable;
  double outcome;
};
StrategyResult run_strategy(const chain::Model& model, const Strategy& strategy,
                            const std::vector<ReplayEntry>& record);

std::vector<ReplayEntry> to_replay(const MeasurementRecord& record);

}  // namespace achain::measure

#endif  // ACHAIN_MEASURE_HPP
