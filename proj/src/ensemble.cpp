#include "achain/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "achain/errors.hpp"

namespace achain::ensemble {

using measure::PlanStep;
using measure::Strategy;
using measure::StrategyKind;

std::mt19937_64 trajectory_rng(std::uint64_t master_seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                    static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

PurityStats::PurityStats(int system_dim) : lower_(1.0 / std::max(system_dim, 1)) {}

void PurityStats::add(double purity, double weight) {
  values_.push_back(purity);
  weights_.push_back(weight);
  total_ += weight;
  weighted_sum_ += weight * purity;
  min_ = std::min(min_, purity);
  max_ = std::max(max_, purity);
}

double PurityStats::mean() const {
  if (!(total_ > 0.0)) return std::nan("");
  return std::clamp(weighted_sum_ / total_, min_, max_);
}

double PurityStats::fraction_below(double threshold) const {
  if (!(total_ > 0.0)) return std::nan("");
  double below = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i] < threshold) below += weights_[i];
  }
  return below / total_;
}

std::vector<double> PurityStats::histogram() const {
  std::vector<double> bins(kHistogramBins, 0.0);
  if (!(total_ > 0.0)) return bins;
  const double width = (1.0 - lower_) / kHistogramBins;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    int b = static_cast<int>(std::floor((values_[i] - lower_) / width));
    b = std::clamp(b, 0, kHistogramBins - 1);
    bins[static_cast<std::size_t>(b)] += weights_[i] / total_;
  }
  return bins;
}

state::DensityMatrix unconditioned_density(const chain::Model& model, int steps) {
  const Strategy none{StrategyKind::none, steps};
  const int m = none.resolved_steps(model);
  state::TotalState st = chain::initial_total_state(model);
  for (int n = 1; n <= m; ++n) st = state::apply_interaction(st, model, n);
  return state::reduced_density(st).normalized();
}

namespace {

// Plan indices after which the step-minimum purity is sampled.
std::vector<bool> purity_checkpoints(const std::vector<PlanStep>& plan) {
  std::vector<bool> measured_step;
  bool any = false;
  for (const auto& ev : plan) {
    if (ev.type != PlanStep::Type::measure) continue;
    if (measured_step.size() <= static_cast<std::size_t>(ev.step)) {
      measured_step.resize(static_cast<std::size_t>(ev.step) + 1, false);
    }
    measured_step[static_cast<std::size_t>(ev.step)] = true;
    any = true;
  }
  std::vector<bool> at(plan.size(), false);
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const bool last_of_step = i + 1 == plan.size() || plan[i + 1].step != plan[i].step;
    const auto s = static_cast<std::size_t>(plan[i].step);
    at[i] = last_of_step && (!any || (s < measured_step.size() && measured_step[s]));
  }
  return at;
}

double step_min_purity(const measure::StrategyResult& res, const std::vector<bool>& at) {
  double p = 1.0;
  for (std::size_t i = 0; i < at.size(); ++i) {
    if (at[i]) p = std::min(p, res.trajectory[i].purity);
  }
  return p;
}

void finish(EnsembleReport& rep, const chain::Model& model, const Strategy& strategy) {
  rep.reference_density = unconditioned_density(model, strategy.steps);
  rep.trace_distance_to_reference =
      state::trace_distance(rep.average_density, rep.reference_density);
}

}  // namespace

EnsembleReport mc_average(const chain::Model& model, const Strategy& strategy,
                          std::uint64_t n_samples, std::uint64_t master_seed) {
  if (n_samples < 1) throw InvalidArgument("mc_average: n_samples must be >= 1");
  const int d = model.system().dim;
  const auto batches = static_cast<std::uint64_t>(
      std::min<std::uint64_t>(kBatches, n_samples));
  std::vector<CMat> batch_sum(batches, CMat::Zero(d, d));
  std::vector<std::uint64_t> batch_count(batches, 0);

  EnsembleReport rep;
  rep.strategy = measure::strategy_name(strategy.kind);
  rep.mode = "mc";
  rep.n_samples = n_samples;
  rep.seed = master_seed;
  rep.purity = PurityStats(d);
  rep.step_min_purity = PurityStats(d);
  const std::vector<bool> checkpoints = purity_checkpoints(measure::build_plan(model, strategy));

  for (std::uint64_t i = 0; i < n_samples; ++i) {
    auto rng = trajectory_rng(master_seed, i);
    const measure::StrategyResult res = measure::run_strategy(model, strategy, rng);
    const state::DensityMatrix rho = res.reduced.normalized();
    const auto b = static_cast<std::size_t>(i * batches / n_samples);
    batch_sum[b] += rho.matrix;
    ++batch_count[b];
    rep.purity.add(state::purity(rho));
    rep.step_min_purity.add(step_min_purity(res, checkpoints));
  }

  CMat total = CMat::Zero(d, d);
  for (const auto& s : batch_sum) total += s;
  const CMat mean = total / static_cast<double>(n_samples);
  rep.average_density = state::make_density(mean);

  rep.standard_error_re = Mat::Zero(d, d);
  rep.standard_error_im = Mat::Zero(d, d);
  if (batches > 1) {
    for (std::size_t b = 0; b < batches; ++b) {
      const CMat dev = batch_sum[b] / static_cast<double>(batch_count[b]) - mean;
      rep.standard_error_re += dev.real().cwiseAbs2();
      rep.standard_error_im += dev.imag().cwiseAbs2();
    }
    const double scale = 1.0 / (static_cast<double>(batches) * (batches - 1));
    rep.standard_error_re = (rep.standard_error_re * scale).cwiseSqrt();
    rep.standard_error_im = (rep.standard_error_im * scale).cwiseSqrt();
  }
  rep.standard_error = std::sqrt(rep.standard_error_re.squaredNorm() +
                                 rep.standard_error_im.squaredNorm()) /
                       std::sqrt(2.0);
  finish(rep, model, strategy);
  return rep;
}

EnsembleReport quadrature_average(const chain::Model& model, const Strategy& strategy,
                                  int points_per_axis, double range_sigmas) {
  if (points_per_axis < 2) throw InvalidArgument("quadrature: need >= 2 points per axis");
  if (!(range_sigmas > 0.0)) throw InvalidArgument("quadrature: range_sigmas must be positive");
  const std::vector<PlanStep> plan = measure::build_plan(model, strategy);
  const auto outcome_dim = std::count_if(plan.begin(), plan.end(), [](const PlanStep& p) {
    return p.type == PlanStep::Type::measure;
  });
  if (outcome_dim > 3) {
    throw InvalidArgument("quadrature: outcome dimension " + std::to_string(outcome_dim) +
                          " too large for a tensor grid (max 3)");
  }
  const int d = model.system().dim;
  EnsembleReport rep;
  rep.strategy = measure::strategy_name(strategy.kind);
  rep.mode = "quadrature";
  rep.points_per_axis = points_per_axis;
  rep.range_sigmas = range_sigmas;
  rep.purity = PurityStats(d);
  rep.step_min_purity = PurityStats(d);
  const std::vector<bool> checkpoints = purity_checkpoints(plan);

  CMat acc = CMat::Zero(d, d);
  std::uint64_t leaves = 0;
  // `pmin` is the running step-minimum purity of the branch being walked
  std::function<void(const state::TotalState&, std::size_t, double, double)> walk =
      [&](const state::TotalState& st, std::size_t i, double w, double pmin) {
        if (i > 0 && checkpoints[i - 1]) {
          const state::DensityMatrix r = state::reduced_density(st);
          if (!(r.weight > 0.0)) return;
          pmin = std::min(pmin, state::purity(r));
        }
        if (i == plan.size()) {
          const state::DensityMatrix rho = state::reduced_density(st);
          if (!(rho.weight > 0.0)) return;
          acc += w * rho.matrix;
          rep.purity.add(state::purity(rho), w * rho.weight);
          rep.step_min_purity.add(pmin, w * rho.weight);
          ++leaves;
          return;
        }
        const PlanStep& ev = plan[i];
        if (ev.type == PlanStep::Type::interact) {
          walk(state::apply_interaction(st, model, ev.step), i + 1, w, pmin);
          return;
        }
        const measure::OutcomeDensity dens = measure::outcome_density(st, ev.coefficients);
        if (!(dens.total() > 0.0)) return;
        const auto [lo, hi] = dens.support(range_sigmas);
        const double h = (hi - lo) / (points_per_axis - 1);
        for (int k = 0; k < points_per_axis; ++k) {
          const double y = lo + h * k;
          const double tw = (k == 0 || k == points_per_axis - 1) ? 0.5 * h : h;
          walk(measure::measure_linear(st, ev.coefficients, y), i + 1, w * tw, pmin);
        }
      };
  walk(chain::initial_total_state(model), 0, 1.0, 1.0);

  rep.n_samples = leaves;
  rep.outcome_mass = acc.trace().real();
  rep.average_density = state::make_density(acc).normalized();
  rep.standard_error_re = Mat::Zero(d, d);
  rep.standard_error_im = Mat::Zero(d, d);
  finish(rep, model, strategy);
  return rep;
}

PurityStats purity_stats(const chain::Model& model, const Strategy& strategy,
                         std::uint64_t n_samples, std::uint64_t master_seed) {
  PurityStats stats(model.system().dim);
  for (std::uint64_t i = 0; i < n_samples; ++i) {
    auto rng = trajectory_rng(master_seed, i);
    const auto res = measure::run_strategy(model, strategy, rng);
    stats.add(state::purity(res.reduced));
  }
  return stats;
}

CovarianceReport covariance_check(const chain::CorrelationKernel& kernel,
                                  const chain::ChainConfig& cfg, std::uint64_t n_samples,
                                  std::uint64_t seed) {
  if (n_samples < 2) throw InvalidArgument("covariance_check: need >= 2 samples");
  // bare bath: a system that never kicks it
  chain::SystemSpec bare;
  bare.dim = 2;
  bare.hamiltonian = CMat::Zero(2, 2);
  bare.coupling = CMat::Zero(2, 2);
  bare.initial_ket = CVec::Unit(2, 0);
  const chain::Model model(bare, kernel, cfg);
  const int n = cfg.n_apparatus;
  std::vector<Vec> observables;
  for (int k = 1; k <= n; ++k) {
    observables.push_back(chain::retarded_coefficients(kernel, cfg, cfg.time(k)));
  }
  const state::TotalState initial = chain::initial_total_state(model);

  Vec sum = Vec::Zero(n);
  Mat sum2 = Mat::Zero(n, n);
  for (std::uint64_t i = 0; i < n_samples; ++i) {
    auto rng = trajectory_rng(seed, i);
    state::TotalState st = initial;
    Vec z(n);
    for (int k = 0; k < n; ++k) {
      auto [y, next] = measure::sample_outcome(st, observables[static_cast<std::size_t>(k)], rng);
      z(k) = y;
      st = std::move(next);
    }
    sum += z;
    sum2 += z * z.transpose();
  }
  const double count = static_cast<double>(n_samples);
  const Vec mean = sum / count;
  CovarianceReport rep;
  rep.n_samples = n_samples;
  rep.empirical = (sum2 - count * mean * mean.transpose()) / (count - 1.0);
  rep.expected = model.bath_matrix() / (cfg.epsilon * cfg.epsilon);
  rep.sigma = Mat(n, n);
  for (int l = 0; l < n; ++l) {
    for (int m = 0; m < n; ++m) {
      const double s = rep.expected(l, l) * rep.expected(m, m) +
                       rep.expected(l, m) * rep.expected(l, m);
      rep.sigma(l, m) = std::sqrt(s / count);
    }
  }
  const Mat dev = (rep.empirical - rep.expected).cwiseAbs();
  rep.max_abs_deviation = dev.maxCoeff();
  rep.max_z = dev.cwiseQuotient(rep.sigma).maxCoeff();
  rep.within_3sigma = rep.max_z <= 3.0;
  return rep;
}

CompareRow summarize(const EnsembleReport& rep) {
  return CompareRow{rep.strategy,
                    rep.mode,
                    rep.purity.mean(),
                    rep.purity.min(),
                    rep.purity.max(),
                    rep.purity.fraction_below(1.0 - 1e-6),
                    rep.trace_distance_to_reference,
                    rep.standard_error,
                    rep.n_samples,
                    rep.seed,
                    rep.step_min_purity.mean(),
                    rep.step_min_purity.fraction_below(1.0 - 1e-6),
                    rep.purity.histogram_lower(),
                    rep.purity.histogram()};
}

std::vector<CompareRow> compare_strategies(const chain::Model& model,
                                           const CompareOptions& options) {
  std::vector<CompareRow> rows;
  for (auto kind : {StrategyKind::none, StrategyKind::after_interaction,
                    StrategyKind::all_at_once, StrategyKind::diosi_monitoring}) {
    const Strategy strategy{kind, options.steps};
    EnsembleReport rep;
    if (options.mode == "mc") {
      rep = mc_average(model, strategy, options.n_samples, options.seed);
    } else if (options.mode == "quadrature") {
      rep = quadrature_average(model, strategy, options.points_per_axis, options.range_sigmas);
    } else {
      throw InvalidArgument("compare_strategies: unknown mode '" + options.mode + "'");
    }
    rows.push_back(summarize(rep));
  }
  return rows;
}

}  // namespace achain::ensemble
