#include "achain/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "achain/errors.hpp"
#include "achain/gauss.hpp"

namespace achain::measure {

namespace {

constexpr double kLiveTol = 1e-12;

double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

struct Projection {
  Vec live;       // W^T L
  double norm;    // |W^T L|
  Vec pinned;     // U^T L
};

Projection project(const state::TotalState& st, const Vec& coefficients) {
  if (coefficients.size() != st.bath_dim()) {
    throw DimensionMismatch("observable has " + std::to_string(coefficients.size()) +
                            " coefficients, bath has " + std::to_string(st.bath_dim()) +
                            " apparatuses");
  }
  Projection p;
  p.live = st.live_basis.transpose() * coefficients;
  p.norm = p.live.norm();
  p.pinned = st.pin_directions.transpose() * coefficients;
  if (!(p.norm > kLiveTol * std::max(1.0, coefficients.norm()))) {
    std::vector<double> forced;
    forced.reserve(st.branches.size());
    for (const auto& b : st.branches) forced.push_back(p.pinned.dot(b.pinned_values));
    throw DegenerateMeasurement(
        "observable lies in the pinned subspace; its outcome is already determined",
        std::move(forced));
  }
  return p;
}

}  // namespace

OutcomeDensity::OutcomeDensity(std::vector<double> weights, std::vector<double> means,
                               double sigma)
    : weights_(std::move(weights)), means_(std::move(means)), sigma_(sigma), total_(0.0) {
  if (weights_.size() != means_.size()) {
    throw InvalidArgument("OutcomeDensity: weights and means differ in length");
  }
  if (!(sigma_ > 0.0)) throw InvalidArgument("OutcomeDensity: sigma must be positive");
  for (double w : weights_) total_ += w;
  total_ = std::max(total_, 0.0);
}

double OutcomeDensity::pdf(double y) const {
  double s = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    s += weights_[i] * normal_pdf((y - means_[i]) / sigma_);
  }
  return std::max(s / sigma_, 0.0);
}

double OutcomeDensity::cdf(double y) const {
  double s = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    s += weights_[i] * normal_cdf((y - means_[i]) / sigma_);
  }
  return std::clamp(s, 0.0, total_);
}

std::pair<double, double> OutcomeDensity::support(double k_sigmas) const {
  double lo = 0.0;
  double hi = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (!(weights_[i] > 0.0)) continue;
    if (!any) {
      lo = hi = means_[i];
      any = true;
    }
    lo = std::min(lo, means_[i]);
    hi = std::max(hi, means_[i]);
  }
  return {lo - k_sigmas * sigma_, hi + k_sigmas * sigma_};
}

double OutcomeDensity::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw InvalidArgument("quantile: u must lie in (0,1)");
  if (!(total_ > 0.0)) throw InvalidArgument("quantile: zero-weight outcome density");
  const double target = u * total_;
  auto [lo, hi] = support(12.0);
  while (cdf(lo) > target) lo -= 4.0 * sigma_;
  while (cdf(hi) < target) hi += 4.0 * sigma_;

  // Newton with bisection safeguard on the bracket [lo, hi]
  double y = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double f = cdf(y) - target;
    if (f == 0.0) return y;
    if (f < 0.0) {
      lo = y;
    } else {
      hi = y;
    }
    if (hi - lo <= 1e-14 * std::max(1.0, std::abs(y))) break;
    const double slope = pdf(y);
    double next = slope > 0.0 ? y - f / slope : lo - 1.0;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - y) <= 1e-15 * std::max(1.0, std::abs(y))) {
      y = next;
      break;
    }
    y = next;
  }
  return y;
}

OutcomeDensity outcome_density(const state::TotalState& st, const Vec& coefficients) {
  const Projection proj = project(st, coefficients);
  const Mat gram = state::bath_gram(st);
  const Mat cov = gauss::covariance(st.gaussian);
  const double sigma = std::sqrt(proj.live.dot(cov * proj.live));

  const auto nb = st.branches.size();
  std::vector<double> base(nb);
  std::vector<double> centre(nb);
  for (std::size_t p = 0; p < nb; ++p) {
    base[p] = proj.pinned.dot(st.branches[p].pinned_values);
    centre[p] = coefficients.dot(st.branches[p].displacement);
  }
  std::vector<double> weights;
  std::vector<double> means;
  for (std::size_t p = 0; p < nb; ++p) {
    const auto& bp = st.branches[p];
    weights.push_back(std::norm(bp.amplitude) * bp.system_ket.squaredNorm());
    means.push_back(base[p] + centre[p]);
    for (std::size_t q = p + 1; q < nb; ++q) {
      const double g = gram(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
      if (g == 0.0) continue;
      const auto& bq = st.branches[q];
      const cplx c = std::conj(bp.amplitude) * bq.amplitude * bp.system_ket.dot(bq.system_ket);
      weights.push_back(2.0 * g * c.real());
      means.push_back(base[p] + 0.5 * (centre[p] + centre[q]));
    }
  }
  return OutcomeDensity(std::move(weights), std::move(means), sigma);
}

state::TotalState measure_linear(const state::TotalState& st, const Vec& coefficients,
                                 double outcome) {
  const Projection proj = project(st, coefficients);
  const Vec direction = proj.live / proj.norm;
  const Mat complement = gauss::complement_basis(direction);
  const double log_c_parent = gauss::log_normalization_constant(st.gaussian);

  state::TotalState out;
  out.step_clock = st.step_clock;
  out.live_basis = st.live_basis * complement;
  out.pin_directions.resize(st.bath_dim(), st.n_pins() + 1);
  out.pin_directions.leftCols(st.n_pins()) = st.pin_directions;
  out.pin_directions.col(st.n_pins()) = st.live_basis * direction;
  out.branches.reserve(st.branches.size());

  const double log_jacobian = -0.5 * std::log(proj.norm);
  bool have_form = false;
  double log_c_child = 0.0;
  for (const auto& b : st.branches) {
    const double pinned_part = proj.pinned.dot(b.pinned_values);
    const double value = (outcome - pinned_part) / proj.norm;
    const Vec live = st.live_basis.transpose() * b.displacement;
    gauss::SliceResult s = gauss::slice(st.gaussian, direction, value, live);
    if (!have_form) {
      out.gaussian = s.form;
      log_c_child = gauss::log_normalization_constant(s.form);
      have_form = true;
    }
    const double scale =
        std::exp(s.log_weight + log_c_parent - log_c_child + log_jacobian);
    Vec pins(b.pinned_values.size() + 1);
    pins << b.pinned_values, value;
    out.branches.push_back(state::Branch{b.amplitude * scale, b.system_ket,
                                         out.live_basis * s.displacement, std::move(pins)});
  }
  if (!have_form) {
    out.gaussian = gauss::slice(st.gaussian, direction, 0.0, Vec::Zero(st.live_dim())).form;
  }
  state::prune(out);
  return out;
}

state::TotalState measure_position(const state::TotalState& st, int k, double outcome) {
  if (k < 0 || k >= st.bath_dim()) {
    throw InvalidArgument("measure_position: apparatus index " + std::to_string(k) +
                          " out of range");
  }
  const Vec e = Vec::Unit(st.bath_dim(), k);
  if ((st.live_basis.transpose() * e).norm() <= kLiveTol) {
    throw CoordinateAlreadyPinned("measure_position: apparatus " + std::to_string(k) +
                                  " is already pinned");
  }
  return measure_linear(st, e, outcome);
}

std::pair<double, state::TotalState> sample_outcome(const state::TotalState& st,
                                                    const Vec& coefficients,
                                                    std::mt19937_64& rng) {
  const OutcomeDensity dens = outcome_density(st, coefficients);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  double u = uniform(rng);
  while (u <= 0.0) u = uniform(rng);
  const double y = dens.quantile(u);
  return {y, measure_linear(st, coefficients, y)};
}

std::string strategy_name(StrategyKind k) {
  switch (k) {
    case StrategyKind::none: return "none";
    case StrategyKind::after_interaction: return "after_interaction";
    case StrategyKind::all_at_once: return "all_at_once";
    case StrategyKind::diosi_monitoring: return "diosi_monitoring";
  }
  return "unknown";
}

StrategyKind parse_strategy(const std::string& name) {
  for (auto k : {StrategyKind::none, StrategyKind::after_interaction,
                 StrategyKind::all_at_once, StrategyKind::diosi_monitoring}) {
    if (strategy_name(k) == name) return k;
  }
  throw InvalidArgument("unknown strategy '" + name + "'");
}

int Strategy::resolved_steps(const chain::Model& model) const {
  const int m = steps == 0 ? model.n_apparatus() : steps;
  if (m < 1 || m > model.n_apparatus()) {
    throw InvalidArgument("strategy steps " + std::to_string(steps) + " outside [1, " +
                          std::to_string(model.n_apparatus()) + "]");
  }
  return m;
}

std::vector<PlanStep> build_plan(const chain::Model& model, const Strategy& strategy) {
  const int m = strategy.resolved_steps(model);
  const int n_bath = model.n_apparatus();
  std::vector<PlanStep> plan;
  auto interact = [&](int n) { plan.push_back({PlanStep::Type::interact, n, "", Vec()}); };
  auto observe_y = [&](int at, int n) {
    plan.push_back({PlanStep::Type::measure, at, "y" + std::to_string(n),
                    model.scaled_observable(n)});
  };
  for (int n = 1; n <= m; ++n) {
    interact(n);
    switch (strategy.kind) {
      case StrategyKind::none:
        break;
      case StrategyKind::after_interaction:
        plan.push_back({PlanStep::Type::measure, n, "x" + std::to_string(n),
                        Vec::Unit(n_bath, n - 1)});
        break;
      case StrategyKind::all_at_once:
        if (n == m) {
          for (int k = 1; k <= m; ++k) observe_y(m, k);
        }
        break;
      case StrategyKind::diosi_monitoring:
        observe_y(n, n);
        break;
    }
  }
  return plan;
}

namespace {

template <class Outcome>
StrategyResult execute(const chain::Model& model, const Strategy& strategy,
                       Outcome&& next_outcome) {
  const std::vector<PlanStep> plan = build_plan(model, strategy);
  StrategyResult res;
  res.record.strategy = strategy_name(strategy.kind);
  state::TotalState st = chain::initial_total_state(model);
  double log_norm = 0.0;
  std::size_t measured = 0;

  for (std::size_t i = 0; i < plan.size(); ++i) {
    const PlanStep& ev = plan[i];
    const double t = model.config().time(ev.step);
    std::optional<double> outcome;
    if (ev.type == PlanStep::Type::interact) {
      st = state::apply_interaction(st, model, ev.step);
    } else {
      const double y = next_outcome(st, ev, measured++);
      state::TotalState next = measure_linear(st, ev.coefficients, y);
      const double before = state::norm_squared(st);
      const double after = state::norm_squared(next);
      const double log_density = std::log(after) - std::log(before);
      res.record.entries.push_back({ev.step, t, ev.tag, y, log_density});
      log_norm += log_density;
      outcome = y;
      st = std::move(next);
    }
    const state::DensityMatrix rho = state::reduced_density(st);
    const bool live = rho.weight > 0.0;
    const double pur = live ? state::purity(rho) : std::nan("");
    res.trajectory.push_back(Checkpoint{ev.step, t,
                                        ev.type == PlanStep::Type::interact ? "interact" : ev.tag,
                                        outcome, log_norm, pur,
                                        live ? rho.normalized() : rho});
    const bool last_of_step = i + 1 == plan.size() || plan[i + 1].step != ev.step;
    if (last_of_step) res.purity_series.push_back(pur);
  }
  res.reduced = state::reduced_density(st);
  res.conditional_state = std::move(st);
  return res;
}

}  // namespace

StrategyResult run_strategy(const chain::Model& model, const Strategy& strategy,
                            std::mt19937_64& rng) {
  return execute(model, strategy,
                 [&](const state::TotalState& st, const PlanStep& ev, std::size_t) {
                   const OutcomeDensity dens = outcome_density(st, ev.coefficients);
                   std::uniform_real_distribution<double> uniform(0.0, 1.0);
                   double u = uniform(rng);
                   while (u <= 0.0) u = uniform(rng);
                   return dens.quantile(u);
                 });
}

StrategyResult run_strategy(const chain::Model& model, const Strategy& strategy,
                            const std::vector<ReplayEntry>& record) {
  const auto plan = build_plan(model, strategy);
  const auto n_measure = std::count_if(plan.begin(), plan.end(), [](const PlanStep& p) {
    return p.type == PlanStep::Type::measure;
  });
  if (static_cast<std::size_t>(n_measure) != record.size()) {
    throw InvalidArgument("replay record has " + std::to_string(record.size()) +
                          " entries, strategy " + strategy_name(strategy.kind) + " expects " +
                          std::to_string(n_measure));
  }
  return execute(model, strategy,
                 [&](const state::TotalState&, const PlanStep& ev, std::size_t i) {
                   const ReplayEntry& r = record[i];
                   if (r.step != ev.step || r.observable != ev.tag) {
                     throw InvalidArgument("replay entry " + std::to_string(i) + " is (" +
                                           std::to_string(r.step) + ", " + r.observable +
                                           "), plan expects (" + std::to_string(ev.step) +
                                           ", " + ev.tag + ")");
                   }
                   return r.outcome;
                 });
}

std::vector<ReplayEntry> to_replay(const MeasurementRecord& record) {
  std::vector<ReplayEntry> out;
  out.reserve(record.entries.size());
  for (const auto& e : record.entries) out.push_back({e.step, e.observable, e.outcome});
  return out;
}

}  // namespace achain::measure
