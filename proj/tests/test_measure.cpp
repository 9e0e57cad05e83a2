#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "achain/chain.hpp"
#include "achain/errors.hpp"
#include "achain/measure.hpp"
#include "achain/state.hpp"
#include "frozen_constants.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace achain;
using measure::Strategy;
using measure::StrategyKind;

namespace {

state::TotalState interactions(const chain::Model& m, int steps) {
  auto st = chain::initial_total_state(m);
  for (int n = 1; n <= steps; ++n) st = state::apply_interaction(st, m, n);
  return st;
}

double integrate_density(const measure::OutcomeDensity& p, int points = 4001) {
  const auto [lo, hi] = p.support(10.0);
  return testing::line_integral(lo, hi, points, [&](double y) { return p.pdf(y); });
}

std::vector<measure::ReplayEntry> monitoring_record(double y1, double y2) {
  return {{1, "y1", y1}, {2, "y2", y2}};
}

std::vector<measure::ReplayEntry> all_at_once_record(double y1, double y2) {
  return {{2, "y1", y1}, {2, "y2", y2}};
}

chain::Model random_model(std::mt19937_64& rng, int d, int n) {
  chain::SystemSpec s;
  s.dim = d;
  s.hamiltonian = testing::random_hermitian(d, rng);
  s.coupling = testing::random_hermitian(d, rng, 0.7);
  s.initial_ket = testing::random_ket(d, rng);
  std::uniform_real_distribution<double> uni(0.3, 1.5);
  chain::ChainConfig c;
  c.epsilon = uni(rng);
  c.n_apparatus = n;
  c.kick_strength = uni(rng);
  return chain::Model(s, chain::CorrelationKernel::exponential(uni(rng), uni(rng)), c);
}

}  // namespace

TEST_CASE("outcome density of the bare bath") {
  const auto m = testing::paper_model(0.5);
  const auto st = chain::initial_total_state(m);
  const auto p = measure::outcome_density(st, m.scaled_observable(1));
  REQUIRE(p.weights().size() == 1);
  CHECK(p.means()[0] == doctest::Approx(0.0));
  CHECK(p.sigma() * p.sigma() == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(p.total() == doctest::Approx(1.0).epsilon(1e-12));
  // z = 2 y has variance alpha(0) = 1
  CHECK(4.0 * p.sigma() * p.sigma() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("single branch density is centred on the branch position") {
  const auto m = testing::paper_model(0.5);
  auto st = interactions(m, 1);
  st = measure::measure_position(st, 0, 0.9);
  st.branches.resize(1);
  const Vec l = m.scaled_observable(2);
  const auto p = measure::outcome_density(st, l);
  const Vec pos = st.pin_directions * st.branches[0].pinned_values + st.branches[0].displacement;
  REQUIRE(p.weights().size() == 1);
  CHECK(p.means()[0] == doctest::Approx(l.dot(pos)).epsilon(1e-12));
}

TEST_CASE("outcome density integrates to the parent norm and matches measure_linear") {
  const auto m = testing::paper_model(0.5);
  const auto st = interactions(m, 2);
  for (int n = 1; n <= 2; ++n) {
    const Vec l = m.scaled_observable(n);
    const auto p = measure::outcome_density(st, l);
    CHECK(p.total() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(integrate_density(p) == doctest::Approx(1.0).epsilon(1e-8));
    for (double y : {-2.1, -0.7, 0.0, 0.35, 1.4}) {
      const double direct = state::norm_squared(measure::measure_linear(st, l, y));
      CHECK(p.pdf(y) == doctest::Approx(direct).epsilon(1e-10));
      CHECK(p.pdf(y) >= 0.0);
    }
  }
}

TEST_CASE("quantile inverts the cdf") {
  const auto m = testing::paper_model(0.5);
  const auto st = interactions(m, 2);
  const auto p = measure::outcome_density(st, m.scaled_observable(1));
  for (double u : {1e-9, 0.01, 0.3, 0.5, 0.77, 0.999999}) {
    CHECK(p.cdf(p.quantile(u)) / p.total() == doctest::Approx(u).epsilon(1e-10));
  }
  CHECK_THROWS_AS(p.quantile(0.0), InvalidArgument);
  CHECK_THROWS_AS(p.quantile(1.0), InvalidArgument);
}

TEST_CASE("position measurement at a = 0 far from the centre selects one branch") {
  const auto m = testing::paper_model(0.0);
  const auto st = interactions(m, 1);
  const auto cond = measure::measure_position(st, 0, 4.0);
  const auto rho = state::reduced_density(cond).normalized();
  const CVec e = m.spectrum(1).eigenvectors.col(1);
  CHECK(state::purity(rho) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(e.dot(rho.matrix * e)) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("position measurement at a = 0.5 leaves the system entangled") {
  const double a = 0.5;
  const auto m = testing::paper_model(a);
  const auto q = oracle::QubitExample::standard(a);
  const auto s1 = q.step(1);
  const auto st = interactions(m, 1);
  for (double x : {-0.6, 0.1, 0.8}) {
    const auto cond = measure::measure_position(st, 0, x);
    const auto rho = state::reduced_density(cond);
    // integrate phi0(x - l_k, x2) phi0(x - l_j, x2) over x2
    oracle::CMat ref = oracle::CMat::Zero(2, 2);
    for (int k = 0; k < 2; ++k)
      for (int j = 0; j < 2; ++j) {
        const double g = testing::line_integral(-10.0, 10.0, 2001, [&](double x2) {
          return q.phi0(x - s1.values(k), x2) * q.phi0(x - s1.values(j), x2);
        });
        ref += g * s1.vectors.col(k) * s1.vectors.col(k).dot(q.psi0) *
               std::conj(s1.vectors.col(j).dot(q.psi0)) * s1.vectors.col(j).adjoint();
      }
    CHECK((rho.matrix - ref).norm() < 1e-9);
    CHECK(state::purity(rho) < 1.0 - 1e-3);
  }
}

TEST_CASE("position measurement completeness") {
  const auto m = testing::paper_model(0.5);
  const auto st = interactions(m, 2);
  for (int k = 0; k < 2; ++k) {
    const double total = testing::line_integral(-9.0, 9.0, 3001, [&](double x) {
      return state::norm_squared(measure::measure_position(st, k, x));
    });
    CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("position measurement errors") {
  const auto m = testing::paper_model(0.5);
  auto st = interactions(m, 1);
  CHECK_THROWS_AS(measure::measure_position(st, 2, 0.0), InvalidArgument);
  CHECK_THROWS_AS(measure::measure_position(st, -1, 0.0), InvalidArgument);
  st = measure::measure_position(st, 0, 0.2);
  CHECK_THROWS_AS(measure::measure_position(st, 0, 0.2), CoordinateAlreadyPinned);
}

TEST_CASE("measurement fully inside the pinned subspace is degenerate") {
  const auto m = testing::paper_model(0.5);
  auto st = interactions(m, 2);
  st = measure::measure_linear(st, m.scaled_observable(1), 0.4);
  st = measure::measure_linear(st, m.scaled_observable(2), -0.1);
  CHECK(st.live_dim() == 0);
  try {
    measure::measure_linear(st, Vec::Unit(2, 0), 0.0);
    FAIL("expected DegenerateMeasurement");
  } catch (const DegenerateMeasurement& e) {
    CHECK(e.forced_values.size() == st.branches.size());
    const double x1 = (0.4 - 0.5 * -0.1) / 0.75;
    for (double v : e.forced_values) CHECK(v == doctest::Approx(x1).epsilon(1e-12));
  }
  CHECK_THROWS_AS(measure::measure_linear(st, Vec::Zero(2), 0.0), DegenerateMeasurement);
  CHECK_THROWS_AS(measure::measure_linear(st, Vec::Zero(3), 0.0), DimensionMismatch);
}

TEST_CASE("all-at-once conditioning pins branch-independent positions") {
  const double a = 0.5;
  const auto m = testing::paper_model(a);
  const double y1 = 0.37, y2 = -0.81;
  auto st = interactions(m, 2);
  st = measure::measure_linear(st, m.scaled_observable(1), y1);
  st = measure::measure_linear(st, m.scaled_observable(2), y2);
  Vec expected(2);
  expected << (y1 - a * y2) / (1 - a * a), (y2 - a * y1) / (1 - a * a);
  for (const auto& b : st.branches) {
    const Vec pos = st.pin_directions * b.pinned_values;
    CHECK((pos - expected).norm() < 1e-12);
  }
  CHECK(state::purity(state::reduced_density(st)) == doctest::Approx(1.0).epsilon(1e-10));

  // and the reduced density agrees with the closed-form ket
  const auto q = oracle::QubitExample::standard(a);
  const CVec psi = oracle::all_at_once_ket(q, y1, y2);
  const CMat ref = psi * psi.adjoint() / (1.0 - a * a);
  CHECK((state::reduced_density(st).matrix - ref).norm() < 1e-12);
}

TEST_CASE("measurements at a fixed time commute") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal;
  for (double a : {0.0, 0.5, 0.8}) {
    const auto m = testing::paper_model(a);
    const auto st = interactions(m, 2);
    for (int t = 0; t < 5; ++t) {
      const double y1 = normal(rng), y2 = normal(rng);
      const auto l1 = m.scaled_observable(1), l2 = m.scaled_observable(2);
      const auto ab = measure::measure_linear(measure::measure_linear(st, l1, y1), l2, y2);
      const auto ba = measure::measure_linear(measure::measure_linear(st, l2, y2), l1, y1);
      const auto r1 = state::reduced_density(ab);
      const auto r2 = state::reduced_density(ba);
      CHECK((r1.matrix - r2.matrix).norm() < 1e-10 * std::max(1.0, r1.weight));
      CHECK(r1.weight == doctest::Approx(r2.weight).epsilon(1e-10));
    }
  }
}

TEST_CASE("monitoring pins depend on the last branch") {
  const double a = 0.5;
  const auto m = testing::paper_model(a);
  auto st = interactions(m, 1);
  st = measure::measure_linear(st, m.scaled_observable(1), 0.3);
  st = state::apply_interaction(st, m, 2);
  st = measure::measure_linear(st, m.scaled_observable(2), -0.2);
  std::vector<double> first;
  for (const auto& b : st.branches) first.push_back((st.pin_directions * b.pinned_values)(0));
  std::sort(first.begin(), first.end());
  CHECK(first.back() - first.front() > 0.5);
  const double pur = state::purity(state::reduced_density(st));
  CHECK(pur < 1.0 - 1e-3);
  CHECK(pur == doctest::Approx(frozen::kMonitoringPurityRecord).epsilon(1e-10));
}

TEST_CASE("conditional states agree pointwise with the closed forms") {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  for (double a : {0.0, 0.25, 0.5, 0.75}) {
    const auto m = testing::paper_model(a);
    const auto q = oracle::QubitExample::standard(a);
    for (int t = 0; t < 8; ++t) {
      const double y1 = uni(rng), y2 = uni(rng);
      const auto mon = measure::run_strategy(m, Strategy{StrategyKind::diosi_monitoring, 0},
                                             monitoring_record(y1, y2));
      const CMat ref_mon = oracle::monitoring_density(q, y1, y2);
      CHECK((mon.reduced.matrix - ref_mon).norm() < 1e-12 * std::max(1.0, ref_mon.norm()));

      const auto aao = measure::run_strategy(m, Strategy{StrategyKind::all_at_once, 0},
                                             all_at_once_record(y1, y2));
      const CVec psi = oracle::all_at_once_ket(q, y1, y2);
      const CMat ref_aao = psi * psi.adjoint() / (1.0 - a * a);
      CHECK((aao.reduced.matrix - ref_aao).norm() < 1e-12 * std::max(1.0, ref_aao.norm()));
      CHECK(aao.purity_series.back() == doctest::Approx(1.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("monitoring: pure after the first step, mixed after the second") {
  const double a = 0.5;
  const auto m = testing::paper_model(a);
  const auto q = oracle::QubitExample::standard(a);
  std::mt19937_64 rng(55);
  int mixed = 0;
  for (int t = 0; t < 200; ++t) {
    const auto res = measure::run_strategy(m, Strategy{StrategyKind::diosi_monitoring, 0}, rng);
    REQUIRE(res.purity_series.size() == 2);
    CHECK(res.purity_series[0] == doctest::Approx(1.0).epsilon(1e-10));
    // step-1 conditional state is exp[-(y1 - X1)^2] psi0
    const double y1 = res.record.entries[0].outcome;
    const CVec chi = oracle::first_step_ket(q, y1).normalized();
    const auto& rho1 = res.trajectory[1].rho.matrix;
    CHECK(std::abs(chi.dot(rho1 * chi)) == doctest::Approx(1.0).epsilon(1e-10));
    if (res.purity_series[1] < 1.0 - 1e-6) ++mixed;
  }
  CHECK(mixed > 0);
}

TEST_CASE("Markov limit: monitoring equals all-at-once and the product form") {
  const auto m = testing::paper_model(0.0);
  const auto q = oracle::QubitExample::standard(0.0);
  const auto s1 = q.step(1), s2 = q.step(2);
  std::mt19937_64 rng(12);
  for (int t = 0; t < 20; ++t) {
    const auto mon = measure::run_strategy(m, Strategy{StrategyKind::diosi_monitoring, 0}, rng);
    const double y1 = mon.record.entries[0].outcome;
    const double y2 = mon.record.entries[1].outcome;
    const auto aao = measure::run_strategy(m, Strategy{StrategyKind::all_at_once, 0},
                                           all_at_once_record(y1, y2));
    CHECK((mon.reduced.matrix - aao.reduced.matrix).norm() < 1e-10);
    for (double p : mon.purity_series) CHECK(p == doctest::Approx(1.0).epsilon(1e-10));

    CVec k = CVec::Zero(2);
    for (int i = 0; i < 2; ++i) {
      CVec inner = s1.vectors.col(i) * (std::exp(-std::pow(s1.values(i) - y1, 2)) *
                                        s1.vectors.col(i).dot(q.psi0));
      for (int j = 0; j < 2; ++j) {
        k += s2.vectors.col(j) * (std::exp(-std::pow(s2.values(j) - y2, 2)) *
                                  s2.vectors.col(j).dot(inner));
      }
    }
    const CMat ref = (2.0 / std::numbers::pi) * k * k.adjoint();
    CHECK((mon.reduced.matrix - ref).norm() < 1e-12);
  }
}

TEST_CASE("sampling is reproducible and replay is exact") {
  const auto m = testing::paper_model(0.5);
  for (auto kind : {StrategyKind::after_interaction, StrategyKind::all_at_once,
                    StrategyKind::diosi_monitoring}) {
    std::mt19937_64 r1(77), r2(77);
    const auto a = measure::run_strategy(m, Strategy{kind, 0}, r1);
    const auto b = measure::run_strategy(m, Strategy{kind, 0}, r2);
    REQUIRE(a.record.entries.size() == b.record.entries.size());
    for (std::size_t i = 0; i < a.record.entries.size(); ++i) {
      CHECK(a.record.entries[i].outcome == b.record.entries[i].outcome);
    }
    const auto replay = measure::run_strategy(m, Strategy{kind, 0}, measure::to_replay(a.record));
    CHECK(replay.reduced.matrix == a.reduced.matrix);
    CHECK(replay.reduced.weight == a.reduced.weight);
    REQUIRE(replay.conditional_state.branches.size() == a.conditional_state.branches.size());
    for (std::size_t i = 0; i < a.conditional_state.branches.size(); ++i) {
      CHECK(replay.conditional_state.branches[i].amplitude ==
            a.conditional_state.branches[i].amplitude);
    }
  }
}

TEST_CASE("replay validation") {
  const auto m = testing::paper_model(0.5);
  const Strategy mon{StrategyKind::diosi_monitoring, 0};
  CHECK_THROWS_AS(measure::run_strategy(m, mon, std::vector<measure::ReplayEntry>{{1, "y1", 0.0}}),
                  InvalidArgument);
  CHECK_THROWS_AS(measure::run_strategy(m, mon, all_at_once_record(0.0, 0.0)), InvalidArgument);
  CHECK_THROWS_AS(measure::run_strategy(m, mon, std::vector<measure::ReplayEntry>{{1, "x1", 0.0}, {2, "y2", 0.0}}),
                  InvalidArgument);
  CHECK_NOTHROW(measure::run_strategy(m, Strategy{StrategyKind::none, 0},
                                      std::vector<measure::ReplayEntry>{}));
}

TEST_CASE("plans") {
  const auto m = testing::paper_model(0.5);
  auto tags = [&](StrategyKind k, int steps) {
    std::string s;
    for (const auto& e : measure::build_plan(m, Strategy{k, steps})) {
      s += e.type == measure::PlanStep::Type::interact ? "I" + std::to_string(e.step) : e.tag;
      s += ' ';
    }
    return s;
  };
  CHECK(tags(StrategyKind::none, 0) == "I1 I2 ");
  CHECK(tags(StrategyKind::after_interaction, 0) == "I1 x1 I2 x2 ");
  CHECK(tags(StrategyKind::all_at_once, 0) == "I1 I2 y1 y2 ");
  CHECK(tags(StrategyKind::all_at_once, 1) == "I1 y1 ");
  CHECK(tags(StrategyKind::diosi_monitoring, 0) == "I1 y1 I2 y2 ");
  CHECK_THROWS_AS(measure::build_plan(m, Strategy{StrategyKind::none, 3}), InvalidArgument);

  CHECK(measure::parse_strategy("diosi_monitoring") == StrategyKind::diosi_monitoring);
  CHECK(measure::strategy_name(StrategyKind::all_at_once) == "all_at_once");
  CHECK_THROWS_AS(measure::parse_strategy("sometimes"), InvalidArgument);
}

TEST_CASE("record bookkeeping") {
  const auto m = testing::paper_model(0.5);
  std::mt19937_64 rng(3);
  const auto res = measure::run_strategy(m, Strategy{StrategyKind::diosi_monitoring, 0}, rng);
  double total = 0.0;
  double last_time = 0.0;
  for (const auto& e : res.record.entries) {
    CHECK(std::isfinite(e.log_density));
    CHECK(e.time >= last_time);
    last_time = e.time;
    total += e.log_density;
  }
  CHECK(std::exp(total) == doctest::Approx(res.reduced.weight).epsilon(1e-12));
  CHECK(res.trajectory.back().log_weight == doctest::Approx(total));
  CHECK(res.record.strategy == "diosi_monitoring");
}

TEST_CASE("sampled outcomes follow the outcome density (Kolmogorov-Smirnov)") {
  const auto m = testing::paper_model(0.5);
  const auto st = interactions(m, 2);
  const Vec l = m.scaled_observable(2);
  const auto p = measure::outcome_density(st, l);
  std::mt19937_64 rng(2718);
  const int n = 100000;
  std::vector<double> ys;
  ys.reserve(n);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    double u = uniform(rng);
    while (u <= 0.0) u = uniform(rng);
    ys.push_back(p.quantile(u));
  }
  std::sort(ys.begin(), ys.end());
  double ks = 0.0;
  for (int i = 0; i < n; ++i) {
    const double f = p.cdf(ys[i]) / p.total();
    ks = std::max({ks, std::abs(f - double(i) / n), std::abs(f - double(i + 1) / n)});
  }
  CHECK(ks < 1.628 / std::sqrt(double(n)));

  // the public sampler draws the same way and returns the conditioned state
  std::mt19937_64 r1(5), r2(5);
  const auto [y, cond] = measure::sample_outcome(st, l, r1);
  double u = uniform(r2);
  while (u <= 0.0) u = uniform(r2);
  CHECK(y == p.quantile(u));
  CHECK(state::norm_squared(cond) == doctest::Approx(p.pdf(y)).epsilon(1e-10));
}

TEST_CASE("completeness across random small models and every strategy") {
  std::mt19937_64 rng(404);
  for (int trial = 0; trial < 12; ++trial) {
    const int d = 2 + trial % 2;
    const int n = 1 + trial % 3;
    const auto m = random_model(rng, d, n);
    for (auto kind : {StrategyKind::after_interaction, StrategyKind::all_at_once,
                      StrategyKind::diosi_monitoring}) {
      // walk one sampled trajectory, checking every measurement on the way
      auto st = chain::initial_total_state(m);
      for (const auto& ev : measure::build_plan(m, Strategy{kind, 0})) {
        if (ev.type == measure::PlanStep::Type::interact) {
          const double before = state::norm_squared(st);
          st = state::apply_interaction(st, m, ev.step);
          CHECK(state::norm_squared(st) == doctest::Approx(before).epsilon(1e-12));
          continue;
        }
        const double parent = state::norm_squared(st);
        const auto p = measure::outcome_density(st, ev.coefficients);
        CHECK(integrate_density(p) == doctest::Approx(parent).epsilon(1e-8));
        st = measure::sample_outcome(st, ev.coefficients, rng).second;
      }
    }
  }
}
