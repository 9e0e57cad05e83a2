#include "cli.hpp"

#include <fstream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "achain/ensemble.hpp"
#include "achain/errors.hpp"

namespace achain::cli {

namespace {

std::string index_suffix(int i, int j) { return std::to_string(i) + "_" + std::to_string(j); }

void append_matrix_columns(std::vector<std::string>& cols, const std::string& prefix, int d) {
  for (const char* part : {"re", "im"}) {
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) cols.push_back(prefix + "_" + part + "_" + index_suffix(i, j));
  }
}

void append_matrix_cells(std::vector<Cell>& row, const CMat& m) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) row.emplace_back(m(i, j).real());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) row.emplace_back(m(i, j).imag());
}

void append_real_cells(std::vector<Cell>& row, const Mat& m) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) row.emplace_back(m(i, j));
}

Cell count(std::uint64_t v) { return static_cast<std::int64_t>(v); }

const std::vector<std::string> kCompareColumns = {
    "strategy",       "mode",           "mean_purity", "min_purity", "max_purity",
    "fraction_mixed", "mean_step_min_purity", "fraction_step_mixed", "trace_distance",
    "standard_error", "samples", "seed"};

void append_compare_cells(std::vector<Cell>& row, const ensemble::CompareRow& r) {
  row.emplace_back(r.strategy);
  row.emplace_back(r.mode);
  row.emplace_back(r.mean_purity);
  row.emplace_back(r.min_purity);
  row.emplace_back(r.max_purity);
  row.emplace_back(r.fraction_mixed);
  row.emplace_back(r.mean_step_min_purity);
  row.emplace_back(r.fraction_step_mixed);
  row.emplace_back(r.trace_distance);
  row.emplace_back(r.standard_error);
  row.push_back(count(r.samples));
  row.push_back(count(r.seed));
}

Table histogram_table(const std::vector<std::pair<double, ensemble::CompareRow>>& rows,
                      bool with_a) {
  Table t{"purity_histogram", {}, {}};
  if (with_a) t.columns.push_back("a");
  for (const char* c : {"strategy", "bin", "lower", "upper", "weight"}) t.columns.push_back(c);
  for (const auto& [a, r] : rows) {
    const int bins = static_cast<int>(r.purity_histogram.size());
    const double width = (1.0 - r.histogram_lower) / bins;
    for (int b = 0; b < bins; ++b) {
      std::vector<Cell> row;
      if (with_a) row.emplace_back(a);
      row.emplace_back(r.strategy);
      row.emplace_back(std::int64_t{b});
      row.emplace_back(r.histogram_lower + b * width);
      row.emplace_back(b + 1 == bins ? 1.0 : r.histogram_lower + (b + 1) * width);
      row.emplace_back(r.purity_histogram[static_cast<std::size_t>(b)]);
      t.add_row(std::move(row));
    }
  }
  return t;
}

ensemble::EnsembleReport ensemble_report(const chain::Model& model,
                                         const scenario::ScenarioConfig& cfg) {
  if (cfg.mode == "quadrature") {
    return ensemble::quadrature_average(model, cfg.strategy, cfg.points_per_axis,
                                        cfg.range_sigmas);
  }
  return ensemble::mc_average(model, cfg.strategy, cfg.n_samples, cfg.master_seed);
}

}  // namespace

Document simulate_document(const scenario::ScenarioConfig& cfg) {
  const chain::Model model = scenario::build_model(cfg);
  const int d = model.system().dim;

  Table traj{"trajectory",
             {"step", "time", "event", "outcome", "log_weight", "purity"},
             {}};
  append_matrix_columns(traj.columns, "rho", d);
  auto rng = ensemble::trajectory_rng(cfg.master_seed, 0);
  const auto result = measure::run_strategy(model, cfg.strategy, rng);
  for (const auto& cp : result.trajectory) {
    std::vector<Cell> row{std::int64_t{cp.step}, cp.time, cp.event,
                          cp.outcome ? Cell(*cp.outcome) : Cell(), cp.log_weight, cp.purity};
    append_matrix_cells(row, cp.rho.matrix);
    traj.add_row(std::move(row));
  }

  const auto rep = ensemble_report(model, cfg);
  const auto summary = ensemble::summarize(rep);
  Table ens{"ensemble", kCompareColumns, {}};
  for (const char* c : {"points_per_axis", "range_sigmas", "outcome_mass"}) ens.columns.push_back(c);
  append_matrix_columns(ens.columns, "avg", d);
  for (const char* part : {"se_re", "se_im"}) {
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) ens.columns.push_back(std::string(part) + "_" + index_suffix(i, j));
  }
  append_matrix_columns(ens.columns, "ref", d);
  std::vector<Cell> row;
  append_compare_cells(row, summary);
  row.emplace_back(std::int64_t{rep.points_per_axis});
  row.emplace_back(rep.range_sigmas);
  row.emplace_back(rep.outcome_mass);
  append_matrix_cells(row, rep.average_density.matrix);
  if (rep.standard_error_re.size() == d * d) {
    append_real_cells(row, rep.standard_error_re);
    append_real_cells(row, rep.standard_error_im);
  } else {
    for (int i = 0; i < 2 * d * d; ++i) row.emplace_back(0.0);
  }
  append_matrix_cells(row, rep.reference_density.matrix);
  ens.add_row(std::move(row));

  return {traj, ens, histogram_table({{0.0, summary}}, false)};
}

Document paper_example_document(double a, const scenario::ScenarioConfig& run) {
  Table cmp{"compare", {"a"}, {}};
  cmp.columns.insert(cmp.columns.end(), kCompareColumns.begin(), kCompareColumns.end());
  std::vector<std::pair<double, ensemble::CompareRow>> all;
  for (double value : {a, 0.0}) {
    scenario::ScenarioConfig cfg = scenario::paper_example_config(value);
    cfg.master_seed = run.master_seed;
    cfg.mode = run.mode;
    cfg.n_samples = run.n_samples;
    cfg.points_per_axis = run.points_per_axis;
    cfg.range_sigmas = run.range_sigmas;
    const auto rows =
        ensemble::compare_strategies(scenario::build_model(cfg), scenario::compare_options(cfg));
    for (const auto& r : rows) {
      std::vector<Cell> row{value};
      append_compare_cells(row, r);
      cmp.add_row(std::move(row));
      all.emplace_back(value, r);
    }
  }
  return {cmp, histogram_table(all, true)};
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) throw ConfigError("--grid", "empty entry in '" + text + "'");
    const auto e = item.find_last_not_of(" \t");
    item = item.substr(b, e - b + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || !std::isfinite(v)) {
      throw ConfigError("--grid", "'" + item + "' is not a number");
    }
    grid.push_back(v);
  }
  if (grid.empty()) throw ConfigError("--grid", "grid is empty");
  return grid;
}

scenario::ScenarioConfig with_parameter(const scenario::ScenarioConfig& base,
                                        const std::string& param, double value) {
  scenario::ScenarioConfig cfg = base;
  if (param == "a") {
    if (cfg.kernel.type != "table") {
      throw ConfigError("--param", "sweeping a needs a table kernel");
    }
    const double alpha0 = scenario::build_kernel(cfg.kernel).value(0.0, cfg.epsilon);
    cfg.kernel.points = {{0.0, alpha0}, {cfg.epsilon, value}};
  } else if (param == "gamma") {
    if (!(value > 0.0)) throw ConfigError("--grid", "gamma must be positive");
    if (cfg.kernel.type != "exponential") {
      cfg.kernel.g2 = scenario::build_kernel(cfg.kernel).value(0.0, cfg.epsilon);
      cfg.kernel.type = "exponential";
    }
    cfg.kernel.gamma = value;
  } else if (param == "epsilon") {
    if (!(value > 0.0)) throw ConfigError("--grid", "epsilon must be positive");
    cfg.epsilon = value;
  } else {
    throw ConfigError("--param", "expected a, gamma or epsilon");
  }
  return cfg;
}

Document sweep_document(const scenario::ScenarioConfig& base, const std::string& param,
                        const std::vector<double>& grid) {
  if (grid.empty()) throw ConfigError("--grid", "grid is empty");
  Table t{"sweep", {"param", "value"}, {}};
  t.columns.insert(t.columns.end(), kCompareColumns.begin(), kCompareColumns.end());
  for (double v : grid) {
    const auto cfg = with_parameter(base, param, v);
    auto opts = scenario::compare_options(cfg);
    const auto rows = ensemble::compare_strategies(scenario::build_model(cfg), opts);
    for (const auto& r : rows) {
      std::vector<Cell> row{param, v};
      append_compare_cells(row, r);
      t.add_row(std::move(row));
    }
  }
  return {t};
}

Document covariance_document(const scenario::ScenarioConfig& cfg, std::uint64_t samples,
                             std::uint64_t seed) {
  const auto kernel = scenario::build_kernel(cfg.kernel);
  const auto chain_cfg = scenario::build_chain_config(cfg);
  const auto rep = ensemble::covariance_check(kernel, chain_cfg, samples, seed);
  Table cov{"covariance", {"l", "m", "empirical", "expected", "sigma", "z"}, {}};
  for (int l = 0; l < rep.empirical.rows(); ++l) {
    for (int m = 0; m < rep.empirical.cols(); ++m) {
      const double dev = rep.empirical(l, m) - rep.expected(l, m);
      cov.add_row({std::int64_t{l + 1}, std::int64_t{m + 1}, rep.empirical(l, m),
                   rep.expected(l, m), rep.sigma(l, m), dev / rep.sigma(l, m)});
    }
  }
  Table sum{"summary", {"n_samples", "seed", "max_abs_deviation", "max_z", "within_3sigma"}, {}};
  sum.add_row({count(rep.n_samples), count(seed), rep.max_abs_deviation, rep.max_z,
               std::int64_t{rep.within_3sigma ? 1 : 0}});
  return {cov, sum};
}

namespace {

struct CommonFlags {
  std::string config;
  std::string out;
  std::string format;
  std::string mode;
  std::uint64_t seed = 0;
  std::uint64_t samples = 0;
  int points = 0;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* samples_opt = nullptr;
  CLI::Option* points_opt = nullptr;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_config) {
  if (with_config) cmd->add_option("--config", f.config, "Scenario file (JSON)");
  f.seed_opt = cmd->add_option("--seed", f.seed, "Master seed");
  f.samples_opt = cmd->add_option("--samples", f.samples, "Monte Carlo sample count");
  cmd->add_option("--out", f.out, "Output path (default: stdout)");
  cmd->add_option("--format", f.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
}

void add_run_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--mode", f.mode, "Averaging mode")->check(CLI::IsMember({"mc", "quadrature"}));
  f.points_opt = cmd->add_option("--points", f.points, "Quadrature points per axis");
}

scenario::ScenarioConfig resolve(const CommonFlags& f, scenario::ScenarioConfig cfg) {
  if (*f.seed_opt) cfg.master_seed = f.seed;
  if (*f.samples_opt) {
    if (f.samples < 1) throw ConfigError("--samples", "must be >= 1");
    cfg.n_samples = f.samples;
  }
  if (f.points_opt != nullptr && *f.points_opt) {
    if (f.points < 2) throw ConfigError("--points", "must be >= 2");
    cfg.points_per_axis = f.points;
  }
  if (!f.mode.empty()) cfg.mode = f.mode;
  if (!f.format.empty()) cfg.format = f.format;
  if (!f.out.empty()) cfg.path = f.out;
  return cfg;
}

scenario::ScenarioConfig base_config(const CommonFlags& f) {
  return f.config.empty() ? scenario::paper_example_config() : scenario::load_config(f.config);
}

void emit(const Document& doc, const scenario::ScenarioConfig& cfg, std::ostream& out) {
  std::ostringstream buf;
  write_document(buf, doc, cfg.format);
  if (cfg.path.empty()) {
    out << buf.str();
    return;
  }
  std::ofstream file(cfg.path, std::ios::binary);
  if (!file) throw ConfigError("--out", "cannot open '" + cfg.path + "' for writing");
  file << buf.str();
  if (!file) throw ConfigError("--out", "write to '" + cfg.path + "' failed");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Apparatus-chain open quantum system simulator", "achain"};
  app.require_subcommand(1);

  CommonFlags sim_f, example_f, sweep_f, cov_f;
  auto* sim = app.add_subcommand("simulate", "Run one configured strategy and its ensemble");
  add_common(sim, sim_f, true);
  add_run_flags(sim, sim_f);
  sim->get_option("--config")->required();

  double a = 0.5;
  auto* example = app.add_subcommand("paper-example",
                                   "Compare all strategies on the two-apparatus qubit");
  add_common(example, example_f, false);
  add_run_flags(example, example_f);
  example->add_option("--a", a, "Kernel value alpha(epsilon), 0 <= a < 1");

  std::string param;
  std::string grid_text;
  auto* sweep = app.add_subcommand("sweep", "Compare strategies across a parameter grid");
  add_common(sweep, sweep_f, true);
  add_run_flags(sweep, sweep_f);
  sweep->add_option("--param", param, "Swept parameter")
      ->required()
      ->check(CLI::IsMember({"a", "gamma", "epsilon"}));
  sweep->add_option("--grid", grid_text, "Comma-separated values")->required();

  auto* cov = app.add_subcommand("check-covariance",
                                 "Compare sampled noise covariance with the kernel");
  add_common(cov, cov_f, true);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*sim) {
      const auto cfg = resolve(sim_f, scenario::load_config(sim_f.config));
      emit(simulate_document(cfg), cfg, out);
    } else if (*example) {
      if (!(a >= 0.0 && a < 1.0)) throw ConfigError("--a", "must satisfy 0 <= a < 1");
      const auto cfg = resolve(example_f, scenario::paper_example_config(a));
      emit(paper_example_document(a, cfg), cfg, out);
    } else if (*sweep) {
      const auto grid = parse_grid(grid_text);
      const auto cfg = resolve(sweep_f, base_config(sweep_f));
      emit(sweep_document(cfg, param, grid), cfg, out);
    } else if (*cov) {
      const auto cfg = resolve(cov_f, base_config(cov_f));
      const std::uint64_t samples = *cov_f.samples_opt ? cfg.n_samples : 100000;
      emit(covariance_document(cfg, samples, cfg.master_seed), cfg, out);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NotPositiveDefinite& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const EigenSolveError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const InvalidArgument& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace achain::cli
