#include "achain/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "achain/errors.hpp"

namespace achain::scenario {

using nlohmann::json;

namespace {

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw ConfigError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(path + "." + key, "missing");
  return *it;
}

template <class T>
T number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer() && !v.is_number_unsigned()) {
      throw ConfigError(path, "expected an integer");
    }
    if constexpr (std::is_unsigned_v<T>) {
      if (!v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
        throw ConfigError(path, "must be non-negative");
      }
    }
  }
  return v.get<T>();
}

template <class T>
T optional_number(const json& obj, const std::string& key, const std::string& path, T dflt) {
  auto it = obj.find(key);
  return it == obj.end() ? dflt : number<T>(*it, path + "." + key);
}

std::string optional_string(const json& obj, const std::string& key, const std::string& path,
                            const std::string& dflt) {
  auto it = obj.find(key);
  if (it == obj.end()) return dflt;
  if (!it->is_string()) throw ConfigError(path + "." + key, "expected a string");
  return it->get<std::string>();
}

cplx complex_entry(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2) throw ConfigError(path, "expected a [re, im] pair");
  return {number<double>(v[0], path + "[0]"), number<double>(v[1], path + "[1]")};
}

CMat read_matrix(const json& v, int dim, const std::string& path) {
  if (!v.is_array() || v.size() != static_cast<std::size_t>(dim * dim)) {
    throw ConfigError(path, "expected " + std::to_string(dim * dim) +
                                " row-major [re, im] pairs");
  }
  CMat m(dim, dim);
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) {
      const auto i = static_cast<std::size_t>(r * dim + c);
      m(r, c) = complex_entry(v[i], path + "[" + std::to_string(i) + "]");
    }
  }
  return m;
}

CVec read_vector(const json& v, int dim, const std::string& path) {
  if (!v.is_array() || v.size() != static_cast<std::size_t>(dim)) {
    throw ConfigError(path, "expected " + std::to_string(dim) + " [re, im] pairs");
  }
  CVec x(dim);
  for (int i = 0; i < dim; ++i) {
    x(i) = complex_entry(v[static_cast<std::size_t>(i)], path + "[" + std::to_string(i) + "]");
  }
  return x;
}

json write_pairs(const cplx* data, Eigen::Index n) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < n; ++i) arr.push_back({data[i].real(), data[i].imag()});
  return arr;
}

json write_matrix(const CMat& m) {
  // row-major
  const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  return write_pairs(rm.data(), rm.size());
}

void check_hermitian(const CMat& m, const std::string& path) {
  const double err = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (err > 1e-12) {
    throw ConfigError(path, "matrix is not Hermitian (max |M - M^dagger| = " +
                                std::to_string(err) + ")");
  }
}

}  // namespace

ScenarioConfig paper_example_config(double a) {
  ScenarioConfig cfg;
  cfg.system.dim = 2;
  cfg.system.hamiltonian = CMat::Zero(2, 2);
  cfg.system.hamiltonian(0, 1) = cfg.system.hamiltonian(1, 0) = std::numbers::pi / 4.0;
  cfg.system.coupling = CMat::Zero(2, 2);
  cfg.system.coupling(0, 0) = 1.0;
  cfg.system.coupling(1, 1) = -1.0;
  cfg.system.initial_ket = CVec::Constant(2, cplx(1.0 / std::numbers::sqrt2, 0.0));
  cfg.kernel.type = "table";
  cfg.kernel.points = {{0.0, 1.0}, {1.0, a}};
  cfg.epsilon = 1.0;
  cfg.n_apparatus = 2;
  cfg.kick_strength = 1.0;
  return cfg;
}

std::vector<std::pair<double, double>> read_kernel_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("bath.kernel.file", "cannot open '" + path + "'");
  std::vector<std::pair<double, double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    for (char& ch : line) {
      if (ch == ',') ch = ' ';
    }
    std::istringstream ss(line);
    double tau = 0.0;
    double val = 0.0;
    if (!(ss >> tau)) continue;
    std::string rest;
    if (!(ss >> val) || (ss >> rest)) {
      throw ConfigError("bath.kernel.file",
                        path + ":" + std::to_string(lineno) + ": expected two columns");
    }
    rows.emplace_back(tau, val);
  }
  if (rows.empty()) throw ConfigError("bath.kernel.file", "'" + path + "' has no rows");
  return rows;
}

ScenarioConfig from_json(const json& j, const std::string& base_dir) {
  if (!j.is_object()) throw ConfigError("<root>", "expected an object");
  ScenarioConfig cfg;

  const json& sys = require(j, "system", "<root>");
  const int dim = number<int>(require(sys, "dim", "system"), "system.dim");
  if (dim < 2) throw ConfigError("system.dim", "must be >= 2");
  cfg.system.dim = dim;
  cfg.system.hamiltonian = read_matrix(require(sys, "hamiltonian", "system"), dim,
                                       "system.hamiltonian");
  cfg.system.coupling = read_matrix(require(sys, "coupling", "system"), dim, "system.coupling");
  cfg.system.initial_ket = read_vector(require(sys, "initial_ket", "system"), dim,
                                       "system.initial_ket");
  check_hermitian(cfg.system.hamiltonian, "system.hamiltonian");
  check_hermitian(cfg.system.coupling, "system.coupling");
  const double norm = cfg.system.initial_ket.norm();
  if (std::abs(norm - 1.0) > 1e-12) {
    throw ConfigError("system.initial_ket",
                      "not normalized (norm = " + std::to_string(norm) + ")");
  }

  const json& bath = require(j, "bath", "<root>");
  const json& kern = require(bath, "kernel", "bath");
  cfg.kernel.type = optional_string(kern, "type", "bath.kernel", "table");
  cfg.kernel.g2 = optional_number<double>(kern, "g2", "bath.kernel", 1.0);
  cfg.kernel.gamma = optional_number<double>(kern, "gamma", "bath.kernel", 1.0);
  cfg.kernel.sigma = optional_number<double>(kern, "sigma", "bath.kernel", 1.0);
  if (cfg.kernel.type == "table") {
    if (auto it = kern.find("points"); it != kern.end()) {
      if (!it->is_array() || it->empty()) {
        throw ConfigError("bath.kernel.points", "expected a non-empty list of [tau, alpha]");
      }
      for (std::size_t i = 0; i < it->size(); ++i) {
        const std::string p = "bath.kernel.points[" + std::to_string(i) + "]";
        const json& row = (*it)[i];
        if (!row.is_array() || row.size() != 2) throw ConfigError(p, "expected [tau, alpha]");
        cfg.kernel.points.emplace_back(number<double>(row[0], p), number<double>(row[1], p));
      }
    } else if (auto f = kern.find("file"); f != kern.end()) {
      if (!f->is_string()) throw ConfigError("bath.kernel.file", "expected a path");
      std::filesystem::path file = f->get<std::string>();
      if (file.is_relative()) file = std::filesystem::path(base_dir) / file;
      cfg.kernel.points = read_kernel_table(file.string());
    } else {
      throw ConfigError("bath.kernel.points", "table kernel needs 'points' or 'file'");
    }
  } else if (cfg.kernel.type != "markov" && cfg.kernel.type != "exponential" &&
             cfg.kernel.type != "gaussian") {
    throw ConfigError("bath.kernel.type", "unknown kernel '" + cfg.kernel.type + "'");
  }
  cfg.epsilon = number<double>(require(bath, "epsilon", "bath"), "bath.epsilon");
  if (!(cfg.epsilon > 0.0)) throw ConfigError("bath.epsilon", "must be positive");
  cfg.n_apparatus = number<int>(require(bath, "n_apparatus", "bath"), "bath.n_apparatus");
  if (cfg.n_apparatus < 1) throw ConfigError("bath.n_apparatus", "must be >= 1");
  cfg.kick_strength = optional_number<double>(bath, "kick_strength", "bath", 1.0);

  if (auto it = j.find("strategy"); it != j.end()) {
    const std::string type = optional_string(*it, "type", "strategy", "diosi_monitoring");
    try {
      cfg.strategy.kind = measure::parse_strategy(type);
    } catch (const InvalidArgument&) {
      throw ConfigError("strategy.type", "unknown strategy '" + type + "'");
    }
    cfg.strategy.steps = optional_number<int>(*it, "steps", "strategy", 0);
    if (cfg.strategy.steps < 0 || cfg.strategy.steps > cfg.n_apparatus) {
      throw ConfigError("strategy.steps", "must lie in [0, n_apparatus]");
    }
  }
  if (auto it = j.find("run"); it != j.end()) {
    cfg.master_seed = optional_number<std::uint64_t>(*it, "master_seed", "run", 1);
    cfg.mode = optional_string(*it, "mode", "run", "mc");
    if (cfg.mode != "mc" && cfg.mode != "quadrature") {
      throw ConfigError("run.mode", "expected 'mc' or 'quadrature'");
    }
    cfg.n_samples = optional_number<std::uint64_t>(*it, "n_samples", "run", 10000);
    if (cfg.n_samples < 1) throw ConfigError("run.n_samples", "must be >= 1");
    cfg.points_per_axis = optional_number<int>(*it, "points_per_axis", "run", 201);
    if (cfg.points_per_axis < 2) throw ConfigError("run.points_per_axis", "must be >= 2");
    cfg.range_sigmas = optional_number<double>(*it, "range_sigmas", "run", 8.0);
    if (!(cfg.range_sigmas > 0.0)) throw ConfigError("run.range_sigmas", "must be positive");
  }
  if (auto it = j.find("output"); it != j.end()) {
    cfg.format = optional_string(*it, "format", "output", "csv");
    if (cfg.format != "csv" && cfg.format != "json") {
      throw ConfigError("output.format", "expected 'csv' or 'json'");
    }
    cfg.path = optional_string(*it, "path", "output", "");
  }
  return cfg;
}

json to_json(const ScenarioConfig& cfg) {
  json kern = {{"type", cfg.kernel.type}, {"g2", cfg.kernel.g2}};
  if (cfg.kernel.type == "exponential") kern["gamma"] = cfg.kernel.gamma;
  if (cfg.kernel.type == "gaussian") kern["sigma"] = cfg.kernel.sigma;
  if (cfg.kernel.type == "table") {
    json pts = json::array();
    for (const auto& [t, v] : cfg.kernel.points) pts.push_back({t, v});
    kern["points"] = pts;
  }
  return json{
      {"system",
       {{"dim", cfg.system.dim},
        {"hamiltonian", write_matrix(cfg.system.hamiltonian)},
        {"coupling", write_matrix(cfg.system.coupling)},
        {"initial_ket", write_pairs(cfg.system.initial_ket.data(), cfg.system.initial_ket.size())}}},
      {"bath",
       {{"kernel", kern},
        {"epsilon", cfg.epsilon},
        {"n_apparatus", cfg.n_apparatus},
        {"kick_strength", cfg.kick_strength}}},
      {"strategy",
       {{"type", measure::strategy_name(cfg.strategy.kind)}, {"steps", cfg.strategy.steps}}},
      {"run",
       {{"master_seed", cfg.master_seed},
        {"mode", cfg.mode},
        {"n_samples", cfg.n_samples},
        {"points_per_axis", cfg.points_per_axis},
        {"range_sigmas", cfg.range_sigmas}}},
      {"output", {{"format", cfg.format}, {"path", cfg.path}}}};
}

ScenarioConfig parse_config(const std::string& text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("not valid JSON: ") + e.what());
  }
  return from_json(j, base_dir);
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_config(ss.str(), dir.empty() ? "." : dir.string());
}

std::string emit_config(const ScenarioConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

chain::CorrelationKernel build_kernel(const KernelConfig& k) {
  try {
    if (k.type == "markov") return chain::CorrelationKernel::markov(k.g2);
    if (k.type == "exponential") return chain::CorrelationKernel::exponential(k.g2, k.gamma);
    if (k.type == "gaussian") return chain::CorrelationKernel::gaussian(k.g2, k.sigma);
    if (k.type == "table") {
      std::vector<double> t;
      std::vector<double> v;
      for (const auto& [tau, val] : k.points) {
        t.push_back(tau);
        v.push_back(val);
      }
      return chain::CorrelationKernel::table(std::move(t), std::move(v));
    }
  } catch (const InvalidArgument& e) {
    throw ConfigError("bath.kernel", e.what());
  }
  throw ConfigError("bath.kernel.type", "unknown kernel '" + k.type + "'");
}

chain::ChainConfig build_chain_config(const ScenarioConfig& cfg) {
  return chain::ChainConfig{cfg.epsilon, cfg.n_apparatus, cfg.kick_strength};
}

chain::Model build_model(const ScenarioConfig& cfg) {
  const chain::CorrelationKernel kernel = build_kernel(cfg.kernel);
  try {
    return chain::Model(cfg.system, kernel, build_chain_config(cfg));
  } catch (const NotPositiveDefinite&) {
    throw;
  } catch (const EigenSolveError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError("system", e.what());
  }
}

ensemble::CompareOptions compare_options(const ScenarioConfig& cfg) {
  ensemble::CompareOptions o;
  o.mode = cfg.mode;
  o.n_samples = cfg.n_samples;
  o.seed = cfg.master_seed;
  o.points_per_axis = cfg.points_per_axis;
  o.range_sigmas = cfg.range_sigmas;
  o.steps = cfg.strategy.steps;
  return o;
}

}  // namespace achain::scenario
