#ifndef ACHAIN_CHAIN_HPP
#define ACHAIN_CHAIN_HPP

#include <string>
#include <utility>
#include <vector>

#include "achain/state.hpp"
#include "achain/types.hpp"

namespace achain::chain {

/**
 * Bath memory function alpha(tau). Real and even in tau.
 *
 * The Markov variant is a discrete delta: alpha(0) = g2 / epsilon and zero
 * elsewhere, so the Riemann sum epsilon * sum alpha equals g2 for every step.
 * Tables hold (tau >= 0, alpha) pairs, are reflected to negative tau, linearly
 * interpolated between nodes and zero beyond the last node.
 */
class CorrelationKernel {
 public:
  enum class Kind { markov, exponential, gaussian, table };

  static CorrelationKernel markov(double g2);
  static CorrelationKernel exponential(double g2, double gamma);
  static CorrelationKernel gaussian(double g2, double sigma);
  // Entries with tau < 0 must mirror a tau > 0 entry (AsymmetricKernelTable
  // otherwise); unmatched negative entries are reflected.
  static CorrelationKernel table(std::vector<double> times, std::vector<double> values);

  Kind kind() const { return kind_; }
  double value(double tau, double epsilon) const;

  double g2() const { return g2_; }
  double rate() const { return rate_; }    // gamma
  double width() const { return width_; }  // sigma
  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& values() const { return values_; }

  static std::string kind_name(Kind k);

 private:
  Kind kind_ = Kind::markov;
  double g2_ = 1.0;
  double rate_ = 0.0;
  double width_ = 0.0;
  std::vector<double> times_;
  std::vector<double> values_;
};

struct ChainConfig {
  double epsilon = 1.0;
  int n_apparatus = 1;
  double kick_strength = 1.0;

  double time(int n) const { return epsilon * n; }
  void validate() const;
};

struct SystemSpec {
  int dim = 2;
  CMat hamiltonian;
  CMat coupling;
  CVec initial_ket;

  // Hermiticity of H and X and normalization of the ket, all to 1e-12.
  void validate() const;
};

// Eigenpairs of the interaction-picture coupling at one step. Eigenvalues are
// ascending; each eigenvector has its first non-negligible component real
// and positive.
struct Spectrum {
  Vec eigenvalues;
  CMat eigenvectors;  // columns
};

// A_{lm} = epsilon^2 alpha(tau_l - tau_m); throws NotPositiveDefinite.
Mat build_bath_matrix(const CorrelationKernel& kernel, const ChainConfig& cfg);

// X_n = e^{iH tau_n} X e^{-iH tau_n}.
CMat coupling_operator_at(const SystemSpec& spec, double t);
Spectrum coupling_at_step(const SystemSpec& spec, const ChainConfig& cfg, int n);

// L_k = 2 epsilon alpha(s - tau_k), the coefficients of z(s) = sum_k L_k x_k.
Vec retarded_coefficients(const CorrelationKernel& kernel, const ChainConfig& cfg,
                          double s);

// Everything a simulation needs, validated and precomputed once.
class Model {
 public:
  Model(SystemSpec spec, CorrelationKernel kernel, ChainConfig cfg);

  const SystemSpec& system() const { return spec_; }
  const CorrelationKernel& kernel() const { return kernel_; }
  const ChainConfig& config() const { return cfg_; }
  const Mat& bath_matrix() const { return bath_; }
  int n_apparatus() const { return cfg_.n_apparatus; }
  // 1-based step index.
  const Spectrum& spectrum(int n) const;

  // Coefficient vector of the scaled observable y_n = z(tau_n) / 2.
  Vec scaled_observable(int n) const;

 private:
  SystemSpec spec_;
  CorrelationKernel kernel_;
  ChainConfig cfg_;
  Mat bath_;
  std::vector<Spectrum> spectra_;
};

state::TotalState initial_total_state(const Model& model);

}  // namespace achain::chain

#endif  // ACHAIN_CHAIN_HPP
