#include "achain/chain.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "achain/errors.hpp"
#include "achain/gauss.hpp"

namespace achain::chain {

namespace {

constexpr double kHermitianTol = 1e-12;
constexpr double kTableTol = 1e-12;

void require_hermitian(const CMat& m, int dim, const char* name) {
  if (m.rows() != dim || m.cols() != dim) {
    throw DimensionMismatch(std::string(name) + " must be " + std::to_string(dim) +
                            "x" + std::to_string(dim));
  }
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > kHermitianTol) {
    throw InvalidArgument(std::string(name) + " is not Hermitian");
  }
}

// First component with modulus above 1e-12 of the largest is made real positive.
void fix_phase(Eigen::Ref<CVec> v) {
  const double big = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-12 * big) {
      v *= std::conj(v(i)) / std::abs(v(i));
      v(i) = std::abs(v(i));
      return;
    }
  }
}

bool lexicographic_less(const CVec& a, const CVec& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i).real() != b(i).real()) return a(i).real() < b(i).real();
    if (a(i).imag() != b(i).imag()) return a(i).imag() < b(i).imag();
  }
  return false;
}

}  // namespace

CorrelationKernel CorrelationKernel::markov(double g2) {
  if (!(g2 > 0.0)) throw InvalidArgument("markov kernel: g2 must be positive");
  CorrelationKernel k;
  k.kind_ = Kind::markov;
  k.g2_ = g2;
  return k;
}

CorrelationKernel CorrelationKernel::exponential(double g2, double gamma) {
  if (!(g2 > 0.0)) throw InvalidArgument("exponential kernel: g2 must be positive");
  if (!(gamma > 0.0)) throw InvalidArgument("exponential kernel: gamma must be positive");
  CorrelationKernel k;
  k.kind_ = Kind::exponential;
  k.g2_ = g2;
  k.rate_ = gamma;
  return k;
}

CorrelationKernel CorrelationKernel::gaussian(double g2, double sigma) {
  if (!(g2 > 0.0)) throw InvalidArgument("gaussian kernel: g2 must be positive");
  if (!(sigma > 0.0)) throw InvalidArgument("gaussian kernel: sigma must be positive");
  CorrelationKernel k;
  k.kind_ = Kind::gaussian;
  k.g2_ = g2;
  k.width_ = sigma;
  return k;
}

CorrelationKernel CorrelationKernel::table(std::vector<double> times,
                                           std::vector<double> values) {
  if (times.size() != values.size()) {
    throw InvalidArgument("kernel table: times and values differ in length");
  }
  if (times.empty()) throw InvalidArgument("kernel table: empty");
  std::map<double, double> positive;
  std::vector<std::pair<double, double>> negative;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i]) || !std::isfinite(values[i])) {
      throw InvalidArgument("kernel table: non-finite entry");
    }
    if (times[i] < 0.0) {
      negative.emplace_back(-times[i], values[i]);
      continue;
    }
    auto [it, inserted] = positive.emplace(times[i], values[i]);
    if (!inserted && std::abs(it->second - values[i]) > kTableTol) {
      throw InvalidArgument("kernel table: conflicting values at tau = " +
                            std::to_string(times[i]));
    }
  }
  for (const auto& [tau, val] : negative) {
    auto it = positive.lower_bound(tau - kTableTol);
    if (it != positive.end() && std::abs(it->first - tau) <= kTableTol) {
      if (std::abs(it->second - val) > kTableTol) {
        throw AsymmetricKernelTable("kernel table: alpha(" + std::to_string(-tau) +
                                    ") != alpha(" + std::to_string(tau) + ")");
      }
    } else {
      positive.emplace(tau, val);
    }
  }
  if (positive.begin()->first > kTableTol) {
    throw InvalidArgument("kernel table: must contain tau = 0");
  }
  CorrelationKernel k;
  k.kind_ = Kind::table;
  for (const auto& [tau, val] : positive) {
    k.times_.push_back(tau);
    k.values_.push_back(val);
  }
  k.g2_ = k.values_.front();
  return k;
}

double CorrelationKernel::value(double tau, double epsilon) const {
  const double t = std::abs(tau);
  switch (kind_) {
    case Kind::markov:
      return t <= 0.5 * epsilon ? g2_ / epsilon : 0.0;
    case Kind::exponential:
      return g2_ * std::exp(-rate_ * t);
    case Kind::gaussian:
      return g2_ * std::exp(-0.5 * t * t / (width_ * width_));
    case Kind::table: {
      if (t > times_.back() + kTableTol) return 0.0;
      auto it = std::lower_bound(times_.begin(), times_.end(), t - kTableTol);
      const auto i = static_cast<std::size_t>(it - times_.begin());
      if (i >= times_.size()) return values_.back();
      if (std::abs(times_[i] - t) <= kTableTol * std::max(1.0, t) || i == 0) {
        return values_[i];
      }
      const double w = (t - times_[i - 1]) / (times_[i] - times_[i - 1]);
      return (1.0 - w) * values_[i - 1] + w * values_[i];
    }
  }
  return 0.0;
}

std::string CorrelationKernel::kind_name(Kind k) {
  switch (k) {
    case Kind::markov: return "markov";
    case Kind::exponential: return "exponential";
    case Kind::gaussian: return "gaussian";
    case Kind::table: return "table";
  }
  return "unknown";
}

void ChainConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw InvalidArgument("chain: epsilon must be positive");
  }
  if (n_apparatus < 1) throw InvalidArgument("chain: n_apparatus must be >= 1");
  if (!std::isfinite(kick_strength)) throw InvalidArgument("chain: kick_strength not finite");
}

void SystemSpec::validate() const {
  if (dim < 2) throw InvalidArgument("system: dim must be >= 2");
  require_hermitian(hamiltonian, dim, "system.hamiltonian");
  require_hermitian(coupling, dim, "system.coupling");
  if (initial_ket.size() != dim) {
    throw DimensionMismatch("system.initial_ket must have length " + std::to_string(dim));
  }
  if (std::abs(initial_ket.norm() - 1.0) > kHermitianTol) {
    throw InvalidArgument("system.initial_ket is not normalized");
  }
}

Mat build_bath_matrix(const CorrelationKernel& kernel, const ChainConfig& cfg) {
  cfg.validate();
  const int n = cfg.n_apparatus;
  const double eps2 = cfg.epsilon * cfg.epsilon;
  Mat a(n, n);
  // alpha is even, so fill by lag
  for (int lag = 0; lag < n; ++lag) {
    const double v = eps2 * kernel.value(cfg.epsilon * lag, cfg.epsilon);
    for (int l = 0; l + lag < n; ++l) {
      a(l, l + lag) = v;
      a(l + lag, l) = v;
    }
  }
  try {
    gauss::GaussianForm check(a);
  } catch (const NotPositiveDefinite& e) {
    throw NotPositiveDefinite(
        "bath matrix is not positive definite: the kernel does not define a "
        "normalizable apparatus state (" + std::string(e.what()) + ")");
  }
  return a;
}

CMat coupling_operator_at(const SystemSpec& spec, double t) {
  Eigen::SelfAdjointEigenSolver<CMat> hs(spec.hamiltonian);
  if (hs.info() != Eigen::Success) throw EigenSolveError("Hamiltonian eigen-solve failed");
  const CVec phases = (hs.eigenvalues().cast<cplx>() * cplx(0.0, -t)).array().exp();
  const CMat u = hs.eigenvectors() * phases.asDiagonal() * hs.eigenvectors().adjoint();
  CMat x = u.adjoint() * spec.coupling * u;
  return 0.5 * (x + x.adjoint());
}

Spectrum coupling_at_step(const SystemSpec& spec, const ChainConfig& cfg, int n) {
  if (n < 1 || n > cfg.n_apparatus) {
    throw StepOrderError("coupling_at_step: step " + std::to_string(n) + " out of range");
  }
  const CMat x = coupling_operator_at(spec, cfg.time(n));
  Eigen::SelfAdjointEigenSolver<CMat> es(x);
  if (es.info() != Eigen::Success) {
    throw EigenSolveError("coupling eigen-solve failed at step " + std::to_string(n));
  }
  const int d = static_cast<int>(x.rows());
  CMat vecs = es.eigenvectors();
  for (int j = 0; j < d; ++j) fix_phase(vecs.col(j));

  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  const Vec& vals = es.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
    if (vals(i) != vals(j)) return vals(i) < vals(j);
    return lexicographic_less(vecs.col(i), vecs.col(j));
  });
  Spectrum s{Vec(d), CMat(d, d)};
  for (int j = 0; j < d; ++j) {
    s.eigenvalues(j) = vals(order[j]);
    s.eigenvectors.col(j) = vecs.col(order[j]);
  }
  return s;
}

Vec retarded_coefficients(const CorrelationKernel& kernel, const ChainConfig& cfg,
                          double s) {
  if (s < 0.0) throw InvalidArgument("retarded_coefficients: s must be >= 0");
  Vec l(cfg.n_apparatus);
  for (int k = 0; k < cfg.n_apparatus; ++k) {
    l(k) = 2.0 * cfg.epsilon * kernel.value(s - cfg.time(k + 1), cfg.epsilon);
  }
  return l;
}

Model::Model(SystemSpec spec, CorrelationKernel kernel, ChainConfig cfg)
    : spec_(std::move(spec)), kernel_(std::move(kernel)), cfg_(cfg) {
  spec_.validate();
  bath_ = build_bath_matrix(kernel_, cfg_);
  spectra_.reserve(cfg_.n_apparatus);
  for (int n = 1; n <= cfg_.n_apparatus; ++n) {
    spectra_.push_back(coupling_at_step(spec_, cfg_, n));
  }
}

const Spectrum& Model::spectrum(int n) const {
  if (n < 1 || n > cfg_.n_apparatus) {
    throw StepOrderError("step " + std::to_string(n) + " out of range");
  }
  return spectra_[static_cast<std::size_t>(n - 1)];
}

Vec Model::scaled_observable(int n) const {
  if (n < 1 || n > cfg_.n_apparatus) {
    throw StepOrderError("observable index " + std::to_string(n) + " out of range");
  }
  return 0.5 * retarded_coefficients(kernel_, cfg_, cfg_.time(n));
}

state::TotalState initial_total_state(const Model& model) {
  const int n = model.n_apparatus();
  state::TotalState st;
  st.gaussian = gauss::GaussianForm(model.bath_matrix());
  st.live_basis = Mat::Identity(n, n);
  st.pin_directions = Mat(n, 0);
  st.branches.push_back(state::Branch{cplx(1.0, 0.0), model.system().initial_ket,
                                      Vec::Zero(n), Vec(0)});
  st.step_clock = 0;
  return st;
}

}  // namespace achain::chain
