#include "achain/state.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "achain/chain.hpp"
#include "achain/errors.hpp"

namespace achain::state {

int TotalState::system_dim() const {
  return branches.empty() ? 0 : static_cast<int>(branches.front().system_ket.size());
}

DensityMatrix DensityMatrix::normalized() const {
  if (!(weight > 0.0)) throw InvalidArgument("density matrix has zero weight");
  return DensityMatrix{matrix / weight, 1.0};
}

DensityMatrix make_density(CMat matrix) {
  CMat herm = 0.5 * (matrix + matrix.adjoint());
  const double w = herm.trace().real();
  return DensityMatrix{std::move(herm), w};
}

bool pins_match(const Branch& a, const Branch& b) {
  for (Eigen::Index i = 0; i < a.pinned_values.size(); ++i) {
    if (std::abs(a.pinned_values(i) - b.pinned_values(i)) > kPinTol) return false;
  }
  return true;
}

Mat bath_gram(const TotalState& st) {
  const auto nb = static_cast<Eigen::Index>(st.branches.size());
  Mat live(st.live_dim(), nb);
  for (Eigen::Index p = 0; p < nb; ++p) {
    live.col(p) = st.live_basis.transpose() * st.branches[p].displacement;
  }
  Mat g = Mat::Identity(nb, nb);
  for (Eigen::Index p = 0; p < nb; ++p) {
    for (Eigen::Index q = p + 1; q < nb; ++q) {
      double v = 0.0;
      if (pins_match(st.branches[p], st.branches[q])) {
        v = gauss::overlap(st.gaussian, live.col(p), live.col(q));
      }
      g(p, q) = v;
      g(q, p) = v;
    }
  }
  return g;
}

namespace {

// rho = sum_{p,q} a_p conj(a_q) G_pq |s_p><s_q|, accumulated in p-major order.
CMat gram_density(const TotalState& st, const Mat& gram) {
  const int d = st.system_dim();
  CMat rho = CMat::Zero(d, d);
  const auto nb = st.branches.size();
  for (std::size_t p = 0; p < nb; ++p) {
    const Branch& bp = st.branches[p];
    const CVec ket_p = bp.amplitude * bp.system_ket;
    for (std::size_t q = 0; q < nb; ++q) {
      const double g = gram(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
      if (g == 0.0) continue;
      const Branch& bq = st.branches[q];
      rho.noalias() += g * ket_p * (bq.amplitude * bq.system_ket).adjoint();
    }
  }
  return rho;
}

double gram_norm(const TotalState& st, const Mat& gram) {
  const auto nb = st.branches.size();
  double total = 0.0;
  for (std::size_t p = 0; p < nb; ++p) {
    const Branch& bp = st.branches[p];
    total += std::norm(bp.amplitude) * bp.system_ket.squaredNorm();
    for (std::size_t q = p + 1; q < nb; ++q) {
      const double g = gram(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
      if (g == 0.0) continue;
      const Branch& bq = st.branches[q];
      const cplx c = std::conj(bp.amplitude) * bq.amplitude * bp.system_ket.dot(bq.system_ket);
      total += 2.0 * g * c.real();
    }
  }
  return std::max(total, 0.0);
}

}  // namespace

double norm_squared(const TotalState& st) {
  return gram_norm(st, bath_gram(st));
}

DensityMatrix reduced_density(const TotalState& st) {
  return make_density(gram_density(st, bath_gram(st)));
}

void prune(TotalState& st) {
  const double total = norm_squared(st);
  if (!(total > 0.0)) return;
  const double cut = kPruneRatio * total;
  std::erase_if(st.branches, [&](const Branch& b) {
    return std::norm(b.amplitude) * b.system_ket.squaredNorm() < cut;
  });
}

TotalState apply_interaction(const TotalState& st, const chain::Model& model, int n) {
  if (n < 1 || n > model.n_apparatus()) {
    throw StepOrderError("apply_interaction: step " + std::to_string(n) + " out of range");
  }
  if (st.step_clock != n - 1) {
    throw StepOrderError("apply_interaction: state is at step " +
                         std::to_string(st.step_clock) + ", cannot apply step " +
                         std::to_string(n));
  }
  const chain::Spectrum& spec = model.spectrum(n);
  const double kappa = model.config().kick_strength;
  const int d = static_cast<int>(spec.eigenvalues.size());

  // kick direction e_n split into pinned and live components
  const Vec pin_part = st.pin_directions.row(n - 1).transpose();
  const Vec live_part = st.live_basis * st.live_basis.row(n - 1).transpose();

  TotalState out;
  out.gaussian = st.gaussian;
  out.live_basis = st.live_basis;
  out.pin_directions = st.pin_directions;
  out.step_clock = n;
  out.branches.reserve(st.branches.size() * static_cast<std::size_t>(d));
  for (const Branch& b : st.branches) {
    for (int j = 0; j < d; ++j) {
      const auto e = spec.eigenvectors.col(j);
      const cplx proj = e.dot(b.system_ket);
      if (proj == cplx(0.0, 0.0)) continue;
      const double shift = kappa * spec.eigenvalues(j);
      out.branches.push_back(Branch{b.amplitude * proj, e, b.displacement + shift * live_part,
                                    b.pinned_values + shift * pin_part});
    }
  }
  prune(out);
  return out;
}

double purity(const DensityMatrix& rho) {
  const double tr = rho.matrix.trace().real();
  if (!(tr > 0.0)) throw InvalidArgument("purity: zero-weight state");
  const double tr2 = (rho.matrix * rho.matrix).trace().real();
  return tr2 / (tr * tr);
}

double trace_distance(const DensityMatrix& r1, const DensityMatrix& r2) {
  if (r1.matrix.rows() != r2.matrix.rows() || r1.matrix.cols() != r2.matrix.cols()) {
    throw DimensionMismatch("trace_distance: dimension mismatch");
  }
  const double t1 = r1.matrix.trace().real();
  const double t2 = r2.matrix.trace().real();
  if (!(t1 > 0.0) || !(t2 > 0.0)) throw InvalidArgument("trace_distance: zero-weight state");
  CMat diff = r1.matrix / t1 - r2.matrix / t2;
  diff = 0.5 * (diff + diff.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(diff, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace achain::state
