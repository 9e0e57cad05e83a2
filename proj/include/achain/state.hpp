#ifndef ACHAIN_STATE_HPP
#define ACHAIN_STATE_HPP

#include <vector>

#include "achain/gauss.hpp"
#include "achain/types.hpp"

namespace achain::chain {
class Model;
}

namespace achain::state {

// Pinned values closer than this are treated as the same position eigenket.
inline constexpr double kPinTol = 1e-9;
// Branches whose weight is below this fraction of the running norm^2 are
// dropped; cross terms then stay near the square root of it.
inline constexpr double kPruneRatio = 1e-32;

/**
 * One term of the path sum: amplitude * |system_ket> (x) bath wavefunction.
 *
 * `displacement` is the centre of the branch's live Gaussian written in the
 * original apparatus coordinates (it always lies in the live subspace).
 * `pinned_values[i]` is the position of the branch along pin direction i.
 */
struct Branch {
  cplx amplitude;
  CVec system_ket;
  Vec displacement;
  Vec pinned_values;
};

/**
 * Joint system-bath state as a sum over branches sharing one Gaussian form.
 *
 * The bath lives in R^N. Its first k directions (columns of pin_directions)
 * have been projected onto position eigenkets; the remaining N-k directions
 * (columns of live_basis) carry the normalized Gaussian `gaussian` centred at
 * live_basis^T displacement. Position eigenkets are delta-normalized and
 * compared with kPinTol; the common delta(0) factor is dropped, so after
 * projective measurements norm_squared is an outcome probability density.
 */
struct TotalState {
  gauss::GaussianForm gaussian;
  Mat live_basis;
  Mat pin_directions;
  std::vector<Branch> branches;
  int step_clock = 0;

  int bath_dim() const { return static_cast<int>(live_basis.rows()); }
  int live_dim() const { return static_cast<int>(live_basis.cols()); }
  int n_pins() const { return static_cast<int>(pin_directions.cols()); }
  int system_dim() const;
};

struct DensityMatrix {
  CMat matrix;
  double weight = 0.0;  // trace before normalization

  DensityMatrix normalized() const;
};

DensityMatrix make_density(CMat matrix);

// Kick with the nth interaction: every branch splits along the eigenpairs of
// X_n and its bath is translated by kick_strength * lambda_j along axis n.
TotalState apply_interaction(const TotalState& st, const chain::Model& model, int n);

bool pins_match(const Branch& a, const Branch& b);

// Bath inner products <bath_p|bath_q> (Gaussian overlap times pin match).
Mat bath_gram(const TotalState& st);

double norm_squared(const TotalState& st);
DensityMatrix reduced_density(const TotalState& st);

// Drop branches whose weight falls below kPruneRatio of norm^2.
void prune(TotalState& st);

// Tr[rho^2] / Tr[rho]^2. Throws InvalidArgument on zero weight.
double purity(const DensityMatrix& rho);

// (1/2) sum |eig(rho1 - rho2)| of the normalized inputs.
double trace_distance(const DensityMatrix& r1, const DensityMatrix& r2);

}  // namespace achain::state

#endif  // ACHAIN_STATE_HPP
