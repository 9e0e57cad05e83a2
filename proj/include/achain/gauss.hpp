#ifndef ACHAIN_GAUSS_HPP
#define ACHAIN_GAUSS_HPP

#include <random>

#include "achain/types.hpp"

namespace achain::gauss {

/**
 * Real multivariate Gaussian wavefunction
 *
 *     phi(x) = exp[log_scale - (x - d)^T A (x - d)]
 *
 * over `dim` live coordinates. The displacement d is supplied per call so one
 * form can be shared by many path-sum branches. A zero-dimensional form is
 * allowed and denotes the constant exp(log_scale).
 */
class GaussianForm {
 public:
  GaussianForm() = default;

  // Symmetrizes `form` and rejects it unless the smallest eigenvalue exceeds
  // 1e-10 times the largest (throws NotPositiveDefinite).
  explicit GaussianForm(const Mat& form, double log_scale = 0.0);

  int dim() const { return static_cast<int>(form_.rows()); }
  const Mat& form() const { return form_; }
  double log_scale() const { return log_scale_; }

 private:
  Mat form_ = Mat(0, 0);
  double log_scale_ = 0.0;
};

// c such that c^2 * integral exp[-2 x^T A x] dx = 1, i.e.
// c^2 = sqrt(det(2A)) / pi^{dim/2}.
double normalization_constant(const GaussianForm& g);
double log_normalization_constant(const GaussianForm& g);

// <phi(d1)|phi(d2)> for normalized real Gaussians sharing the form:
// exp[-(1/2) (d1-d2)^T A (d1-d2)].
double overlap(const GaussianForm& g, const Vec& d1, const Vec& d2);

struct SliceResult {
  GaussianForm form;  // restriction to the hyperplane, dim - 1 coordinates
  Vec displacement;   // completed-square centre in complement coordinates
  double log_weight;  // exponent offset plus the parent's log_scale
  Mat complement;     // dim x (dim-1), orthonormal columns spanning direction^perp
};

// Deterministic orthonormal basis of the complement of a unit vector: the
// trailing columns of the Householder reflector that maps `direction` onto the
// first axis.
Mat complement_basis(const Vec& direction);

/**
 * Restrict phi(x) = exp[log_scale - (x-d)^T A (x-d)] to the hyperplane
 * direction . x = value. Points on the hyperplane are written
 * x = value * direction + complement * xi, and the restriction becomes
 *
 *     exp[log_weight - (xi - d')^T A' (xi - d')]
 *
 * with A' = complement^T A complement. The returned form carries log_scale 0;
 * the branch-dependent offset is in log_weight.
 *
 * `direction` must have unit norm (to 1e-12); it is rejected, not normalized.
 */
SliceResult slice(const GaussianForm& g, const Vec& direction, double value,
                  const Vec& d);

// Covariance of |phi|^2, i.e. (4A)^{-1}.
Mat covariance(const GaussianForm& g);

// Draw from |phi(x)|^2 centred at d.
Vec sample_point(const GaussianForm& g, const Vec& d, std::mt19937_64& rng);

}  // namespace achain::gauss

#endif  // ACHAIN_GAUSS_HPP
