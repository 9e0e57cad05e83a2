#include "achain/gauss.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "achain/errors.hpp"

namespace achain::gauss {

namespace {

constexpr double kPdRatio = 1e-10;
constexpr double kUnitTol = 1e-12;

}  // namespace

GaussianForm::GaussianForm(const Mat& form, double log_scale)
    : log_scale_(log_scale) {
  if (form.rows() != form.cols()) {
    throw DimensionMismatch("GaussianForm: form must be square");
  }
  form_ = 0.5 * (form + form.transpose());
  if (form_.rows() == 0) return;
  if (!form_.allFinite()) {
    throw NotPositiveDefinite("GaussianForm: form has non-finite entries");
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(form_, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw EigenSolveError("GaussianForm: eigenvalue solve failed");
  }
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(hi > 0.0) || !(lo > kPdRatio * hi)) {
    throw NotPositiveDefinite(
        "GaussianForm: form is not positive definite (eigenvalue range [" +
        std::to_string(lo) + ", " + std::to_string(hi) + "])");
  }
}

double log_normalization_constant(const GaussianForm& g) {
  const int n = g.dim();
  if (n == 0) return 0.0;
  // log det via Cholesky; the form is PD by construction
  Eigen::LLT<Mat> llt(2.0 * g.form());
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return 0.25 * logdet - 0.25 * n * std::log(std::numbers::pi);
}

double normalization_constant(const GaussianForm& g) {
  return std::exp(log_normalization_constant(g));
}

double overlap(const GaussianForm& g, const Vec& d1, const Vec& d2) {
  if (d1.size() != g.dim() || d2.size() != g.dim()) {
    throw DimensionMismatch("overlap: displacement length differs from form dimension");
  }
  const Vec diff = d1 - d2;
  return std::exp(-0.5 * diff.dot(g.form() * diff));
}

Mat complement_basis(const Vec& direction) {
  const Eigen::Index n = direction.size();
  if (n == 0) return Mat(0, 0);
  Vec v = direction;
  v(0) += (direction(0) >= 0.0 ? 1.0 : -1.0);
  const double vv = v.squaredNorm();
  Mat reflector = Mat::Identity(n, n) - (2.0 / vv) * v * v.transpose();
  return reflector.rightCols(n - 1);
}

SliceResult slice(const GaussianForm& g, const Vec& direction, double value,
                  const Vec& d) {
  const int n = g.dim();
  if (n < 1) throw InvalidArgument("slice: form has no live coordinates");
  if (direction.size() != n || d.size() != n) {
    throw DimensionMismatch("slice: direction/displacement length differs from form dimension");
  }
  const double norm = direction.norm();
  if (norm == 0.0) throw InvalidArgument("slice: zero direction");
  if (std::abs(norm - 1.0) > kUnitTol) {
    throw InvalidArgument("slice: direction is not a unit vector");
  }

  const Mat& a = g.form();
  Mat basis = complement_basis(direction);
  const Vec r = value * direction - d;
  const Vec ar = a * r;
  double residual = r.dot(ar);

  SliceResult out;
  out.complement = basis;
  if (n == 1) {
    out.form = GaussianForm();
    out.displacement = Vec(0);
  } else {
    const Mat reduced = basis.transpose() * a * basis;
    out.form = GaussianForm(reduced);
    const Vec rhs = basis.transpose() * ar;
    Eigen::LLT<Mat> llt(out.form.form());
    out.displacement = -llt.solve(rhs);
    residual -= out.displacement.dot(out.form.form() * out.displacement);
  }
  out.log_weight = g.log_scale() - residual;
  return out;
}

Mat covariance(const GaussianForm& g) {
  const int n = g.dim();
  if (n == 0) return Mat(0, 0);
  Eigen::LLT<Mat> llt(4.0 * g.form());
  return llt.solve(Mat::Identity(n, n));
}

Vec sample_point(const GaussianForm& g, const Vec& d, std::mt19937_64& rng) {
  const int n = g.dim();
  if (d.size() != n) throw DimensionMismatch("sample_point: displacement length");
  if (n == 0) return Vec(0);
  Eigen::LLT<Mat> llt(covariance(g));
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec z(n);
  for (int i = 0; i < n; ++i) z(i) = normal(rng);
  return d + llt.matrixL() * z;
}

}  // namespace achain::gauss
