#ifndef ACHAIN_TYPES_HPP
#define ACHAIN_TYPES_HPP

#include <complex>

#include <Eigen/Core>

namespace achain {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

}  // namespace achain

#endif  // ACHAIN_TYPES_HPP
