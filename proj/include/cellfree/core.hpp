#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace cellfree {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Complex = std::complex<double>;

/// Thrown when a Gram matrix is rank-deficient or too ill-conditioned to
/// invert reliably. Never regularized away silently.
class SingularMatrixError : public std::runtime_error {
 public:
  explicit SingularMatrixError(const std::string& what)
      : std::runtime_error(what) {}
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

/// dBm -> watts.
inline double dbm_to_watt(double dbm) {
  return std::pow(10.0, (dbm - 30.0) / 10.0);
}

}  // namespace cellfree
