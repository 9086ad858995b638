#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "gradelab/car.hpp"

namespace gradelab {

inline double hermiticity_defect(const Matrix& m) { return max_abs(m - m.adjoint()); }

inline bool is_hermitian(const Matrix& m, double tol = 1e-12) {
  return hermiticity_defect(m) <= tol * std::max(1.0, max_abs(m));
}

/// f(M) for Hermitian M through its eigendecomposition.
template <typename F>
Matrix hermitian_function(const Matrix& m, F&& f) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  Eigen::VectorXd values = es.eigenvalues().unaryExpr(std::forward<F>(f));
  return es.eigenvectors() * values.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

inline Eigen::VectorXd hermitian_eigenvalues(const Matrix& m) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(m, Eigen::EigenvaluesOnly).eigenvalues();
}

inline double operator_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

inline double trace_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Matrix>(m).singularValues().sum();
}

}  // namespace gradelab
