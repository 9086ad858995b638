#pragma once

// Finite-volume probes of grading symmetry breaking: cluster coefficients,
// grading asymmetry of restrictions and the skew-adjointness of products of
// disjoint odd observables.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "gradelab/car.hpp"
#include "gradelab/linalg.hpp"
#include "gradelab/state.hpp"

namespace gradelab {

struct ProbeResult {
  double quantity = 0.0;
  std::optional<AlgebraElement> witness;
  Region region;
};

/// sup over B in A_R, ||B|| <= 1, of |w(AB) - w(A) w(B)|.
///
/// The functional is B -> Tr(M B) with M = D A - w(A) D. On A_R only E_R(M)
/// matters, and since A_R is a full matrix algebra tensored with the identity
/// on its commutant, the sup is the trace norm of E_R(M). The witness is E_R
/// of the polar unitary of E_R(M).
inline ProbeResult cluster_coefficient(const DensityState& omega, const AlgebraElement& a, const Region& region) {
  if (a.support().intersects(region)) throw PreconditionError("observable overlaps the probe region");
  const Matrix& rho = omega.density();
  const Matrix m = rho * a.matrix() - omega.expectation(a) * rho;
  const Matrix x = conditional_expectation(m, region);
  Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double q = svd.singularValues().sum();
  Matrix w = conditional_expectation((svd.matrixV() * svd.matrixU().adjoint()).eval(), region);
  return {q, AlgebraElement(std::move(w), region, AlgebraElement::Trusted{}), region};
}

/// (1/2) ||(w - w o Theta) restricted to A_R|| = sup over odd A in A_R with
/// ||A|| <= 1 of |w(A)|. The witness is the sign of the odd Hermitian operator
/// E_R(D - Theta D), which is odd and self-adjoint with w(witness) = quantity.
inline ProbeResult grading_asymmetry(const DensityState& omega, const Region& region) {
  const Matrix& rho = omega.density();
  Matrix delta = conditional_expectation((rho - theta(rho)).eval(), region);
  delta = (0.5 * (delta + delta.adjoint())).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(delta);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double q = 0.5 * ev.cwiseAbs().sum();
  const double floor = 1e-12 * std::max(ev.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  const Eigen::VectorXd signs = ev.unaryExpr([floor](double v) { return v > floor ? 1.0 : (v < -floor ? -1.0 : 0.0); });
  Matrix w = es.eigenvectors() * signs.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
  w = odd_part(conditional_expectation(w, region));
  w = (0.5 * (w + w.adjoint())).eval();
  return {q, AlgebraElement(std::move(w), region, AlgebraElement::Trusted{}), region};
}

/// |Re w(AB)| for odd self-adjoint A, B with disjoint supports. (AB)^* = -AB,
/// so this vanishes for every state.
inline double purely_imaginary_check(const AlgebraElement& a, const AlgebraElement& b, const DensityState& omega) {
  for (const AlgebraElement* x : {&a, &b}) {
    const double scale = std::max(1.0, max_abs(x->matrix()));
    if (even_defect(x->matrix()) > kSupportTolerance * scale) throw PreconditionError("observable is not odd");
    if (hermiticity_defect(x->matrix()) > kSupportTolerance * scale) {
      throw PreconditionError("observable is not self-adjoint");
    }
  }
  if (a.support().intersects(b.support())) throw PreconditionError("observables have overlapping supports");
  return std::abs(omega.expectation((a.matrix() * b.matrix()).eval()).real());
}

/// Pure state on the top eigenvector of (A + B) / sqrt 2. For anticommuting
/// self-adjoint unitaries A, B this gives w(A) = w(B) = 1/sqrt 2.
inline DensityState aligned_state(const AlgebraElement& a, const AlgebraElement& b) {
  const Matrix s = ((a.matrix() + b.matrix()) / std::sqrt(2.0)).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es((0.5 * (s + s.adjoint())).eval());
  const Eigen::VectorXcd v = es.eigenvectors().col(es.eigenvalues().size() - 1);
  return DensityState(v * v.adjoint(), "aligned");
}

struct IncompatibilityScan {
  std::size_t states = 0;
  /// states with w(A) > c / sqrt 2 and w(B) > c / sqrt 2
  std::size_t aligned = 0;
  /// aligned states that also have Re w(AB) > c^2 / 2 - epsilon
  std::size_t violations = 0;
  double max_real_part = 0.0;
  /// smallest cluster coefficient of A against supp(B) over aligned states;
  /// at least w(A) w(B) > c^2 / 2 whenever Re w(AB) = 0
  double min_aligned_cluster = std::numeric_limits<double>::infinity();
};

/// Scans states for the configuration ruled out by skew-adjointness: two
/// disjoint odd observables both of expectation above c / sqrt 2 while the
/// product keeps real part above c^2 / 2 - epsilon.
inline IncompatibilityScan incompatibility_scan(const AlgebraElement& a, const AlgebraElement& b,
                                                const std::vector<DensityState>& states, double c = 0.999,
                                                double epsilon = 1e-9) {
  if (operator_norm(a.matrix()) > 1.0 + 1e-12 || operator_norm(b.matrix()) > 1.0 + 1e-12) {
    throw PreconditionError("scan observables must have norm at most 1");
  }
  IncompatibilityScan out;
  const double threshold = c / std::sqrt(2.0);
  for (const auto& omega : states) {
    const double re = omega.expectation((a.matrix() * b.matrix()).eval()).real();
    out.max_real_part = std::max(out.max_real_part, std::abs(purely_imaginary_check(a, b, omega)));
    ++out.states;
    const double wa = omega.expectation(a).real();
    const double wb = omega.expectation(b).real();
    if (wa > threshold && wb > threshold) {
      ++out.aligned;
      if (re > c * c / 2.0 - epsilon) ++out.violations;
      out.min_aligned_cluster = std::min(out.min_aligned_cluster, cluster_coefficient(omega, a, b.support()).quantity);
    }
  }
  return out;
}

}  // namespace gradelab
