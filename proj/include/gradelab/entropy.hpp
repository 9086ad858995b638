#pragma once

// Relative entropy, conditional entropy and conditional free energy. All
// logarithms are natural.

#include <cmath>
#include <limits>

#include "gradelab/car.hpp"
#include "gradelab/interaction.hpp"
#include "gradelab/linalg.hpp"
#include "gradelab/state.hpp"

namespace gradelab {

struct EntropyValue {
  double value = 0.0;
  bool infinite = false;
  /// ker D1 is contained in ker D2.
  bool kernel_ok = true;

  bool is_finite() const { return !infinite; }
  double or_infinity() const { return infinite ? std::numeric_limits<double>::infinity() : value; }
};

/// S(w1, w2) = Tr D2 (log D2 - log D1), +infinity when D2 has weight on ker D1.
inline EntropyValue relative_entropy(const Matrix& d1, const Matrix& d2) {
  if (d1.rows() != d2.rows() || d1.cols() != d2.cols()) throw PreconditionError("density dimensions differ");
  Eigen::SelfAdjointEigenSolver<Matrix> e1(d1);
  const Eigen::VectorXd q = hermitian_eigenvalues(d2);
  const Eigen::VectorXd& p = e1.eigenvalues();
  const double cut1 = kRankFloor * p.maxCoeff();
  const double cut2 = kRankFloor * q.maxCoeff();

  double self = 0.0;
  for (Index j = 0; j < q.size(); ++j)
    if (q(j) > cut2) self += q(j) * std::log(q(j));

  // Diagonal of D2 in the eigenbasis of D1.
  const Matrix& u = e1.eigenvectors();
  const Eigen::VectorXd weights = (u.adjoint() * d2 * u).diagonal().real();

  EntropyValue out;
  double cross = 0.0;
  for (Index i = 0; i < p.size(); ++i) {
    if (p(i) > cut1) {
      cross += weights(i) * std::log(p(i));
    } else if (weights(i) > cut2) {
      out.kernel_ok = false;
    }
  }
  if (!out.kernel_ok) {
    out.infinite = true;
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }
  out.value = self - cross;
  // Rounding can leave S(w, w) a hair below zero.
  if (out.value < 0.0 && out.value > -1e-12) out.value = 0.0;
  return out;
}

inline EntropyValue relative_entropy(const DensityState& w1, const DensityState& w2) {
  return relative_entropy(w1.density(), w2.density());
}

/// Relative entropy of two restrictions to the same A_R. Since E_R is
/// id (x) tau in A_R (x) A_R', this equals S(w1 o E_R, w2 o E_R).
inline EntropyValue relative_entropy(const RestrictedState& w1, const RestrictedState& w2) {
  if (w1.region() != w2.region()) throw PreconditionError("restrictions live on different regions");
  return relative_entropy(w1.density(), w2.density());
}

/// Density of w o P where P is the tau-preserving projection onto the outside
/// system of I: A_{I^c} (complement) or the commutant A_I'.
inline Matrix outside_reconstruction(const DensityState& omega, const Region& region,
                                     OutsideSystem mode = OutsideSystem::complement) {
  return project_outside(omega.density(), region, mode);
}

/// Sc_I(w) = -S(w o E_{I^c}, w). Returns -infinity if the kernel condition
/// fails, which cannot happen for exact arithmetic.
inline double conditional_entropy(const DensityState& omega, const Region& region,
                                  OutsideSystem mode = OutsideSystem::complement) {
  const Matrix reference = outside_reconstruction(omega, region, mode);
  const EntropyValue s = relative_entropy(reference, omega.density());
  return s.infinite ? -std::numeric_limits<double>::infinity() : -s.value;
}

/// F = Sc_I(w) - beta w(H(I)) with H(I) given directly.
inline double conditional_free_energy(const DensityState& omega, const Matrix& local_h, const Region& region,
                                      double beta, OutsideSystem mode = OutsideSystem::complement) {
  return conditional_entropy(omega, region, mode) - beta * omega.expectation(local_h).real();
}

inline double conditional_free_energy(const DensityState& omega, const Potential& phi, const Region& region,
                                      double beta, OutsideSystem mode = OutsideSystem::complement) {
  if (!validate_potential(phi).pass()) throw PreconditionError("potential is not standard");
  return conditional_free_energy(omega, local_hamiltonian(phi, region).matrix.matrix(), region, beta, mode);
}

/// Both directions of S(phi, phi^{beta H(I)}) against 2 ||beta H(I)||, on the
/// full algebra and restricted to A_{I^c}.
struct PerturbationBounds {
  double forward = 0.0;             // S(phi, phi^{beta H(I)})
  double backward = 0.0;            // S(phi^{beta H(I)}, phi)
  double restricted_forward = 0.0;  // same on A_{I^c}
  double restricted_backward = 0.0;
  double bound = 0.0;  // 2 ||beta H(I)||

  bool holds(double slack = 1e-10) const {
    return forward <= bound + slack && backward <= bound + slack && restricted_forward <= bound + slack &&
           restricted_backward <= bound + slack;
  }
};

inline PerturbationBounds perturbation_entropy_bounds(const Potential& phi, double beta, const Region& region) {
  const DensityState gibbs = gibbs_state(total_hamiltonian(phi), beta);
  const DensityState pert = perturbed_state(phi, beta, region);
  const Region outside = region.complement();
  PerturbationBounds b;
  b.forward = relative_entropy(gibbs, pert).or_infinity();
  b.backward = relative_entropy(pert, gibbs).or_infinity();
  const RestrictedState g_out = restrict(gibbs, outside);
  const RestrictedState p_out = restrict(pert, outside);
  b.restricted_forward = relative_entropy(g_out, p_out).or_infinity();
  b.restricted_backward = relative_entropy(p_out, g_out).or_infinity();
  b.bound = 2.0 * std::abs(beta) * operator_norm(local_hamiltonian(phi, region).matrix.matrix());
  return b;
}

}  // namespace gradelab
