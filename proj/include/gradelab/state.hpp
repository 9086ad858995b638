#pragma once

// Density-matrix states: Gibbs states, KMS residuals, perturbed states,
// restrictions and the noneven constructions.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "gradelab/car.hpp"
#include "gradelab/interaction.hpp"
#include "gradelab/linalg.hpp"

namespace gradelab {

inline constexpr double kStateTolerance = 1e-12;
/// Eigenvalues below this fraction of the largest count as zero.
inline constexpr double kRankFloor = 1e-12;

class DensityState {
 public:
  explicit DensityState(Matrix density, std::string label = "state") : label_(std::move(label)) {
    detail::lattice_size_of(density);
    if (hermiticity_defect(density) > kStateTolerance) throw PreconditionError("density is not Hermitian");
    density_ = (0.5 * (density + density.adjoint())).eval();
    const double tr = density_.trace().real();
    if (std::abs(tr - 1.0) > kStateTolerance) {
      throw PreconditionError("density trace is " + std::to_string(tr) + ", expected 1");
    }
    eigenvalues_ = hermitian_eigenvalues(density_);
    if (eigenvalues_(0) < -kStateTolerance) throw PreconditionError("density has a negative eigenvalue");
  }

  const Matrix& density() const { return density_; }
  const std::string& label() const { return label_; }
  std::size_t lattice_size() const { return detail::lattice_size_of(density_); }

  /// omega(A) = Tr(D A)
  Complex expectation(const Matrix& a) const {
    if (a.rows() != density_.rows() || a.cols() != density_.cols()) throw PreconditionError("operator dimension mismatch");
    return density_.cwiseProduct(a.transpose()).sum();
  }
  Complex expectation(const AlgebraElement& a) const { return expectation(a.matrix()); }
  Complex expectation(const Monomial& m) const { return gradelab::expectation(density_, m); }

  /// omega o Theta
  DensityState graded() const { return DensityState(theta(density_), label_ + ".theta"); }

  DensityState relabeled(std::string label) const {
    DensityState out = *this;
    out.label_ = std::move(label);
    return out;
  }

  /// Ascending.
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  double min_eigenvalue() const { return eigenvalues_(0); }
  double max_eigenvalue() const { return eigenvalues_(eigenvalues_.size() - 1); }
  bool full_rank() const { return min_eigenvalue() > kRankFloor * max_eigenvalue(); }

  /// Largest entry of the odd part of the density; zero iff the state is even.
  double odd_defect() const { return gradelab::odd_defect(density_); }

 private:
  Matrix density_;
  std::string label_;
  Eigen::VectorXd eigenvalues_;
};

inline DensityState tracial_state(std::size_t lattice_size) {
  const Index d = hilbert_dimension(lattice_size);
  return DensityState(Matrix::Identity(d, d) / static_cast<double>(d), "tau");
}

inline DensityState gibbs_state(const Matrix& h, double beta, std::string label = "gibbs") {
  if (!std::isfinite(beta)) throw PreconditionError("inverse temperature must be finite");
  if (!is_hermitian(h)) throw PreconditionError("Hamiltonian is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es((0.5 * (h + h.adjoint())).eval());
  Eigen::VectorXd exponent = -beta * es.eigenvalues();
  exponent.array() -= exponent.maxCoeff();
  Eigen::VectorXd weights = exponent.array().exp();
  weights /= weights.sum();
  Matrix rho = es.eigenvectors() * weights.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
  rho /= rho.trace().real();
  return DensityState(std::move(rho), std::move(label));
}

inline DensityState gibbs_state(const AlgebraElement& h, double beta, std::string label = "gibbs") {
  return gibbs_state(h.matrix(), beta, std::move(label));
}

/// |omega(A e^{-beta H} B e^{beta H}) - omega(B A)|
inline double kms_residual(const DensityState& omega, const Matrix& h, double beta, const Matrix& a, const Matrix& b) {
  if (!omega.full_rank()) throw PreconditionError("KMS residual needs a faithful state");
  if (!is_hermitian(h)) throw PreconditionError("Hamiltonian is not Hermitian");
  const Matrix down = hermitian_function(h, [beta](double x) { return std::exp(-beta * x); });
  const Matrix up = hermitian_function(h, [beta](double x) { return std::exp(beta * x); });
  return std::abs(omega.expectation(a * down * b * up) - omega.expectation(b * a));
}

/// phi^{beta H(I)}: the Gibbs state of H(full) - H(I), i.e. of the potential
/// with every term touching I removed.
inline DensityState perturbed_state(const Potential& phi, double beta, const Region& region) {
  if (region.is_empty()) throw PreconditionError("perturbed state needs a nonempty region");
  if (!validate_potential(phi).pass()) throw PreconditionError("potential is not standard");
  return gibbs_state(total_hamiltonian(prune(phi, region)), beta, "perturbed" + region.to_string());
}

/// max over A_I basis monomials of ||[G, A]||_max; zero when e^{itG} fixes A_I.
inline double fixes_subalgebra_residual(const Matrix& generator, const Region& region) {
  double worst = 0.0;
  for (const Monomial& m : MonomialBasis(region)) worst = std::max(worst, max_abs(commutator(generator, m.matrix())));
  return worst;
}

/// A state on A_R, stored as its values on the monomial basis of A_R.
class RestrictedState {
 public:
  RestrictedState(Region region, std::vector<Complex> values)
      : region_(std::move(region)), values_(std::move(values)) {
    if (values_.size() != (std::size_t{1} << (2 * region_.size()))) {
      throw PreconditionError("restricted state needs one value per basis monomial");
    }
    const Matrix rho = density();
    if (hermiticity_defect(rho) > 1e-10 || hermitian_eigenvalues(rho)(0) < -1e-10) {
      throw PreconditionError("values do not define a positive functional");
    }
  }

  const Region& region() const { return region_; }
  const std::vector<Complex>& values() const { return values_; }
  MonomialBasis basis() const { return MonomialBasis(region_); }

  /// Value on a basis monomial, addressed by its basis index.
  Complex value(std::size_t k) const { return values_.at(k); }

  /// omega(B) for B in A_R, via B = sum_m tau(m^* B) / tau(m^* m) m.
  Complex evaluate(const Matrix& b) const {
    Complex out = 0.0;
    const MonomialBasis basis(region_);
    for (std::size_t k = 0; k < basis.size(); ++k) {
      const Monomial& m = basis[k];
      out += normalized_trace(m.matrix().adjoint() * b) / m.norm_squared() * values_[k];
    }
    return out;
  }

  /// Density of the extension omega o E_R, which is E_R(D) for any D
  /// restricting to this state.
  Matrix density() const {
    const std::size_t L = region_.lattice_size();
    const Index d = hilbert_dimension(L);
    Matrix out = Matrix::Zero(d, d);
    const MonomialBasis basis(region_);
    for (std::size_t k = 0; k < basis.size(); ++k) {
      const Monomial& m = basis[k];
      out += std::conj(values_[k]) / (static_cast<double>(d) * m.norm_squared()) * m.matrix();
    }
    return out;
  }

  /// The extension by the tracial state on the rest of the lattice.
  DensityState extension(std::string label = "extension") const {
    Matrix rho = density();
    rho = (0.5 * (rho + rho.adjoint())).eval();
    return DensityState(std::move(rho), std::move(label));
  }

  double max_difference(const RestrictedState& other) const {
    if (other.region_ != region_) throw PreconditionError("restrictions live on different regions");
    double worst = 0.0;
    for (std::size_t k = 0; k < values_.size(); ++k) worst = std::max(worst, std::abs(values_[k] - other.values_[k]));
    return worst;
  }

 private:
  Region region_;
  std::vector<Complex> values_;
};

inline RestrictedState restrict(const DensityState& omega, const Region& region) {
  if (region.lattice_size() != omega.lattice_size()) throw PreconditionError("region and state lattices differ");
  const MonomialBasis basis(region);
  std::vector<Complex> values;
  values.reserve(basis.size());
  for (const Monomial& m : basis) values.push_back(omega.expectation(m));
  return {region, std::move(values)};
}

inline Complex normalized_trace(const Monomial& m) {
  const Index d = hilbert_dimension(m.region().lattice_size());
  Complex acc = 0.0;
  for (Index c = 0; c < d; ++c) {
    const auto hit = m.apply(c);
    if (hit && static_cast<Index>(hit->first) == c) acc += hit->second;
  }
  return acc / static_cast<double>(d);
}

/// max over basis monomials A of A_I and B of A_{I^c} of |omega(AB) - tau(A) omega(B)|.
inline double product_check(const DensityState& omega, const Region& region) {
  const MonomialBasis inner(region);
  const MonomialBasis outer(region.complement());
  std::vector<Complex> outer_values;
  outer_values.reserve(outer.size());
  for (const Monomial& b : outer) outer_values.push_back(omega.expectation(b));

  const Matrix& rho = omega.density();
  const Index d = rho.rows();
  double worst = 0.0;
  for (const Monomial& a : inner) {
    const Complex tau_a = normalized_trace(a);
    for (std::size_t k = 0; k < outer.size(); ++k) {
      const Monomial& b = outer[k];
      // Tr(rho A B): (A B)|c> = A (B|c>)
      Complex value = 0.0;
      for (Index c = 0; c < d; ++c) {
        const auto hb = b.apply(c);
        if (!hb) continue;
        const auto ha = a.apply(hb->first);
        if (!ha) continue;
        value += rho(c, ha->first) * hb->second * ha->second;
      }
      worst = std::max(worst, std::abs(value - tau_a * outer_values[k]));
    }
  }
  return worst;
}

/// psi = phi_pert + lambda X with X odd, self-adjoint and orthogonal to
/// A_{I^c}. Defaults: X = a_{i0} + a_{i0}^* for the least site of I and
/// lambda = lambda_min(phi_pert) / (2 ||X||).
inline DensityState noneven_perturbation(const DensityState& phi_pert, const Region& region,
                                         std::optional<AlgebraElement> x = std::nullopt,
                                         std::optional<double> lambda = std::nullopt) {
  const std::size_t L = phi_pert.lattice_size();
  if (region.is_empty()) throw PreconditionError("noneven perturbation needs a nonempty region");
  if (!phi_pert.full_rank()) throw PreconditionError("base state is not faithful");
  if (!x) {
    const int i0 = region.sites().front();
    x = annihilator(i0, L) + creator(i0, L);
  }
  const Matrix& xm = x->matrix();
  const double scale = std::max(1.0, max_abs(xm));
  if (even_defect(xm) > kStateTolerance * scale) throw PreconditionError("perturbation is not odd");
  if (hermiticity_defect(xm) > kStateTolerance * scale) throw PreconditionError("perturbation is not self-adjoint");
  if (max_abs(conditional_expectation(xm, region.complement())) > kStateTolerance * scale) {
    throw PreconditionError("perturbation is not orthogonal to the outside algebra");
  }
  const double bound = 0.5 * phi_pert.min_eigenvalue() / operator_norm(xm);
  const double lam = lambda.value_or(bound);
  if (!(lam > 0.0)) throw PreconditionError("perturbation scale must be positive");
  if (lam > bound * (1.0 + 1e-12)) throw PreconditionError("perturbation scale too large for positivity");
  const Matrix xh = (0.5 * (xm + xm.adjoint())).eval();
  return DensityState(phi_pert.density() + lam * xh, "psi");
}

struct Remark2Result {
  DensityState product_extension;  // tau on site 0 times the outer state
  DensityState vector_state;       // phi_xi
  double restriction_residual = 0.0;  // phi_xi vs (psi + psi o Theta) / 2 on A_{0^c}
  double u_expectation = 0.0;         // phi_xi(u)
  double outer_asymmetry = 0.0;       // max odd-monomial value of the outer state on A_{0^c}
};

/// Vector state xi = (Omega + u Omega) / sqrt 2, with Omega the square-root
/// purification of tau_0 (x) psi_outer. Its restriction to A_{0^c} is the
/// even part of psi_outer.
inline Remark2Result remark2_construct(const DensityState& outer, std::optional<AlgebraElement> u = std::nullopt) {
  const std::size_t L = outer.lattice_size();
  if (L < 2) throw PreconditionError("construction needs at least two sites");
  const Region origin = Region::site(L, 0);
  const Region rest = origin.complement();
  if (!u) u = annihilator(0, L) + creator(0, L);
  const Matrix& um = u->matrix();
  const Index d = um.rows();
  if (max_abs(conditional_expectation(um, origin) - um) > kStateTolerance) {
    throw PreconditionError("u is not supported on site 0");
  }
  if (even_defect(um) > kStateTolerance) throw PreconditionError("u is not odd");
  if (hermiticity_defect(um) > kStateTolerance) throw PreconditionError("u is not self-adjoint");
  if (max_abs(um * um.adjoint() - Matrix::Identity(d, d)) > kStateTolerance) {
    throw PreconditionError("u is not unitary");
  }

  const RestrictedState outer_values = restrict(outer, rest);
  DensityState product = outer_values.extension("product");
  const Matrix omega = hermitian_function(product.density(), [](double v) { return std::sqrt(std::max(v, 0.0)); });
  Matrix xi = (omega + um * omega) / std::sqrt(2.0);
  xi /= xi.norm();
  Matrix rho = xi * xi.adjoint();
  rho = (0.5 * (rho + rho.adjoint())).eval();
  rho /= rho.trace().real();
  DensityState vector_state(std::move(rho), "phi_xi");

  // Even part of the outer state, as values on the A_{0^c} basis.
  const RestrictedState got = restrict(vector_state, rest);
  const MonomialBasis basis(rest);
  double residual = 0.0, asym = 0.0;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const Complex want = basis[k].is_odd() ? Complex(0.0) : outer_values.value(k);
    residual = std::max(residual, std::abs(got.value(k) - want));
    if (basis[k].is_odd()) asym = std::max(asym, std::abs(outer_values.value(k)));
  }
  const double u_value = vector_state.expectation(um).real();
  return {std::move(product), std::move(vector_state), residual, u_value, asym};
}

}  // namespace gradelab
