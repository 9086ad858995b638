#pragma once

// Local thermal stability: feasible-set sampling, the conditional free energy
// comparison, an ascent maximizer and the noneven-violation pipeline.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gradelab/car.hpp"
#include "gradelab/entropy.hpp"
#include "gradelab/interaction.hpp"
#include "gradelab/linalg.hpp"
#include "gradelab/state.hpp"

namespace gradelab {

inline constexpr double kLtsTolerance = 1e-9;

struct CheckRecord {
  std::string check;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// pass iff value <= tolerance
inline CheckRecord at_most(std::string check, double value, double tolerance) {
  return {std::move(check), value, tolerance, std::isfinite(value) && value <= tolerance};
}

/// pass iff value > threshold
inline CheckRecord exceeds(std::string check, double value, double threshold) {
  return {std::move(check), value, threshold, std::isfinite(value) && value > threshold};
}

/// pass iff value >= -tolerance
inline CheckRecord at_least_minus(std::string check, double value, double tolerance) {
  return {std::move(check), value, tolerance, std::isfinite(value) && value >= -tolerance};
}

enum class Verdict { pass, fail };

inline const char* to_string(Verdict v) { return v == Verdict::pass ? "pass" : "fail"; }

struct StabilityReport {
  std::map<std::string, double> free_energies;
  double margin = 0.0;
  double tolerance = kLtsTolerance;
  Verdict verdict = Verdict::fail;
  std::vector<CheckRecord> residuals;
  std::vector<std::string> notes;

  bool passed() const { return verdict == Verdict::pass; }

  const CheckRecord& record(const std::string& name) const {
    for (const auto& r : residuals)
      if (r.check == name) return r;
    throw PreconditionError("no check named " + name);
  }
};

// ---------------------------------------------------------------------------
// Feasible states

enum class PerturbationParity { any, even, odd };

struct FeasibleFamily {
  DensityState base;
  Region region;
  OutsideSystem mode = OutsideSystem::complement;
  std::vector<DensityState> samples;
};

/// Component of G orthogonal (in tau) to the outside algebra of `region`.
inline Matrix feasible_direction(const Matrix& g, const Region& region, OutsideSystem mode) {
  return g - project_outside(g, region, mode);
}

/// Largest entry of the outside-algebra projection of D_w - D_base.
inline double constraint_residual(const DensityState& omega, const DensityState& base, const Region& region,
                                  OutsideSystem mode) {
  return max_abs(project_outside(omega.density() - base.density(), region, mode));
}

/// n feasible states: the base itself followed by D + Y with Y Hermitian,
/// orthogonal to the outside algebra and ||Y|| <= lambda_min(D) / 2. Sample k
/// draws from its own generator seeded by (seed, k).
inline FeasibleFamily feasible_sampler(const DensityState& phi, const Region& region, OutsideSystem mode,
                                       std::size_t n, std::uint64_t seed,
                                       PerturbationParity parity = PerturbationParity::any) {
  if (n == 0) throw PreconditionError("sample count must be positive");
  if (region.is_empty()) throw PreconditionError("feasible set needs a nonempty region");
  if (!phi.full_rank()) throw PreconditionError("base state is not faithful");
  const Index d = phi.density().rows();
  const double radius = 0.5 * phi.min_eigenvalue();

  FeasibleFamily family{phi, region, mode, {}};
  family.samples.reserve(n);
  family.samples.push_back(phi.relabeled("sample[0]"));
  for (std::size_t k = 1; k < n; ++k) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(k)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> shrink(0.05, 1.0);

    Matrix g(d, d);
    for (Index j = 0; j < d; ++j)
      for (Index i = 0; i < d; ++i) g(i, j) = Complex(normal(rng), normal(rng));
    g = (0.5 * (g + g.adjoint())).eval();
    if (parity == PerturbationParity::even) g = even_part(g);
    if (parity == PerturbationParity::odd) g = odd_part(g);
    Matrix y = feasible_direction(g, region, mode);
    y = (0.5 * (y + y.adjoint())).eval();

    const double norm = operator_norm(y);
    Matrix rho = phi.density();
    if (norm > 0.0) rho += (shrink(rng) * radius / norm) * y;
    family.samples.emplace_back(std::move(rho), "sample[" + std::to_string(k) + "]");
  }
  return family;
}

// ---------------------------------------------------------------------------
// LTS comparison

/// margin = min over samples of F(phi) - F(w); pass iff margin >= -1e-9.
inline StabilityReport lts_check(const DensityState& phi, const Matrix& local_h, const Region& region, double beta,
                                 OutsideSystem mode, const std::vector<DensityState>& samples) {
  StabilityReport report;
  const double f_phi = conditional_free_energy(phi, local_h, region, beta, mode);
  report.free_energies[phi.label()] = f_phi;

  double margin = std::numeric_limits<double>::infinity();
  double feasibility = 0.0;
  for (const auto& omega : samples) {
    const double f = conditional_free_energy(omega, local_h, region, beta, mode);
    report.free_energies[omega.label()] = f;
    margin = std::min(margin, f_phi - f);
    feasibility = std::max(feasibility, constraint_residual(omega, phi, region, mode));
  }
  if (samples.empty()) {
    margin = 0.0;
    report.notes.push_back("no competitor states supplied");
  }
  report.margin = margin;
  report.verdict = std::isfinite(margin) && margin >= -kLtsTolerance ? Verdict::pass : Verdict::fail;
  report.residuals.push_back(at_least_minus("margin", margin, kLtsTolerance));
  report.residuals.push_back(at_most("feasibility", feasibility, 1e-12));
  return report;
}

inline StabilityReport lts_check(const DensityState& phi, const Potential& potential, const Region& region,
                                 double beta, OutsideSystem mode, const std::vector<DensityState>& samples) {
  if (!validate_potential(potential).pass()) throw PreconditionError("potential is not standard");
  return lts_check(phi, local_hamiltonian(potential, region).matrix.matrix(), region, beta, mode, samples);
}

inline StabilityReport lts_check(const DensityState& phi, const Potential& potential, const Region& region,
                                 double beta, const FeasibleFamily& family) {
  return lts_check(phi, potential, region, beta, family.mode, family.samples);
}

// ---------------------------------------------------------------------------
// Maximizer

struct MaximizerOptions {
  int max_iterations = 50000;
  /// Stop once |dF| stays below this for `window` consecutive accepted steps.
  double stall_tolerance = 1e-13;
  int window = 10;
  std::optional<DensityState> start;
};

struct MaximizerResult {
  DensityState state;
  double free_energy = 0.0;
  int iterations = 0;
  /// max |dF| over the final `window` accepted steps
  double certificate = 0.0;
  /// Frobenius norm of the projected gradient at the returned state
  double stationarity = 0.0;
};

/// Maximizes F(w) = Sc_I(w) - beta w(H(I)) over states w agreeing with
/// `constraint` on A_{I^c}, by projected gradient ascent. The constraint must be
/// faithful so that log E_{I^c}(D) exists.
inline MaximizerResult lts_maximizer(const RestrictedState& constraint, const Potential& potential,
                                     const Region& region, double beta, MaximizerOptions options = {}) {
  if (region.is_empty()) throw PreconditionError("maximizer needs a nonempty region");
  if (constraint.region() != region.complement()) {
    throw PreconditionError("constraint must live on the complement of the region");
  }
  if (!validate_potential(potential).pass()) throw PreconditionError("potential is not standard");

  const Region outside = region.complement();
  const DensityState sigma = constraint.extension("constraint");
  if (!sigma.full_rank()) throw PreconditionError("constraint state is not faithful");
  const Matrix log_sigma = hermitian_function(sigma.density(), [](double x) { return std::log(x); });
  const Matrix h = local_hamiltonian(potential, region).matrix.matrix();
  const Matrix linear = log_sigma - beta * h;

  Matrix d = sigma.density();
  if (options.start) {
    if (max_abs(conditional_expectation(options.start->density(), outside) - sigma.density()) > 1e-10) {
      throw PreconditionError("start state does not satisfy the constraint");
    }
    d = options.start->density();
  }

  auto objective = [&](const Matrix& rho, Eigen::SelfAdjointEigenSolver<Matrix>& es) {
    es.compute(rho);
    double s = 0.0;
    for (Index i = 0; i < es.eigenvalues().size(); ++i) {
      const double p = es.eigenvalues()(i);
      if (p > 0.0) s -= p * std::log(p);
    }
    return s + rho.cwiseProduct(linear.transpose()).sum().real();
  };
  auto gradient = [&](const Eigen::SelfAdjointEigenSolver<Matrix>& es) {
    Eigen::VectorXd logs = es.eigenvalues().unaryExpr([](double p) { return std::log(std::max(p, 1e-300)); });
    Matrix g = linear - es.eigenvectors() * logs.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
    g = feasible_direction(g, region, OutsideSystem::complement);
    return (0.5 * (g + g.adjoint())).eval();
  };
  // Clip to >= 1e-14, renormalise, then restore the A_{I^c} marginal.
  auto repair = [&](const Matrix& rho) {
    Matrix r = hermitian_function((0.5 * (rho + rho.adjoint())).eval(), [](double p) { return std::max(p, 1e-14); });
    r /= r.trace().real();
    r += sigma.density() - conditional_expectation(r, outside);
    return (0.5 * (r + r.adjoint())).eval();
  };

  Eigen::SelfAdjointEigenSolver<Matrix> es;
  double f = objective(d, es);
  Matrix g = gradient(es);
  double step = 0.5 * es.eigenvalues()(0) / std::max(operator_norm(g), 1e-300);
  std::deque<double> recent;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    const double gnorm = g.norm();
    if (gnorm < 1e-13) {
      recent.assign(static_cast<std::size_t>(options.window), 0.0);
      break;
    }
    Matrix trial = repair(d + step * g);
    Eigen::SelfAdjointEigenSolver<Matrix> trial_es;
    const double f_trial = objective(trial, trial_es);
    if (trial_es.eigenvalues()(0) <= 0.0 || f_trial < f - 1e-15) {
      step *= 0.5;
      if (step < 1e-300) break;
      continue;
    }
    recent.push_back(std::abs(f_trial - f));
    if (static_cast<int>(recent.size()) > options.window) recent.pop_front();
    d = std::move(trial);
    f = f_trial;
    es = trial_es;
    g = gradient(es);
    step *= 1.5;
    if (static_cast<int>(recent.size()) == options.window &&
        *std::max_element(recent.begin(), recent.end()) <= options.stall_tolerance) {
      break;
    }
  }

  const double certificate =
      static_cast<int>(recent.size()) == options.window ? *std::max_element(recent.begin(), recent.end()) : INFINITY;
  if (!(certificate <= 1e-8)) {
    throw NumericalError("ascent did not converge within " + std::to_string(options.max_iterations) + " iterations");
  }
  d /= d.trace().real();
  DensityState state((0.5 * (d + d.adjoint())).eval(), "maximizer");
  const double stationarity = gradient(Eigen::SelfAdjointEigenSolver<Matrix>(state.density())).norm();
  return {std::move(state), f, it, certificate, stationarity};
}

// ---------------------------------------------------------------------------
// Noneven violation pipeline

/// Builds the Gibbs state phi, the perturbed state phi_pert, the noneven psi
/// and psi o Theta, then checks the inequality chain under the pruned
/// potential: all three agree on A_{I^c}, all vanish on the pruned H(I),
/// Sc_I(phi_pert) = 0, Sc_I(psi) = Sc_I(psi o Theta) = -S(phi_pert, psi) < 0,
/// so F(psi) = F(psi o Theta) < F(phi_pert) = 0.
inline StabilityReport prop4_pipeline(const Potential& potential, double beta, const Region& region,
                                      std::optional<double> lambda, std::uint64_t seed) {
  if (!validate_potential(potential).pass()) throw PreconditionError("potential is not standard");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw PreconditionError("inverse temperature must be positive");
  if (region.is_empty() || region.is_full()) throw PreconditionError("region must be a proper nonempty subregion");

  const std::size_t L = potential.lattice_size();
  const Region outside = region.complement();
  const Matrix h_full = total_hamiltonian(potential).matrix();
  const Matrix h_local = local_hamiltonian(potential, region).matrix.matrix();
  const Potential pruned = prune(potential, region);
  const Matrix h_pruned_total = total_hamiltonian(pruned).matrix();
  const Matrix h_pruned_local = local_hamiltonian(pruned, region).matrix.matrix();

  const DensityState phi = gibbs_state(h_full, beta, "phi");
  const DensityState phi_pert = perturbed_state(potential, beta, region).relabeled("phi_pert");
  const DensityState psi = noneven_perturbation(phi_pert, region, std::nullopt, lambda);
  const DensityState psi_theta = psi.graded().relabeled("psi_theta");

  StabilityReport report;
  auto& out = report.residuals;

  const RestrictedState base_out = restrict(phi_pert, outside);
  out.push_back(at_most("RESTIc",
                        std::max(restrict(psi, outside).max_difference(base_out),
                                 restrict(psi_theta, outside).max_difference(base_out)),
                        1e-12));

  double hi = max_abs(h_pruned_local);
  for (const auto* s : {&phi_pert, &psi, &psi_theta}) hi = std::max(hi, std::abs(s->expectation(h_pruned_local)));
  out.push_back(at_most("HIzero", hi, 1e-12));

  const double sc_pert = conditional_entropy(phi_pert, region);
  const double sc_psi = conditional_entropy(psi, region);
  const double sc_psi_theta = conditional_entropy(psi_theta, region);
  const double s_pert_psi = relative_entropy(phi_pert, psi).or_infinity();
  out.push_back(at_most("ScIvpHI", std::abs(sc_pert), 1e-10));
  out.push_back(at_most("ScIpsi", std::abs(sc_psi + s_pert_psi), 1e-10));
  out.push_back(at_most("ScImin", std::abs(sc_psi_theta - sc_psi), 1e-10));

  const double f_pert = conditional_free_energy(phi_pert, h_pruned_local, region, beta);
  const double f_psi = conditional_free_energy(psi, h_pruned_local, region, beta);
  const double f_psi_theta = conditional_free_energy(psi_theta, h_pruned_local, region, beta);
  report.free_energies = {{"phi", conditional_free_energy(phi, h_pruned_local, region, beta)},
                          {"phi_pert", f_pert},
                          {"psi", f_psi},
                          {"psi_theta", f_psi_theta}};
  out.push_back(at_most("Fvp_zero", std::abs(f_pert), 1e-10));
  out.push_back(at_most("Fpsi_symmetric", std::abs(f_psi - f_psi_theta), 1e-10));
  out.push_back(at_most("violate_identity", std::abs((f_pert - f_psi) - s_pert_psi), 1e-10));
  out.push_back(exceeds("violate", f_pert - f_psi, 1e-6));

  out.push_back(at_most("vpHIprod", product_check(phi_pert, region), 1e-9));
  out.push_back(at_most("Gibbs2", fixes_subalgebra_residual(h_full - h_local, region), 1e-12));

  const PerturbationBounds bounds = perturbation_entropy_bounds(potential, beta, region);
  out.push_back(at_most("RELZENTAI",
                        std::max({bounds.forward, bounds.backward, bounds.restricted_forward,
                                  bounds.restricted_backward}),
                        bounds.bound));

  // phi_pert is the KMS state of the pruned dynamics; checked on a seeded panel.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Index d = hilbert_dimension(L);
  double kms = 0.0;
  for (int k = 0; k < 8; ++k) {
    Matrix a(d, d), b(d, d);
    for (Index j = 0; j < d; ++j)
      for (Index i = 0; i < d; ++i) {
        a(i, j) = Complex(normal(rng), normal(rng));
        b(i, j) = Complex(normal(rng), normal(rng));
      }
    kms = std::max(kms, kms_residual(phi_pert, h_pruned_total, beta, a / a.norm(), b / b.norm()));
  }
  out.push_back(at_most("kms_perturbed", kms, 1e-10));

  report.margin = f_pert - std::max(f_psi, f_psi_theta);
  report.tolerance = 1e-6;
  report.verdict = std::all_of(out.begin(), out.end(), [](const auto& r) { return r.pass; }) ? Verdict::pass
                                                                                              : Verdict::fail;
  report.notes.push_back(
      "finite-dimensional analog: psi is built by an odd affine perturbation, not from an odd central element "
      "(the full matrix algebra has trivial center and a unique KMS state), so psi is not itself KMS; the chain "
      "is verified for a state with the same restriction and nonevenness properties");
  return report;
}

}  // namespace gradelab
