#include <catch_amalgamated.hpp>

#include <gradelab/stability.hpp>

#include "support.hpp"

using namespace gradelab;
using namespace gradelab::testing;
using Catch::Matchers::WithinAbs;

namespace {

Matrix matrix_exp(const Matrix& h, double scale) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  Eigen::VectorXd e = (scale * es.eigenvalues()).array().exp();
  return es.eigenvectors() * e.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

TEST_CASE("feasible sampler", "[stability]") {
  Rng rng(1);
  const std::size_t L = 4;
  const Region region(L, {1, 2});
  const Potential phi = random_standard_potential(L, rng, 6, 3);
  const DensityState base = gibbs_state(total_hamiltonian(phi), 1.0);

  for (OutsideSystem mode : {OutsideSystem::complement, OutsideSystem::commutant}) {
    const FeasibleFamily fam = feasible_sampler(base, region, mode, 40, 99);
    REQUIRE(fam.samples.size() == 40);
    CHECK(max_abs(fam.samples[0].density() - base.density()) == 0.0);
    for (const auto& s : fam.samples) {
      CHECK(constraint_residual(s, base, region, mode) <= 1e-12);
      CHECK(s.min_eigenvalue() >= 0.5 * base.min_eigenvalue() - 1e-15);
    }
    CHECK(max_abs(fam.samples[5].density() - base.density()) > 1e-6);

    const FeasibleFamily again = feasible_sampler(base, region, mode, 40, 99);
    for (std::size_t k = 0; k < 40; ++k) CHECK(max_abs(again.samples[k].density() - fam.samples[k].density()) == 0.0);
    const FeasibleFamily other = feasible_sampler(base, region, mode, 3, 100);
    CHECK(max_abs(other.samples[1].density() - fam.samples[1].density()) > 1e-6);
  }

  CHECK_THROWS_AS(feasible_sampler(base, region, OutsideSystem::complement, 0, 1), PreconditionError);
  const DensityState pure(pure_density(random_unit_vector(16, rng)));
  CHECK_THROWS_AS(feasible_sampler(pure, region, OutsideSystem::complement, 3, 1), PreconditionError);
}

TEST_CASE("perturbation space dimension", "[stability]") {
  const std::size_t L = 4;
  const Index d = hilbert_dimension(L);
  for (OutsideSystem mode : {OutsideSystem::complement, OutsideSystem::commutant}) {
    for (const Region& region : {Region(L, {1}), Region(L, {0, 3})}) {
      std::vector<Matrix> directions;
      for (Index i = 0; i < d; ++i)
        for (Index j = 0; j < d; ++j) {
          Matrix e = Matrix::Zero(d, d);
          e(i, j) = 1.0;
          directions.push_back(feasible_direction(e, region, mode));
        }
      const Index expected = (Index{1} << (2 * L)) - (Index{1} << (2 * (L - region.size())));
      CHECK(span_rank(directions) == expected);
    }
  }
}

TEST_CASE("LTS check", "[stability]") {
  Rng rng(2);
  const std::size_t L = 5;
  const Region region(L, {2});
  const Potential phi = random_standard_potential(L, rng, 8, 3);
  const double beta = 1.2;

  SECTION("Gibbs state against sampled competitors") {
    const DensityState gibbs = gibbs_state(total_hamiltonian(phi), beta);
    for (OutsideSystem mode : {OutsideSystem::complement, OutsideSystem::commutant}) {
      const FeasibleFamily fam = feasible_sampler(gibbs, region, mode, 100, 7);
      const StabilityReport rep = lts_check(gibbs, phi, region, beta, fam);
      CHECK(rep.passed());
      CHECK(rep.margin >= -1e-9);
      CHECK(rep.record("feasibility").pass);
      CHECK(rep.free_energies.size() == 101);
    }
  }
  SECTION("tracial state, no interaction") {
    const DensityState tau = tracial_state(L);
    const FeasibleFamily fam = feasible_sampler(tau, region, OutsideSystem::complement, 20, 3);
    const StabilityReport rep = lts_check(tau, Potential(L), region, beta, fam);
    CHECK(rep.passed());
    CHECK(rep.free_energies.at("tau") == 0.0);
  }
  SECTION("noneven state fails under the pruned potential") {
    const Region two(L, {1, 2});
    const DensityState pert = perturbed_state(phi, beta, two);
    const DensityState psi = noneven_perturbation(pert, two);
    const StabilityReport rep = lts_check(psi, prune(phi, two), two, beta, OutsideSystem::complement, {pert});
    CHECK_FALSE(rep.passed());
    CHECK_THAT(rep.margin, WithinAbs(-relative_entropy(pert, psi).value, 1e-10));
  }
}

TEST_CASE("free energy is concave on the feasible slice", "[stability][property]") {
  Rng rng(3);
  const std::size_t L = 4;
  const Region region(L, {1});
  const Potential phi = random_standard_potential(L, rng, 6, 3);
  const Matrix h = local_hamiltonian(phi, region).matrix.matrix();
  const DensityState base(random_density(hilbert_dimension(L), rng));
  for (OutsideSystem mode : {OutsideSystem::complement, OutsideSystem::commutant}) {
    const FeasibleFamily fam = feasible_sampler(base, region, mode, 41, 5);
    for (std::size_t k = 1; k + 1 < fam.samples.size(); k += 2) {
      const auto& w1 = fam.samples[k];
      const auto& w2 = fam.samples[k + 1];
      const DensityState mid((0.5 * (w1.density() + w2.density())).eval());
      const double fm = conditional_free_energy(mid, h, region, 0.9, mode);
      const double f1 = conditional_free_energy(w1, h, region, 0.9, mode);
      const double f2 = conditional_free_energy(w2, h, region, 0.9, mode);
      CHECK(fm >= 0.5 * (f1 + f2) - 1e-10);
    }
  }
}

TEST_CASE("LTS and LTS' feasible sets on even and odd perturbations", "[stability]") {
  Rng rng(4);
  const std::size_t L = 4;
  const Region region(L, {1, 2});
  const Potential phi = random_standard_potential(L, rng, 6, 3);
  const DensityState gibbs = gibbs_state(total_hamiltonian(phi), 0.8);
  const Matrix h = local_hamiltonian(phi, region).matrix.matrix();

  const FeasibleFamily even_c =
      feasible_sampler(gibbs, region, OutsideSystem::complement, 30, 11, PerturbationParity::even);
  const FeasibleFamily even_p =
      feasible_sampler(gibbs, region, OutsideSystem::commutant, 30, 12, PerturbationParity::even);
  for (const auto& s : even_c.samples) {
    CHECK(constraint_residual(s, gibbs, region, OutsideSystem::commutant) <= 1e-12);
    CHECK_THAT(conditional_free_energy(s, h, region, 0.8, OutsideSystem::commutant),
               WithinAbs(conditional_free_energy(s, h, region, 0.8), 1e-10));
  }
  for (const auto& s : even_p.samples) CHECK(constraint_residual(s, gibbs, region, OutsideSystem::complement) <= 1e-12);

  const FeasibleFamily odd_c =
      feasible_sampler(gibbs, region, OutsideSystem::complement, 10, 13, PerturbationParity::odd);
  double worst = 0.0;
  for (const auto& s : odd_c.samples) worst = std::max(worst, constraint_residual(s, gibbs, region, OutsideSystem::commutant));
  CHECK(worst > 1e-6);
}

TEST_CASE("LTS maximizer", "[stability]") {
  Rng rng(5);

  SECTION("pruned potential: the tracial product is the maximizer") {
    const std::size_t L = 5;
    const Region region(L, {2});
    const Potential phi = random_standard_potential(L, rng, 8, 3);
    const DensityState pert = perturbed_state(phi, 1.0, region);
    const FeasibleFamily fam = feasible_sampler(pert, region, OutsideSystem::complement, 3, 17);
    MaximizerOptions opts;
    opts.start = fam.samples[2];
    const MaximizerResult res = lts_maximizer(restrict(pert, region.complement()), prune(phi, region), region, 1.0, opts);
    CHECK(std::abs(res.free_energy) <= 1e-6);
    CHECK(res.certificate <= 1e-8);
    CHECK(max_abs(res.state.density() - pert.density()) <= 1e-4);
  }
  SECTION("no interaction: tracial product extension of any constraint") {
    const std::size_t L = 4;
    const Region region(L, {1, 2});
    const DensityState omega(random_density(hilbert_dimension(L), rng));
    const RestrictedState constraint = restrict(omega, region.complement());
    MaximizerOptions opts;
    opts.start = omega;
    const MaximizerResult res = lts_maximizer(constraint, Potential(L), region, 1.0, opts);
    CHECK(max_abs(res.state.density() - constraint.extension().density()) <= 1e-4);
    CHECK(std::abs(res.free_energy) <= 1e-6);
  }
  SECTION("decoupled blocks match the closed form") {
    const std::size_t L = 4;
    const Region region(L, {1, 2});
    const ModelSpec model{L,
                          {{{1, 2}, -0.8, "hopping"},
                           {{1}, 0.4, "number"},
                           {{1, 2}, 0.6, "density_density"},
                           {{0, 3}, -0.5, "hopping"},
                           {{0, 3}, 0.3, "pairing"},
                           {{0}, -0.2, "number"}}};
    const Potential phi = build_potential(model);
    const double beta = 1.3;
    const DensityState omega(random_density(hilbert_dimension(L), rng));
    const RestrictedState constraint = restrict(omega, region.complement());
    MaximizerOptions opts;
    opts.start = omega;
    const MaximizerResult res = lts_maximizer(constraint, phi, region, beta, opts);

    const Matrix h = local_hamiltonian(phi, region).matrix.matrix();
    const Matrix boltzmann = matrix_exp(h, -beta);
    const double z = normalized_trace(boltzmann).real();
    CHECK_THAT(res.free_energy, WithinAbs(std::log(z), 1e-6));
    const Matrix expected = boltzmann * constraint.extension().density() / z;
    CHECK(max_abs(res.state.density() - expected) <= 1e-4);
    CHECK_THAT(conditional_free_energy(res.state, phi, region, beta), WithinAbs(res.free_energy, 1e-9));
  }
  SECTION("Gibbs constraint recovers the Gibbs state, and the result passes LTS") {
    const std::size_t L = 4;
    const Region region(L, {1});
    const Potential phi = random_standard_potential(L, rng, 6, 3);
    const double beta = 0.9;
    const DensityState gibbs = gibbs_state(total_hamiltonian(phi), beta);
    const RestrictedState constraint = restrict(gibbs, region.complement());
    const MaximizerResult res = lts_maximizer(constraint, phi, region, beta);
    CHECK_THAT(res.free_energy, WithinAbs(conditional_free_energy(gibbs, phi, region, beta), 1e-8));
    CHECK(max_abs(res.state.density() - gibbs.density()) <= 1e-4);

    const FeasibleFamily fam = feasible_sampler(res.state, region, OutsideSystem::complement, 50, 21);
    CHECK(lts_check(res.state, phi, region, beta, fam).passed());
  }
  SECTION("errors") {
    const std::size_t L = 4;
    const Region region(L, {1});
    const DensityState omega(random_density(hilbert_dimension(L), rng));
    CHECK_THROWS_AS(lts_maximizer(restrict(omega, region), Potential(L), region, 1.0), PreconditionError);
    MaximizerOptions opts;
    opts.start = omega;
    opts.max_iterations = 1;
    CHECK_THROWS_AS(lts_maximizer(restrict(omega, region.complement()), Potential(L), region, 1.0, opts),
                    NumericalError);
  }
}

TEST_CASE("noneven violation pipeline", "[stability]") {
  const std::size_t L = 6;
  const Region region(L, {2, 3});
  const Potential phi = build_potential(hopping_model(L, 1.0, 0.3));
  const StabilityReport rep = prop4_pipeline(phi, 1.0, region, std::nullopt, 42);
  for (const auto& r : rep.residuals) {
    INFO(r.check << " value " << r.value << " tolerance " << r.tolerance);
    CHECK(r.pass);
  }
  CHECK(rep.passed());
  CHECK(rep.margin > 1e-6);
  CHECK_FALSE(rep.notes.empty());
  CHECK(rep.free_energies.at("psi") < rep.free_energies.at("phi_pert"));

  // Gap shrinks to zero with the perturbation scale.
  const DensityState pert = perturbed_state(phi, 1.0, region);
  const double quarter = 0.25 * 0.5 * pert.min_eigenvalue();  // ||a + a^*|| = 1
  double previous = std::numeric_limits<double>::infinity();
  for (double scale : {1.0, 0.1, 0.01}) {
    const StabilityReport r = prop4_pipeline(phi, 1.0, region, scale * quarter, 42);
    CHECK(r.passed() == (r.margin > 1e-6));
    CHECK(r.margin < previous);
    CHECK(r.margin > 0.0);
    previous = r.margin;
  }
  CHECK(previous < 1e-4 * rep.margin);

  CHECK_THROWS_AS(prop4_pipeline(phi, 0.0, region, std::nullopt, 1), PreconditionError);
  CHECK_THROWS_AS(prop4_pipeline(phi, 1.0, Region::full(L), std::nullopt, 1), PreconditionError);
}
