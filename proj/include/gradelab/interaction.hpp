#pragma once

// Standard potentials, local Hamiltonians, pruning and the derivation they
// generate.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "gradelab/car.hpp"
#include "gradelab/linalg.hpp"

namespace gradelab {

inline constexpr double kPotentialTolerance = 1e-12;

/// coefficient * (named operator on `sites`). Known names: number, hopping,
/// current, pairing, density_density, scalar.
struct TermRecord {
  std::vector<int> sites;
  double coefficient = 0.0;
  std::string name;

  friend bool operator==(const TermRecord&, const TermRecord&) = default;
};

struct ModelSpec {
  std::size_t lattice_size = 0;
  std::vector<TermRecord> terms;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

inline AlgebraElement term_operator(const TermRecord& term, std::size_t lattice_size) {
  const auto need = [&](std::size_t n) {
    if (term.sites.size() != n) {
      throw PreconditionError("term '" + term.name + "' needs " + std::to_string(n) + " sites, got " +
                              std::to_string(term.sites.size()));
    }
    if (n == 2 && term.sites[0] == term.sites[1]) throw PreconditionError("term '" + term.name + "' repeats a site");
  };
  const Region region(lattice_size, term.sites);
  AlgebraElement op = AlgebraElement::zero(lattice_size);
  if (term.name == "scalar") {
    need(0);
    op = AlgebraElement::identity(lattice_size);
  } else if (term.name == "number") {
    need(1);
    op = number_operator(term.sites[0], lattice_size);
  } else if (term.name == "hopping") {
    need(2);
    const auto hop = creator(term.sites[0], lattice_size) * annihilator(term.sites[1], lattice_size);
    op = hop + hop.adjoint();
  } else if (term.name == "current") {
    need(2);
    const auto hop = creator(term.sites[0], lattice_size) * annihilator(term.sites[1], lattice_size);
    op = Complex(0.0, 1.0) * (hop - hop.adjoint());
  } else if (term.name == "pairing") {
    need(2);
    const auto pair = annihilator(term.sites[0], lattice_size) * annihilator(term.sites[1], lattice_size);
    op = pair + pair.adjoint();
  } else if (term.name == "density_density") {
    need(2);
    op = number_operator(term.sites[0], lattice_size) * number_operator(term.sites[1], lattice_size);
  } else {
    throw PreconditionError("unknown term name '" + term.name + "'");
  }
  return {term.coefficient * op.matrix(), region, AlgebraElement::Trusted{}};
}

using RawTerms = std::map<Region, AlgebraElement>;

/// Sums the records of a model region by region (no standardisation).
inline RawTerms raw_terms(const ModelSpec& model) {
  RawTerms out;
  for (const auto& t : model.terms) {
    AlgebraElement op = term_operator(t, model.lattice_size);
    const Region key = op.support();
    auto it = out.find(key);
    if (it == out.end()) {
      out.emplace(key, std::move(op));
    } else {
      it->second = it->second + op;
    }
  }
  return out;
}

/// A map from regions to interaction terms. The container itself does not
/// enforce the standardness conditions; `standardize` produces potentials that
/// satisfy them and `validate_potential` reports on any potential.
class Potential {
 public:
  explicit Potential(std::size_t lattice_size) : lattice_size_(lattice_size) {}

  Potential(std::size_t lattice_size, std::map<Region, AlgebraElement> terms)
      : lattice_size_(lattice_size), terms_(std::move(terms)) {
    for (const auto& [region, op] : terms_) {
      if (region.lattice_size() != lattice_size_ || op.lattice_size() != lattice_size_) {
        throw PreconditionError("potential term lives on a different lattice");
      }
    }
  }

  std::size_t lattice_size() const { return lattice_size_; }
  const std::map<Region, AlgebraElement>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  AlgebraElement term(const Region& r) const {
    auto it = terms_.find(r);
    return it == terms_.end() ? AlgebraElement::zero(lattice_size_) : it->second;
  }

 private:
  std::size_t lattice_size_;
  std::map<Region, AlgebraElement> terms_;
};

struct LocalHamiltonian {
  Region region;
  AlgebraElement matrix;
};

namespace detail {

inline void check_raw_term(const Region& region, const AlgebraElement& h) {
  const double scale = std::max(1.0, max_abs(h.matrix()));
  if (max_abs(conditional_expectation(h.matrix(), region) - h.matrix()) > kPotentialTolerance * scale) {
    throw PreconditionError("raw term is not supported in " + region.to_string());
  }
  if (hermiticity_defect(h.matrix()) > kPotentialTolerance * scale) {
    throw PreconditionError("raw term on " + region.to_string() + " is not self-adjoint");
  }
  if (odd_defect(h.matrix()) > kPotentialTolerance * scale) {
    throw PreconditionError("raw term on " + region.to_string() + " is not even");
  }
}

}  // namespace detail

/// Standard potential generating the same dynamics as `raw`.
///
/// Each raw term h on R is split by inclusion-exclusion,
///   Phi(J) += sum_{K subset J} (-1)^{|J \ K|} E_K(h),   J subset R,
/// which gives E_{J'}(Phi(J)) = 0 for every proper J' of J because the E's
/// commute and E_K E_J = E_{K cap J}. The J = {} piece (a scalar) is dropped.
inline Potential standardize(const RawTerms& raw, std::size_t lattice_size) {
  std::map<Region, Matrix> acc;
  double scale = 0.0;
  for (const auto& [region, h] : raw) {
    if (region.lattice_size() != lattice_size) throw PreconditionError("raw term on a different lattice");
    detail::check_raw_term(region, h);
    scale = std::max(scale, max_abs(h.matrix()));

    const auto subs = subregions(region);
    std::map<SiteMask, Matrix> projected;
    for (const auto& k : subs) projected.emplace(k.mask(), conditional_expectation(h.matrix(), k));

    for (const auto& j : subs) {
      if (j.is_empty()) continue;
      Matrix phi = Matrix::Zero(h.matrix().rows(), h.matrix().cols());
      for (const auto& k : subregions(j)) {
        const bool odd = ((j.size() - k.size()) & 1U) != 0;
        phi += (odd ? -1.0 : 1.0) * projected.at(k.mask());
      }
      auto [it, inserted] = acc.try_emplace(j, std::move(phi));
      if (!inserted) it->second += phi;
    }
  }

  std::map<Region, AlgebraElement> terms;
  for (auto& [region, m] : acc) {
    Matrix sym = 0.5 * (m + m.adjoint());
    if (max_abs(sym) <= 1e-14 * std::max(1.0, scale)) continue;
    terms.emplace(region, AlgebraElement(std::move(sym), region, AlgebraElement::Trusted{}));
  }
  return {lattice_size, std::move(terms)};
}

inline Potential standardize(const Potential& p) { return standardize(p.terms(), p.lattice_size()); }

/// H(I) = sum of Phi(K) over stored K with K cap I nonempty.
inline LocalHamiltonian local_hamiltonian(const Potential& phi, const Region& region) {
  if (region.is_empty()) throw PreconditionError("local Hamiltonian needs a nonempty region");
  if (region.lattice_size() != phi.lattice_size()) throw PreconditionError("region and potential lattices differ");
  const Index d = hilbert_dimension(phi.lattice_size());
  Matrix h = Matrix::Zero(d, d);
  Region support = Region::empty(phi.lattice_size());
  for (const auto& [k, term] : phi.terms()) {
    if (!k.intersects(region)) continue;
    h += term.matrix();
    support = support.unite(k);
  }
  return {region, AlgebraElement(std::move(h), support, AlgebraElement::Trusted{})};
}

inline AlgebraElement total_hamiltonian(const Potential& phi) {
  if (phi.lattice_size() == 0) return AlgebraElement::zero(0);
  return local_hamiltonian(phi, Region::full(phi.lattice_size())).matrix;
}

/// Drops every term that touches `region`; the result generates dynamics acting
/// trivially on A_region.
inline Potential prune(const Potential& phi, const Region& region) {
  std::map<Region, AlgebraElement> kept;
  for (const auto& [k, term] : phi.terms()) {
    if (!k.intersects(region)) kept.emplace(k, term);
  }
  return {phi.lattice_size(), std::move(kept)};
}

/// delta(A) = i [H(I), A] for A in A_I.
inline AlgebraElement derivation_apply(const Potential& phi, const AlgebraElement& a, const Region& region) {
  const double scale = std::max(1.0, max_abs(a.matrix()));
  if (max_abs(conditional_expectation(a.matrix(), region) - a.matrix()) > kSupportTolerance * scale) {
    throw PreconditionError("derivation argument is not supported in " + region.to_string());
  }
  const LocalHamiltonian h = local_hamiltonian(phi, region);
  return {Complex(0.0, 1.0) * commutator(h.matrix.matrix(), a.matrix()), h.matrix.support().unite(region),
          AlgebraElement::Trusted{}};
}

/// Same, with I taken from the support of A. Scalars are annihilated.
inline AlgebraElement derivation_apply(const Potential& phi, const AlgebraElement& a) {
  if (a.support().is_empty()) return AlgebraElement::zero(phi.lattice_size());
  return derivation_apply(phi, a, a.support());
}

struct ConditionResidual {
  std::string name;
  double residual = 0.0;
  bool pass = true;
};

struct PotentialReport {
  std::vector<ConditionResidual> conditions;

  bool pass() const {
    return std::all_of(conditions.begin(), conditions.end(), [](const auto& c) { return c.pass; });
  }
  double residual(const std::string& name) const {
    for (const auto& c : conditions)
      if (c.name == name) return c.residual;
    throw PreconditionError("no condition named " + name);
  }
};

/// Residuals of the standardness conditions:
///   pi-a  Phi(I) in A_I, Phi({}) = 0
///   pi-b  Phi(I) self-adjoint
///   pi-c  Phi(I) even
///   pi-d  E_J(Phi(I)) = 0 for proper J of I
///   pi-e  every H(I) is a finite, self-adjoint, even sum
inline PotentialReport validate_potential(const Potential& phi) {
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0, e = 0.0;
  for (const auto& [region, term] : phi.terms()) {
    const Matrix& m = term.matrix();
    if (region.is_empty()) {
      a = std::max(a, max_abs(m));
    } else {
      a = std::max(a, max_abs(conditional_expectation(m, region) - m));
    }
    b = std::max(b, hermiticity_defect(m));
    c = std::max(c, odd_defect(m));
    // E_J for J below a maximal proper subregion factors through it, so the
    // maximal ones (I minus one site) suffice.
    for (int s : region.sites()) {
      const Region j = region.minus(Region::site(phi.lattice_size(), s));
      d = std::max(d, max_abs(conditional_expectation(m, j)));
    }
  }
  for (std::size_t s = 0; s < phi.lattice_size(); ++s) {
    const Matrix h = local_hamiltonian(phi, Region::site(phi.lattice_size(), static_cast<int>(s))).matrix.matrix();
    e = std::max(e, hermiticity_defect(h) + odd_defect(h));
  }
  PotentialReport report;
  for (auto [name, value] : {std::pair{"pi-a", a}, {"pi-b", b}, {"pi-c", c}, {"pi-d", d}, {"pi-e", e}}) {
    report.conditions.push_back({name, value, value <= kPotentialTolerance});
  }
  return report;
}

// ---------------------------------------------------------------------------
// Model presets (open chains)

/// -t sum (a_i^* a_{i+1} + h.c.) - mu sum n_i
inline ModelSpec hopping_model(std::size_t lattice_size, double hopping = 1.0, double chemical_potential = 0.0) {
  ModelSpec m{lattice_size, {}};
  for (int i = 0; i + 1 < static_cast<int>(lattice_size); ++i) m.terms.push_back({{i, i + 1}, -hopping, "hopping"});
  if (chemical_potential != 0.0) {
    for (int i = 0; i < static_cast<int>(lattice_size); ++i) m.terms.push_back({{i}, -chemical_potential, "number"});
  }
  return m;
}

/// hopping_model + V sum n_i n_{i+1}
inline ModelSpec interacting_model(std::size_t lattice_size, double hopping = 1.0, double chemical_potential = 0.0,
                                   double interaction = 1.0) {
  ModelSpec m = hopping_model(lattice_size, hopping, chemical_potential);
  for (int i = 0; i + 1 < static_cast<int>(lattice_size); ++i) {
    m.terms.push_back({{i, i + 1}, interaction, "density_density"});
  }
  return m;
}

inline Potential build_potential(const ModelSpec& model, bool standardized = true) {
  RawTerms raw = raw_terms(model);
  if (standardized) return standardize(raw, model.lattice_size);
  raw.erase(Region::empty(model.lattice_size));
  return {model.lattice_size, std::move(raw)};
}

}  // namespace gradelab
