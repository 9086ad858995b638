#pragma once

// Shared generators and independent oracles for the test suites. Nothing in
// here calls the projection routines it is used to check.

#include <gradelab/car.hpp>
#include <gradelab/interaction.hpp>

#include <random>
#include <vector>

namespace gradelab::testing {

using Rng = std::mt19937_64;

inline Complex gaussian_complex(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return {n(rng), n(rng)};
}

inline Matrix random_matrix(Index d, Rng& rng) {
  Matrix m(d, d);
  for (Index j = 0; j < d; ++j)
    for (Index i = 0; i < d; ++i) m(i, j) = gaussian_complex(rng);
  return m;
}

inline Matrix random_hermitian(Index d, Rng& rng) {
  Matrix g = random_matrix(d, rng);
  return 0.5 * (g + g.adjoint());
}

/// Full-rank random density matrix (Ginibre ensemble).
inline Matrix random_density(Index d, Rng& rng) {
  Matrix g = random_matrix(d, rng);
  Matrix rho = g * g.adjoint();
  return rho / rho.trace().real();
}

inline Eigen::VectorXcd random_unit_vector(Index d, Rng& rng) {
  Eigen::VectorXcd v(d);
  for (Index i = 0; i < d; ++i) v(i) = gaussian_complex(rng);
  return v / v.norm();
}

inline Matrix pure_density(const Eigen::VectorXcd& v) { return v * v.adjoint(); }

/// Random element of A_R built from the monomial basis (optionally only the
/// even or only the odd monomials).
enum class Parity { any, even, odd };
inline Matrix random_local_element(const Region& r, Rng& rng, Parity parity = Parity::any) {
  const Index d = hilbert_dimension(r.lattice_size());
  Matrix out = Matrix::Zero(d, d);
  for (const Monomial& m : MonomialBasis(r)) {
    if (parity == Parity::even && m.is_odd()) continue;
    if (parity == Parity::odd && !m.is_odd()) continue;
    out += gaussian_complex(rng) * m.matrix();
  }
  return out;
}

/// Direct Kronecker-product Jordan-Wigner construction, independent of
/// gradelab::annihilator. Site 0 is the least significant tensor factor, so it
/// is the rightmost Kronecker factor.
inline Matrix kron_annihilator(int site, std::size_t lattice_size) {
  Matrix lower(2, 2);
  lower << 0, 1, 0, 0;  // |0><1|
  Matrix string_factor(2, 2);
  string_factor << -1, 0, 0, 1;  // 2n - 1
  Matrix id = Matrix::Identity(2, 2);
  Matrix out = Matrix::Identity(1, 1);
  for (int k = static_cast<int>(lattice_size) - 1; k >= 0; --k) {
    const Matrix& f = k == site ? lower : (k < site ? string_factor : id);
    Matrix next(out.rows() * 2, out.cols() * 2);
    for (Index i = 0; i < out.rows(); ++i)
      for (Index j = 0; j < out.cols(); ++j) next.block(2 * i, 2 * j, 2, 2) = out(i, j) * f;
    out = next;
  }
  return out;
}

/// Conditional expectation by explicit expansion in the monomial basis:
/// E_R(A) = sum_m tau(m^* A) / tau(m^* m) m.
inline Matrix monomial_projection(const Matrix& a, const Region& r) {
  Matrix out = Matrix::Zero(a.rows(), a.cols());
  for (const Monomial& m : MonomialBasis(r)) {
    const Matrix mm = m.matrix();
    const Complex coeff = normalized_trace(mm.adjoint() * a) / m.norm_squared();
    out += coeff * mm;
  }
  return out;
}

/// Rank of a set of operators viewed as vectors in C^{d^2}.
inline Index span_rank(const std::vector<Matrix>& ops, double tol = 1e-9) {
  if (ops.empty()) return 0;
  const Index n = ops.front().size();
  Matrix stacked(n, static_cast<Index>(ops.size()));
  for (std::size_t k = 0; k < ops.size(); ++k) stacked.col(static_cast<Index>(k)) = ops[k].reshaped();
  Eigen::FullPivLU<Matrix> lu(stacked);
  lu.setThreshold(tol);
  return lu.rank();
}

/// Null space of X -> ([X, g_1], ..., [X, g_k]) computed by brute force on
/// the Kronecker (vectorised) form. Columns are vec(X) for a basis of the
/// commutant of {g_i}.
inline Matrix commutant_nullspace(const std::vector<Matrix>& generators) {
  const Index d = generators.front().rows();
  const Matrix id = Matrix::Identity(d, d);
  Matrix system(d * d * static_cast<Index>(generators.size()), d * d);
  for (std::size_t k = 0; k < generators.size(); ++k) {
    const Matrix& g = generators[k];
    // vec(X g - g X) = (g^T (x) 1 - 1 (x) g) vec(X)
    Matrix block = Matrix::Zero(d * d, d * d);
    for (Index i = 0; i < d; ++i)
      for (Index j = 0; j < d; ++j) {
        block.block(i * d, j * d, d, d) += g(j, i) * id;
        if (i == j) block.block(i * d, j * d, d, d) -= g;
      }
    system.middleRows(static_cast<Index>(k) * d * d, d * d) = block;
  }
  Eigen::FullPivLU<Matrix> lu(system);
  lu.setThreshold(1e-10);
  return lu.kernel();
}

/// Random even self-adjoint raw terms (unit operator norm times a standard
/// normal coefficient) on `count` random regions of size at
/// most `max_size` (nonstandard: they carry scalar and lower-order parts).
inline RawTerms random_raw_terms(std::size_t lattice_size, Rng& rng, int count, int max_size = 2) {
  RawTerms raw;
  std::uniform_int_distribution<int> size_pick(1, max_size);
  std::uniform_int_distribution<int> start_pick(0, static_cast<int>(lattice_size) - 1);
  for (int k = 0; k < count; ++k) {
    const int size = std::min<int>(size_pick(rng), static_cast<int>(lattice_size));
    const int start = std::min<int>(start_pick(rng), static_cast<int>(lattice_size) - size);
    const Region r = Region::interval(lattice_size, start, size);
    Matrix h = random_local_element(r, rng, Parity::even);
    h = (0.5 * (h + h.adjoint())).eval();
    h *= std::normal_distribution<double>(0.0, 1.0)(rng) / Eigen::JacobiSVD<Matrix>(h).singularValues()(0);
    AlgebraElement term(h, r);
    auto [it, inserted] = raw.try_emplace(r, term);
    if (!inserted) it->second = it->second + term;
  }
  return raw;
}

inline Potential random_standard_potential(std::size_t lattice_size, Rng& rng, int count = 6, int max_size = 2) {
  return standardize(random_raw_terms(lattice_size, rng, count, max_size), lattice_size);
}

}  // namespace gradelab::testing
