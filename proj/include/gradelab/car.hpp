#pragma once

// Exact CAR algebra on a finite chain, realised on the 2^L-dimensional Fock
// space through the Jordan-Wigner map. Occupation basis index: bit k of the
// basis label is the occupation of site k (site 0 least significant).

#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gradelab/error.hpp"
#include "gradelab/region.hpp"

namespace gradelab {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Index = Eigen::Index;

inline constexpr double kSupportTolerance = 1e-12;

inline Index hilbert_dimension(std::size_t lattice_size) { return Index{1} << lattice_size; }

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

/// Normalised trace Tr(m) / dim.
inline Complex normalized_trace(const Matrix& m) { return m.trace() / static_cast<double>(m.rows()); }

namespace detail {

inline bool odd_parity(std::uint64_t x) { return (std::popcount(x) & 1) != 0; }

/// Jordan-Wigner string prod_{k<i} v_k evaluated on configuration c,
/// with v_k = 2 n_k - 1.
inline double string_sign(std::uint64_t c, int site) {
  const std::uint64_t below = (std::uint64_t{1} << site) - 1;
  const int empty_below = site - std::popcount(c & below);
  return (empty_below & 1) ? -1.0 : 1.0;
}

/// Bit k set iff an odd number of bits of x sit strictly above k.
inline SiteMask suffix_parity(SiteMask x, std::size_t lattice_size) {
  SiteMask out = 0;
  bool odd = false;
  for (int k = static_cast<int>(lattice_size) - 1; k >= 0; --k) {
    if (odd) out |= SiteMask{1} << k;
    if ((x >> k) & 1U) odd = !odd;
  }
  return out;
}

inline std::vector<SiteMask> submasks(SiteMask m) {
  std::vector<SiteMask> out;
  SiteMask sub = 0;
  do {
    out.push_back(sub);
    sub = (sub - m) & m;
  } while (sub != 0);
  return out;
}

inline void require_square(const Matrix& a, std::size_t lattice_size) {
  const Index d = hilbert_dimension(lattice_size);
  if (a.rows() != d || a.cols() != d) {
    throw PreconditionError("matrix is " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                            ", expected " + std::to_string(d) + "x" + std::to_string(d));
  }
}

/// Diagonal of v_R = prod_{i in R} (a_i^* a_i - a_i a_i^*); the empty product is 1.
inline Eigen::VectorXd grading_diagonal(SiteMask region, std::size_t lattice_size) {
  const Index d = hilbert_dimension(lattice_size);
  Eigen::VectorXd diag(d);
  for (Index c = 0; c < d; ++c) {
    const int empty_in_region = std::popcount(region) - std::popcount(static_cast<SiteMask>(c) & region);
    diag(c) = (empty_in_region & 1) ? -1.0 : 1.0;
  }
  return diag;
}

inline std::size_t lattice_size_of(const Matrix& a) {
  const auto n = static_cast<std::uint64_t>(a.rows());
  if (n == 0 || (n & (n - 1)) != 0 || a.rows() != a.cols()) {
    throw PreconditionError("matrix dimension must be a square power of two");
  }
  return static_cast<std::size_t>(std::countr_zero(n));
}

}  // namespace detail

/// Tracial conditional expectation E_R onto A_R: the orthogonal projection
/// under <X, Y> = tau(X^* Y).
///
/// A_R is spanned by the operators Z^z X^x whose Majorana content touches only
/// sites of R. Site k is touched iff x_k = 1 or z_k differs from the parity of
/// x above k, so for x inside R the admissible z have their bits outside R
/// pinned to that parity pattern and free inside R. The projection therefore
/// reduces to a signed average over the outside occupation bits, one
/// off-diagonal "x-stripe" at a time. Cost O(2^|R| * 2^L).
inline Matrix conditional_expectation(const Matrix& a, const Region& r) {
  const std::size_t lattice_size = r.lattice_size();
  detail::require_square(a, lattice_size);
  const Index d = hilbert_dimension(lattice_size);
  const SiteMask inside = r.mask();
  const SiteMask outside = Region::full_mask(lattice_size) & ~inside;
  const auto outer = detail::submasks(outside);
  const auto inner = detail::submasks(inside);
  const double weight = 1.0 / static_cast<double>(outer.size());

  Matrix out = Matrix::Zero(d, d);
  for (SiteMask x : inner) {
    const SiteMask pinned = detail::suffix_parity(x, lattice_size) & outside;
    for (SiteMask r_in : inner) {
      Complex acc{0.0, 0.0};
      for (SiteMask r_out : outer) {
        const auto row = static_cast<Index>(r_in | r_out);
        const double s = detail::odd_parity(pinned & r_out) ? -1.0 : 1.0;
        acc += s * a(row, row ^ static_cast<Index>(x));
      }
      acc *= weight;
      for (SiteMask r_out : outer) {
        const auto row = static_cast<Index>(r_in | r_out);
        const double s = detail::odd_parity(pinned & r_out) ? -1.0 : 1.0;
        out(row, row ^ static_cast<Index>(x)) = s * acc;
      }
    }
  }
  return out;
}

/// Fermion grading Theta(A) = v A v with v the global grading unitary.
inline Matrix theta(const Matrix& a) {
  Matrix out = a;
  for (Index c = 0; c < a.cols(); ++c) {
    for (Index row = 0; row < a.rows(); ++row) {
      if (detail::odd_parity(static_cast<std::uint64_t>(row ^ c))) out(row, c) = -out(row, c);
    }
  }
  return out;
}

inline Matrix even_part(const Matrix& a) { return 0.5 * (a + theta(a)); }
inline Matrix odd_part(const Matrix& a) { return 0.5 * (a - theta(a)); }

/// An operator of the chain algebra together with a region R such that it
/// lies in A_R. The public constructor checks the claim; internal producers
/// that know the support by construction use the Trusted overload.
class AlgebraElement {
 public:
  struct Trusted {};

  AlgebraElement(Matrix m, Region support) : matrix_(std::move(m)), support_(std::move(support)) {
    detail::require_square(matrix_, support_.lattice_size());
    const double defect = max_abs(conditional_expectation(matrix_, support_) - matrix_);
    if (defect > kSupportTolerance * max_abs(matrix_)) {
      throw PreconditionError("element is not supported in " + support_.to_string() +
                              " (projection defect " + std::to_string(defect) + ")");
    }
  }

  AlgebraElement(Matrix m, Region support, Trusted) : matrix_(std::move(m)), support_(std::move(support)) {
    detail::require_square(matrix_, support_.lattice_size());
  }

  static AlgebraElement identity(std::size_t lattice_size) {
    const Index d = hilbert_dimension(lattice_size);
    return {Matrix::Identity(d, d), Region::empty(lattice_size), Trusted{}};
  }
  static AlgebraElement zero(std::size_t lattice_size) {
    const Index d = hilbert_dimension(lattice_size);
    return {Matrix::Zero(d, d), Region::empty(lattice_size), Trusted{}};
  }

  const Matrix& matrix() const { return matrix_; }
  const Region& support() const { return support_; }
  std::size_t lattice_size() const { return support_.lattice_size(); }

  AlgebraElement adjoint() const { return {matrix_.adjoint(), support_, Trusted{}}; }

  friend AlgebraElement operator+(const AlgebraElement& a, const AlgebraElement& b) {
    return {a.matrix_ + b.matrix_, a.support_.unite(b.support_), Trusted{}};
  }
  friend AlgebraElement operator-(const AlgebraElement& a, const AlgebraElement& b) {
    return {a.matrix_ - b.matrix_, a.support_.unite(b.support_), Trusted{}};
  }
  friend AlgebraElement operator*(const AlgebraElement& a, const AlgebraElement& b) {
    return {a.matrix_ * b.matrix_, a.support_.unite(b.support_), Trusted{}};
  }
  friend AlgebraElement operator*(Complex s, const AlgebraElement& a) { return {s * a.matrix_, a.support_, Trusted{}}; }
  friend AlgebraElement operator*(double s, const AlgebraElement& a) { return {s * a.matrix_, a.support_, Trusted{}}; }

 private:
  Matrix matrix_;
  Region support_;
};

inline Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }
inline Matrix anticommutator(const Matrix& a, const Matrix& b) { return a * b + b * a; }

/// a_i = (prod_{k<i} v_k) * (lowering operator at site i).
inline AlgebraElement annihilator(int site, std::size_t lattice_size) {
  if (site < 0 || static_cast<std::size_t>(site) >= lattice_size) {
    throw PreconditionError("site index " + std::to_string(site) + " out of bounds for L=" +
                            std::to_string(lattice_size));
  }
  const Index d = hilbert_dimension(lattice_size);
  const std::uint64_t bit = std::uint64_t{1} << site;
  Matrix m = Matrix::Zero(d, d);
  for (Index c = 0; c < d; ++c) {
    const auto conf = static_cast<std::uint64_t>(c);
    if (conf & bit) m(static_cast<Index>(conf ^ bit), c) = detail::string_sign(conf, site);
  }
  return {std::move(m), Region::site(lattice_size, site), AlgebraElement::Trusted{}};
}

inline AlgebraElement creator(int site, std::size_t lattice_size) { return annihilator(site, lattice_size).adjoint(); }

inline AlgebraElement number_operator(int site, std::size_t lattice_size) {
  return creator(site, lattice_size) * annihilator(site, lattice_size);
}

inline AlgebraElement theta(const AlgebraElement& a) {
  return {theta(a.matrix()), a.support(), AlgebraElement::Trusted{}};
}

struct GradedSplit {
  AlgebraElement even;
  AlgebraElement odd;
};

inline GradedSplit even_odd_split(const AlgebraElement& a) {
  Matrix th = theta(a.matrix());
  return {AlgebraElement(0.5 * (a.matrix() + th), a.support(), AlgebraElement::Trusted{}),
          AlgebraElement(0.5 * (a.matrix() - th), a.support(), AlgebraElement::Trusted{})};
}

/// Largest entry of the odd (resp. even) component; zero means the element is even (odd).
inline double odd_defect(const Matrix& a) { return max_abs(odd_part(a)); }
inline double even_defect(const Matrix& a) { return max_abs(even_part(a)); }

/// v_R = prod_{i in R} (a_i^* a_i - a_i a_i^*), a self-adjoint unitary with Ad(v_R) = Theta on A_R.
inline AlgebraElement grading_unitary(const Region& r) {
  if (r.is_empty()) throw PreconditionError("grading unitary needs a nonempty region");
  Matrix m = detail::grading_diagonal(r.mask(), r.lattice_size()).cast<Complex>().asDiagonal();
  return {std::move(m), r, AlgebraElement::Trusted{}};
}

inline AlgebraElement conditional_expectation(const AlgebraElement& a, const Region& r) {
  return {conditional_expectation(a.matrix(), r), r, AlgebraElement::Trusted{}};
}

// ---------------------------------------------------------------------------
// Monomial bases

/// Per-site factor of a monomial: 1, a_j, a_j^*, or v_j = a_j^* a_j - a_j a_j^*.
enum class SiteFactor : std::uint8_t { unit = 0, lower = 1, raise = 2, grading = 3 };

/// Ordered product prod_{j in R, ascending} f_j. These are generalised
/// permutation matrices, so they are applied column by column instead of
/// being stored densely.
class Monomial {
 public:
  Monomial(Region region, std::vector<SiteFactor> factors) : region_(std::move(region)), factors_(std::move(factors)) {
    if (factors_.size() != region_.size()) throw PreconditionError("monomial factor count does not match region");
    sites_ = region_.sites();
  }

  const Region& region() const { return region_; }
  const std::vector<SiteFactor>& factors() const { return factors_; }
  std::size_t lattice_size() const { return region_.lattice_size(); }

  /// Number of a / a^* factors.
  int degree() const {
    int n = 0;
    for (auto f : factors_) n += (f == SiteFactor::lower || f == SiteFactor::raise) ? 1 : 0;
    return n;
  }
  bool is_odd() const { return (degree() & 1) != 0; }
  /// tau(m^* m)
  double norm_squared() const { return std::ldexp(1.0, -degree()); }

  /// m|c> = amplitude |row>, or nullopt when m|c> = 0.
  std::optional<std::pair<std::uint64_t, double>> apply(std::uint64_t c) const {
    double amp = 1.0;
    for (std::size_t k = sites_.size(); k-- > 0;) {
      const int site = sites_[k];
      const std::uint64_t bit = std::uint64_t{1} << site;
      switch (factors_[k]) {
        case SiteFactor::unit:
          break;
        case SiteFactor::lower:
          if (!(c & bit)) return std::nullopt;
          amp *= detail::string_sign(c, site);
          c ^= bit;
          break;
        case SiteFactor::raise:
          if (c & bit) return std::nullopt;
          amp *= detail::string_sign(c, site);
          c |= bit;
          break;
        case SiteFactor::grading:
          amp *= (c & bit) ? 1.0 : -1.0;
          break;
      }
    }
    return std::make_pair(c, amp);
  }

  Matrix matrix() const {
    const Index d = hilbert_dimension(lattice_size());
    Matrix m = Matrix::Zero(d, d);
    for (Index c = 0; c < d; ++c) {
      if (auto hit = apply(static_cast<std::uint64_t>(c))) m(static_cast<Index>(hit->first), c) = hit->second;
    }
    return m;
  }

  AlgebraElement element() const { return {matrix(), region_, AlgebraElement::Trusted{}}; }

  std::string to_string() const {
    std::string s;
    for (std::size_t k = 0; k < factors_.size(); ++k) {
      const std::string j = std::to_string(sites_[k]);
      switch (factors_[k]) {
        case SiteFactor::unit:
          continue;
        case SiteFactor::lower:
          s += (s.empty() ? "" : " ") + ("a" + j);
          break;
        case SiteFactor::raise:
          s += (s.empty() ? "" : " ") + ("a" + j + "*");
          break;
        case SiteFactor::grading:
          s += (s.empty() ? "" : " ") + ("v" + j);
          break;
      }
    }
    return s.empty() ? "1" : s;
  }

 private:
  Region region_;
  std::vector<SiteFactor> factors_;
  std::vector<int> sites_;
};

/// The 4^|R| monomials of A_R, indexed in base 4 with the lowest site as the
/// least significant digit. Pairwise tau-orthogonal.
class MonomialBasis {
 public:
  explicit MonomialBasis(Region region) : region_(std::move(region)) {
    const std::size_t n = region_.size();
    const std::size_t count = std::size_t{1} << (2 * n);
    elements_.reserve(count);
    for (std::size_t idx = 0; idx < count; ++idx) {
      std::vector<SiteFactor> f(n);
      for (std::size_t k = 0; k < n; ++k) f[k] = static_cast<SiteFactor>((idx >> (2 * k)) & 3U);
      elements_.emplace_back(region_, std::move(f));
    }
  }

  const Region& region() const { return region_; }
  std::size_t size() const { return elements_.size(); }
  const Monomial& operator[](std::size_t i) const { return elements_[i]; }
  auto begin() const { return elements_.begin(); }
  auto end() const { return elements_.end(); }

 private:
  Region region_;
  std::vector<Monomial> elements_;
};

/// Tr(density * m)
inline Complex expectation(const Matrix& density, const Monomial& m) {
  Complex acc{0.0, 0.0};
  for (Index c = 0; c < density.cols(); ++c) {
    if (auto hit = m.apply(static_cast<std::uint64_t>(c))) acc += hit->second * density(c, static_cast<Index>(hit->first));
  }
  return acc;
}

/// Tr(density * left * right)
inline Complex expectation(const Matrix& density, const Monomial& left, const Monomial& right) {
  Complex acc{0.0, 0.0};
  for (Index c = 0; c < density.cols(); ++c) {
    auto first = right.apply(static_cast<std::uint64_t>(c));
    if (!first) continue;
    auto second = left.apply(first->first);
    if (!second) continue;
    acc += first->second * second->second * density(c, static_cast<Index>(second->first));
  }
  return acc;
}

/// Spanning set of the commutant A_R' = A_{R^c}^e + v_R A_{R^c}^o.
inline std::vector<AlgebraElement> commutant_basis(const Region& r) {
  if (r.is_empty() || r.is_full()) throw PreconditionError("commutant basis needs a proper nonempty region");
  const Matrix v = grading_unitary(r).matrix();
  const Region full = Region::full(r.lattice_size());
  std::vector<AlgebraElement> out;
  for (const Monomial& m : MonomialBasis(r.complement())) {
    if (m.is_odd()) {
      out.emplace_back(v * m.matrix(), full, AlgebraElement::Trusted{});
    } else {
      out.push_back(m.element());
    }
  }
  return out;
}

/// tau-orthogonal projection onto the commutant A_R'.
inline Matrix commutant_projection(const Matrix& a, const Region& r) {
  const Eigen::VectorXd v = detail::grading_diagonal(r.mask(), r.lattice_size());
  const Region outside = r.complement();
  Matrix even = even_part(conditional_expectation(a, outside));
  Matrix odd = odd_part(conditional_expectation(v.asDiagonal() * a, outside));
  return even + v.asDiagonal() * odd;
}

/// Which algebra plays the outside system of a region I: the complement
/// algebra A_{I^c} or the commutant A_I'.
enum class OutsideSystem { complement, commutant };

inline const char* to_string(OutsideSystem mode) {
  return mode == OutsideSystem::complement ? "complement" : "commutant";
}

/// tau-orthogonal projection onto the outside system of `inner`.
inline Matrix project_outside(const Matrix& a, const Region& inner, OutsideSystem mode) {
  return mode == OutsideSystem::complement ? conditional_expectation(a, inner.complement())
                                           : commutant_projection(a, inner);
}

}  // namespace gradelab
