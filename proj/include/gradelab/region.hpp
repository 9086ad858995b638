#pragma once

#include <bit>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "gradelab/error.hpp"

namespace gradelab {

using SiteMask = std::uint64_t;

inline constexpr std::size_t kMaxLatticeSize = 20;

/// A finite set of chain sites {0, ..., L-1}. Union is the least upper bound,
/// the complement is taken inside the chain, and two regions are orthogonal
/// exactly when they share no site.
class Region {
 public:
  Region() = default;

  Region(std::size_t lattice_size, const std::vector<int>& sites) : lattice_size_(lattice_size) {
    check_size(lattice_size);
    for (int s : sites) {
      if (s < 0 || static_cast<std::size_t>(s) >= lattice_size) {
        throw PreconditionError("site " + std::to_string(s) + " outside lattice of size " +
                                std::to_string(lattice_size));
      }
      const SiteMask bit = SiteMask{1} << s;
      if (mask_ & bit) throw PreconditionError("duplicate site " + std::to_string(s) + " in region");
      mask_ |= bit;
    }
  }

  static Region from_mask(std::size_t lattice_size, SiteMask mask) {
    check_size(lattice_size);
    if (mask & ~full_mask(lattice_size)) throw PreconditionError("region mask exceeds lattice");
    Region r;
    r.lattice_size_ = lattice_size;
    r.mask_ = mask;
    return r;
  }
  static Region empty(std::size_t lattice_size) { return from_mask(lattice_size, 0); }
  static Region full(std::size_t lattice_size) { return from_mask(lattice_size, full_mask(lattice_size)); }
  static Region site(std::size_t lattice_size, int i) { return Region(lattice_size, {i}); }
  /// Contiguous block [first, first + count).
  static Region interval(std::size_t lattice_size, int first, int count) {
    std::vector<int> s;
    for (int k = 0; k < count; ++k) s.push_back(first + k);
    return Region(lattice_size, s);
  }

  std::size_t lattice_size() const { return lattice_size_; }
  SiteMask mask() const { return mask_; }
  std::size_t size() const { return static_cast<std::size_t>(std::popcount(mask_)); }
  bool is_empty() const { return mask_ == 0; }
  bool is_full() const { return mask_ == full_mask(lattice_size_); }
  bool contains(int i) const { return i >= 0 && i < 64 && ((mask_ >> i) & 1U); }

  /// Sites in ascending order.
  std::vector<int> sites() const {
    std::vector<int> out;
    for (SiteMask m = mask_; m; m &= m - 1) out.push_back(std::countr_zero(m));
    return out;
  }

  Region unite(const Region& other) const { return from_mask(lattice(other), mask_ | other.mask_); }
  Region intersect(const Region& other) const { return from_mask(lattice(other), mask_ & other.mask_); }
  Region minus(const Region& other) const { return from_mask(lattice(other), mask_ & ~other.mask_); }
  Region complement() const { return from_mask(lattice_size_, full_mask(lattice_size_) & ~mask_); }

  bool subset_of(const Region& other) const { return (mask_ & ~other.mask_) == 0; }
  bool orthogonal_to(const Region& other) const { return (mask_ & other.mask_) == 0; }
  bool intersects(const Region& other) const { return !orthogonal_to(other); }

  std::string to_string() const {
    std::string s = "{";
    bool first = true;
    for (int i : sites()) {
      if (!first) s += ",";
      s += std::to_string(i);
      first = false;
    }
    return s + "}";
  }

  friend bool operator==(const Region&, const Region&) = default;
  friend auto operator<=>(const Region& a, const Region& b) {
    if (auto c = a.lattice_size_ <=> b.lattice_size_; c != 0) return c;
    return a.mask_ <=> b.mask_;
  }

  static SiteMask full_mask(std::size_t lattice_size) {
    return lattice_size >= 64 ? ~SiteMask{0} : (SiteMask{1} << lattice_size) - 1;
  }

 private:
  static void check_size(std::size_t lattice_size) {
    if (lattice_size > kMaxLatticeSize) {
      throw PreconditionError("lattice size " + std::to_string(lattice_size) + " exceeds supported maximum " +
                              std::to_string(kMaxLatticeSize));
    }
  }
  std::size_t lattice(const Region& other) const {
    if (other.lattice_size_ != lattice_size_) throw PreconditionError("regions live on different lattices");
    return lattice_size_;
  }

  std::size_t lattice_size_ = 0;
  SiteMask mask_ = 0;
};

/// All subsets of `r` (including the empty set and `r` itself), in mask order.
inline std::vector<Region> subregions(const Region& r) {
  std::vector<Region> out;
  const SiteMask m = r.mask();
  SiteMask sub = 0;
  do {
    out.push_back(Region::from_mask(r.lattice_size(), sub));
    sub = (sub - m) & m;
  } while (sub != 0);
  return out;
}

}  // namespace gradelab
