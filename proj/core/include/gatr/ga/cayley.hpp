#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace gatr::ga {

/// Result of multiplying two basis blades: target blade and a sign in {-1, 0, +1}.
struct BladeProduct {
  std::uint8_t index = 0;
  std::int8_t sign = 0;

  friend bool operator==(const BladeProduct&, const BladeProduct&) = default;
};

/// One nonzero entry of a bilinear product table: out[k] += sign * x[i] * y[j].
struct ProductTerm {
  std::uint8_t i = 0;
  std::uint8_t j = 0;
  std::uint8_t k = 0;
  std::int8_t sign = 0;
};

/// Multiplication tables of a Clifford algebra with a diagonal metric.
///
/// Blades are stored in grade-major order; within a grade they are sorted
/// lexicographically by their basis-vector indices, e.g. for G(3,0,1):
/// [1, e0, e1, e2, e3, e01, e02, e03, e12, e13, e23, e012, e013, e023, e123, e0123].
/// A blade's orientation is the ascending product of its basis vectors.
class CliffordTables {
 public:
  /// `metric[i]` is the square of basis vector e_i (0, +1 or -1). At most 6 vectors.
  explicit CliffordTables(std::vector<int> metric);

  int dimension() const { return static_cast<int>(metric_.size()); }
  int num_blades() const { return num_blades_; }
  const std::vector<int>& metric() const { return metric_; }

  /// Bitmask of basis vectors in blade `blade` (bit i <-> e_i).
  std::uint32_t bitmask(int blade) const { return masks_[blade]; }
  int blade_of_mask(std::uint32_t mask) const { return blade_of_mask_[mask]; }
  int grade(int blade) const;
  int pseudoscalar() const { return num_blades_ - 1; }

  BladeProduct geometric(int i, int j) const { return geometric_[i * num_blades_ + j]; }
  BladeProduct wedge(int i, int j) const { return wedge_[i * num_blades_ + j]; }
  BladeProduct left_contraction(int i, int j) const { return contraction_[i * num_blades_ + j]; }
  BladeProduct join(int i, int j) const { return join_[i * num_blades_ + j]; }
  /// Right complement: blade_i ^ dual(blade_i) = pseudoscalar.
  BladeProduct dual(int i) const { return dual_[i]; }
  BladeProduct dual_inverse(int i) const { return dual_inverse_[i]; }

  /// Nonzero entries only, in (i, j) row-major order.
  std::span<const ProductTerm> geometric_terms() const { return geometric_terms_; }
  std::span<const ProductTerm> wedge_terms() const { return wedge_terms_; }
  std::span<const ProductTerm> join_terms() const { return join_terms_; }
  std::span<const ProductTerm> contraction_terms() const { return contraction_terms_; }

  /// Golden-file dumps, one `i j k s` line per entry.
  void write_geometric(std::ostream& os) const;
  void write_wedge(std::ostream& os) const;
  /// For the dual each line is `i P k s`: blade_i ^ (s * blade_k) = blade_P, P the pseudoscalar.
  void write_dual(std::ostream& os) const;

 private:
  BladeProduct multiply_masks(std::uint32_t a, std::uint32_t b) const;

  std::vector<int> metric_;
  int num_blades_ = 0;
  std::vector<std::uint32_t> masks_;
  std::vector<int> blade_of_mask_;
  std::vector<BladeProduct> geometric_;
  std::vector<BladeProduct> wedge_;
  std::vector<BladeProduct> contraction_;
  std::vector<BladeProduct> join_;
  std::vector<BladeProduct> dual_;
  std::vector<BladeProduct> dual_inverse_;
  std::vector<ProductTerm> geometric_terms_;
  std::vector<ProductTerm> wedge_terms_;
  std::vector<ProductTerm> join_terms_;
  std::vector<ProductTerm> contraction_terms_;
};

/// Tables for G(3,0,1), metric diag(0, 1, 1, 1). Built once, shared read-only.
const CliffordTables& pga_tables();

/// Same as `pga_tables()`; the name used by the command-line and tests.
inline const CliffordTables& build_cayley_tables() { return pga_tables(); }

}  // namespace gatr::ga
