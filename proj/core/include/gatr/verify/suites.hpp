#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace gatr::verify {

struct PropertyResult {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  std::size_t trials = 0;
  bool passed() const { return max_error <= tolerance; }
};

struct SuiteReport {
  std::string suite;
  std::vector<PropertyResult> properties;
  double seconds = 0.0;

  bool passed() const;
  /// The worst result among properties whose name starts with `prefix`.
  const PropertyResult* find(const std::string& name) const;
  void print(std::ostream& os) const;
};

struct VerifyOptions {
  /// Random instances per property; <= 0 picks the suite default.
  int trials = 0;
  /// When > 0 replaces every property's tolerance.
  double tolerance = 0.0;
  std::uint64_t seed = 0;
};

/// Cayley-table and algebra identities (default 1000 instances).
SuiteReport run_algebra_suite(const VerifyOptions& opt = {});
/// Equivariance of every primitive, layer and the desk model at 64 and 32 bits,
/// plus the reconstruction of the equivariant linear maps (default 100 versors).
SuiteReport run_equivariance_suite(const VerifyOptions& opt = {});
/// Reverse mode against central differences for every registered op and one block
/// (default 20 instances per op).
SuiteReport run_gradient_suite(const VerifyOptions& opt = {});

/// Dimension of the space of linear maps commuting with the sandwich action of
/// random versors of the algebra with the given metric, and the largest principal
/// angle between that space and the span of `expected` maps (each n x n, row-major).
struct NullSpaceResult {
  int dimension = 0;
  double subspace_angle = 0.0;
  double smallest_kept_singular_value = 0.0;
  double largest_null_singular_value = 0.0;
};
NullSpaceResult equivariant_map_space(const std::vector<int>& metric, int n_versors, std::uint64_t seed,
                                      const std::vector<std::vector<double>>& expected);
/// The 9 declared basis maps of G(3,0,1) and the 4 grade projections of G(3,0,0).
std::vector<std::vector<double>> declared_pga_basis();
std::vector<std::vector<double>> euclidean_grade_projections();

}  // namespace gatr::verify
