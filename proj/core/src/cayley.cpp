#include "gatr/ga/cayley.hpp"

#include <algorithm>
#include <bit>
#include <ostream>

#include "gatr/error.hpp"

namespace gatr::ga {
namespace {

// Sign of reordering blade(a) * blade(b) into ascending order, ignoring the metric.
int reorder_sign(std::uint32_t a, std::uint32_t b) {
  int swaps = 0;
  for (std::uint32_t rest = a >> 1; rest != 0; rest >>= 1) {
    swaps += std::popcount(rest & b);
  }
  return (swaps & 1) ? -1 : 1;
}

bool lex_less(std::uint32_t a, std::uint32_t b) {
  // Compare the ascending index lists of two equal-grade masks.
  while (a != 0 && b != 0) {
    const int ia = std::countr_zero(a);
    const int ib = std::countr_zero(b);
    if (ia != ib) {
      return ia < ib;
    }
    a &= a - 1;
    b &= b - 1;
  }
  return a == 0 && b != 0;
}

}  // namespace

CliffordTables::CliffordTables(std::vector<int> metric) : metric_(std::move(metric)) {
  const int n = dimension();
  if (n < 1 || n > 6) {
    throw InvalidArgument("CliffordTables: dimension must be in [1, 6]");
  }
  for (int m : metric_) {
    if (m < -1 || m > 1) {
      throw InvalidArgument("CliffordTables: metric entries must be -1, 0 or 1");
    }
  }
  num_blades_ = 1 << n;

  masks_.resize(num_blades_);
  for (int b = 0; b < num_blades_; ++b) {
    masks_[b] = static_cast<std::uint32_t>(b);
  }
  std::stable_sort(masks_.begin(), masks_.end(), [](std::uint32_t a, std::uint32_t b) {
    const int ga = std::popcount(a);
    const int gb = std::popcount(b);
    return ga != gb ? ga < gb : lex_less(a, b);
  });
  blade_of_mask_.assign(num_blades_, 0);
  for (int b = 0; b < num_blades_; ++b) {
    blade_of_mask_[masks_[b]] = b;
  }

  const auto nb = static_cast<std::size_t>(num_blades_);
  geometric_.resize(nb * nb);
  wedge_.resize(nb * nb);
  contraction_.resize(nb * nb);
  join_.resize(nb * nb);
  dual_.resize(nb);
  dual_inverse_.resize(nb);

  const std::uint32_t full = static_cast<std::uint32_t>(num_blades_ - 1);
  for (int i = 0; i < num_blades_; ++i) {
    // Right complement: the complementary blade, signed so that b ^ b* = I.
    const std::uint32_t comp = full ^ masks_[i];
    const int s = reorder_sign(masks_[i], comp);
    dual_[i] = {static_cast<std::uint8_t>(blade_of_mask_[comp]), static_cast<std::int8_t>(s)};
    dual_inverse_[blade_of_mask_[comp]] = {static_cast<std::uint8_t>(i), static_cast<std::int8_t>(s)};
  }

  for (int i = 0; i < num_blades_; ++i) {
    for (int j = 0; j < num_blades_; ++j) {
      const std::uint32_t a = masks_[i];
      const std::uint32_t b = masks_[j];
      const std::size_t at = static_cast<std::size_t>(i) * nb + static_cast<std::size_t>(j);
      const BladeProduct gp = multiply_masks(a, b);
      geometric_[at] = gp;

      const std::uint8_t target = static_cast<std::uint8_t>(blade_of_mask_[a ^ b]);
      wedge_[at] = {target, static_cast<std::int8_t>((a & b) ? 0 : reorder_sign(a, b))};
      // Left contraction a _| b is nonzero only for a subset of b.
      contraction_[at] = ((a & b) == a) ? gp : BladeProduct{target, 0};

      const BladeProduct di = dual_[i];
      const BladeProduct dj = dual_[j];
      const std::uint32_t ma = masks_[di.index];
      const std::uint32_t mb = masks_[dj.index];
      if (ma & mb) {
        join_[at] = {static_cast<std::uint8_t>(blade_of_mask_[full ^ (ma ^ mb)]), 0};
      } else {
        const BladeProduct back = dual_inverse_[blade_of_mask_[ma ^ mb]];
        join_[at] = {back.index,
                     static_cast<std::int8_t>(di.sign * dj.sign * reorder_sign(ma, mb) * back.sign)};
      }
    }
  }

  auto collect = [&](const std::vector<BladeProduct>& table, std::vector<ProductTerm>& terms) {
    for (int i = 0; i < num_blades_; ++i) {
      for (int j = 0; j < num_blades_; ++j) {
        const BladeProduct e = table[static_cast<std::size_t>(i) * nb + static_cast<std::size_t>(j)];
        if (e.sign != 0) {
          terms.push_back({static_cast<std::uint8_t>(i), static_cast<std::uint8_t>(j), e.index, e.sign});
        }
      }
    }
  };
  collect(geometric_, geometric_terms_);
  collect(wedge_, wedge_terms_);
  collect(join_, join_terms_);
  collect(contraction_, contraction_terms_);
}

int CliffordTables::grade(int blade) const { return std::popcount(masks_[blade]); }

BladeProduct CliffordTables::multiply_masks(std::uint32_t a, std::uint32_t b) const {
  int sign = reorder_sign(a, b);
  for (std::uint32_t common = a & b; common != 0; common &= common - 1) {
    sign *= metric_[std::countr_zero(common)];
  }
  return {static_cast<std::uint8_t>(blade_of_mask_[a ^ b]), static_cast<std::int8_t>(sign)};
}

namespace {

void write_table(std::ostream& os, int n, auto&& entry) {
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const BladeProduct e = entry(i, j);
      os << i << ' ' << j << ' ' << static_cast<int>(e.index) << ' ' << static_cast<int>(e.sign) << '\n';
    }
  }
}

}  // namespace

void CliffordTables::write_geometric(std::ostream& os) const {
  write_table(os, num_blades_, [&](int i, int j) { return geometric(i, j); });
}

void CliffordTables::write_wedge(std::ostream& os) const {
  write_table(os, num_blades_, [&](int i, int j) { return wedge(i, j); });
}

void CliffordTables::write_dual(std::ostream& os) const {
  for (int i = 0; i < num_blades_; ++i) {
    os << i << ' ' << pseudoscalar() << ' ' << static_cast<int>(dual_[i].index) << ' '
       << static_cast<int>(dual_[i].sign) << '\n';
  }
}

const CliffordTables& pga_tables() {
  static const CliffordTables tables({0, 1, 1, 1});
  return tables;
}

}  // namespace gatr::ga
