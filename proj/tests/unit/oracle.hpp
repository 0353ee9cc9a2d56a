#pragma once

// Reference algebra built from index lists, sharing no code with the library tables.

#include <algorithm>
#include <array>
#include <vector>

namespace oracle {

using Blade = std::vector<int>;

// Grade-major, lexicographic within a grade.
inline std::vector<Blade> blade_order(int dim) {
  std::vector<Blade> out{{}};
  for (int g = 1; g <= dim; ++g) {
    std::vector<int> pick(g);
    for (int i = 0; i < g; ++i) pick[i] = i;
    while (true) {
      out.push_back(pick);
      int k = g - 1;
      while (k >= 0 && pick[k] == dim - g + k) --k;
      if (k < 0) break;
      ++pick[k];
      for (int i = k + 1; i < g; ++i) pick[i] = pick[i - 1] + 1;
    }
  }
  return out;
}

struct Product {
  double sign;
  Blade blade;
};

// e_a e_b by bubble-sorting the concatenated index list and contracting equal neighbours.
inline Product multiply(const Blade& a, const Blade& b, const std::vector<int>& metric) {
  Blade v = a;
  v.insert(v.end(), b.begin(), b.end());
  double sign = 1.0;
  bool swapped = true;
  while (swapped) {
    swapped = false;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
      if (v[i] > v[i + 1]) {
        std::swap(v[i], v[i + 1]);
        sign = -sign;
        swapped = true;
      }
    }
  }
  Blade out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i + 1 < v.size() && v[i] == v[i + 1]) {
      sign *= metric[v[i]];
      ++i;
    } else {
      out.push_back(v[i]);
    }
  }
  return {sign, out};
}

inline int index_of(const std::vector<Blade>& order, const Blade& b) {
  return static_cast<int>(std::find(order.begin(), order.end(), b) - order.begin());
}

inline const std::vector<int>& pga_metric() {
  static const std::vector<int> m{0, 1, 1, 1};
  return m;
}

using Dense = std::array<double, 16>;

inline Dense geometric(const Dense& x, const Dense& y) {
  static const std::vector<Blade> order = blade_order(4);
  Dense r{};
  for (int i = 0; i < 16; ++i) {
    for (int j = 0; j < 16; ++j) {
      const Product p = multiply(order[i], order[j], pga_metric());
      r[index_of(order, p.blade)] += p.sign * x[i] * y[j];
    }
  }
  return r;
}

inline Dense wedge(const Dense& x, const Dense& y) {
  static const std::vector<Blade> order = blade_order(4);
  Dense r{};
  for (int i = 0; i < 16; ++i) {
    for (int j = 0; j < 16; ++j) {
      const Product p = multiply(order[i], order[j], pga_metric());
      if (p.blade.size() == order[i].size() + order[j].size()) r[index_of(order, p.blade)] += p.sign * x[i] * y[j];
    }
  }
  return r;
}

// Sum of squared coefficients of the e0-free blades (metric weight +1 up to the reverse sign).
inline double inner(const Dense& x, const Dense& y) {
  static const std::vector<Blade> order = blade_order(4);
  Dense rev = x;
  for (int i = 0; i < 16; ++i) {
    const std::size_t g = order[i].size();
    if ((g * (g - 1) / 2) % 2 == 1) rev[i] = -rev[i];
  }
  return geometric(rev, y)[0];
}

}  // namespace oracle
