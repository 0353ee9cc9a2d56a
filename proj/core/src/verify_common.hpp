#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "gatr/ga/multivector.hpp"
#include "gatr/ga/versor.hpp"
#include "gatr/nn/tensor.hpp"
#include "gatr/verify/suites.hpp"

namespace gatr::verify::detail {

inline ga::Multivector random_mv(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  ga::Multivector m;
  for (double& c : m.coeffs) c = n(rng);
  return m;
}

inline double rel_err(const ga::Multivector& a, const ga::Multivector& b) {
  const double d = ga::max_abs(a - b);
  const double s = std::max({ga::max_abs(a), ga::max_abs(b), 1e-300});
  return d / s;
}

template <class T>
double rel_err(const nn::Tensor<T>& a, const nn::Tensor<T>& b) {
  a.require_same_shape(b, "rel_err");
  double d = 0.0, s = 1e-300;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d = std::max(d, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
    s = std::max({s, std::abs(static_cast<double>(a[i])), std::abs(static_cast<double>(b[i]))});
  }
  return d / s;
}

/// Accumulates the worst error seen for one property.
class Tracker {
 public:
  Tracker(SuiteReport& report, const VerifyOptions& opt) : report_(report), opt_(opt) {}

  void record(const std::string& name, double error, double tolerance) {
    if (!std::isfinite(error)) error = std::numeric_limits<double>::infinity();
    for (PropertyResult& p : report_.properties) {
      if (p.name == name) {
        p.max_error = std::max(p.max_error, error);
        ++p.trials;
        return;
      }
    }
    report_.properties.push_back({name, error, opt_.tolerance > 0.0 ? opt_.tolerance : tolerance, 1});
  }

 private:
  SuiteReport& report_;
  const VerifyOptions& opt_;
};

}  // namespace gatr::verify::detail
