#pragma once

#include "chaoskit/kernels.hpp"
#include "chaoskit/laws.hpp"

#include <random>
#include <set>
#include <string>
#include <vector>

namespace cktest {

using ck::Kernel;
using ck::Rational;

inline bool has_repeat(const std::vector<int>& idx) {
  return std::set<int>(idx.begin(), idx.end()).size() != idx.size();
}

// Small-integer kernel vanishing on diagonals; symmetric, mirror-symmetric or
// unconstrained. Never zero.
inline Kernel<Rational> random_kernel(std::mt19937_64& g, int n, int d, const std::string& shape) {
  std::uniform_int_distribution<int> val(-3, 3);
  for (;;) {
    Kernel<Rational> f(n, d);
    for (std::size_t flat = 0; flat < f.size(); ++flat) {
      auto idx = f.unflatten(flat);
      if (has_repeat(idx)) continue;
      f.coeff(flat) = Rational(val(g));
    }
    if (shape == "symmetric") f = ck::symmetrized(f);
    if (shape == "mirror") {
      Kernel<Rational> m = ck::mirrored(f);
      for (std::size_t flat = 0; flat < f.size(); ++flat) f.coeff(flat) += m.coeff(flat);
    }
    if (!f.is_zero()) {
      f.compute_flags();
      return f;
    }
  }
}

inline Kernel<Rational> random_admissible(std::mt19937_64& g, int n, int d, const std::string& shape,
                                          ck::Flavor flavor) {
  return ck::normalized(random_kernel(g, n, d, shape), flavor);
}

// The n = 2, d = 2 half kernel f(1,2) = f(2,1) = 1/2.
inline Kernel<Rational> half_kernel() {
  Kernel<Rational> f(2, 2);
  f.coeff({1, 2}) = Rational(1, 2);
  f.coeff({2, 1}) = Rational(1, 2);
  f.compute_flags();
  return f;
}

} // namespace cktest
