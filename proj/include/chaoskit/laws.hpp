#pragma once

#include "chaoskit/partlat.hpp"
#include "chaoskit/poly.hpp"
#include "chaoskit/rational.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace ck {

enum class LawKind { classical, free_ };

inline Lattice lattice_of(LawKind k) { return k == LawKind::classical ? Lattice::classical : Lattice::noncrossing; }
std::string kind_name(LawKind k);

// Exact moment and cumulant sequences, index k = order k, entry 0 = 1 / 0.
struct LawSpec {
  std::string name;
  LawKind kind = LawKind::classical;
  std::vector<Rational> moments;
  std::vector<Rational> cumulants;

  int max_order() const { return static_cast<int>(moments.size()) - 1; }
  const Rational& moment(int k) const;
  const Rational& cumulant(int k) const;
  bool centered() const { return max_order() < 1 || moments[1].is_zero(); }
  // Same law with X replaced by X + t (moments binomially shifted).
  LawSpec shifted(const Rational& t) const;
};

constexpr int kDefaultLawOrder = 10;

enum class SeqKind { moments, cumulants };

// moments ↔ cumulants over P(n) or NC(n); entry 0 of a moment sequence is 1.
std::vector<Rational> convert(const std::vector<Rational>& seq, SeqKind from, LawKind kind);

LawSpec law_from_moments(std::string name, LawKind kind, std::vector<Rational> moments);
LawSpec law_from_cumulants(std::string name, LawKind kind, std::vector<Rational> cumulants);

// Builtin laws: gaussian(var), centered_poisson(lambda), gamma_F(nu), rademacher,
// uniform (centered, unit variance), semicircle(var), free_poisson_centered(lambda),
// free_rademacher, tetilla. Parameters are passed by name.
LawSpec builtin_law(const std::string& name, const std::map<std::string, Rational>& params = {},
                    int max_order = kDefaultLawOrder);
std::vector<std::string> builtin_law_names();
// "name" or "name:key=value,key=value" as used on the command line.
LawSpec parse_law_argument(const std::string& text, int max_order = kDefaultLawOrder);
// Default parameter set for a builtin name.
std::map<std::string, Rational> default_law_params(const std::string& name);

// Law of U_h(S) (free) or H_h(N) (classical) through respectful pairings.
LawSpec transformed_law(LawKind base, int h, int max_order);

// χ(X₁..X_n) = Σ_σ μ(σ,1̂) Π_B E[Π_{j∈B} X_j]. The oracle receives the
// (1-based, ascending) elements of a block.
Rational multivariate_cumulant(const std::function<Rational(const std::vector<int>&)>& joint_moment, int n,
                               LawKind kind);

// Monic recurrences: U_{m+1} = xU_m − U_{m−1}; H_{n+1} = xH_n − nH_{n−1};
// C_{0,m+1} = (x − 1)C_{0,m} − t·C_{0,m−1} with C_{0,0} = 1, C_{0,1} = x.
Poly<Rational> chebyshev_u(int h);
Poly<Rational> hermite_he(int h);
Poly<Rational> free_charlier(int k, const Rational& t);

template <typename T>
T poly_eval_chebyshev(int h, const T& x) {
  T a(1), b = x;
  if (h == 0) return a;
  for (int m = 1; m < h; ++m) {
    T c = x * b - a;
    a = b;
    b = c;
  }
  return b;
}

template <typename T>
T poly_eval_hermite(int h, const T& x) {
  T a(1), b = x;
  if (h == 0) return a;
  for (int m = 1; m < h; ++m) {
    T c = x * b - T(m) * a;
    a = b;
    b = c;
  }
  return b;
}

template <typename T>
T poly_eval_free_charlier(int k, const T& x, const T& t) {
  T a(1), b = x;
  if (k == 0) return a;
  for (int m = 1; m < k; ++m) {
    T c = (x - T(1)) * b - t * a;
    a = b;
    b = c;
  }
  return b;
}

// E[p(X)] from the law's moments.
Rational expect(const LawSpec& law, const Poly<Rational>& p);

std::string law_to_json(const LawSpec& law);
LawSpec law_from_json(const std::string& text);

} // namespace ck
