#pragma once

#include "chaoskit/rational.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace ck {

// Univariate polynomial, coefficients lowest degree first.
template <typename T>
struct Poly {
  std::vector<T> c;

  Poly() = default;
  explicit Poly(std::vector<T> coeffs) : c(std::move(coeffs)) { trim(); }
  static Poly constant(const T& v) { return Poly(std::vector<T>{v}); }
  static Poly x() { return Poly(std::vector<T>{T(0), T(1)}); }

  int degree() const { return c.empty() ? -1 : static_cast<int>(c.size()) - 1; }
  T coeff(int k) const { return k >= 0 && k < static_cast<int>(c.size()) ? c[k] : T(0); }
  T leading() const { return c.empty() ? T(0) : c.back(); }
  bool is_zero() const { return c.empty(); }

  void trim() {
    while (!c.empty() && c.back() == T(0)) c.pop_back();
  }

  template <typename U>
  U operator()(const U& x) const {
    U acc(0);
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + U(*it);
    return acc;
  }

  Poly& operator+=(const Poly& o) {
    if (o.c.size() > c.size()) c.resize(o.c.size(), T(0));
    for (std::size_t k = 0; k < o.c.size(); ++k) c[k] += o.c[k];
    trim();
    return *this;
  }
  Poly& operator-=(const Poly& o) {
    if (o.c.size() > c.size()) c.resize(o.c.size(), T(0));
    for (std::size_t k = 0; k < o.c.size(); ++k) c[k] -= o.c[k];
    trim();
    return *this;
  }
  friend Poly operator+(Poly a, const Poly& b) { return a += b; }
  friend Poly operator-(Poly a, const Poly& b) { return a -= b; }
  friend Poly operator*(const Poly& a, const Poly& b) {
    if (a.c.empty() || b.c.empty()) return Poly();
    std::vector<T> r(a.c.size() + b.c.size() - 1, T(0));
    for (std::size_t i = 0; i < a.c.size(); ++i)
      for (std::size_t j = 0; j < b.c.size(); ++j) r[i + j] += a.c[i] * b.c[j];
    return Poly(std::move(r));
  }
  friend Poly operator*(Poly a, const T& s) {
    for (auto& v : a.c) v *= s;
    a.trim();
    return a;
  }
  friend bool operator==(const Poly& a, const Poly& b) { return a.c == b.c; }
  friend bool operator!=(const Poly& a, const Poly& b) { return !(a == b); }

  Poly compose(const Poly& inner) const {
    Poly acc;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * inner + Poly::constant(*it);
    return acc;
  }

  Poly pow(int e) const {
    Poly r = Poly::constant(T(1));
    for (int k = 0; k < e; ++k) r = r * *this;
    return r;
  }
};

// Lowest degree first, rational strings: ["-1/1","0/1","1/1"].
std::vector<std::string> poly_strings(const Poly<Rational>& p);
// Human-readable form, highest degree first: "x^2 - 1".
std::string poly_pretty(const Poly<Rational>& p);

} // namespace ck
