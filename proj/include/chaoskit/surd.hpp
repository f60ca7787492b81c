#pragma once

#include "chaoskit/rational.hpp"

#include <cmath>
#include <optional>
#include <string>

namespace ck {

// a + b·√r with r ≥ 0. Quantities built from kernels carrying an irrational
// normalization stay exact in this form (odd moments, mixed inner products).
template <typename T>
struct Surd {
  T a{0};
  T b{0};
  T r{0};

  Surd() = default;
  Surd(T value) : a(std::move(value)) {}
  Surd(T a_, T b_, T r_) : a(std::move(a_)), b(std::move(b_)), r(std::move(r_)) { normalize(); }

  void normalize();
  bool is_rational() const { return b == T(0) || r == T(0); }
  std::optional<T> exact() const {
    if (is_rational()) return a;
    return std::nullopt;
  }
  double to_double() const { return ck::to_double(a) + ck::to_double(b) * std::sqrt(ck::to_double(r)); }
  std::string str() const;

  // Sum requires matching radicands unless one side is rational.
  Surd& operator+=(const Surd& o);
  Surd& operator-=(const Surd& o) { return *this += Surd(-o.a, -o.b, o.r); }
  friend Surd operator+(Surd x, const Surd& y) { return x += y; }
  friend Surd operator-(Surd x, const Surd& y) { return x -= y; }
  friend Surd operator*(const Surd& x, const T& s) { return Surd(x.a * s, x.b * s, x.r); }
  friend bool operator==(const Surd& x, const Surd& y) {
    return x.a == y.a && ((x.is_rational() && y.is_rational()) || (x.b == y.b && x.r == y.r));
  }
};

// Exact sign of a + b√r.
inline int sign(const Surd<Rational>& s) {
  const int sa = s.a.sign();
  const int sb = s.is_rational() ? 0 : s.b.sign();
  if (sb == 0) return sa;
  if (sa == 0 || sa == sb) return sb;
  const Rational lhs = s.a * s.a, rhs = s.b * s.b * s.r;
  if (lhs == rhs) return 0;
  return lhs > rhs ? sa : sb;
}

// v · scale_sq^{half_powers/2}
template <typename T>
Surd<T> scaled_value(const T& v, const T& scale_sq, int half_powers);

template <typename T>
std::string scalar_str(const T& v);

template <>
void Surd<Rational>::normalize();
template <>
void Surd<double>::normalize();
template <>
std::string scalar_str<Rational>(const Rational& v);
template <>
std::string scalar_str<double>(const double& v);

extern template struct Surd<Rational>;
extern template struct Surd<double>;

} // namespace ck
