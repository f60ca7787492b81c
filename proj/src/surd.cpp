#include "chaoskit/surd.hpp"

#include <cstdio>
#include <stdexcept>

namespace ck {

template <>
std::string scalar_str<Rational>(const Rational& v) {
  return v.str();
}

template <>
std::string scalar_str<double>(const double& v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

template <>
void Surd<Rational>::normalize() {
  if (b.is_zero() || r.is_zero()) {
    b = Rational(0);
    r = Rational(0);
    return;
  }
  if (r.sign() < 0) throw std::domain_error("negative radicand");
  if (auto s = exact_sqrt(r)) {
    a += b * *s;
    b = Rational(0);
    r = Rational(0);
    return;
  }
  // √(p/q) = √(pq)/q, then square factors of pq move into b. Trial division
  // is bounded; a leftover that is a perfect square is caught as well.
  mpz_class rad = r.num() * r.den();
  mpz_class out = 1;
  b = b / Rational(r.den());
  for (unsigned long p = 2; p <= 997 && p * p <= rad; ++p) {
    const unsigned long sq = p * p;
    while (mpz_divisible_ui_p(rad.get_mpz_t(), sq)) {
      rad /= sq;
      out *= p;
    }
  }
  if (mpz_perfect_square_p(rad.get_mpz_t())) {
    mpz_class root;
    mpz_sqrt(root.get_mpz_t(), rad.get_mpz_t());
    out *= root;
    rad = 1;
  }
  b = b * Rational(out);
  r = Rational(rad);
}

template <>
void Surd<double>::normalize() {
  if (r < 0) throw std::domain_error("negative radicand");
  a += b * std::sqrt(r);
  b = 0;
  r = 0;
}

template <typename T>
Surd<T>& Surd<T>::operator+=(const Surd& o) {
  a += o.a;
  if (o.is_rational()) return *this;
  if (is_rational()) {
    b = o.b;
    r = o.r;
    return *this;
  }
  if (r == o.r) {
    b += o.b;
  } else {
    if constexpr (std::is_same_v<T, Rational>) {
      auto q = exact_sqrt(o.r / r);
      if (!q) throw std::domain_error("sum of surds with unrelated radicands");
      b += o.b * *q;
    } else {
      b += o.b * std::sqrt(o.r / r);
    }
  }
  normalize();
  return *this;
}

template <typename T>
std::string Surd<T>::str() const {
  if (is_rational()) return scalar_str(a);
  std::string s = "sqrt(" + scalar_str(r) + ")*" + scalar_str(b);
  if (a == T(0)) return s;
  return scalar_str(a) + "+" + s;
}

template <typename T>
Surd<T> scaled_value(const T& v, const T& scale_sq, int half_powers) {
  T p(1);
  for (int k = 0; k < half_powers / 2; ++k) p *= scale_sq;
  if (half_powers % 2 == 0) return Surd<T>(v * p);
  return Surd<T>(T(0), v * p, scale_sq);
}

template struct Surd<Rational>;
template struct Surd<double>;
template Surd<Rational> scaled_value(const Rational&, const Rational&, int);
template Surd<double> scaled_value(const double&, const double&, int);

} // namespace ck
