#pragma once

#include <gmpxx.h>

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <type_traits>

namespace ck {

// Exact rational scalar. Thin value wrapper over mpq_class so that arithmetic
// returns concrete values instead of gmpxx expression templates, which keeps
// it usable as an Eigen scalar.
class Rational {
public:
  Rational() = default;
  Rational(long v) : v_(v) {}
  Rational(int v) : v_(v) {}
  Rational(long num, long den) : v_(num, den) { v_.canonicalize(); }
  explicit Rational(const mpq_class& q) : v_(q) { v_.canonicalize(); }
  explicit Rational(const mpz_class& z) : v_(z) {}

  // Accepts "p/q", "p", decimal "1.25" and scientific "3e-2".
  static Rational parse(const std::string& s);
  static std::optional<Rational> try_parse(const std::string& s);
  // Exact value of a binary double.
  static Rational from_double(double x);

  const mpq_class& get() const { return v_; }
  mpz_class num() const { return v_.get_num(); }
  mpz_class den() const { return v_.get_den(); }

  // Canonical "p/q" form, always with a denominator ("9/1").
  std::string str() const;
  // Short form without a unit denominator ("9").
  std::string short_str() const;
  double to_double() const { return v_.get_d(); }
  int sign() const { return sgn(v_); }
  bool is_zero() const { return sgn(v_) == 0; }
  bool is_integer() const { return v_.get_den() == 1; }

  Rational& operator+=(const Rational& o) { v_ += o.v_; return *this; }
  Rational& operator-=(const Rational& o) { v_ -= o.v_; return *this; }
  Rational& operator*=(const Rational& o) { v_ *= o.v_; return *this; }
  Rational& operator/=(const Rational& o);

  friend Rational operator+(Rational a, const Rational& b) { return a += b; }
  friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
  friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
  friend Rational operator/(Rational a, const Rational& b) { return a /= b; }
  friend Rational operator-(const Rational& a) { return Rational(mpq_class(-a.v_)); }

  friend bool operator==(const Rational& a, const Rational& b) { return a.v_ == b.v_; }
  friend bool operator!=(const Rational& a, const Rational& b) { return a.v_ != b.v_; }
  friend bool operator<(const Rational& a, const Rational& b) { return a.v_ < b.v_; }
  friend bool operator<=(const Rational& a, const Rational& b) { return a.v_ <= b.v_; }
  friend bool operator>(const Rational& a, const Rational& b) { return a.v_ > b.v_; }
  friend bool operator>=(const Rational& a, const Rational& b) { return a.v_ >= b.v_; }

  friend std::ostream& operator<<(std::ostream& os, const Rational& r);

private:
  mpq_class v_;
};

Rational abs(const Rational& r);
Rational pow(const Rational& r, int e);
Rational binomial(int n, int k);
Rational factorial(int n);
// Exact square root when r is the square of a rational.
std::optional<Rational> exact_sqrt(const Rational& r);

inline double to_double(const Rational& r) { return r.to_double(); }
inline double to_double(double x) { return x; }

// Rational → scalar type used by templated code (identity or rounding).
template <typename T>
T from_rational(const Rational& r) {
  if constexpr (std::is_same_v<T, double>) return r.to_double();
  else return r;
}

std::size_t hash_value(const Rational& r);

} // namespace ck

namespace Eigen {

template <>
struct NumTraits<ck::Rational> : GenericNumTraits<ck::Rational> {
  typedef ck::Rational Real;
  typedef ck::Rational NonInteger;
  typedef ck::Rational Nested;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 6,
    AddCost = 60,
    MulCost = 60
  };
  static inline Real epsilon() { return Real(0); }
  static inline Real dummy_precision() { return Real(0); }
  static inline int digits10() { return 0; }
};

} // namespace Eigen

template <>
struct std::hash<ck::Rational> {
  std::size_t operator()(const ck::Rational& r) const { return ck::hash_value(r); }
};
