#include "chaoskit/rational.hpp"

#include <cmath>
#include <cstring>
#include <ostream>
#include <stdexcept>

namespace ck {

namespace {

std::optional<mpz_class> parse_int(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size()) return std::nullopt;
  for (std::size_t k = i; k < s.size(); ++k)
    if (s[k] < '0' || s[k] > '9') return std::nullopt;
  mpz_class z;
  if (z.set_str(s[0] == '+' ? s.substr(1) : s, 10) != 0) return std::nullopt;
  return z;
}

mpz_class pow10(unsigned long e) {
  mpz_class r;
  mpz_ui_pow_ui(r.get_mpz_t(), 10, e);
  return r;
}

} // namespace

std::optional<Rational> Rational::try_parse(const std::string& raw) {
  std::string s;
  for (char c : raw)
    if (c != ' ' && c != '\t') s.push_back(c);
  if (s.empty()) return std::nullopt;

  auto slash = s.find('/');
  if (slash != std::string::npos) {
    auto p = parse_int(s.substr(0, slash));
    auto q = parse_int(s.substr(slash + 1));
    if (!p || !q || *q == 0) return std::nullopt;
    mpq_class r(*p, *q);
    r.canonicalize();
    return Rational(r);
  }

  long exp10 = 0;
  auto epos = s.find_first_of("eE");
  std::string mant = s;
  if (epos != std::string::npos) {
    auto e = parse_int(s.substr(epos + 1));
    if (!e || !e->fits_slong_p()) return std::nullopt;
    exp10 = e->get_si();
    mant = s.substr(0, epos);
  }
  bool neg = false;
  if (!mant.empty() && (mant[0] == '-' || mant[0] == '+')) {
    neg = mant[0] == '-';
    mant = mant.substr(1);
  }
  auto dot = mant.find('.');
  std::string digits = mant;
  if (dot != std::string::npos) {
    digits = mant.substr(0, dot) + mant.substr(dot + 1);
    exp10 -= static_cast<long>(mant.size() - dot - 1);
  }
  if (digits.empty()) return std::nullopt;
  auto z = parse_int(digits);
  if (!z || digits[0] == '-' || digits[0] == '+') return std::nullopt;
  mpq_class r(*z);
  if (exp10 > 0) r *= pow10(static_cast<unsigned long>(exp10));
  if (exp10 < 0) r /= pow10(static_cast<unsigned long>(-exp10));
  if (neg) r = -r;
  r.canonicalize();
  return Rational(r);
}

Rational Rational::parse(const std::string& s) {
  auto r = try_parse(s);
  if (!r) throw std::invalid_argument("not a rational number: '" + s + "'");
  return *r;
}

Rational Rational::from_double(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("non-finite value");
  return Rational(mpq_class(x));
}

std::string Rational::str() const {
  return v_.get_num().get_str() + "/" + v_.get_den().get_str();
}

std::string Rational::short_str() const {
  if (v_.get_den() == 1) return v_.get_num().get_str();
  return str();
}

Rational& Rational::operator/=(const Rational& o) {
  if (o.is_zero()) throw std::domain_error("rational division by zero");
  v_ /= o.v_;
  return *this;
}

std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.short_str(); }

Rational abs(const Rational& r) { return Rational(mpq_class(::abs(r.get()))); }

Rational pow(const Rational& r, int e) {
  if (e < 0) return Rational(1) / pow(r, -e);
  mpz_class n, d;
  mpz_pow_ui(n.get_mpz_t(), r.get().get_num_mpz_t(), static_cast<unsigned long>(e));
  mpz_pow_ui(d.get_mpz_t(), r.get().get_den_mpz_t(), static_cast<unsigned long>(e));
  return Rational(mpq_class(n, d));
}

Rational binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return Rational(0);
  mpz_class z;
  mpz_bin_uiui(z.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
  return Rational(z);
}

Rational factorial(int n) {
  if (n < 0) throw std::invalid_argument("negative factorial");
  mpz_class z;
  mpz_fac_ui(z.get_mpz_t(), static_cast<unsigned long>(n));
  return Rational(z);
}

std::optional<Rational> exact_sqrt(const Rational& r) {
  if (r.sign() < 0) return std::nullopt;
  mpz_class n = r.num(), d = r.den();
  if (!mpz_perfect_square_p(n.get_mpz_t()) || !mpz_perfect_square_p(d.get_mpz_t()))
    return std::nullopt;
  mpz_class sn, sd;
  mpz_sqrt(sn.get_mpz_t(), n.get_mpz_t());
  mpz_sqrt(sd.get_mpz_t(), d.get_mpz_t());
  return Rational(mpq_class(sn, sd));
}

std::size_t hash_value(const Rational& r) {
  std::size_t h1 = mpz_get_ui(r.get().get_num_mpz_t());
  std::size_t h2 = mpz_get_ui(r.get().get_den_mpz_t());
  return h1 * 1000003u ^ h2 ^ static_cast<std::size_t>(r.sign() + 1);
}

} // namespace ck
