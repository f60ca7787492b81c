#include "chaoskit/orthopoly.hpp"

#include "chaoskit/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ck {

namespace {

constexpr double kPermutationLimit = 1e7;
constexpr std::size_t kTermLimit = 2000000;

int permutation_sign(const std::vector<int>& p) {
  int inv = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j)
      if (p[i] > p[j]) ++inv;
  return inv % 2 ? -1 : 1;
}

double factorial_d(int n) {
  double f = 1;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

std::vector<Rational> shift_moments(const std::vector<Rational>& a, const Rational& t) {
  std::vector<Rational> out(a.size(), Rational(0));
  for (std::size_t k = 0; k < a.size(); ++k) {
    Rational s(0);
    Rational tp(1);
    for (std::size_t i = k + 1; i-- > 0;) {
      s += binomial(static_cast<int>(k), static_cast<int>(i)) * a[i] * tp;
      tp *= t;
    }
    out[k] = s;
  }
  return out;
}

RationalMatrix minor_without(const RationalMatrix& M, int row, int col) {
  const int n = static_cast<int>(M.rows());
  RationalMatrix out(n - 1, n - 1);
  for (int i = 0, oi = 0; i < n; ++i) {
    if (i == row) continue;
    for (int j = 0, oj = 0; j < n; ++j) {
      if (j == col) continue;
      out(oi, oj++) = M(i, j);
    }
    ++oi;
  }
  return out;
}

// Continued-fraction recognition of a double as p/q with q ≤ max_den.
std::optional<Rational> recognize_rational(double x, long max_den = 100000, double tol = 1e-10) {
  if (!std::isfinite(x)) return std::nullopt;
  long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double y = x;
  for (int it = 0; it < 40; ++it) {
    double fl = std::floor(y);
    if (std::fabs(fl) > 1e12) break;
    long a = static_cast<long>(fl);
    long p2 = a * p1 + p0;
    long q2 = a * q1 + q0;
    if (q2 > max_den) break;
    p0 = p1; q0 = q1; p1 = p2; q1 = q2;
    if (std::fabs(x - static_cast<double>(p1) / static_cast<double>(q1)) <= tol * std::max(1.0, std::fabs(x)))
      return Rational(p1, q1);
    double frac = y - fl;
    if (frac < 1e-15) break;
    y = 1.0 / frac;
  }
  return std::nullopt;
}

// a + b√R with a shared radicand R.
struct QS {
  Rational a{0};
  Rational b{0};
};

QS qs_mul(const QS& x, const QS& y, const Rational& R) {
  return {x.a * y.a + x.b * y.b * R, x.a * y.b + x.b * y.a};
}

std::vector<QS> qs_poly_mul(const std::vector<QS>& p, const std::vector<QS>& q, const Rational& R) {
  std::vector<QS> r(p.size() + q.size() - 1);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j) {
      QS t = qs_mul(p[i], q[j], R);
      r[i + j].a += t.a;
      r[i + j].b += t.b;
    }
  return r;
}

bool qs_poly_root(const Poly<Rational>& p, const QS& z, const Rational& R) {
  QS acc;
  for (auto it = p.c.rbegin(); it != p.c.rend(); ++it) {
    acc = qs_mul(acc, z, R);
    acc.a += *it;
  }
  return acc.a.is_zero() && acc.b.is_zero();
}

// Nodes recognized as rationals or ±√q sharing one radicand, each verified
// as an exact root of p.
std::optional<std::vector<Surd<Rational>>> recognize_nodes(const std::vector<Complex>& roots,
                                                           const Poly<Rational>& p) {
  std::vector<Surd<Rational>> out;
  Rational R(0);
  for (const auto& z : roots) {
    if (z.imag() != 0.0) return std::nullopt;
    const double x = z.real();
    if (auto q = recognize_rational(x)) {
      if (!qs_poly_root(p, {*q, Rational(0)}, Rational(0))) return std::nullopt;
      out.emplace_back(*q);
      continue;
    }
    auto q2 = recognize_rational(x * x, 10000, 1e-9);
    if (!q2) return std::nullopt;
    Surd<Rational> s(Rational(0), Rational(x < 0 ? -1 : 1), *q2);
    if (!s.is_rational()) {
      if (R.is_zero()) R = s.r;
      else if (R != s.r) return std::nullopt;
    }
    if (!qs_poly_root(p, {s.a, s.b}, s.is_rational() ? Rational(0) : s.r)) return std::nullopt;
    out.push_back(s);
  }
  return out;
}

std::vector<Complex> to_complex(const Poly<Rational>& p) {
  std::vector<Complex> c;
  c.reserve(p.c.size());
  for (const auto& v : p.c) c.emplace_back(v.to_double(), 0.0);
  return c;
}

double rel_err(Complex got, const Rational& want) {
  const double w = want.to_double();
  return std::abs(got - Complex(w, 0)) / std::max(1.0, std::fabs(w));
}

// Σ_π Σ_ρ sgn π sgn ρ x₀^{e_{π(0)}} Π_{i≥1} E[X_i^{e_{π(i)} + s_{ρ(i)}}], with
// s applying to X₁..X_r only.
template <typename Emit>
void heine_expand(const std::vector<std::vector<int>>& big, const std::vector<std::vector<int>>& small,
                  const std::function<Rational(int, const std::vector<int>&)>& moment, const Emit& emit) {
  const int N = static_cast<int>(big.size()) - 1;
  const int r = static_cast<int>(small.size());
  if (factorial_d(N + 1) * factorial_d(r) > kPermutationLimit)
    throw SizeLimitError("permutation expansion exceeds 1e7 terms", "n");
  const std::size_t dim = big.front().size();
  std::vector<int> pi(N + 1);
  std::iota(pi.begin(), pi.end(), 0);
  std::vector<int> rho(r);
  do {
    const int spi = permutation_sign(pi);
    Rational tail(1);
    for (int i = r + 1; i <= N && !tail.is_zero(); ++i) tail *= moment(i, big[pi[i]]);
    if (tail.is_zero()) continue;
    std::iota(rho.begin(), rho.end(), 0);
    Rational inner(0);
    do {
      Rational prod(1);
      for (int i = 1; i <= r && !prod.is_zero(); ++i) {
        std::vector<int> e(dim);
        for (std::size_t c = 0; c < dim; ++c) e[c] = big[pi[i]][c] + small[rho[i - 1]][c];
        prod *= moment(i, e);
      }
      if (!prod.is_zero()) {
        if (permutation_sign(rho) < 0) inner -= prod;
        else inner += prod;
      }
    } while (std::next_permutation(rho.begin(), rho.end()));
    if (inner.is_zero()) continue;
    Rational coef = inner * tail;
    if (spi < 0) coef = -coef;
    emit(big[pi[0]], coef);
  } while (std::next_permutation(pi.begin(), pi.end()));
}

MomentFunctional with_groups(const MomentFunctional& F, int m) {
  return F.groups() > m ? F : F.with_translated_tails(m);
}

} // namespace

// ---------------------------------------------------------------------------

Rational bareiss_determinant(RationalMatrix m) {
  const int n = static_cast<int>(m.rows());
  if (n != m.cols()) throw ValidationError("shape_mismatch", "determinant of a non-square matrix");
  if (n == 0) return Rational(1);
  Rational prev(1);
  int sign = 1;
  for (int k = 0; k + 1 < n; ++k) {
    if (m(k, k).is_zero()) {
      int piv = -1;
      for (int i = k + 1; i < n; ++i)
        if (!m(i, k).is_zero()) { piv = i; break; }
      if (piv < 0) return Rational(0);
      m.row(k).swap(m.row(piv));
      sign = -sign;
    }
    for (int i = k + 1; i < n; ++i)
      for (int j = k + 1; j < n; ++j) m(i, j) = (m(i, j) * m(k, k) - m(i, k) * m(k, j)) / prev;
    prev = m(k, k);
  }
  return sign < 0 ? -m(n - 1, n - 1) : m(n - 1, n - 1);
}

MomentFunctional MomentFunctional::from_law(const LawSpec& law) { return from_moments(law.moments); }

MomentFunctional MomentFunctional::from_moments(std::vector<Rational> a) {
  if (a.empty() || a[0] != Rational(1))
    throw ValidationError("invalid_moments", "moment sequence must start with a_0 = 1", "moments");
  MomentFunctional F;
  F.base = std::move(a);
  return F;
}

MomentFunctional MomentFunctional::with_translated_tails(int m) const {
  MomentFunctional F = *this;
  for (int j = F.groups(); j <= m; ++j) F.tail.push_back(shift_moments(base, Rational(1, j)));
  return F;
}

MomentFunctional MomentFunctional::shifted(const Rational& t) const {
  MomentFunctional F;
  F.base = shift_moments(base, t);
  for (const auto& g : tail) F.tail.push_back(shift_moments(g, t));
  return F;
}

const Rational& MomentFunctional::a(int k) const { return a(0, k); }

const Rational& MomentFunctional::a(int group, int k) const {
  const auto& seq = group <= 1 ? base : tail.at(static_cast<std::size_t>(group - 2));
  if (k < 0 || k >= static_cast<int>(seq.size()))
    throw ValidationError("insufficient_moments", "moment of order " + std::to_string(k) + " is not available",
                          "moments");
  return seq[static_cast<std::size_t>(k)];
}

Rational hankel_det(const MomentFunctional& F, int n) {
  if (n < 0) throw ValidationError("invalid_argument", "n must be non-negative", "n");
  RationalMatrix H(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) H(i, j) = F.a(i + j);
  return bareiss_determinant(H);
}

Rational discriminant_second_moment(const MomentFunctional& F, int n) { return factorial(n) * hankel_det(F, n); }

GOPEntry gops_determinant(const MomentFunctional& F0, int n, int m) {
  if (n < 1 || m < 1 || m > n) throw ValidationError("invalid_argument", "require 1 <= m <= n", "m");
  const MomentFunctional F = with_groups(F0, m);
  RationalMatrix M(n + 1, n + 1);
  for (int j = 0; j <= n; ++j) M(0, j) = Rational(0);
  int row = 1;
  for (int k = 0; k <= n - m; ++k, ++row)
    for (int j = 0; j <= n; ++j) M(row, j) = F.a(k + j);
  for (int g = 2; g <= m; ++g, ++row)
    for (int j = 0; j <= n; ++j) M(row, j) = F.a(g, j);
  std::vector<Rational> c(n + 1);
  for (int j = 0; j <= n; ++j) {
    Rational d = bareiss_determinant(minor_without(M, 0, j));
    c[j] = j % 2 ? -d : d;
  }
  GOPEntry e;
  e.n = n;
  e.m = m;
  e.p = Poly<Rational>(std::move(c));
  e.degenerate = e.p.degree() < n;
  return e;
}

GOPEntry gops_expectation(const MomentFunctional& F0, int n, int m) {
  if (n < 1 || m < 1 || m > n) throw ValidationError("invalid_argument", "require 1 <= m <= n", "m");
  const MomentFunctional F = with_groups(F0, m);
  const int r = n - m + 1;
  std::vector<std::vector<int>> big, small;
  for (int j = 0; j <= n; ++j) big.push_back({j});
  for (int j = 0; j < r; ++j) small.push_back({j});
  auto moment = [&](int i, const std::vector<int>& e) -> Rational {
    const int group = i <= r ? 0 : i - r + 1;
    return F.a(group, e[0]);
  };
  std::vector<Rational> c(n + 1, Rational(0));
  heine_expand(big, small, moment, [&](const std::vector<int>& e, const Rational& v) { c[e[0]] += v; });
  GOPEntry out;
  out.n = n;
  out.m = m;
  out.p = Poly<Rational>(std::move(c));
  out.degenerate = out.p.degree() < n;
  return out;
}

std::vector<GOPEntry> gops_table(const MomentFunctional& F0, int N) {
  const MomentFunctional F = with_groups(F0, N);
  std::vector<GOPEntry> out;
  for (int n = 1; n <= N; ++n)
    for (int m = 1; m <= n; ++m) out.push_back(gops_determinant(F, n, m));
  return out;
}

std::optional<Rational> proportionality(const Poly<Rational>& num, const Poly<Rational>& den) {
  if (num.is_zero() || den.is_zero() || num.degree() != den.degree()) return std::nullopt;
  const Rational q = num.leading() / den.leading();
  if (num != den * q) return std::nullopt;
  return q;
}

std::vector<Rational> orthogonality_profile(const MomentFunctional& F, const Poly<Rational>& p, int kmax) {
  std::vector<Rational> out;
  for (int k = 0; k <= kmax; ++k) {
    Rational s(0);
    for (int i = 0; i <= p.degree(); ++i)
      if (!p.c[i].is_zero()) s += p.c[i] * F.a(k + i);
    out.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------

MPoly MPoly::constant(int vars, const Rational& c) {
  MPoly p(vars);
  p.add_term(std::vector<int>(vars, 0), c);
  return p;
}

MPoly MPoly::variable(int vars, int i) {
  MPoly p(vars);
  std::vector<int> e(vars, 0);
  e[i] = 1;
  p.add_term(e, Rational(1));
  return p;
}

void MPoly::add_term(const std::vector<int>& e, const Rational& c) {
  if (c.is_zero()) return;
  auto [it, inserted] = terms.emplace(e, c);
  if (!inserted) {
    it->second += c;
    if (it->second.is_zero()) terms.erase(it);
  }
}

MPoly MPoly::operator+(const MPoly& o) const {
  MPoly r = *this;
  r.vars = std::max(vars, o.vars);
  for (const auto& [e, c] : o.terms) r.add_term(e, c);
  return r;
}

MPoly MPoly::operator-(const MPoly& o) const {
  MPoly r = *this;
  r.vars = std::max(vars, o.vars);
  for (const auto& [e, c] : o.terms) r.add_term(e, -c);
  return r;
}

MPoly MPoly::operator*(const MPoly& o) const {
  if (vars != o.vars) throw ValidationError("shape_mismatch", "polynomials in different variable counts");
  MPoly r(vars);
  std::vector<int> e(vars);
  for (const auto& [e1, c1] : terms)
    for (const auto& [e2, c2] : o.terms) {
      for (int i = 0; i < vars; ++i) e[i] = e1[i] + e2[i];
      r.add_term(e, c1 * c2);
    }
  if (r.terms.size() > kTermLimit) throw SizeLimitError("polynomial expansion exceeds the term limit");
  return r;
}

MPoly MPoly::pow(int e) const {
  MPoly r = constant(vars, Rational(1));
  for (int k = 0; k < e; ++k) r = r * *this;
  return r;
}

int MPoly::degree_in(int var) const {
  int d = -1;
  for (const auto& [e, c] : terms) d = std::max(d, e[var]);
  return d;
}

Complex MPoly::evaluate(const std::vector<Complex>& x) const {
  Complex s(0);
  for (const auto& [e, c] : terms) {
    Complex t(c.to_double(), 0);
    for (int i = 0; i < vars; ++i)
      if (e[i]) t *= std::pow(x[i], e[i]);
    s += t;
  }
  return s;
}

std::string MPoly::str() const {
  if (terms.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (auto it = terms.rbegin(); it != terms.rend(); ++it) {
    const auto& [e, c] = *it;
    Rational mag = abs(c);
    os << (first ? (c.sign() < 0 ? "-" : "") : (c.sign() < 0 ? " - " : " + "));
    first = false;
    bool constant_term = std::all_of(e.begin(), e.end(), [](int v) { return v == 0; });
    bool wrote = false;
    if (mag != Rational(1) || constant_term) {
      os << mag.short_str();
      wrote = true;
    }
    for (int i = 0; i < vars; ++i) {
      if (!e[i]) continue;
      os << (wrote ? "*" : "") << "x" << i;
      if (e[i] > 1) os << "^" << e[i];
      wrote = true;
    }
  }
  return os.str();
}

MPoly vandermonde(int N) {
  MPoly p = MPoly::constant(N, Rational(1));
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) p = p * (MPoly::variable(N, j) - MPoly::variable(N, i));
  return p;
}

Rational MultiMomentFunctional::a(const std::vector<int>& k) const {
  Rational v(1);
  for (std::size_t j = 0; j < coords.size(); ++j) {
    if (k[j] >= static_cast<int>(coords[j].size()))
      throw ValidationError("insufficient_moments", "coordinate moment of order " + std::to_string(k[j]) +
                                                        " is not available", "moments");
    v *= coords[j][static_cast<std::size_t>(k[j])];
  }
  return v;
}

std::vector<std::vector<int>> multi_indices_below(const std::vector<int>& n) {
  std::vector<std::vector<int>> out;
  std::vector<int> k(n.size(), 0);
  while (true) {
    out.push_back(k);
    std::size_t i = 0;
    while (i < k.size() && k[i] == n[i]) k[i++] = 0;
    if (i == k.size()) break;
    ++k[i];
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    int sx = std::accumulate(x.begin(), x.end(), 0), sy = std::accumulate(y.begin(), y.end(), 0);
    if (sx != sy) return sx < sy;
    return x < y;
  });
  return out;
}

namespace {

void check_multi(const MultiMomentFunctional& F, const std::vector<int>& n) {
  if (F.coords.empty() || n.size() != F.coords.size())
    throw ValidationError("shape_mismatch", "multi-index length must match the coordinate count", "n");
  for (int v : n)
    if (v < 0) throw ValidationError("invalid_argument", "multi-index entries must be non-negative", "n");
  if (std::all_of(n.begin(), n.end(), [](int v) { return v == 0; }))
    throw ValidationError("invalid_argument", "multi-index must be nonzero", "n");
}

std::vector<int> add(const std::vector<int>& x, const std::vector<int>& y) {
  std::vector<int> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] + y[i];
  return r;
}

} // namespace

MultiGOP multi_gops_determinant(const MultiMomentFunctional& F, const std::vector<int>& n) {
  check_multi(F, n);
  const auto K = multi_indices_below(n);
  const int s = static_cast<int>(K.size()) - 1;
  RationalMatrix M(s + 1, s + 1);
  for (int j = 0; j <= s; ++j) M(0, j) = Rational(0);
  for (int r = 0; r < s; ++r)
    for (int j = 0; j <= s; ++j) M(r + 1, j) = F.a(add(K[r], K[j]));
  MultiGOP out;
  out.n = n;
  out.p = MPoly(F.dims());
  for (int j = 0; j <= s; ++j) {
    Rational d = bareiss_determinant(minor_without(M, 0, j));
    out.p.add_term(K[j], j % 2 ? -d : d);
  }
  out.degenerate = !out.p.terms.count(n);
  return out;
}

MultiGOP multi_gops_expectation(const MultiMomentFunctional& F, const std::vector<int>& n) {
  check_multi(F, n);
  const auto K = multi_indices_below(n);
  const int s = static_cast<int>(K.size()) - 1;
  std::vector<std::vector<int>> small(K.begin(), K.begin() + s);
  MultiGOP out;
  out.n = n;
  out.p = MPoly(F.dims());
  heine_expand(K, small, [&](int, const std::vector<int>& e) { return F.a(e); },
               [&](const std::vector<int>& e, const Rational& v) { out.p.add_term(e, v); });
  out.degenerate = !out.p.terms.count(n);
  return out;
}

Rational multi_expect(const MultiMomentFunctional& F, const MPoly& p) {
  Rational s(0);
  for (const auto& [e, c] : p.terms) s += c * F.a(e);
  return s;
}

// ---------------------------------------------------------------------------

Recurrence recurrence_coeffs(const MomentFunctional& F, int N) {
  if (N < 1) throw ValidationError("invalid_argument", "N must be positive", "N");
  auto inner = [&](const Poly<Rational>& p, const Poly<Rational>& q) {
    Rational s(0);
    for (int i = 0; i <= p.degree(); ++i)
      for (int j = 0; j <= q.degree(); ++j)
        if (!p.c[i].is_zero() && !q.c[j].is_zero()) s += p.c[i] * q.c[j] * F.a(i + j);
    return s;
  };
  Recurrence R;
  R.monic.push_back(Poly<Rational>::constant(Rational(1)));
  Poly<Rational> prev;
  Rational prev_norm(0);
  const auto x = Poly<Rational>::x();
  for (int k = 0; k < N; ++k) {
    const auto& p = R.monic.back();
    Rational norm = inner(p, p);
    if (norm.is_zero())
      throw ValidationError("hankel_degenerate",
                            "Hankel determinant of order " + std::to_string(k + 1) + " vanishes", "N");
    Rational alpha = inner(x * p, p) / norm;
    Rational beta = k == 0 ? norm : norm / prev_norm;
    Poly<Rational> next = (x - Poly<Rational>::constant(alpha)) * p;
    if (k > 0) next -= prev * beta;
    R.alpha.push_back(alpha);
    R.beta.push_back(beta);
    prev = p;
    prev_norm = norm;
    R.monic.push_back(next);
  }
  return R;
}

RootSet poly_roots(const Poly<Rational>& p, double tol) { return poly_roots(to_complex(p), tol); }

RootSet poly_roots(const std::vector<Complex>& coeffs, double tol) {
  std::vector<Complex> c = coeffs;
  while (!c.empty() && c.back() == Complex(0)) c.pop_back();
  const int n = static_cast<int>(c.size()) - 1;
  if (n < 1) throw ValidationError("invalid_argument", "root finding needs degree >= 1", "p");
  RootSet out;
  if (n == 1) {
    out.roots.push_back(-c[0] / c[1]);
  } else {
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(n, n);
    for (int i = 1; i < n; ++i) A(i, i - 1) = 1.0;
    for (int i = 0; i < n; ++i) A(i, n - 1) = -c[i] / c[n];
    // Parlett–Reinsch balancing
    bool done = false;
    for (int sweep = 0; !done && sweep < 100; ++sweep) {
      done = true;
      for (int i = 0; i < n; ++i) {
        double col = 0, row = 0;
        for (int j = 0; j < n; ++j)
          if (j != i) {
            col += std::abs(A(j, i));
            row += std::abs(A(i, j));
          }
        if (col == 0 || row == 0) continue;
        double g = row / 2, f = 1, s = col + row;
        while (col < g) { f *= 2; col *= 4; }
        g = row * 2;
        while (col > g) { f /= 2; col /= 4; }
        if ((col + row) / f < 0.95 * s) {
          done = false;
          A.row(i) /= f;
          A.col(i) *= f;
        }
      }
    }
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(A, false);
    if (es.info() != Eigen::Success) throw ValidationError("no_convergence", "eigenvalue iteration did not converge");
    for (int i = 0; i < n; ++i) out.roots.push_back(es.eigenvalues()(i));
  }
  // Newton polishing in extended precision
  using LC = std::complex<long double>;
  std::vector<LC> cl(c.begin(), c.end());
  auto evalp = [&](LC z, LC& d) {
    LC v(0);
    d = LC(0);
    for (int k = n; k >= 0; --k) {
      d = d * z + v;
      v = v * z + cl[k];
    }
    return v;
  };
  for (auto& r : out.roots) {
    LC z(r.real(), r.imag()), d;
    LC v = evalp(z, d);
    for (int it = 0; it < 30; ++it) {
      if (std::abs(d) == 0) break;
      LC zn = z - v / d, dn;
      LC vn = evalp(zn, dn);
      if (std::abs(vn) >= std::abs(v)) break;
      z = zn;
      v = vn;
      d = dn;
    }
    r = Complex(static_cast<double>(z.real()), static_cast<double>(z.imag()));
  }
  double scale = 1;
  for (const auto& r : out.roots) scale = std::max(scale, std::abs(r));
  for (auto& r : out.roots) {
    double re = std::fabs(r.real()) < 1e-12 * scale ? 0.0 : r.real();
    double im = std::fabs(r.imag()) < 1e-12 * scale ? 0.0 : r.imag();
    r = Complex(re, im);
  }
  std::sort(out.roots.begin(), out.roots.end(), [](const Complex& x, const Complex& y) {
    if (x.real() != y.real()) return x.real() < y.real();
    return x.imag() < y.imag();
  });
  out.min_separation = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    if (out.roots[i].imag() != 0.0) out.real = false;
    for (int j = i + 1; j < n; ++j) out.min_separation = std::min(out.min_separation, std::abs(out.roots[i] - out.roots[j]));
  }
  out.simple = n == 1 || out.min_separation > tol;
  return out;
}

QuadratureRule quadrature_rule(const MomentFunctional& F, int n, double tol) {
  if (n < 1) throw ValidationError("invalid_argument", "rule size must be positive", "n");
  for (int k = 0; k < 2 * n; ++k) F.a(k);
  GOPEntry g = gops_determinant(F, n, 1);
  if (g.degenerate) throw ValidationError("hankel_degenerate", "orthogonal polynomial of degree " + std::to_string(n) +
                                                                   " does not exist", "n");
  RootSet rs = poly_roots(g.p, tol);
  if (!rs.simple) throw ValidationError("non_simple_roots", "orthogonal polynomial has non-simple roots", "n");
  QuadratureRule rule;
  rule.n = n;
  rule.nodes = rs.roots;
  rule.node_kind = rs.real ? "real-simple" : "complex";

  Eigen::MatrixXcd V(n, n);
  Eigen::VectorXcd rhs(n);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) V(k, i) = std::pow(rs.roots[i], k);
    rhs(k) = F.a(k).to_double();
  }
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(V);
  if (lu.rank() < n) throw ValidationError("singular_system", "Vandermonde system is singular", "n");
  Eigen::VectorXcd w = lu.solve(rhs);
  rule.weights.assign(w.data(), w.data() + n);

  auto exact = recognize_nodes(rs.roots, g.p);
  if (exact && std::all_of(exact->begin(), exact->end(), [](const auto& s) { return s.is_rational(); })) {
    std::vector<Rational> nodes;
    for (const auto& s : *exact) nodes.push_back(s.a);
    RationalMatrix Vq(n, n + 1);
    for (int k = 0; k < n; ++k) {
      for (int i = 0; i < n; ++i) Vq(k, i) = pow(nodes[i], k);
      Vq(k, n) = F.a(k);
    }
    // Cramer's rule keeps everything exact.
    RationalMatrix base = Vq.leftCols(n);
    Rational det = bareiss_determinant(base);
    if (!det.is_zero()) {
      std::vector<Rational> ws;
      for (int i = 0; i < n; ++i) {
        RationalMatrix Mi = base;
        Mi.col(i) = Vq.col(n);
        ws.push_back(bareiss_determinant(Mi) / det);
      }
      bool ok = true;
      for (int k = 0; k < 2 * n && ok; ++k) {
        Rational s(0);
        for (int i = 0; i < n; ++i) s += ws[i] * pow(nodes[i], k);
        ok = s == F.a(k);
      }
      if (ok) {
        rule.exact_nodes = nodes;
        rule.exact_weights = ws;
      }
    }
  }

  rule.exactness_degree = -1;
  for (int k = 0; k < 2 * n; ++k) {
    Complex s(0);
    for (int i = 0; i < n; ++i) s += rule.weights[i] * std::pow(rule.nodes[i], k);
    double e = rule.exact_weights ? 0.0 : rel_err(s, F.a(k));
    rule.residuals.push_back(e);
    rule.max_residual = std::max(rule.max_residual, e);
    if (e <= 1e-9 && rule.exactness_degree == k - 1) rule.exactness_degree = k;
  }
  return rule;
}

Complex quadrature_apply(const QuadratureRule& rule, const MPoly& P) {
  for (int v = 0; v < P.vars; ++v)
    if (P.degree_in(v) > 2 * rule.n - 1)
      throw ValidationError("degree_violation", "degree in x" + std::to_string(v) + " exceeds 2n-1", "P");
  return quadrature_apply(rule, P.vars, [&](const std::vector<Complex>& x) { return P.evaluate(x); });
}

Complex quadrature_apply(const QuadratureRule& rule, int vars,
                         const std::function<Complex(const std::vector<Complex>&)>& P) {
  if (std::pow(static_cast<double>(rule.n), vars) > kPermutationLimit)
    throw SizeLimitError("node tuple count exceeds 1e7", "N");
  std::vector<int> idx(vars, 0);
  std::vector<Complex> x(vars);
  Complex total(0);
  while (true) {
    Complex w(1);
    for (int v = 0; v < vars; ++v) {
      x[v] = rule.nodes[idx[v]];
      w *= rule.weights[idx[v]];
    }
    total += w * P(x);
    int v = 0;
    while (v < vars && ++idx[v] == rule.n) idx[v++] = 0;
    if (v == vars) break;
  }
  return total;
}

DiscriminantResult discriminant_moment(const LawSpec& law, int N, int k, DiscriminantMethod method) {
  if (N < 1 || k < 1) throw ValidationError("invalid_argument", "require N >= 1 and k >= 1", N < 1 ? "N" : "k");
  DiscriminantResult out;
  out.method = method;
  const MomentFunctional F = MomentFunctional::from_law(law);
  if (N == 1) {
    out.value = 1;
    out.exact = Rational(1);
    return out;
  }
  switch (method) {
    case DiscriminantMethod::quadrature: {
      const int n = k * (N - 1) + 1;
      QuadratureRule rule = quadrature_rule(F, n);
      out.rule_size = n;
      Complex v = quadrature_apply(rule, N, [&](const std::vector<Complex>& x) {
        Complex d(1);
        for (int i = 0; i < N; ++i)
          for (int j = i + 1; j < N; ++j) d *= x[j] - x[i];
        return std::pow(d, 2 * k);
      });
      out.value = v.real();
      break;
    }
    case DiscriminantMethod::expansion: {
      MPoly P = vandermonde(N).pow(2 * k);
      Rational s(0);
      for (const auto& [e, c] : P.terms) {
        Rational t = c;
        for (int v : e) t *= F.a(v);
        s += t;
      }
      out.exact = s;
      out.value = s.to_double();
      break;
    }
    case DiscriminantMethod::lu_gaussian: {
      for (int j = 3; j <= law.max_order(); ++j)
        if (!law.cumulant(j).is_zero())
          throw ValidationError("not_gaussian", "the closed form applies to Gaussian laws only", "law");
      const double var = law.cumulant(2).to_double();
      double logv = 0.5 * N * (N - 1) * k * std::log(var);
      for (int j = 1; j <= N; ++j) logv += j * k * std::log(static_cast<double>(j));
      for (int j = 2; j <= N; ++j)
        for (int i = 1; i < j; ++i) logv += std::lgamma(k + static_cast<double>(i) / j) - std::lgamma(static_cast<double>(i) / j);
      out.value = std::exp(logv);
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

Poly<Rational> translated_moment_poly(const MomentFunctional& F, int m) {
  std::vector<Rational> c(m + 1, Rational(0));
  for (int i = 0; i <= m; ++i) {
    Rational v = binomial(m, i) * F.a(i);
    c[m - i] = (m - i) % 2 ? -v : v;
  }
  return Poly<Rational>(std::move(c));
}

Poly<Rational> discriminant_poly(const MomentFunctional& F, int n, int k) {
  if (n < 1 || k < 1) throw ValidationError("invalid_argument", "require n >= 1 and k >= 1", n < 1 ? "n" : "k");
  const int h = 2 * k - 1;
  // g_e(x) = E[(X − x)^h X^e]
  std::map<int, Poly<Rational>> g;
  auto g_of = [&](int e) -> const Poly<Rational>& {
    auto it = g.find(e);
    if (it != g.end()) return it->second;
    std::vector<Rational> c(h + 1, Rational(0));
    for (int j = 0; j <= h; ++j) {
      Rational v = binomial(h, j) * F.a(e + j);
      c[h - j] = (h - j) % 2 ? -v : v;
    }
    return g.emplace(e, Poly<Rational>(std::move(c))).first->second;
  };
  MPoly D = vandermonde(n).pow(2 * k);
  Poly<Rational> out;
  for (const auto& [e, c] : D.terms) {
    Poly<Rational> t = Poly<Rational>::constant(c);
    for (int v : e) t = t * g_of(v);
    out += t;
  }
  return out;
}

std::optional<Poly<Rational>> expand_power_sum(const std::vector<ExactNode>& terms, int m) {
  Rational R(0);
  for (const auto& t : terms)
    if (!t.node.is_rational()) {
      if (R.is_zero()) R = t.node.r;
      else if (R != t.node.r) return std::nullopt;
    }
  std::vector<QS> total(m + 1);
  for (const auto& t : terms) {
    std::vector<QS> base{{t.node.a, t.node.is_rational() ? Rational(0) : t.node.b}, {Rational(-1), Rational(0)}};
    std::vector<QS> p{{Rational(1), Rational(0)}};
    for (int k = 0; k < m; ++k) p = qs_poly_mul(p, base, R);
    for (int k = 0; k <= m; ++k) {
      total[k].a += p[k].a * t.weight;
      total[k].b += p[k].b * t.weight;
    }
  }
  std::vector<Rational> c;
  for (const auto& q : total) {
    if (!q.b.is_zero()) return std::nullopt;
    c.push_back(q.a);
  }
  return Poly<Rational>(std::move(c));
}

namespace {

// Σ c_j (r_j − x)^m against the target, coefficientwise and relative.
double expansion_residual(const std::vector<Complex>& r, const std::vector<Complex>& c, const Poly<Rational>& target,
                          int m) {
  std::vector<Complex> acc(m + 1, Complex(0));
  for (std::size_t j = 0; j < r.size(); ++j) {
    std::vector<Complex> p{Complex(1)};
    for (int k = 0; k < m; ++k) {
      std::vector<Complex> q(p.size() + 1, Complex(0));
      for (std::size_t i = 0; i < p.size(); ++i) {
        q[i] += p[i] * r[j];
        q[i + 1] -= p[i];
      }
      p = std::move(q);
    }
    for (int k = 0; k <= m; ++k) acc[k] += c[j] * p[k];
  }
  double scale = 1, err = 0;
  for (int k = 0; k <= m; ++k) scale = std::max(scale, std::fabs(target.coeff(k).to_double()));
  for (int k = 0; k <= m; ++k) err = std::max(err, std::abs(acc[k] - Complex(target.coeff(k).to_double(), 0)));
  return err / scale;
}

void attach_exact(SylvesterResult& res) {
  auto nodes = recognize_nodes(res.nodes, res.apolar);
  if (!nodes) return;
  std::vector<ExactNode> terms;
  for (std::size_t j = 0; j < nodes->size(); ++j) {
    if (std::fabs(res.weights[j].imag()) > 1e-9) return;
    auto w = recognize_rational(res.weights[j].real(), 100000, 1e-9);
    if (!w) return;
    terms.push_back({(*nodes)[j], *w});
  }
  auto expanded = expand_power_sum(terms, res.degree);
  if (expanded && *expanded == res.target) res.exact = std::move(terms);
}

} // namespace

SylvesterResult sylvester_appel(const MomentFunctional& F, int n, double tol) {
  SylvesterResult res;
  res.degree = 2 * n - 1;
  res.target = translated_moment_poly(F, res.degree);
  QuadratureRule rule = quadrature_rule(F, n, tol);
  Recurrence rec = recurrence_coeffs(F, n);
  res.apolar = rec.monic.back();
  res.nodes = rule.nodes;
  res.weights = rule.weights;
  res.weight_sum = std::accumulate(rule.weights.begin(), rule.weights.end(), Complex(0));
  res.residuals.push_back(rule.max_residual);
  res.residuals.push_back(expansion_residual(res.nodes, res.weights, res.target, res.degree));
  res.max_residual = *std::max_element(res.residuals.begin(), res.residuals.end());
  res.sum_equals_moment = std::abs(res.weight_sum - Complex(F.a(0).to_double(), 0)) <= 1e-9;
  attach_exact(res);
  return res;
}

SylvesterResult sylvester_decompose(const MomentFunctional& F, int n, int k, double tol) {
  SylvesterResult res;
  const int m = n * (2 * k - 1);
  res.degree = m;
  res.target = discriminant_poly(F, n, k);
  res.apolar = translated_moment_poly(F, m);
  // p_{n,k}(x) = Σ_h C(m,h)(−1)^h b_{m−h} x^h
  res.b.assign(m + 1, Rational(0));
  for (int h = 0; h <= m; ++h) {
    Rational v = res.target.coeff(h) / binomial(m, h);
    res.b[m - h] = h % 2 ? -v : v;
  }
  res.discriminant_moment = res.b[0];
  RootSet rs = poly_roots(res.apolar, tol);
  res.simple_roots = rs.simple;
  res.nodes = rs.roots;
  // Equations k' = 1..m (exponents m−1..0); k' = 0 is checked afterwards.
  Eigen::MatrixXcd M(m, m);
  Eigen::VectorXcd rhs(m);
  for (int kk = 1; kk <= m; ++kk) {
    for (int j = 0; j < m; ++j) M(kk - 1, j) = std::pow(rs.roots[j], m - kk);
    rhs(kk - 1) = res.b[m - kk].to_double();
  }
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(M);
  if (lu.rank() < m) {
    res.singular = true;
    res.residuals = {std::numeric_limits<double>::infinity()};
    res.max_residual = res.residuals[0];
    return res;
  }
  Eigen::VectorXcd c = lu.solve(rhs);
  res.weights.assign(c.data(), c.data() + m);
  res.weight_sum = c.sum();
  Complex top(0);
  for (int j = 0; j < m; ++j) top += c(j) * std::pow(rs.roots[j], m);
  res.residuals.push_back(rel_err(top, res.b[m]));
  res.residuals.push_back(expansion_residual(res.nodes, res.weights, res.target, m));
  res.max_residual = *std::max_element(res.residuals.begin(), res.residuals.end());
  const double E = res.discriminant_moment.to_double();
  const double scale = std::max(1.0, std::fabs(E));
  res.sum_equals_moment = std::abs(res.weight_sum - Complex(E, 0)) <= 1e-6 * scale;
  res.sum_equals_signed_moment = std::abs(res.weight_sum - Complex(m % 2 ? -E : E, 0)) <= 1e-6 * scale;
  attach_exact(res);
  return res;
}

} // namespace ck
