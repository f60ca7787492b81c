#include "chaoskit/errors.hpp"
#include "chaoskit/orthopoly.hpp"

#include <doctest.h>

#include <cmath>

using namespace ck;

namespace {

MomentFunctional gauss(int order = 24) { return MomentFunctional::from_law(builtin_law("gaussian", {}, order)); }

// E[(X₁ − x)^{2k−1}(X₂ − x)^{2k−1}(X₂ − X₁)^{2k}] by binomial expansion.
Poly<Rational> two_point_discriminant_poly(const std::vector<Rational>& m, int k) {
  const int e = 2 * k - 1, D = 2 * k;
  std::vector<Rational> c(static_cast<std::size_t>(2 * e + 1), Rational(0));
  for (int j = 0; j <= D; ++j)
    for (int a = 0; a <= e; ++a)
      for (int b = 0; b <= e; ++b) {
        Rational t = binomial(D, j) * binomial(e, a) * binomial(e, b) * m[static_cast<std::size_t>(a + j)] *
                     m[static_cast<std::size_t>(b + D - j)];
        if (j % 2) t = -t;
        const int px = 2 * e - a - b;
        if (px % 2) t = -t;
        c[static_cast<std::size_t>(px)] += t;
      }
  return Poly<Rational>(c);
}

bool proportional(const MPoly& a, const MPoly& b, Rational* ratio) {
  if (a.terms.size() != b.terms.size() || a.terms.empty()) return false;
  Rational q = a.terms.begin()->second / b.terms.begin()->second;
  for (auto& [e, c] : a.terms) {
    auto it = b.terms.find(e);
    if (it == b.terms.end() || c != q * it->second) return false;
  }
  if (ratio) *ratio = q;
  return true;
}

} // namespace

TEST_CASE("Hankel determinants and discriminant second moments") {
  auto F = gauss();
  Rational prod(1);
  for (int n = 1; n <= 6; ++n) {
    prod *= factorial(n);
    CHECK(discriminant_second_moment(F, n) == prod);
    CHECK(discriminant_second_moment(F, n) == factorial(n) * hankel_det(F, n));
  }
  auto R = MomentFunctional::from_law(builtin_law("rademacher", {}, 10));
  CHECK(discriminant_second_moment(R, 2) == Rational(2));
  CHECK(hankel_det(R, 3).is_zero());
  CHECK(hankel_det(MomentFunctional::from_moments({Rational(1), Rational(2), Rational(5)}), 2) == Rational(1));
}

TEST_CASE("three-term recurrences") {
  auto h = recurrence_coeffs(gauss(), 6);
  for (int k = 0; k < 6; ++k) CHECK(h.alpha[k].is_zero());
  CHECK(h.beta[0] == Rational(1));
  for (int k = 1; k < 6; ++k) CHECK(h.beta[k] == Rational(k));
  for (int k = 0; k <= 6; ++k) CHECK(h.monic[k] == hermite_he(k));

  auto s = recurrence_coeffs(MomentFunctional::from_law(builtin_law("semicircle", {}, 14)), 6);
  for (int k = 0; k <= 6; ++k) CHECK(s.monic[k] == chebyshev_u(k));

  auto p = recurrence_coeffs(MomentFunctional::from_law(builtin_law("free_poisson_centered", {{"lambda", Rational(3)}}, 12)), 5);
  CHECK(p.alpha[0].is_zero());
  for (int k = 1; k < 5; ++k) {
    CHECK(p.alpha[k] == Rational(1));
    CHECK(p.beta[k] == Rational(3));
  }
  CHECK_THROWS_AS(recurrence_coeffs(gauss(6), 6), ValidationError);
}

TEST_CASE("Gaussian quadrature") {
  auto r = quadrature_rule(gauss(), 3);
  REQUIRE(r.nodes.size() == 3);
  CHECK(r.nodes[0].real() == doctest::Approx(-std::sqrt(3.0)));
  CHECK(r.nodes[1].real() == doctest::Approx(0).epsilon(1e-12));
  CHECK(r.nodes[2].real() == doctest::Approx(std::sqrt(3.0)));
  CHECK(r.weights[0].real() == doctest::Approx(1.0 / 6));
  CHECK(r.weights[1].real() == doctest::Approx(2.0 / 3));
  CHECK(r.exactness_degree == 5);
  CHECK(r.node_kind == "real-simple");
  CHECK(r.max_residual < 1e-10);
  // E[N⁴] = 3 through the rule.
  CHECK(quadrature_apply(r, 1, [](const std::vector<Complex>& x) { return std::pow(x[0], 4); }).real() ==
        doctest::Approx(3));

  auto rad = quadrature_rule(MomentFunctional::from_law(builtin_law("rademacher", {}, 10)), 2);
  REQUIRE(rad.exact_nodes);
  CHECK((*rad.exact_nodes)[0] == Rational(-1));
  CHECK((*rad.exact_weights)[1] == Rational(1, 2));
}

TEST_CASE("root finding") {
  auto r = poly_roots(Poly<Rational>({Rational(-2), Rational(0), Rational(1)}));
  REQUIRE(r.roots.size() == 2);
  CHECK(r.real);
  CHECK(r.simple);
  CHECK(r.roots[1].real() == doctest::Approx(std::sqrt(2.0)));
  CHECK(r.min_separation == doctest::Approx(2 * std::sqrt(2.0)));
  auto c = poly_roots(Poly<Rational>({Rational(1), Rational(0), Rational(1)}));
  CHECK_FALSE(c.real);
  auto d = poly_roots(Poly<Rational>({Rational(1), Rational(-2), Rational(1)}));
  CHECK_FALSE(d.simple);
}

TEST_CASE("discriminant moments by three routes") {
  auto law = builtin_law("gaussian", {}, 40);
  for (auto method : {DiscriminantMethod::quadrature, DiscriminantMethod::expansion, DiscriminantMethod::lu_gaussian}) {
    CHECK(discriminant_moment(law, 2, 2, method).value == doctest::Approx(12));
    CHECK(discriminant_moment(law, 3, 2, method).value == doctest::Approx(4320));
    CHECK(discriminant_moment(law, 3, 1, method).value == doctest::Approx(12));
  }
  CHECK(*discriminant_moment(law, 3, 2, DiscriminantMethod::expansion).exact == Rational(4320));
}

TEST_CASE("discriminant polynomials") {
  auto F = gauss();
  for (int k = 1; k <= 3; ++k) CHECK(discriminant_poly(F, 2, k) == two_point_discriminant_poly(F.base, k));
  auto p22 = discriminant_poly(F, 2, 2);
  CHECK(p22 == Poly<Rational>({Rational(-360), Rational(0), Rational(180), Rational(0), Rational(0), Rational(0),
                               Rational(12)}));
  auto U = MomentFunctional::from_law(builtin_law("uniform", {}, 24));
  CHECK(discriminant_poly(U, 2, 2) == two_point_discriminant_poly(U.base, 2));
  // A_m(x) = E[(X − x)^m]
  CHECK(translated_moment_poly(F, 2) == Poly<Rational>({Rational(1), Rational(0), Rational(1)}));
  CHECK(translated_moment_poly(F, 3) == Poly<Rational>({Rational(0), Rational(-3), Rational(0), Rational(-1)}));
}

TEST_CASE("power sums in a quadratic field") {
  std::vector<ExactNode> rational{{Surd<Rational>(Rational(2)), Rational(1)}};
  CHECK(*expand_power_sum(rational, 2) == Poly<Rational>({Rational(4), Rational(-4), Rational(1)}));
  Surd<Rational> r3(Rational(0), Rational(1), Rational(3));
  std::vector<ExactNode> conj{{r3, Rational(1, 2)}, {Surd<Rational>(Rational(0), Rational(-1), Rational(3)), Rational(1, 2)}};
  CHECK(*expand_power_sum(conj, 2) == Poly<Rational>({Rational(3), Rational(0), Rational(1)}));
  std::vector<ExactNode> mixed{{r3, Rational(1)}, {Surd<Rational>(Rational(0), Rational(1), Rational(2)), Rational(1)}};
  CHECK_FALSE(expand_power_sum(mixed, 2));
}

TEST_CASE("Sylvester decompositions") {
  auto F = gauss();
  auto a = sylvester_appel(F, 3);
  CHECK(a.degree == 5);
  CHECK(a.max_residual < 1e-9);
  CHECK(a.simple_roots);

  auto s = sylvester_decompose(F, 2, 2);
  CHECK(s.degree == 6);
  CHECK(s.discriminant_moment == Rational(12));
  CHECK(s.sum_equals_moment);
  CHECK(s.weight_sum.real() == doctest::Approx(12));
  if (s.exact) {
    auto back = expand_power_sum(*s.exact, s.degree);
    REQUIRE(back);
    CHECK(*back == s.target);
  }
}

TEST_CASE("generalized orthogonal polynomials") {
  auto F = gauss(30).with_translated_tails(4);
  for (int n = 1; n <= 4; ++n) {
    auto det = gops_determinant(F, n, 1);
    auto ex = gops_expectation(F, n, 1);
    auto q = proportionality(ex.p, det.p);
    REQUIRE(q);
    CHECK(*q == factorial(n));
    // m = 1 recovers the ordinary orthogonal polynomial.
    auto he = hermite_he(n);
    auto q2 = proportionality(det.p, he);
    REQUIRE(q2);
    for (int m = 2; m <= n; ++m) {
      auto d2 = gops_determinant(F, n, m);
      auto e2 = gops_expectation(F, n, m);
      auto r = proportionality(e2.p, d2.p);
      REQUIRE(r);
      CHECK(*r == factorial(n - m + 1));
      auto prof = orthogonality_profile(F, d2.p, n - m);
      for (auto& v : prof) CHECK(v.is_zero());
    }
  }
  CHECK(gops_table(F, 3).size() == 6);
}

TEST_CASE("multivariate polynomials") {
  auto x = MPoly::variable(2, 0), y = MPoly::variable(2, 1);
  auto p = (x - y).pow(2);
  CHECK(p.terms.size() == 3);
  CHECK(p.degree_in(0) == 2);
  CHECK(p.evaluate({Complex(3), Complex(1)}).real() == doctest::Approx(4));
  auto v = vandermonde(3);
  CHECK(v.evaluate({Complex(1), Complex(2), Complex(4)}).real() == doctest::Approx(1 * 3 * 2));
  CHECK(multi_indices_below({1, 1}).size() == 4);
}

TEST_CASE("multivariate generalized orthogonal polynomials") {
  MultiMomentFunctional F;
  auto g = builtin_law("gaussian", {}, 20).moments;
  F.coords = {g, g};
  auto det = multi_gops_determinant(F, {1, 1});
  auto ex = multi_gops_expectation(F, {1, 1});
  Rational ratio;
  REQUIRE(proportional(ex.p, det.p, &ratio));
  CHECK(ratio == Rational(6));
  // Orthogonal to the lower monomials 1, x, y.
  for (auto& k : std::vector<std::vector<int>>{{0, 0}, {1, 0}, {0, 1}}) {
    MPoly mono(2);
    mono.add_term(k, Rational(1));
    CHECK(multi_expect(F, det.p * mono).is_zero());
  }
}
