#include "chaoskit/errors.hpp"
#include "chaoskit/laws.hpp"

#include <doctest.h>

#include <random>

using namespace ck;

namespace {

// m_n = Σ_π Π_B κ_|B| by explicit enumeration.
std::vector<Rational> moments_by_enumeration(const std::vector<Rational>& kappa, LawKind kind) {
  std::vector<Rational> m(kappa.size(), Rational(0));
  m[0] = Rational(1);
  for (std::size_t n = 1; n < kappa.size(); ++n) {
    PartitionFilter f;
    f.noncrossing = kind == LawKind::free_;
    for (auto& p : enumerate_partitions(static_cast<int>(n), f)) {
      Rational prod(1);
      for (int b : p.block_class()) prod *= kappa[static_cast<std::size_t>(b)];
      m[n] += prod;
    }
  }
  return m;
}

Rational ratio(long v) { return Rational(v); }

} // namespace

TEST_CASE("builtin moment sequences") {
  auto g = builtin_law("gaussian", {}, 12);
  auto s = builtin_law("semicircle", {}, 12);
  auto fp = builtin_law("free_poisson_centered", {}, 8);
  auto cp = builtin_law("centered_poisson", {}, 6);
  for (int k = 1; k <= 6; ++k) {
    CHECK(g.moment(2 * k) == Rational(static_cast<long>(double_factorial(2 * k - 1))));
    CHECK(g.moment(2 * k - 1) == Rational(0));
    CHECK(s.moment(2 * k) == Rational(static_cast<long>(catalan(k))));
  }
  for (int k = 0; k <= 8; ++k) CHECK(fp.moment(k) == Rational(static_cast<long>(riordan(k))));
  // E[(P − 1)^k], P ~ Poisson(1)
  const long centered_bell[] = {1, 0, 1, 1, 4, 11, 41};
  for (int k = 0; k <= 6; ++k) CHECK(cp.moment(k) == ratio(centered_bell[k]));

  auto u = builtin_law("uniform", {}, 6);
  CHECK(u.moment(2) == Rational(1));
  CHECK(u.moment(4) == Rational(9, 5));
  CHECK(u.cumulant(4) == Rational(-6, 5));

  auto r = builtin_law("rademacher", {}, 6);
  CHECK(r.cumulant(2) == Rational(1));
  CHECK(r.cumulant(4) == Rational(-2));
  CHECK(r.cumulant(6) == Rational(16));
  auto fr = builtin_law("free_rademacher", {}, 8);
  CHECK(fr.cumulant(4) == Rational(-1));
  CHECK(fr.cumulant(6) == Rational(2));
  CHECK(fr.cumulant(8) == Rational(-5));

  // F(ν): κ_k = 2^{k−1}(k−1)! ν for k ≥ 2
  auto gf = builtin_law("gamma_F", {{"nu", Rational(3)}}, 7);
  CHECK(gf.moment(1) == Rational(0));
  for (int k = 2; k <= 7; ++k) CHECK(gf.cumulant(k) == pow(Rational(2), k - 1) * factorial(k - 1) * Rational(3));

  auto t = builtin_law("tetilla", {}, 6);
  CHECK(t.kind == LawKind::free_);
  CHECK(t.moment(2) == Rational(1));
  CHECK(t.moment(4) == Rational(5, 2));
  CHECK(t.moment(3) == Rational(0));

  auto v = builtin_law("gaussian", {{"var", Rational(4)}}, 4);
  CHECK(v.moment(4) == Rational(48));
}

TEST_CASE("parameters are validated") {
  CHECK_THROWS_AS(builtin_law("cauchy"), ValidationError);
  CHECK_THROWS_AS(builtin_law("gaussian", {{"lambda", Rational(1)}}), ValidationError);
  CHECK_THROWS_AS(builtin_law("centered_poisson", {{"lambda", Rational(-1)}}), ValidationError);
  CHECK_THROWS_AS(parse_law_argument("gaussian:var"), ValidationError);
  CHECK_THROWS_AS(parse_law_argument("gaussian:var=x"), ValidationError);
  auto p = parse_law_argument("free_poisson:lambda=2", 5);
  CHECK(p.cumulant(5) == Rational(2));
  CHECK(p.kind == LawKind::free_);
  CHECK(builtin_law_names().size() == 9);
  CHECK_THROWS_AS(builtin_law("gaussian").moment(11), ValidationError);
}

TEST_CASE("moment cumulant conversion against partition enumeration") {
  std::mt19937_64 g(11);
  std::uniform_int_distribution<int> v(-5, 5);
  for (auto kind : {LawKind::classical, LawKind::free_}) {
    for (int rep = 0; rep < 4; ++rep) {
      std::vector<Rational> kappa(9, Rational(0));
      for (std::size_t k = 1; k < kappa.size(); ++k) kappa[k] = Rational(v(g), 1 + static_cast<int>(k % 3));
      auto want = moments_by_enumeration(kappa, kind);
      auto got = convert(kappa, SeqKind::cumulants, kind);
      CHECK(got == want);
      auto back = convert(got, SeqKind::moments, kind);
      for (std::size_t k = 1; k < kappa.size(); ++k) CHECK(back[k] == kappa[k]);
    }
  }
}

TEST_CASE("long sequences convert without hitting the partition cap") {
  auto g = builtin_law("gaussian", {}, 40);
  Rational df(1);
  for (int k = 39; k > 1; k -= 2) df *= Rational(k);
  CHECK(g.moment(40) == df);
  auto s = builtin_law("free_poisson_centered", {}, 30);
  CHECK(s.moment(30) == Rational(static_cast<long>(riordan(30))));
}

TEST_CASE("orthogonal polynomials") {
  CHECK(hermite_he(4) == Poly<Rational>({Rational(3), Rational(0), Rational(-6), Rational(0), Rational(1)}));
  CHECK(chebyshev_u(3) == Poly<Rational>({Rational(0), Rational(-2), Rational(0), Rational(1)}));
  auto c2 = free_charlier(2, Rational(3));
  // (x − 1)x − 3
  CHECK(c2 == Poly<Rational>({Rational(-3), Rational(-1), Rational(1)}));
  CHECK(poly_eval_hermite(5, Rational(2)) == hermite_he(5)(Rational(2)));
  CHECK(poly_eval_chebyshev(6, Rational(1, 3)) == chebyshev_u(6)(Rational(1, 3)));
  CHECK(poly_eval_free_charlier(4, Rational(5), Rational(2)) == free_charlier(4, Rational(2))(Rational(5)));

  auto g = builtin_law("gaussian", {}, 12);
  auto s = builtin_law("semicircle", {}, 12);
  for (int j = 0; j <= 5; ++j)
    for (int k = 0; k <= 5; ++k) {
      CHECK(expect(g, hermite_he(j) * hermite_he(k)) == (j == k ? factorial(k) : Rational(0)));
      CHECK(expect(s, chebyshev_u(j) * chebyshev_u(k)) == (j == k ? Rational(1) : Rational(0)));
    }
  // C_{0,k} are orthogonal for the centered free Poisson law of rate t.
  auto fp = builtin_law("free_poisson_centered", {{"lambda", Rational(2)}}, 10);
  for (int j = 0; j <= 4; ++j)
    for (int k = 0; k < j; ++k) CHECK(expect(fp, free_charlier(j, Rational(2)) * free_charlier(k, Rational(2))).is_zero());
}

TEST_CASE("transformed laws") {
  auto g = builtin_law("gaussian", {}, 18);
  auto s = builtin_law("semicircle", {}, 18);
  for (int h = 1; h <= 3; ++h) {
    auto H = transformed_law(LawKind::classical, h, 4);
    auto U = transformed_law(LawKind::free_, h, 4);
    for (int k = 1; k <= 4; ++k) {
      if (h * k > 12) continue;
      CHECK(H.moment(k) == expect(g, hermite_he(h).pow(k)));
      CHECK(U.moment(k) == expect(s, chebyshev_u(h).pow(k)));
    }
  }
  CHECK(transformed_law(LawKind::classical, 2, 2).name == "H2(N)");
  CHECK_THROWS_AS(transformed_law(LawKind::free_, 0, 2), ValidationError);
}

TEST_CASE("shifted laws") {
  auto g = builtin_law("gaussian", {}, 6).shifted(Rational(1));
  CHECK(g.moment(1) == Rational(1));
  CHECK(g.moment(2) == Rational(2));
  CHECK(g.moment(4) == Rational(10));
  CHECK_FALSE(g.centered());
  CHECK(g.cumulant(2) == Rational(1));
  CHECK(g.cumulant(3) == Rational(0));
}

TEST_CASE("multivariate cumulants") {
  for (auto name : {"gaussian", "centered_poisson", "semicircle", "free_poisson_centered", "rademacher"}) {
    auto law = builtin_law(name, {}, 8);
    for (int n = 2; n <= 6; ++n) {
      auto k = multivariate_cumulant([&](const std::vector<int>& b) { return law.moment(static_cast<int>(b.size())); },
                                     n, law.kind);
      CHECK(k == law.cumulant(n));
    }
  }
  // Independent coordinates have vanishing mixed cumulants.
  auto g = builtin_law("gaussian", {}, 8);
  auto mixed = multivariate_cumulant(
      [&](const std::vector<int>& b) {
        int first = 0, second = 0;
        for (int e : b) (e <= 2 ? first : second)++;
        return g.moment(first) * g.moment(second);
      },
      4, LawKind::classical);
  CHECK(mixed.is_zero());
}

TEST_CASE("law JSON round trip") {
  auto law = builtin_law("tetilla", {}, 6);
  auto back = law_from_json(law_to_json(law));
  CHECK(back.kind == law.kind);
  CHECK(back.moments == law.moments);
  CHECK(back.cumulants == law.cumulants);
  auto custom = law_from_json(R"({"name":"custom","kind":"classical","moments":["1","0","2","0","12"]})");
  CHECK(custom.max_order() == 4);
  CHECK(custom.cumulant(4) == Rational(0));
  CHECK_THROWS_AS(law_from_json(R"({"name":"x","kind":"quantum","moments":[1,0,1]})"), ValidationError);
  CHECK_THROWS_AS(law_from_json(R"({"name":"x","kind":"free","moments":[2,0,1]})"), ValidationError);
  CHECK_THROWS_AS(law_from_json("[]"), ValidationError);
}
