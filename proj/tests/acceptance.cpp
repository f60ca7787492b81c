// One PASS/FAIL line per acceptance criterion, followed by indented detail.
// Exit status is the number of failed criteria.

#include "chaoskit/homsum.hpp"
#include "chaoskit/kernels.hpp"
#include "chaoskit/laws.hpp"
#include "chaoskit/orthopoly.hpp"
#include "chaoskit/partlat.hpp"
#include "chaoskit/stochsim.hpp"
#include "support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

using namespace ck;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back("violated: " + what);
    }
  }
  void note(const std::string& s) { notes.push_back(s); }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

bool rel_close(double a, double b, double tol) { return std::fabs(a - b) <= tol * std::max(1.0, std::fabs(b)); }

// --- 1 ---------------------------------------------------------------------
Outcome discriminant_golden() {
  Outcome o;
  const auto t0 = Clock::now();
  const LawSpec g = builtin_law("gaussian", {}, 16);
  for (auto [N, want] : {std::pair{3, 4320.0}, std::pair{2, 12.0}}) {
    for (auto m : {DiscriminantMethod::quadrature, DiscriminantMethod::expansion, DiscriminantMethod::lu_gaussian}) {
      auto r = discriminant_moment(g, N, 2, m);
      std::string name = m == DiscriminantMethod::quadrature ? "quadrature"
                         : m == DiscriminantMethod::expansion ? "expansion"
                                                               : "lu_gaussian";
      o.note("N=" + std::to_string(N) + " " + name + ": " + fmt(r.value));
      o.require(rel_close(r.value, want, 1e-6), "E[Delta^4] N=" + std::to_string(N) + " by " + name);
    }
  }
  const double s = seconds_since(t0);
  o.note("runtime " + fmt(s) + " s");
  o.require(s < 5, "runtime under 5 s");
  return o;
}

// --- 2 ---------------------------------------------------------------------
Outcome gauss_hermite_five() {
  Outcome o;
  auto F = MomentFunctional::from_law(builtin_law("gaussian", {}, 12));
  auto rule = quadrature_rule(F, 5);
  const double want[5] = {0.01125741133, 0.2220759228, 0.5333333333, 0.2220759228, 0.01125741133};
  for (int i = 0; i < 5; ++i) {
    o.note("node " + fmt(rule.nodes[i].real()) + " weight " + fmt(rule.weights[i].real()));
    o.require(std::abs(rule.weights[i] - Complex(want[i], 0)) <= 1e-8, "weight " + std::to_string(i + 1));
  }
  for (int k = 0; k <= 9; ++k) {
    Complex s = 0;
    for (int i = 0; i < 5; ++i) s += rule.weights[i] * std::pow(rule.nodes[i], k);
    const double err = std::abs(s - Complex(F.a(k).to_double(), 0));
    o.require(err <= 1e-9, "exactness at k=" + std::to_string(k) + " (error " + fmt(err) + ")");
  }
  o.note("max residual " + fmt(rule.max_residual) + ", exactness degree " + std::to_string(rule.exactness_degree));
  return o;
}

// --- 3 ---------------------------------------------------------------------
Outcome sylvester_suite() {
  Outcome o;
  auto F = MomentFunctional::from_law(builtin_law("gaussian", {}, 40));
  const Rational half(1, 2), sixth(1, 6), two_thirds(2, 3);
  using S = Surd<Rational>;
  auto same_set = [](const std::vector<ExactNode>& got, std::vector<std::pair<S, Rational>> want) {
    if (got.size() != want.size()) return false;
    for (const auto& e : got) {
      bool found = false;
      for (auto it = want.begin(); it != want.end(); ++it)
        if (it->first == e.node && it->second == e.weight) {
          want.erase(it);
          found = true;
          break;
        }
      if (!found) return false;
    }
    return true;
  };

  auto a3 = sylvester_appel(F, 2);
  o.require(a3.exact && same_set(*a3.exact, {{S(Rational(-1)), half}, {S(Rational(1)), half}}),
            "A3 = 1/2 (1 - x)^3 + 1/2 (-1 - x)^3");
  auto a5 = sylvester_appel(F, 3);
  o.require(a5.exact && same_set(*a5.exact, {{S(Rational(0), Rational(-1), Rational(3)), sixth},
                                              {S(Rational(0)), two_thirds},
                                              {S(Rational(0), Rational(1), Rational(3)), sixth}}),
            "A5 nodes {-sqrt3, 0, sqrt3} with weights {1/6, 2/3, 1/6}");
  if (a5.exact)
    for (const auto& e : *a5.exact) o.note("A5 node " + e.node.str() + " weight " + e.weight.str());

  auto p22 = sylvester_decompose(F, 2, 2);
  const Poly<Rational> stated(std::vector<Rational>{Rational(-360), 0, Rational(90), 0, 0, 0, Rational(12)});
  o.note("p_{2,2} computed: " + poly_pretty(p22.target) + "; stated: " + poly_pretty(stated));
  o.require(p22.target == stated, "p_{2,2} = 12x^6 + 90x^2 - 360");
  o.note("sum of weights " + fmt(p22.weight_sum.real()) + " (imag " + fmt(p22.weight_sum.imag()) + ")");
  o.require(std::abs(p22.weight_sum - Complex(12, 0)) <= 1e-5, "sum of c_j = 12");
  o.require(p22.max_residual <= 1e-5, "decomposition residual");
  return o;
}

// --- 4 and 6 share a grid --------------------------------------------------
struct GridCase {
  Kernel<Rational> f;
  std::string law;
  int m;
};

std::vector<GridCase> moment_grid(const std::vector<std::string>& laws) {
  std::vector<GridCase> out;
  std::mt19937_64 g(20240601);
  for (const auto& law : laws) {
    const bool free_law = parse_law_argument(law).kind == LawKind::free_;
    for (int d = 1; d <= 2; ++d)
      for (int n = d; n <= 3; ++n)
        for (int rep = 0; rep < 2; ++rep) {
          auto f = cktest::random_admissible(g, n, d, free_law ? "mirror" : "symmetric",
                                             free_law ? Flavor::free_ : Flavor::classical);
          for (int m = 1; m <= 4; ++m) out.push_back({f, law, m});
        }
  }
  return out;
}

Outcome oracle_equivalence() {
  Outcome o;
  const auto t0 = Clock::now();
  auto grid = moment_grid({"gaussian", "centered_poisson:lambda=1", "rademacher", "semicircle", "free_poisson:lambda=1",
                           "free_rademacher"});
  int checked = 0;
  for (const auto& c : grid) {
    SumSpec<Rational> spec{c.f, SumLaw::iid(parse_law_argument(c.law, 12))};
    auto a = moment_exact(spec, c.m);
    auto b = moment_oracle(spec, c.m);
    ++checked;
    if (!(a == b))
      o.require(false, c.law + " n=" + std::to_string(c.f.n()) + " d=" + std::to_string(c.f.d()) +
                           " m=" + std::to_string(c.m) + ": " + a.str() + " vs " + b.str());
  }
  const double s = seconds_since(t0);
  o.note(std::to_string(checked) + " cases, runtime " + fmt(s) + " s");
  o.require(s < 60, "runtime under 60 s");
  return o;
}

// --- 5 ---------------------------------------------------------------------
Outcome free_linearity() {
  Outcome o;
  std::mt19937_64 g(7);
  int ok[4] = {0, 0, 0, 0}, total[4] = {0, 0, 0, 0};
  for (int t = 0; t < 20; ++t) {
    const int d = 2 + t % 2;
    const int n = d + static_cast<int>(g() % static_cast<unsigned>(5 - d));
    auto f = cktest::random_admissible(g, n, d, "mirror", Flavor::free_);
    for (const char* y : {"free_poisson:lambda=1", "free_rademacher"}) {
      auto dec = fourth_moment_formula(SumSpec<Rational>{f, SumLaw::iid(parse_law_argument(y, 12))});
      ++total[d];
      if (dec.slice_matches) ++ok[d];
      else if (o.notes.size() < 4)
        o.note("n=" + std::to_string(n) + " d=" + std::to_string(d) + " " + y + ": phi(Q_Y^4)=" + dec.value.str() +
               ", formula=" + dec.slice_total.str());
    }
  }
  for (int d = 2; d <= 3; ++d) {
    o.note("d=" + std::to_string(d) + ": " + std::to_string(ok[d]) + "/" + std::to_string(total[d]) + " exact");
    o.require(ok[d] == total[d], "linearity at d=" + std::to_string(d));
  }
  return o;
}

// --- 6 ---------------------------------------------------------------------
Outcome classical_decomposition() {
  Outcome o;
  auto grid = moment_grid({"gaussian", "rademacher"});
  int checked = 0;
  for (const auto& c : grid) {
    if (c.m != 4) continue;
    auto dec = fourth_moment_formula(SumSpec<Rational>{c.f, SumLaw::iid(parse_law_argument(c.law, 12))});
    ++checked;
    o.require(dec.enumeration_matches, c.law + " n=" + std::to_string(c.f.n()) + " d=" + std::to_string(c.f.d()) +
                                           ": class terms " + dec.enumeration_total.str() + " vs " + dec.value.str());
    o.require(dec.corrected_matches, "closed form with corrected coefficient");
  }
  o.note(std::to_string(checked) + " kernels: class terms sum to the exact fourth moment");

  PartitionFilter four_blocks;
  four_blocks.block_class = std::vector<int>{4, 4};
  four_blocks.respects = SetPartition::intervals({2, 2, 2, 2});
  const auto count = count_partitions(8, four_blocks);
  o.note("respectful (4,4)-partitions of 2^(x)4: " + std::to_string(count) + " (closed form C(2,2)^4 2!^4 = 16)");
  o.require(count == 8, "8 respectful (4,4)-partitions");
  for (const char* law : {"gaussian", "rademacher", "uniform", "centered_poisson:lambda=1"}) {
    LawSpec L = parse_law_argument(law, 12);
    SumSpec<Rational> spec{cktest::half_kernel(), SumLaw::iid(L)};
    const Rational chi4 = L.cumulant(4);
    const Rational want = (Rational(3) + chi4) * (Rational(3) + chi4);
    auto oracle = moment_oracle(spec, 4);
    o.require(oracle == Surd<Rational>(want), std::string(law) + ": oracle (3 + chi4)^2");
    auto dec = fourth_moment_formula(spec);
    if (L.moment(3).is_zero()) {
      o.require(dec.corrected_total == Surd<Rational>(want), std::string(law) + ": corrected closed form");
      o.note(std::string(law) + ": oracle " + oracle.str() + ", stated closed form " + dec.stated_total.str() +
             ", corrected " + dec.corrected_total.str());
    }
  }
  return o;
}

// --- 7 ---------------------------------------------------------------------
Outcome counting_identities() {
  Outcome o;
  for (int k = 1; k <= 6; ++k) {
    auto p2 = count_partitions(2 * k, PartitionFilter::pairings(false));
    auto nc2 = count_partitions(2 * k, PartitionFilter::pairings(true));
    o.require(p2 == double_factorial(2 * k - 1), "|P2([2k])| = (2k-1)!! at k=" + std::to_string(k));
    o.require(nc2 == catalan(k), "|NC2([2k])| = C_k at k=" + std::to_string(k));
  }
  o.require(riordan(4) == 3, "R4 = 3");
  PartitionFilter resp = PartitionFilter::pairings(false);
  resp.respects = SetPartition::intervals({2, 2, 2, 2});
  const auto p2star = count_partitions(8, resp);
  resp.noncrossing = true;
  const auto nc2star = count_partitions(8, resp);
  const Poly<Rational> h2 = hermite_he(2), u2 = chebyshev_u(2);
  const Rational gauss = expect(builtin_law("gaussian", {}, 8), h2.pow(4));
  const Rational semi = expect(builtin_law("semicircle", {}, 8), u2.pow(4));
  o.note("|P2*(2^(x)4)| = " + std::to_string(p2star) + ", E[(N^2-1)^4] = " + gauss.str());
  o.note("|NC2*(2^(x)4)| = " + std::to_string(nc2star) + ", phi((S^2-1)^4) = " + semi.str());
  o.require(p2star == 60 && respectful_pairings(2, 4, Lattice::classical) == 60 && gauss == Rational(60),
            "|P2*(2^(x)4)| = 60 = E[(N^2-1)^4]");
  o.require(nc2star == 3 && respectful_pairings(2, 4, Lattice::noncrossing) == 3 && semi == Rational(3),
            "|NC2*(2^(x)4)| = 3 = R4");
  return o;
}

// --- 8 ---------------------------------------------------------------------
Outcome orthogonality_suite() {
  Outcome o;
  int laws_used = 0, cells = 0;
  for (const auto& name : builtin_law_names()) {
    auto F = MomentFunctional::from_law(builtin_law(name, default_law_params(name), 12));
    bool nonsingular = true;
    for (int j = 1; j <= 5; ++j) nonsingular = nonsingular && !hankel_det(F, j).is_zero();
    if (!nonsingular) {
      o.note(name + ": singular Hankel minor, skipped");
      continue;
    }
    ++laws_used;
    for (int n = 1; n <= 4; ++n)
      for (int m = 1; m <= n; ++m) {
        ++cells;
        auto det = gops_determinant(F, n, m);
        auto ex = gops_expectation(F, n, m);
        const std::string where = name + " n=" + std::to_string(n) + " m=" + std::to_string(m);
        for (const auto* e : {&det, &ex}) {
          auto prof = orthogonality_profile(F.with_translated_tails(m), e->p, n - m + 1);
          bool zero = true;
          for (int k = 0; k <= n - m; ++k) zero = zero && prof[k].is_zero();
          o.require(zero, where + ": orthogonal up to k=n-m (" + (e == &det ? "determinant" : "expectation") + ")");
          o.require(!prof[n - m + 1].is_zero(), where + ": nonvanishing at k=n-m+1");
        }
        auto q = proportionality(ex.p, det.p);
        o.require(q && !q->is_zero(), where + ": routes proportional");
      }
  }
  o.note(std::to_string(laws_used) + " laws, " + std::to_string(cells) + " (n,m) cells");
  return o;
}

// --- 9 ---------------------------------------------------------------------
Outcome kernel_golden() {
  Outcome o;
  for (int n = 3; n <= 6; ++n) {
    auto f = families::off_diagonal(n, Rational(1, n - 2));
    auto c = contraction(f, f, 1);
    bool ok = true;
    for (int h = 1; h <= n; ++h)
      for (int k = 1; k <= n; ++k) {
        const Rational want = h == k ? Rational(n - 1, n - 2) : Rational(1);
        ok = ok && c.value({h, k}) == Surd<Rational>(want);
      }
    o.require(ok, "f ~1 f table at n=" + std::to_string(n));

    auto s = families::star(n, Rational(1, n - 2));
    auto cs = norm_sq(contraction(s, s, 1));
    o.require(cs == Rational(2 * (n - 1) * (n - 1), (n - 2) * (n - 2)),
              "star kernel contraction norm at n=" + std::to_string(n) + " (got " + cs.str() + ")");

    auto i1 = influence(families::star(n, Rational(1, 2 * n - 2)));
    auto i2 = influence(families::off_diagonal(n, Rational(1, n * (n - 1))));
    auto i3 = influence(families::avoid_first(n, Rational(1, (n - 1) * (n - 2))));
    bool p1 = i1[0] == Rational(1), p2 = true, p3 = i3[0].is_zero();
    for (int j = 1; j < n; ++j) {
      p1 = p1 && i1[j] == Rational(1, n - 1);
      p3 = p3 && i3[j] == Rational(2, n - 1);
    }
    for (int j = 0; j < n; ++j) p2 = p2 && i2[j] == Rational(2, n);
    o.require(p1 && p2 && p3, "influence profiles at n=" + std::to_string(n));
  }
  o.note("n = 3..6 checked");
  return o;
}

// --- 10 --------------------------------------------------------------------
Rational diag_alpha(const Kernel<Rational>& f) {
  auto c = contraction(f, f, 1);
  Rational a(0);
  for (int i = 1; i <= f.n(); ++i) a += c.coeff({i, i}) * c.coeff({i, i});
  return a * c.scale_sq();
}

Outcome lemma_inequalities() {
  Outcome o;
  std::mt19937_64 g(11);
  int checks = 0;
  auto check = [&](bool ok, const std::string& what) {
    ++checks;
    o.require(ok, what);
  };
  for (int t = 0; t < 100; ++t) {
    const int d = 2 + t % 2;
    const int n = d + t % (6 - d);
    auto base = cktest::random_kernel(g, n, d, "symmetric");
    auto f = normalized(base, Flavor::free_);
    const std::string where = "kernel " + std::to_string(t) + " (n=" + std::to_string(n) + ", d=" + std::to_string(d) + ")";
    const Rational tau = tau_max(f);
    const Rational top = norm_sq(contraction(f, f, d - 1));
    check(top >= tau * tau / Rational(d * d), where + ": ||f ~(d-1) f|| >= tau/d");
    for (int q = 1; q < d; ++q)
      check(norm_sq(contraction(f, f, q)) >= norm_sq(star_contraction(f, f, q + 1)),
            where + ": ||f ~q f|| >= ||f *_(q+1)^q f|| at q=" + std::to_string(q));
    check(top >= norm_sq(star_contraction(f, f, 1)), where + ": ||f ~(d-1) f|| >= ||f *_1^0 f||");
    if (d != 2) continue;

    auto gap = distance_sq(contraction(f, f, 1), f) - Surd<Rational>(tau * tau / Rational(4));
    check(sign(gap) >= 0, where + ": ||f ~1 f - f|| >= tau/2");

    const Rational alpha = diag_alpha(f);
    for (const char* y : {"semicircle", "free_poisson:lambda=1", "free_rademacher", "tetilla"}) {
      LawSpec L = parse_law_argument(y, 12);
      auto m4 = moment_exact(SumSpec<Rational>{f, SumLaw::iid(L)}, 4);
      const Rational rhs = Rational(2) + alpha * (Rational(1) + Rational(2) * L.cumulant(4));
      check(sign(m4 - Surd<Rational>(rhs)) >= 0, where + ": free quadratic bound for " + y);
    }
    auto fc = normalized(base, Flavor::classical);
    const Rational alpha_c = diag_alpha(fc);
    for (const char* x : {"gaussian", "rademacher", "uniform"}) {
      LawSpec L = parse_law_argument(x, 12);
      auto m4 = moment_exact(SumSpec<Rational>{fc, SumLaw::iid(L)}, 4);
      const Rational rhs = Rational(3) + Rational(48) * alpha_c * (Rational(1) + L.cumulant(4));
      check(sign(m4 - Surd<Rational>(rhs)) >= 0, where + ": classical quadratic bound for " + x);
    }
  }
  o.note(std::to_string(checks) + " inequality checks on 100 kernels");
  return o;
}

// --- 11 --------------------------------------------------------------------
Outcome statistical_suite() {
  Outcome o;
  const auto t0 = Clock::now();
  for (const char* s : {"gaussian", "rademacher", "centered_poisson:lambda=2", "uniform", "abs_gaussian",
                        "discrete:values=-1;0;2,probs=1/4;1/2;1/4"}) {
    for (const auto& c : sampler_self_test(Sampler::parse(s, 3), 100000)) {
      o.require(c.pass, std::string(s) + " moment " + std::to_string(c.order) + " z=" + fmt(c.z));
    }
  }

  auto f = families::off_diagonal(8, Rational(1, 56));
  for (const char* s : {"gaussian", "rademacher", "centered_poisson:lambda=1"}) {
    Sampler smp = Sampler::parse(s, 17);
    auto sample = sample_homsum(f.to_double(), smp, 40000);
    for (int m = 2; m <= 4; ++m) {
      const double exact = moment_exact(SumSpec<Rational>{f, SumLaw::iid(*smp.exact_law(12))}, m).to_double();
      auto e = sample_moment(sample, m);
      const double z = (e.mean - exact) / e.se;
      o.require(std::fabs(z) <= 5, std::string(s) + " MC moment " + std::to_string(m) + " z=" + fmt(z));
    }
  }

  for (int cells : {10, 100, 1000}) {
    CellModel cp;
    cp.kind = CellKind::compound_poisson;
    cp.lambda = 2;
    cp.jumps = Sampler::parse("discrete:values=-1;2,probs=2/3;1/3", 5);
    auto k = kstat_experiment(cp, 3, cells, 10000, 23);
    o.note("kstat N=" + std::to_string(cells) + ": " + fmt(k.estimate.mean) + " vs " + fmt(k.target) + " (z=" +
           fmt(k.z) + ")");
    o.require(std::fabs(k.z) <= 5, "compound Poisson kstat at N=" + std::to_string(cells));
  }
  for (auto orders : {std::vector<int>{3}, std::vector<int>{1, 2}, std::vector<int>{2, 2}, std::vector<int>{1, 1, 2}}) {
    auto v = variations_cumulant_check(1.5, Sampler::parse("gaussian", 0), 0.5, 1.0, orders, 10000, 29);
    std::string name;
    for (int c : orders) name += std::to_string(c);
    o.note("variations (" + name + "): " + fmt(v.estimate.mean) + " vs " + fmt(v.target) + " (z=" + fmt(v.z) + ")");
    o.require(std::fabs(v.z) <= 5, "variations cumulant " + name);
  }

  InvarianceConfig cfg;
  auto rows = invariance_decay_experiment(
      [](int n) { return families::off_diagonal(n, Rational(1, n * (n - 1))); }, Sampler::parse("gaussian", 41),
      Sampler::parse("rademacher", 43), cfg);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    o.note("n=" + std::to_string(rows[i].n) + " tau=" + fmt(rows[i].tau) + " gap4=" + fmt(rows[i].moment_gaps.back()) +
           " W1=" + fmt(rows[i].w1));
    if (i == 0) continue;
    for (std::size_t j = 0; j < rows[i].moment_gaps.size(); ++j)
      o.require(rows[i].moment_gaps[j] <= rows[i - 1].moment_gaps[j], "moment gap non-increasing");
    o.require(rows[i].w1 <= rows[i - 1].w1, "W1 non-increasing");
  }
  const double s = seconds_since(t0);
  o.note("runtime " + fmt(s) + " s");
  o.require(s < 600, "runtime under 10 min");
  return o;
}

} // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"discriminant golden values", discriminant_golden},
      {"Gauss-Hermite n=5 weights and exactness", gauss_hermite_five},
      {"Sylvester suite", sylvester_suite},
      {"oracle equivalence", oracle_equivalence},
      {"free fourth-moment linearity", free_linearity},
      {"classical fourth-moment decomposition", classical_decomposition},
      {"counting identities", counting_identities},
      {"orthogonality", orthogonality_suite},
      {"kernel diagnostics", kernel_golden},
      {"lemma inequalities", lemma_inequalities},
      {"statistical suite", statistical_suite},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.notes.push_back(std::string("exception: ") + e.what());
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << (i + 1) << ". " << criteria[i].first << "\n";
    for (const auto& n : o.notes) std::cout << "      " << n << "\n";
    std::cout.flush();
  }
  return failed;
}
