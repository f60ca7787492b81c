#pragma once

#include "chaoskit/laws.hpp"
#include "chaoskit/poly.hpp"
#include "chaoskit/rational.hpp"
#include "chaoskit/surd.hpp"

#include <Eigen/Core>

#include <complex>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ck {

using RationalMatrix = Eigen::Matrix<Rational, Eigen::Dynamic, Eigen::Dynamic>;
using Complex = std::complex<double>;

// Fraction-free (Bareiss) determinant with row pivoting.
Rational bareiss_determinant(RationalMatrix m);

// Moment functional with group-wise sequences: groups 0 and 1 share the base
// sequence a_k; group j ≥ 2 has its own sequence a_{jk}.
struct MomentFunctional {
  std::vector<Rational> base;
  std::vector<std::vector<Rational>> tail;  // tail[j−2] = (a_{j0}, a_{j1}, …)

  static MomentFunctional from_law(const LawSpec& law);
  static MomentFunctional from_moments(std::vector<Rational> a);

  // Adds the missing tail groups up to m, group j being the base law
  // translated by 1/j (used when no explicit group sequences are supplied).
  MomentFunctional with_translated_tails(int m) const;
  // X ↦ X + t in every group.
  MomentFunctional shifted(const Rational& t) const;

  int max_order() const { return static_cast<int>(base.size()) - 1; }
  int groups() const { return 2 + static_cast<int>(tail.size()); }
  const Rational& a(int k) const;
  const Rational& a(int group, int k) const;
};

// det(a_{i+j})_{i,j<n}; E[Δ(X₁..X_n)²] = n!·det.
Rational hankel_det(const MomentFunctional& F, int n);
Rational discriminant_second_moment(const MomentFunctional& F, int n);

struct GOPEntry {
  int n = 0;
  int m = 0;
  Poly<Rational> p;
  bool degenerate = false;  // deg p < n
};

// Determinant with rows (1, x, …, x^n), (a_k … a_{k+n}) for k ≤ n−m, and
// (a_{j0} … a_{jn}) for j = 2..m.
GOPEntry gops_determinant(const MomentFunctional& F, int n, int m);
// E₀[Δ(X₁..X_{n−m+1}) Δ(X₀,X₁..X_n)] by permutation expansion.
GOPEntry gops_expectation(const MomentFunctional& F, int n, int m);
std::vector<GOPEntry> gops_table(const MomentFunctional& F, int N);

// q with p_expectation = q · p_determinant, when both are nonzero.
std::optional<Rational> proportionality(const Poly<Rational>& numerator, const Poly<Rational>& denominator);

// E[X^k p(X)] for k = 0..kmax under the base sequence.
std::vector<Rational> orthogonality_profile(const MomentFunctional& F, const Poly<Rational>& p, int kmax);

// Multivariate polynomial: exponent vector → coefficient.
struct MPoly {
  int vars = 0;
  std::map<std::vector<int>, Rational> terms;

  MPoly() = default;
  explicit MPoly(int v) : vars(v) {}
  static MPoly constant(int vars, const Rational& c);
  static MPoly variable(int vars, int i);
  void add_term(const std::vector<int>& e, const Rational& c);
  MPoly operator+(const MPoly& o) const;
  MPoly operator-(const MPoly& o) const;
  MPoly operator*(const MPoly& o) const;
  MPoly pow(int e) const;
  int degree_in(int var) const;
  Complex evaluate(const std::vector<Complex>& x) const;
  std::string str() const;
};

// Π_{i<j} (x_j − x_i) in N variables.
MPoly vandermonde(int N);

// Independent coordinates, coordinate j with moments coords[j].
struct MultiMomentFunctional {
  std::vector<std::vector<Rational>> coords;
  Rational a(const std::vector<int>& k) const;
  int dims() const { return static_cast<int>(coords.size()); }
};

// {k : 0 ≤ k ≤ n} in graded lexicographic order (k₀ = 0, k_s = n).
std::vector<std::vector<int>> multi_indices_below(const std::vector<int>& n);

struct MultiGOP {
  std::vector<int> n;
  MPoly p;
  bool degenerate = false;
};

MultiGOP multi_gops_determinant(const MultiMomentFunctional& F, const std::vector<int>& n);
MultiGOP multi_gops_expectation(const MultiMomentFunctional& F, const std::vector<int>& n);
Rational multi_expect(const MultiMomentFunctional& F, const MPoly& p);

// Monic recurrence p_{k+1} = (x − α_{k+1}) p_k − β_{k+1} p_{k−1}, p₀ = 1,
// k = 0..N−1. β₁ is reported as a₀.
struct Recurrence {
  std::vector<Rational> alpha;  // α₁..α_N
  std::vector<Rational> beta;   // β₁..β_N
  std::vector<Poly<Rational>> monic;  // p₀..p_N
};
Recurrence recurrence_coeffs(const MomentFunctional& F, int N);

struct RootSet {
  std::vector<Complex> roots;  // ascending (Re, Im)
  bool simple = true;
  bool real = true;
  double min_separation = 0;
};
RootSet poly_roots(const Poly<Rational>& p, double tol = 1e-8);
RootSet poly_roots(const std::vector<Complex>& coeffs_low_first, double tol = 1e-8);

struct QuadratureRule {
  int n = 0;
  std::vector<Complex> nodes;
  std::vector<Complex> weights;
  int exactness_degree = 0;
  std::string node_kind;         // "real-simple" or "complex"
  std::vector<double> residuals; // |Σ c ζ^k − a_k| / max(1, |a_k|), k = 0..2n−1
  double max_residual = 0;
  // Set when every node is rational; then the weights solve the system exactly.
  std::optional<std::vector<Rational>> exact_nodes;
  std::optional<std::vector<Rational>> exact_weights;
};

QuadratureRule quadrature_rule(const MomentFunctional& F, int n, double tol = 1e-8);
Complex quadrature_apply(const QuadratureRule& rule, const MPoly& P);
Complex quadrature_apply(const QuadratureRule& rule, int vars,
                         const std::function<Complex(const std::vector<Complex>&)>& P);

enum class DiscriminantMethod { quadrature, expansion, lu_gaussian };

struct DiscriminantResult {
  DiscriminantMethod method;
  double value = 0;
  std::optional<Rational> exact;  // expansion method
  int rule_size = 0;              // quadrature method
};

DiscriminantResult discriminant_moment(const LawSpec& law, int N, int k, DiscriminantMethod method);

// A_m(x) = E[(X − x)^m]
Poly<Rational> translated_moment_poly(const MomentFunctional& F, int m);
// p_{n,k}(x) = E[Π_i (X_i − x)^{2k−1} Δ(X₁..X_n)^{2k}]
Poly<Rational> discriminant_poly(const MomentFunctional& F, int n, int k);

struct ExactNode {
  Surd<Rational> node;   // a + b√r
  Rational weight;
};

struct SylvesterResult {
  int degree = 0;                 // m
  Poly<Rational> target;          // polynomial decomposed as Σ c_j (r_j − x)^m
  Poly<Rational> apolar;          // polynomial whose roots are the nodes
  std::vector<Complex> nodes;
  std::vector<Complex> weights;
  Complex weight_sum;
  std::vector<double> residuals;  // equations not used in the solve, then coefficient check
  double max_residual = 0;
  std::vector<Rational> b;          // b_0..b_m (discriminant mode)
  Rational discriminant_moment{0};  // E[Δ^{2k}] (discriminant mode)
  bool sum_equals_moment = false;        // Σ c_j = E[Δ^{2k}]
  bool sum_equals_signed_moment = false; // Σ c_j = (−1)^m E[Δ^{2k}]
  bool simple_roots = true;
  bool singular = false;
  std::optional<std::vector<ExactNode>> exact;  // recognized and verified in Q(√r)
};

// Classical case: A_{2n−1} over the roots of the monic p_n, weights = Christoffel numbers.
SylvesterResult sylvester_appel(const MomentFunctional& F, int n, double tol = 1e-8);
// p_{n,k} over the roots of A_m, m = n(2k − 1).
SylvesterResult sylvester_decompose(const MomentFunctional& F, int n, int k, double tol = 1e-8);

// Σ c_j (r_j − x)^m expanded exactly in Q(√r); nullopt when radicands differ.
std::optional<Poly<Rational>> expand_power_sum(const std::vector<ExactNode>& terms, int m);

} // namespace ck
