#pragma once

#include "chaoskit/rational.hpp"
#include "chaoskit/surd.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ck {

enum class Flavor { classical, free_, mirror };

// Normalization used by influence(): the per-slot sum of the definition, where
// Σ_i Inf_i = d·‖f‖², or the slot average, where Σ_i Inf_i = ‖f‖².
enum class InfluenceNorm { slot_sum, slot_average };

struct KernelFlags {
  std::optional<bool> symmetric;
  std::optional<bool> mirror_symmetric;
  std::optional<bool> vanishes_on_diagonals;
};

// Dense coefficient tensor f : [n]^d → T, stored as f = √scale_sq · coeffs.
// Indices are 1-based in the public interface; storage is row-major with the
// first index most significant.
template <typename T>
class Kernel {
public:
  using Scalar = T;
  using Index = std::vector<int>;

  Kernel() = default;
  Kernel(int n, int d);

  static Kernel scalar(const T& v);

  int n() const { return n_; }
  int d() const { return d_; }
  std::size_t size() const { return coeffs_.size(); }

  const T& scale_sq() const { return scale_sq_; }
  void set_scale_sq(const T& s);
  // Multiplies √scale_sq into the coefficients when that root is exact.
  bool fold_scale();
  bool has_unit_scale() const { return scale_sq_ == T(1); }

  const std::vector<T>& coeffs() const { return coeffs_; }
  std::vector<T>& coeffs() { return coeffs_; }
  const T& coeff(std::size_t flat) const { return coeffs_[flat]; }
  T& coeff(std::size_t flat) { return coeffs_[flat]; }
  // Coefficient at a 1-based index tuple.
  const T& coeff(const Index& idx) const { return coeffs_[flat_index(idx)]; }
  T& coeff(const Index& idx) { return coeffs_[flat_index(idx)]; }
  // Exact value f(idx) when the scale folds.
  Surd<T> value(const Index& idx) const;

  std::size_t flat_index(const Index& idx) const;
  Index unflatten(std::size_t flat) const;

  KernelFlags& flags() { return flags_; }
  const KernelFlags& flags() const { return flags_; }
  // Exhaustive check of all three flags when n^d ≤ limit, else unknown.
  void compute_flags(std::size_t limit = 1000000);

  bool is_zero() const;
  Kernel<double> to_double() const;

private:
  int n_ = 0;
  int d_ = 0;
  T scale_sq_{1};
  std::vector<T> coeffs_;
  KernelFlags flags_;
};

template <typename T>
struct KernelEntry {
  std::vector<int> idx;
  T val;
};

// Builds a kernel from sparse entries; duplicates must agree.
template <typename T>
Kernel<T> build_kernel(int n, int d, const std::vector<KernelEntry<T>>& entries, bool symmetrize);

template <typename T>
Kernel<T> symmetrized(const Kernel<T>& f);
template <typename T>
Kernel<T> mirrored(const Kernel<T>& f);

template <typename T>
bool check_symmetric(const Kernel<T>& f);
template <typename T>
bool check_mirror_symmetric(const Kernel<T>& f);
template <typename T>
bool check_vanishes_on_diagonals(const Kernel<T>& f);

// Σ f², exact.
template <typename T>
T norm_sq(const Kernel<T>& f);
// ⟨f, g⟩ = Σ f·g.
template <typename T>
Surd<T> inner(const Kernel<T>& f, const Kernel<T>& g);
// ‖f − g‖².
template <typename T>
Surd<T> distance_sq(const Kernel<T>& f, const Kernel<T>& g);

// Rescales f to unit variance in the given flavor (d!·Σf² or Σf²).
template <typename T>
Kernel<T> normalized(const Kernel<T>& f, Flavor flavor);

struct ClauseResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

template <typename T>
struct ValidationReport {
  Flavor flavor;
  T variance;
  std::vector<ClauseResult> clauses;
  bool admissible() const {
    for (auto& c : clauses)
      if (!c.pass) return false;
    return true;
  }
};

template <typename T>
ValidationReport<T> validate(const Kernel<T>& f, Flavor flavor);

// (f ⌢^q g)(t,s) = Σ f(t,i₁..i_q) g(i_q..i₁,s)
template <typename T>
Kernel<T> contraction(const Kernel<T>& f, const Kernel<T>& g, int q);

// (f ⋆_r^{r−1} g)(t,γ,s) = Σ f(t,γ,i₁..i_{r−1}) g(i_{r−1}..i₁,γ,s)
template <typename T>
Kernel<T> star_contraction(const Kernel<T>& f, const Kernel<T>& g, int r);

template <typename T>
std::vector<T> influence(const Kernel<T>& f, InfluenceNorm norm = InfluenceNorm::slot_sum);
template <typename T>
T tau_max(const Kernel<T>& f, InfluenceNorm norm = InfluenceNorm::slot_sum);

// Fixes the first prefix.size() arguments.
template <typename T>
Kernel<T> slice(const Kernel<T>& f, const std::vector<int>& prefix);

// k(f) = Σ f(i₁..i_d) e_{i₁}^{⊗h₁} ⊗ … ⊗ e_{i_d}^{⊗h_d}
template <typename T>
class LiftedKernel {
public:
  LiftedKernel(Kernel<T> base, std::vector<int> orders);

  const Kernel<T>& base() const { return base_; }
  const std::vector<int>& orders() const { return orders_; }
  int total_degree() const { return total_; }

  // Dense degree-m tensor; for checks at small n only.
  Kernel<T> materialize() const;

  enum class Source { contraction, star, midpoint_contraction, midpoint_star };
  struct NormEntry {
    int r;
    T norm_sq;
    Source source;
    int q;
  };
  // ‖k ⊗_r k‖² for r = 1..m−1, read off from contractions of the base.
  std::vector<NormEntry> contraction_norms() const;
  // ‖k ⊗_{m/2} k − k‖² from the base kernel (m even).
  Surd<T> midpoint_norm_sq() const;

private:
  Kernel<T> base_;
  std::vector<int> orders_;
  int total_ = 0;
};

// Kernel JSON: {"n","d","mode","symmetrize","entries":[{"idx":[..],"val":..}],
// optional "scale_sq"}.
struct KernelDocument {
  int n = 0;
  int d = 0;
  bool exact = true;
  bool symmetrize = false;
  std::string scale_sq = "1";
  std::vector<std::pair<std::vector<int>, std::string>> entries;
};

KernelDocument parse_kernel_json(const std::string& text);
Kernel<Rational> kernel_from_document(const KernelDocument& doc);
Kernel<double> kernel_from_document_float(const KernelDocument& doc);
template <typename T>
std::string kernel_to_json(const Kernel<T>& f);

std::uint64_t ipow(int base, int exp);

// Families used in the examples and acceptance checks.
namespace families {
// 1{i≠j} · c with c² = scale_sq.
Kernel<Rational> off_diagonal(int n, const Rational& scale_sq);
// 1{i≠j, 1 ∈ {i,j}} · c
Kernel<Rational> star(int n, const Rational& scale_sq);
// 1{i≠j, i,j ≠ 1} · c
Kernel<Rational> avoid_first(int n, const Rational& scale_sq);
// Symmetric diagonal-vanishing kernel of degree d with constant value.
Kernel<Rational> constant_off_diagonal(int n, int d, const Rational& scale_sq);
} // namespace families

extern template class Kernel<Rational>;
extern template class Kernel<double>;
extern template class LiftedKernel<Rational>;
extern template class LiftedKernel<double>;

} // namespace ck
