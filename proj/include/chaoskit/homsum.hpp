#pragma once

#include "chaoskit/kernels.hpp"
#include "chaoskit/laws.hpp"
#include "chaoskit/surd.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ck {

// Law of the entries: one law for i.i.d. entries, or one law per index.
struct SumLaw {
  LawKind kind = LawKind::classical;
  std::vector<LawSpec> laws;

  static SumLaw iid(LawSpec law);
  static SumLaw per_index(std::vector<LawSpec> laws);

  bool is_iid() const { return laws.size() == 1; }
  // Law of entry i (0-based).
  const LawSpec& at(int i) const { return laws[is_iid() ? 0 : static_cast<std::size_t>(i)]; }
  bool centered() const;
  int max_order() const;
};

template <typename T>
struct SumSpec {
  Kernel<T> kernel;
  SumLaw law;
};

// Tuple guard for the brute-force oracle.
constexpr std::uint64_t kOracleTupleLimit = 10000000;

// E[Q^m] (φ(Q^m) for free laws) by summing cumulant products over the
// partitions of the m·d kernel slots.
template <typename T>
Surd<T> moment_exact(const SumSpec<T>& spec, int m);

// E[Q_{w₁}⋯Q_{w_k}] with w a word of 0-based kernel positions; the order is
// kept as given for free laws.
template <typename T>
Surd<T> joint_moment(const std::vector<Kernel<T>>& kernels, const std::vector<int>& word, const SumLaw& law);

// Expansion over all index tuples. Classical words factor into univariate
// moments; free words are evaluated by centering and freeness.
template <typename T>
Surd<T> moment_oracle(const SumSpec<T>& spec, int m);
template <typename T>
Surd<T> joint_moment_oracle(const std::vector<Kernel<T>>& kernels, const std::vector<int>& word, const SumLaw& law);

// Moment of the Hermite (classical) or Chebyshev (free) sum with the lift's
// orders, by pairings of the lifted slots.
template <typename T>
Surd<T> wick_moment(const LiftedKernel<T>& lift, int m, LawKind mode);

// Sum over index assignments, one index per block of the slot partition
// given by labels, of Π_p f_p(indices of copy p). Exposed for checks.
template <typename T>
T partition_sum(const std::vector<const Kernel<T>*>& word, const std::vector<int>& labels, int blocks);

template <typename T>
struct ClassTerm {
  int m = 0;                  // number of 4-blocks
  std::uint64_t partitions = 0;
  Surd<T> partition_sum;      // Σ over the class of the index sums
  T cumulant_weight{0};       // χ₂^{2(d−m)}χ₄^m or the free analogue
  Surd<T> slice_sum;          // Σ_j E[Q_N(f(j₁..j_m,·))⁴] (or φ with S)
  T stated_coefficient{0};    // C(d,m)⁴·m!⁴
  T corrected_coefficient{0}; // C(d,m)⁴·m!³
};

template <typename T>
struct FourthMomentDecomposition {
  LawKind kind = LawKind::classical;
  std::vector<std::string> assumption_violations;
  Surd<T> value;              // moment_exact(spec, 4)
  Surd<T> reference_term;     // E[Q_N⁴] or φ(Q_S⁴)
  T chi4{0};
  std::vector<ClassTerm<T>> terms;
  Surd<T> enumeration_total;
  Surd<T> slice_total;        // free: reference + κ₄·Σ_k φ(Q_S(f(k,·))⁴)
  Surd<T> stated_total;       // classical closed form, stated coefficient
  Surd<T> corrected_total;    // classical closed form, corrected coefficient
  bool enumeration_matches = false;
  bool slice_matches = false;
  bool stated_matches = false;
  bool corrected_matches = false;
};

template <typename T>
FourthMomentDecomposition<T> fourth_moment_formula(const SumSpec<T>& spec);

struct Verdict {
  std::string name;
  bool holds = false;
  double gap = 0;
  std::string detail;
};

template <typename T>
struct FMTReport {
  LawKind kind = LawKind::classical;
  InfluenceNorm influence_norm = InfluenceNorm::slot_sum;
  Surd<T> variance;
  Surd<T> third_moment;
  Surd<T> fourth_moment;
  Surd<T> fourth_cumulant;
  std::vector<T> contraction_norms; // ‖f ⌢^q f‖², q = 1..d−1
  std::vector<T> star_norms;        // ‖f ⋆_r^{r−1} f‖², r = 1..d
  T tau_max{0};
  std::vector<Verdict> verdicts;
};

template <typename T>
FMTReport<T> fmt_report(const SumSpec<T>& spec, InfluenceNorm norm = InfluenceNorm::slot_sum, double tol = -1);

enum class NoncentralTarget { gamma, free_poisson };

template <typename T>
struct NoncentralReport {
  NoncentralTarget target = NoncentralTarget::gamma;
  T parameter{0};
  Surd<T> second_moment;
  Surd<T> third_moment;
  Surd<T> fourth_moment;
  Surd<T> statistic;              // E[Q⁴] − 12E[Q³] or φ(Q⁴) − 2φ(Q³)
  T target_value{0};              // 12ν² − 48ν or 2λ² − λ
  Surd<T> gap;
  Surd<T> midpoint_distance_sq;   // ‖f ⌢^{d/2} f − f‖²
  T star_norm_sq{0};              // ‖f ⋆_{d/2+1}^{d/2} f‖²
  std::vector<T> off_midpoint_norms; // ‖f ⌢^r f‖², r ≠ d/2
};

// The target parameter defaults to the second moment of Q when not given
// (ν = E[Q²]/2 for Gamma, λ = φ(Q²) for free Poisson).
template <typename T>
NoncentralReport<T> noncentral_report(const SumSpec<T>& spec, NoncentralTarget target,
                                      std::optional<Rational> parameter = std::nullopt);

struct SteinInputs {
  double fourth_moment_q = 0;   // E[Q⁴]
  double tau = 0;
  double m4 = 0;                // E[X⁴]
  double abs_m3 = 0;            // E|X|³
  double x2_plus_1_sq = 0;      // E[(X²+1)²]
  double rosenthal_r3 = 0;
};

struct SteinBound {
  double p1 = 0;
  double gaussian_part = 0;
  double influence_part = 0;
  double value = 0;
  SteinInputs inputs;
};

SteinBound stein_wasserstein_bound(const SteinInputs& in);
// Assembles the inputs from an exact d = 2 classical spec; E|X|³ must be given.
template <typename T>
SteinBound stein_wasserstein_bound(const SumSpec<T>& spec, double abs_m3, double rosenthal_r3,
                                   InfluenceNorm norm = InfluenceNorm::slot_sum);

// γ^d (2√(q−1))^{dq} E[Q²]^{q/2}
double hypercontractivity_bound(int d, double q, double gamma, double second_moment);

extern template Surd<Rational> moment_exact(const SumSpec<Rational>&, int);
extern template Surd<double> moment_exact(const SumSpec<double>&, int);

} // namespace ck
