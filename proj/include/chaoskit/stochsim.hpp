#pragma once

#include "chaoskit/homsum.hpp"
#include "chaoskit/kernels.hpp"
#include "chaoskit/laws.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace ck {

// Independent stream for (seed, task): results do not depend on how tasks
// are spread over threads.
std::mt19937_64 rng_stream(std::uint64_t seed, std::uint64_t task);

enum class SamplerKind { gaussian, rademacher, centered_poisson, uniform, abs_gaussian, discrete };

struct Sampler {
  SamplerKind kind = SamplerKind::gaussian;
  Rational variance{1};  // gaussian
  Rational lambda{1};    // centered_poisson
  std::vector<Rational> values;  // discrete
  std::vector<Rational> probs;
  std::uint64_t seed = 0;

  // "gaussian", "gaussian:var=2", "centered_poisson:lambda=1", "rademacher",
  // "uniform", "abs_gaussian", "discrete:values=-1;0;2,probs=1/4;1/2;1/4"
  static Sampler parse(const std::string& text, std::uint64_t seed = 0);
  std::string name() const;

  double draw(std::mt19937_64& g) const;
  // E[X^k] as declared by the sampler's law.
  double moment(int k) const;
  // Exact law when the moments are rational.
  std::optional<LawSpec> exact_law(int max_order = kDefaultLawOrder) const;
};

struct MomentCheck {
  int order = 0;
  double expected = 0;
  double estimate = 0;
  double se = 0;
  double z = 0;
  bool pass = false;
};

struct Estimate {
  double mean = 0;
  double se = 0;
  long count = 0;
};

// First four raw moments at `draws` samples against the declared values, 5 SE.
std::vector<MomentCheck> sampler_self_test(const Sampler& s, long draws = 100000, int threads = 1);

// One value of Q_X(f) per trial, trial t drawing from stream (seed, t / chunk).
std::vector<double> sample_homsum(const Kernel<double>& f, const Sampler& s, long trials, int threads = 1);
Estimate sample_moment(const std::vector<double>& sample, int m);

struct W1Result {
  double value = 0;
  bool truncated = false;  // sizes differed; the longer sample was cut
};
W1Result wasserstein1_empirical(std::vector<double> a, std::vector<double> b);
// Against Φ⁻¹((i − ½)/N).
double wasserstein1_normal(std::vector<double> a);

struct InvarianceRow {
  int n = 0;
  double tau = 0;
  double sqrt_tau = 0;
  std::vector<int> orders;
  std::vector<double> moment_gaps;  // |E[Q_A^m] − E[Q_B^m]|
  std::vector<bool> gap_exact;      // from exact moments (else Monte Carlo)
  double w1 = 0;                    // empirical W₁(Q_A, Q_B)
  long trials = 0;
};

struct InvarianceConfig {
  std::vector<int> sizes{4, 8, 16, 32};
  std::vector<int> orders{2, 3, 4};
  long trials = 20000;
  int threads = 1;
  bool exact = true;  // exact gaps when both laws are rational
};

std::vector<InvarianceRow> invariance_decay_experiment(const std::function<Kernel<Rational>(int)>& family,
                                                       const Sampler& a, const Sampler& b,
                                                       const InvarianceConfig& cfg);

struct JumpPath {
  double horizon = 0;
  double lambda = 0;
  double gaussian_variance = 0;  // σ² per unit time
  double gaussian_level = 0;     // N(0, σ²T) part of X_T
  std::vector<double> times;
  std::vector<double> sizes;
};

JumpPath compound_poisson_path(double lambda, const Sampler& jumps, double sigma2, double horizon,
                               std::mt19937_64& g);
JumpPath compound_poisson_path(double lambda, const Sampler& jumps, double sigma2, double horizon,
                               std::uint64_t seed, std::uint64_t task = 0);
// n = 1: X_T; n = 2: σ²T + Σ(ΔX)²; n ≥ 3: Σ(ΔX)^n
double variation(const JumpPath& path, int n);

enum class CellKind { brownian, compound_poisson };

struct CellModel {
  CellKind kind = CellKind::brownian;
  double sigma2 = 1;
  double lambda = 1;
  Sampler jumps;
  double horizon = 1;
};

struct KstatResult {
  int n = 0;
  int cells = 0;
  long paths = 0;
  Estimate estimate;  // mean over paths of Σ_i Φ(A_i)^n
  double target = 0;  // χ_n(Φ([0, T]))
  double z = 0;
};

KstatResult kstat_experiment(const CellModel& model, int n, int cells, long paths, std::uint64_t seed,
                             int threads = 1);

struct VariationsCheck {
  std::vector<int> orders;
  long paths = 0;
  Estimate estimate;  // joint cumulant of (X_T^{(c₁)}, …)
  double target = 0;  // λT·E[X^{Σc}] (+ σ²T when Σc = 2)
  double z = 0;
};

// Joint cumulants of up to three variations.
VariationsCheck variations_cumulant_check(double lambda, const Sampler& jumps, double sigma2, double horizon,
                                          const std::vector<int>& orders, long paths, std::uint64_t seed,
                                          int threads = 1);

} // namespace ck
