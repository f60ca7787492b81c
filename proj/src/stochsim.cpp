#include "chaoskit/stochsim.hpp"

#include "chaoskit/errors.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace ck {

namespace {

constexpr long kTrialChunk = 1024;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Runs fn(task) for every task; each task owns its output slot, so the
// result is independent of the thread count.
void parallel_tasks(long tasks, int threads, const std::function<void(long)>& fn) {
  threads = std::max(1, threads);
  if (threads == 1 || tasks <= 1) {
    for (long t = 0; t < tasks; ++t) fn(t);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex err_mu;
  for (int i = 0; i < std::min<long>(threads, tasks); ++i)
    pool.emplace_back([&] {
      for (long t; (t = next.fetch_add(1)) < tasks;) {
        try {
          fn(t);
        } catch (...) {
          std::lock_guard<std::mutex> lk(err_mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

long chunks(long n, long size) { return (n + size - 1) / size; }

Estimate estimate_mean(const std::vector<double>& z) {
  Estimate e;
  e.count = static_cast<long>(z.size());
  if (z.empty()) return e;
  double s = 0;
  for (double v : z) s += v;
  e.mean = s / static_cast<double>(e.count);
  if (e.count > 1) {
    double ss = 0;
    for (double v : z) ss += (v - e.mean) * (v - e.mean);
    e.se = std::sqrt(ss / static_cast<double>(e.count - 1) / static_cast<double>(e.count));
  }
  return e;
}

double z_score(const Estimate& e, double target) {
  if (e.se > 0) return (e.mean - target) / e.se;
  return std::fabs(e.mean - target) <= 1e-12 * std::max(1.0, std::fabs(target)) ? 0.0
                                                                               : std::numeric_limits<double>::infinity();
}

void fill(const Sampler& s, std::mt19937_64& g, double* out, std::size_t n) {
  switch (s.kind) {
    case SamplerKind::gaussian: {
      std::normal_distribution<double> d(0.0, std::sqrt(s.variance.to_double()));
      for (std::size_t i = 0; i < n; ++i) out[i] = d(g);
      break;
    }
    case SamplerKind::abs_gaussian: {
      std::normal_distribution<double> d(0.0, 1.0);
      for (std::size_t i = 0; i < n; ++i) out[i] = std::fabs(d(g));
      break;
    }
    case SamplerKind::rademacher: {
      std::bernoulli_distribution d(0.5);
      for (std::size_t i = 0; i < n; ++i) out[i] = d(g) ? 1.0 : -1.0;
      break;
    }
    case SamplerKind::centered_poisson: {
      const double lam = s.lambda.to_double();
      std::poisson_distribution<long> d(lam);
      for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<double>(d(g)) - lam;
      break;
    }
    case SamplerKind::uniform: {
      const double h = std::sqrt(3.0);
      std::uniform_real_distribution<double> d(-h, h);
      for (std::size_t i = 0; i < n; ++i) out[i] = d(g);
      break;
    }
    case SamplerKind::discrete: {
      std::vector<double> w;
      for (const auto& p : s.probs) w.push_back(p.to_double());
      std::discrete_distribution<std::size_t> d(w.begin(), w.end());
      for (std::size_t i = 0; i < n; ++i) out[i] = s.values[d(g)].to_double();
      break;
    }
  }
}

std::vector<Rational> split_rationals(const std::string& text, const std::string& field) {
  std::vector<Rational> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    auto r = Rational::try_parse(item);
    if (!r) throw ValidationError("parse_error", "cannot parse '" + item + "' as a rational", field);
    out.push_back(*r);
  }
  return out;
}

} // namespace

std::mt19937_64 rng_stream(std::uint64_t seed, std::uint64_t task) {
  std::uint64_t a = splitmix64(seed);
  std::uint64_t b = splitmix64(a ^ splitmix64(task + 0x632BE59BD9B4E019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

Sampler Sampler::parse(const std::string& text, std::uint64_t seed) {
  Sampler s;
  s.seed = seed;
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  std::map<std::string, std::string> params;
  if (colon != std::string::npos) {
    std::stringstream ss(text.substr(colon + 1));
    std::string kv;
    while (std::getline(ss, kv, ',')) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ValidationError("parse_error", "expected key=value in '" + kv + "'", "law");
      params[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
  }
  auto take = [&](const std::string& key, const Rational& dflt) {
    auto it = params.find(key);
    if (it == params.end()) return dflt;
    auto r = Rational::try_parse(it->second);
    if (!r) throw ValidationError("parse_error", "cannot parse " + key, key);
    params.erase(it);
    return *r;
  };
  if (name == "gaussian") {
    s.kind = SamplerKind::gaussian;
    s.variance = take("var", Rational(1));
    if (s.variance.sign() <= 0) throw ValidationError("invalid_parameter", "var must be positive", "var");
  } else if (name == "rademacher") {
    s.kind = SamplerKind::rademacher;
  } else if (name == "centered_poisson") {
    s.kind = SamplerKind::centered_poisson;
    s.lambda = take("lambda", Rational(1));
    if (s.lambda.sign() <= 0) throw ValidationError("invalid_parameter", "lambda must be positive", "lambda");
  } else if (name == "uniform") {
    s.kind = SamplerKind::uniform;
  } else if (name == "abs_gaussian") {
    s.kind = SamplerKind::abs_gaussian;
  } else if (name == "discrete") {
    s.kind = SamplerKind::discrete;
    auto v = params.find("values");
    auto p = params.find("probs");
    if (v == params.end() || p == params.end())
      throw ValidationError("invalid_parameter", "discrete sampler needs values and probs", "law");
    s.values = split_rationals(v->second, "values");
    s.probs = split_rationals(p->second, "probs");
    params.erase("values");
    params.erase("probs");
    if (s.values.empty() || s.values.size() != s.probs.size())
      throw ValidationError("invalid_parameter", "values and probs must have equal nonzero length", "probs");
    Rational total(0);
    for (const auto& q : s.probs) {
      if (q.sign() < 0) throw ValidationError("invalid_parameter", "probabilities must be non-negative", "probs");
      total += q;
    }
    if (total != Rational(1)) throw ValidationError("invalid_parameter", "probabilities must sum to 1", "probs");
  } else {
    throw ValidationError("unknown_law", "no sampler named '" + name + "'", "law");
  }
  if (!params.empty())
    throw ValidationError("invalid_parameter", "unknown parameter '" + params.begin()->first + "'",
                          params.begin()->first);
  return s;
}

std::string Sampler::name() const {
  switch (kind) {
    case SamplerKind::gaussian: return variance == Rational(1) ? "gaussian" : "gaussian:var=" + variance.short_str();
    case SamplerKind::rademacher: return "rademacher";
    case SamplerKind::centered_poisson: return "centered_poisson:lambda=" + lambda.short_str();
    case SamplerKind::uniform: return "uniform";
    case SamplerKind::abs_gaussian: return "abs_gaussian";
    case SamplerKind::discrete: {
      std::string v, p;
      for (std::size_t i = 0; i < values.size(); ++i) {
        v += (i ? ";" : "") + values[i].short_str();
        p += (i ? ";" : "") + probs[i].short_str();
      }
      return "discrete:values=" + v + ",probs=" + p;
    }
  }
  return "?";
}

double Sampler::draw(std::mt19937_64& g) const {
  double x = 0;
  fill(*this, g, &x, 1);
  return x;
}

double Sampler::moment(int k) const {
  if (k < 0) throw ValidationError("invalid_argument", "moment order must be non-negative", "k");
  if (kind == SamplerKind::abs_gaussian)
    return std::pow(2.0, k / 2.0) * std::tgamma((k + 1) / 2.0) / std::sqrt(M_PI);
  return exact_law(std::max(k, 1))->moment(k).to_double();
}

std::optional<LawSpec> Sampler::exact_law(int max_order) const {
  switch (kind) {
    case SamplerKind::gaussian: return builtin_law("gaussian", {{"var", variance}}, max_order);
    case SamplerKind::rademacher: return builtin_law("rademacher", {}, max_order);
    case SamplerKind::centered_poisson: return builtin_law("centered_poisson", {{"lambda", lambda}}, max_order);
    case SamplerKind::uniform: return builtin_law("uniform", {}, max_order);
    case SamplerKind::abs_gaussian: return std::nullopt;
    case SamplerKind::discrete: {
      std::vector<Rational> m(max_order + 1, Rational(0));
      for (std::size_t i = 0; i < values.size(); ++i) {
        Rational p = probs[i];
        for (int k = 0; k <= max_order; ++k) {
          m[k] += p;
          p *= values[i];
        }
      }
      return law_from_moments("discrete", LawKind::classical, m);
    }
  }
  return std::nullopt;
}

std::vector<MomentCheck> sampler_self_test(const Sampler& s, long draws, int threads) {
  if (draws < 2) throw ValidationError("invalid_argument", "need at least two draws", "draws");
  constexpr long chunk = 4096;
  const long tasks = chunks(draws, chunk);
  std::vector<std::array<double, 9>> partial(tasks);
  parallel_tasks(tasks, threads, [&](long t) {
    auto g = rng_stream(s.seed, static_cast<std::uint64_t>(t));
    const long len = std::min(chunk, draws - t * chunk);
    std::vector<double> x(len);
    fill(s, g, x.data(), x.size());
    std::array<double, 9> acc{};
    for (double v : x) {
      double p = 1;
      for (int k = 0; k <= 8; ++k) {
        acc[k] += p;
        p *= v;
      }
    }
    partial[t] = acc;
  });
  std::array<double, 9> S{};
  for (const auto& p : partial)
    for (int k = 0; k <= 8; ++k) S[k] += p[k];
  const double N = static_cast<double>(draws);
  std::vector<MomentCheck> out;
  for (int k = 1; k <= 4; ++k) {
    MomentCheck c;
    c.order = k;
    c.expected = s.moment(k);
    c.estimate = S[k] / N;
    const double var = std::max(0.0, S[2 * k] / N - c.estimate * c.estimate);
    c.se = std::sqrt(var / N);
    Estimate e{c.estimate, c.se, draws};
    c.z = z_score(e, c.expected);
    c.pass = std::fabs(c.z) <= 5.0;
    out.push_back(c);
  }
  return out;
}

std::vector<double> sample_homsum(const Kernel<double>& f, const Sampler& s, long trials, int threads) {
  if (trials < 1) throw ValidationError("invalid_argument", "trials must be positive", "trials");
  const int n = f.n(), d = f.d();
  const double scale = std::sqrt(f.scale_sq());
  std::vector<int> idx;
  std::vector<double> val;
  for (std::size_t flat = 0; flat < f.size(); ++flat) {
    if (f.coeff(flat) == 0.0) continue;
    for (int i : f.unflatten(flat)) idx.push_back(i - 1);
    val.push_back(f.coeff(flat) * scale);
  }
  std::vector<double> out(static_cast<std::size_t>(trials), 0.0);
  const long tasks = chunks(trials, kTrialChunk);
  parallel_tasks(tasks, threads, [&](long t) {
    auto g = rng_stream(s.seed, static_cast<std::uint64_t>(t));
    std::vector<double> x(n);
    const long lo = t * kTrialChunk, hi = std::min(trials, lo + kTrialChunk);
    for (long trial = lo; trial < hi; ++trial) {
      fill(s, g, x.data(), x.size());
      double q = 0;
      for (std::size_t e = 0; e < val.size(); ++e) {
        double p = val[e];
        for (int k = 0; k < d; ++k) p *= x[idx[e * d + k]];
        q += p;
      }
      out[trial] = q;
    }
  });
  return out;
}

Estimate sample_moment(const std::vector<double>& sample, int m) {
  std::vector<double> z(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) z[i] = std::pow(sample[i], m);
  return estimate_mean(z);
}

W1Result wasserstein1_empirical(std::vector<double> a, std::vector<double> b) {
  if (a.size() < 2 || b.size() < 2) throw ValidationError("invalid_argument", "samples need at least two values", "sample");
  W1Result r;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const std::size_t n = std::min(a.size(), b.size());
  r.truncated = a.size() != b.size();
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) s += std::fabs(a[i] - b[i]);
  r.value = s / static_cast<double>(n);
  return r;
}

double wasserstein1_normal(std::vector<double> a) {
  if (a.size() < 2) throw ValidationError("invalid_argument", "sample needs at least two values", "sample");
  std::sort(a.begin(), a.end());
  boost::math::normal_distribution<double> nd;
  const double N = static_cast<double>(a.size());
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += std::fabs(a[i] - boost::math::quantile(nd, (static_cast<double>(i) + 0.5) / N));
  return s / N;
}

std::vector<InvarianceRow> invariance_decay_experiment(const std::function<Kernel<Rational>(int)>& family,
                                                       const Sampler& a, const Sampler& b,
                                                       const InvarianceConfig& cfg) {
  const int top = cfg.orders.empty() ? 1 : *std::max_element(cfg.orders.begin(), cfg.orders.end());
  auto la = a.exact_law(std::max(top, kDefaultLawOrder));
  auto lb = b.exact_law(std::max(top, kDefaultLawOrder));
  std::vector<InvarianceRow> rows;
  for (int n : cfg.sizes) {
    Kernel<Rational> f = family(n);
    InvarianceRow row;
    row.n = n;
    row.tau = tau_max(f).to_double();
    row.sqrt_tau = std::sqrt(row.tau);
    row.orders = cfg.orders;
    row.trials = cfg.trials;
    Kernel<double> fd = f.to_double();
    auto sa = sample_homsum(fd, a, cfg.trials, cfg.threads);
    auto sb = sample_homsum(fd, b, cfg.trials, cfg.threads);
    for (int m : cfg.orders) {
      if (cfg.exact && la && lb) {
        Surd<Rational> ea = moment_exact(SumSpec<Rational>{f, SumLaw::iid(*la)}, m);
        Surd<Rational> eb = moment_exact(SumSpec<Rational>{f, SumLaw::iid(*lb)}, m);
        row.moment_gaps.push_back(std::fabs((ea - eb).to_double()));
        row.gap_exact.push_back(true);
      } else {
        row.moment_gaps.push_back(std::fabs(sample_moment(sa, m).mean - sample_moment(sb, m).mean));
        row.gap_exact.push_back(false);
      }
    }
    row.w1 = wasserstein1_empirical(sa, sb).value;
    rows.push_back(std::move(row));
  }
  return rows;
}

JumpPath compound_poisson_path(double lambda, const Sampler& jumps, double sigma2, double horizon,
                               std::mt19937_64& g) {
  if (lambda < 0) throw ValidationError("invalid_parameter", "lambda must be non-negative", "lambda");
  if (horizon <= 0) throw ValidationError("invalid_parameter", "horizon must be positive", "T");
  if (sigma2 < 0) throw ValidationError("invalid_parameter", "sigma2 must be non-negative", "sigma2");
  JumpPath p;
  p.horizon = horizon;
  p.lambda = lambda;
  p.gaussian_variance = sigma2;
  long count = 0;
  if (lambda > 0) count = std::poisson_distribution<long>(lambda * horizon)(g);
  std::uniform_real_distribution<double> u(0.0, horizon);
  p.times.resize(count);
  for (auto& t : p.times) t = u(g);
  std::sort(p.times.begin(), p.times.end());
  p.sizes.resize(count);
  fill(jumps, g, p.sizes.data(), p.sizes.size());
  if (sigma2 > 0) p.gaussian_level = std::normal_distribution<double>(0.0, std::sqrt(sigma2 * horizon))(g);
  return p;
}

JumpPath compound_poisson_path(double lambda, const Sampler& jumps, double sigma2, double horizon,
                               std::uint64_t seed, std::uint64_t task) {
  auto g = rng_stream(seed, task);
  return compound_poisson_path(lambda, jumps, sigma2, horizon, g);
}

double variation(const JumpPath& path, int n) {
  if (n < 1) throw ValidationError("invalid_argument", "variation order must be positive", "n");
  double s = 0;
  for (double x : path.sizes) s += std::pow(x, n);
  if (n == 1) s += path.gaussian_level;
  if (n == 2) s += path.gaussian_variance * path.horizon;
  return s;
}

KstatResult kstat_experiment(const CellModel& model, int n, int cells, long paths, std::uint64_t seed, int threads) {
  if (n < 1 || cells < 1 || paths < 2) throw ValidationError("invalid_argument", "need n >= 1, cells >= 1, paths >= 2");
  KstatResult r;
  r.n = n;
  r.cells = cells;
  r.paths = paths;
  const double h = model.horizon / cells;
  std::vector<double> z(static_cast<std::size_t>(paths));
  constexpr long chunk = 256;
  parallel_tasks(chunks(paths, chunk), threads, [&](long t) {
    auto g = rng_stream(seed, static_cast<std::uint64_t>(t));
    std::normal_distribution<double> nd(0.0, std::sqrt(model.sigma2 * h));
    std::poisson_distribution<long> pd(model.lambda * h);
    std::vector<double> buf;
    const long lo = t * chunk, hi = std::min(paths, lo + chunk);
    for (long p = lo; p < hi; ++p) {
      double s = 0;
      for (int c = 0; c < cells; ++c) {
        double inc = 0;
        if (model.kind == CellKind::brownian) {
          inc = nd(g);
        } else {
          buf.resize(static_cast<std::size_t>(model.lambda > 0 ? pd(g) : 0));
          fill(model.jumps, g, buf.data(), buf.size());
          for (double v : buf) inc += v;
        }
        s += std::pow(inc, n);
      }
      z[p] = s;
    }
  });
  r.estimate = estimate_mean(z);
  if (model.kind == CellKind::brownian) r.target = n == 2 ? model.sigma2 * model.horizon : 0.0;
  else r.target = model.lambda * model.horizon * model.jumps.moment(n);
  r.z = z_score(r.estimate, r.target);
  return r;
}

VariationsCheck variations_cumulant_check(double lambda, const Sampler& jumps, double sigma2, double horizon,
                                          const std::vector<int>& orders, long paths, std::uint64_t seed,
                                          int threads) {
  const int k = static_cast<int>(orders.size());
  if (k < 1 || k > 3) throw ValidationError("invalid_argument", "between one and three orders are supported", "orders");
  if (paths < 2) throw ValidationError("invalid_argument", "need at least two paths", "paths");
  VariationsCheck r;
  r.orders = orders;
  r.paths = paths;
  std::vector<std::vector<double>> Y(k, std::vector<double>(static_cast<std::size_t>(paths)));
  constexpr long chunk = 256;
  parallel_tasks(chunks(paths, chunk), threads, [&](long t) {
    auto g = rng_stream(seed, static_cast<std::uint64_t>(t));
    const long lo = t * chunk, hi = std::min(paths, lo + chunk);
    for (long p = lo; p < hi; ++p) {
      JumpPath path = compound_poisson_path(lambda, jumps, sigma2, horizon, g);
      for (int j = 0; j < k; ++j) Y[j][p] = variation(path, orders[j]);
    }
  });
  std::vector<double> mean(k, 0.0);
  for (int j = 0; j < k; ++j) mean[j] = estimate_mean(Y[j]).mean;
  std::vector<double> z(static_cast<std::size_t>(paths));
  for (long p = 0; p < paths; ++p) {
    double v = 1;
    for (int j = 0; j < k; ++j) v *= k == 1 ? Y[j][p] : Y[j][p] - mean[j];
    z[p] = v;
  }
  r.estimate = estimate_mean(z);
  const int total = std::accumulate(orders.begin(), orders.end(), 0);
  r.target = lambda * horizon * jumps.moment(total) + (total == 2 ? sigma2 * horizon : 0.0);
  r.z = z_score(r.estimate, r.target);
  return r;
}

} // namespace ck
