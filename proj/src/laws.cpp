#include "chaoskit/laws.hpp"

#include "chaoskit/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <sstream>

namespace ck {

std::string kind_name(LawKind k) { return k == LawKind::classical ? "classical" : "free"; }

const Rational& LawSpec::moment(int k) const {
  if (k < 0 || k > max_order())
    throw ValidationError("insufficient_moments",
                          "law " + name + " has moments only up to order " + std::to_string(max_order()), "order");
  return moments[static_cast<std::size_t>(k)];
}

const Rational& LawSpec::cumulant(int k) const {
  if (k < 0 || k >= static_cast<int>(cumulants.size()))
    throw ValidationError("insufficient_moments",
                          "law " + name + " has cumulants only up to order " + std::to_string(cumulants.size() - 1),
                          "order");
  return cumulants[static_cast<std::size_t>(k)];
}

LawSpec LawSpec::shifted(const Rational& t) const {
  std::vector<Rational> m(moments.size(), Rational(0));
  for (int k = 0; k <= max_order(); ++k)
    for (int j = 0; j <= k; ++j) m[k] += binomial(k, j) * moments[j] * pow(t, k - j);
  return law_from_moments(name + "+" + t.short_str(), kind, std::move(m));
}

namespace {

// [z^r] (Σ_{i≥0} m_i z^i)^s, using m_0..m_r only.
Rational power_coeff(const std::vector<Rational>& m, int s, int r) {
  std::vector<Rational> acc(static_cast<std::size_t>(r) + 1, Rational(0));
  acc[0] = Rational(1);
  for (int t = 0; t < s; ++t) {
    std::vector<Rational> next(acc.size(), Rational(0));
    for (int i = 0; i <= r; ++i) {
      if (acc[i].is_zero()) continue;
      for (int j = 0; i + j <= r; ++j) next[i + j] += acc[i] * m[j];
    }
    acc = std::move(next);
  }
  return acc[r];
}

// Σ over the blocks containing element 1: classical m_n = Σ_k C(n−1,k−1) χ_k m_{n−k},
// free m_n = Σ_s κ_s [z^{n−s}] M(z)^s.
Rational first_block_sum(const std::vector<Rational>& m, const std::vector<Rational>& k, int n, LawKind kind,
                         bool skip_top) {
  Rational acc(0);
  const int top = skip_top ? n - 1 : n;
  if (kind == LawKind::classical) {
    Rational binom(1);
    for (int s = 1; s <= top; ++s) {
      if (!k[s].is_zero()) acc += binom * k[s] * m[n - s];
      binom = binom * Rational(n - s) / Rational(s);
    }
    return acc;
  }
  for (int s = 1; s <= top; ++s)
    if (!k[s].is_zero()) acc += k[s] * power_coeff(m, s, n - s);
  return acc;
}

} // namespace

std::vector<Rational> convert(const std::vector<Rational>& seq, SeqKind from, LawKind kind) {
  const int N = static_cast<int>(seq.size()) - 1;
  if (N >= 0 && from == SeqKind::moments && seq[0] != Rational(1))
    throw ValidationError("invalid_moments", "moment sequence must start with 1", "moments");
  std::vector<Rational> out(seq.size(), Rational(0));
  if (seq.empty()) return out;
  if (from == SeqKind::cumulants) {
    out[0] = Rational(1);
    for (int n = 1; n <= N; ++n) out[n] = first_block_sum(out, seq, n, kind, false);
    return out;
  }
  for (int n = 1; n <= N; ++n) out[n] = seq[n] - first_block_sum(seq, out, n, kind, true);
  return out;
}

LawSpec law_from_moments(std::string name, LawKind kind, std::vector<Rational> moments) {
  LawSpec l;
  l.name = std::move(name);
  l.kind = kind;
  l.cumulants = convert(moments, SeqKind::moments, kind);
  l.moments = std::move(moments);
  return l;
}

LawSpec law_from_cumulants(std::string name, LawKind kind, std::vector<Rational> cumulants) {
  LawSpec l;
  l.name = std::move(name);
  l.kind = kind;
  l.moments = convert(cumulants, SeqKind::cumulants, kind);
  l.cumulants = std::move(cumulants);
  return l;
}

namespace {

Rational param(const std::map<std::string, Rational>& p, const std::string& key, const Rational& def) {
  auto it = p.find(key);
  return it == p.end() ? def : it->second;
}

void require_positive(const Rational& v, const std::string& key) {
  if (v.sign() <= 0) throw ValidationError("invalid_parameter", key + " must be positive", key);
}

std::string with_param(const std::string& name, const std::string& key, const Rational& v) {
  return name + "(" + key + "=" + v.short_str() + ")";
}

} // namespace

std::vector<std::string> builtin_law_names() {
  return {"gaussian", "centered_poisson", "gamma_F", "rademacher", "uniform",
          "semicircle", "free_poisson_centered", "free_rademacher", "tetilla"};
}

std::map<std::string, Rational> default_law_params(const std::string& name) {
  if (name == "gaussian" || name == "semicircle") return {{"var", Rational(1)}};
  if (name == "centered_poisson" || name == "free_poisson_centered") return {{"lambda", Rational(1)}};
  if (name == "gamma_F") return {{"nu", Rational(1)}};
  return {};
}

LawSpec builtin_law(const std::string& name, const std::map<std::string, Rational>& params, int max_order) {
  if (max_order < 1) throw ValidationError("invalid_parameter", "max_order must be at least 1", "max_order");
  const std::size_t N = static_cast<std::size_t>(max_order) + 1;
  for (auto& [k, v] : params) {
    auto defaults = default_law_params(name);
    if (!defaults.count(k)) throw ValidationError("invalid_parameter", "law " + name + " has no parameter " + k, k);
  }
  std::vector<Rational> seq(N, Rational(0));
  if (name == "gaussian") {
    Rational var = param(params, "var", Rational(1));
    require_positive(var, "var");
    if (N > 2) seq[2] = var;
    return law_from_cumulants(with_param(name, "var", var), LawKind::classical, seq);
  }
  if (name == "centered_poisson") {
    Rational lam = param(params, "lambda", Rational(1));
    require_positive(lam, "lambda");
    for (std::size_t k = 2; k < N; ++k) seq[k] = lam;
    return law_from_cumulants(with_param(name, "lambda", lam), LawKind::classical, seq);
  }
  if (name == "gamma_F") {
    // F(ν) = 2G − ν with G ~ Γ(ν/2, 1); E[G^j] = a(a+1)…(a+j−1), a = ν/2.
    Rational nu = param(params, "nu", Rational(1));
    require_positive(nu, "nu");
    Rational a = nu / Rational(2);
    std::vector<Rational> g(N, Rational(1));
    for (std::size_t j = 1; j < N; ++j) g[j] = g[j - 1] * (a + Rational(static_cast<int>(j) - 1));
    for (std::size_t k = 0; k < N; ++k) {
      Rational acc(0);
      for (std::size_t j = 0; j <= k; ++j)
        acc += binomial(static_cast<int>(k), static_cast<int>(j)) * pow(Rational(2), static_cast<int>(j)) * g[j] *
               pow(-nu, static_cast<int>(k - j));
      seq[k] = acc;
    }
    return law_from_moments(with_param(name, "nu", nu), LawKind::classical, seq);
  }
  if (name == "rademacher" || name == "free_rademacher") {
    for (std::size_t k = 0; k < N; k += 2) seq[k] = Rational(1);
    return law_from_moments(name, name == "rademacher" ? LawKind::classical : LawKind::free_, seq);
  }
  if (name == "uniform") {
    // Uniform on [−√3, √3]: E[X^{2k}] = 3^k/(2k+1).
    for (std::size_t k = 0; k < N; k += 2)
      seq[k] = pow(Rational(3), static_cast<int>(k / 2)) / Rational(static_cast<int>(k) + 1);
    return law_from_moments(name, LawKind::classical, seq);
  }
  if (name == "semicircle") {
    Rational var = param(params, "var", Rational(1));
    require_positive(var, "var");
    if (N > 2) seq[2] = var;
    return law_from_cumulants(with_param(name, "var", var), LawKind::free_, seq);
  }
  if (name == "free_poisson_centered") {
    Rational lam = param(params, "lambda", Rational(1));
    require_positive(lam, "lambda");
    for (std::size_t k = 2; k < N; ++k) seq[k] = lam;
    return law_from_cumulants(with_param(name, "lambda", lam), LawKind::free_, seq);
  }
  if (name == "tetilla") {
    // φ(T^{2n}) = (1/(n 2^n)) Σ_{k=1}^n 2^k C(2n,k−1) C(n,k)
    seq[0] = Rational(1);
    for (std::size_t m = 2; m < N; m += 2) {
      int n = static_cast<int>(m / 2);
      Rational acc(0);
      for (int k = 1; k <= n; ++k) acc += pow(Rational(2), k) * binomial(2 * n, k - 1) * binomial(n, k);
      seq[m] = acc / (Rational(n) * pow(Rational(2), n));
    }
    return law_from_moments(name, LawKind::free_, seq);
  }
  throw ValidationError("unknown_law", "unknown law '" + name + "'", "law");
}

LawSpec parse_law_argument(const std::string& text, int max_order) {
  auto colon = text.find(':');
  std::string name = text.substr(0, colon);
  if (name == "free_poisson") name = "free_poisson_centered";
  std::map<std::string, Rational> params;
  if (colon != std::string::npos) {
    std::stringstream ss(text.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto eq = item.find('=');
      if (eq == std::string::npos) throw ValidationError("parse_error", "law parameter needs key=value", "law");
      auto v = Rational::try_parse(item.substr(eq + 1));
      if (!v) throw ValidationError("parse_error", "bad law parameter value '" + item + "'", "law");
      params[item.substr(0, eq)] = *v;
    }
  }
  return builtin_law(name, params, max_order);
}

LawSpec transformed_law(LawKind base, int h, int max_order) {
  if (h < 1) throw ValidationError("invalid_parameter", "polynomial order must be positive", "h");
  const Lattice lat = lattice_of(base);
  std::vector<Rational> m(static_cast<std::size_t>(max_order) + 1, Rational(0));
  m[0] = Rational(1);
  for (int k = 1; k <= max_order; ++k) {
    if ((h * k) % 2) continue;
    check_partition_cap(h * k, "h*k");
    m[k] = Rational(mpz_class(std::to_string(respectful_pairings(h, k, lat))));
  }
  std::string name = (base == LawKind::free_ ? "U" : "H") + std::to_string(h) +
                     (base == LawKind::free_ ? "(S)" : "(N)");
  return law_from_moments(name, base, std::move(m));
}

namespace {

Rational nc_moebius_cached(const SetPartition& s, std::map<SetPartition, Rational>& memo) {
  auto it = memo.find(s);
  if (it != memo.end()) return it->second;
  Rational v = moebius_to_top(s, Lattice::noncrossing);
  memo.emplace(s, v);
  return v;
}

} // namespace

Rational multivariate_cumulant(const std::function<Rational(const std::vector<int>&)>& joint_moment, int n,
                               LawKind kind) {
  check_partition_cap(n);
  PartitionFilter f;
  f.noncrossing = kind == LawKind::free_;
  std::map<std::vector<int>, Rational> moment_cache;
  std::map<SetPartition, Rational> mu_cache;
  Rational acc(0);
  for_each_partition(n, f, [&](const std::vector<int>& labels, int nb) {
    SetPartition s = SetPartition::from_labels(labels);
    Rational mu = kind == LawKind::classical ? moebius_to_top(s, Lattice::classical) : nc_moebius_cached(s, mu_cache);
    Rational prod = mu;
    for (auto& b : s.blocks()) {
      auto it = moment_cache.find(b);
      if (it == moment_cache.end()) it = moment_cache.emplace(b, joint_moment(b)).first;
      prod *= it->second;
      if (prod.is_zero()) break;
    }
    (void)nb;
    acc += prod;
  });
  return acc;
}

Poly<Rational> chebyshev_u(int h) {
  Poly<Rational> a = Poly<Rational>::constant(Rational(1)), b = Poly<Rational>::x();
  if (h == 0) return a;
  for (int m = 1; m < h; ++m) {
    Poly<Rational> c = Poly<Rational>::x() * b - a;
    a = b;
    b = c;
  }
  return b;
}

Poly<Rational> hermite_he(int h) {
  Poly<Rational> a = Poly<Rational>::constant(Rational(1)), b = Poly<Rational>::x();
  if (h == 0) return a;
  for (int m = 1; m < h; ++m) {
    Poly<Rational> c = Poly<Rational>::x() * b - a * Rational(m);
    a = b;
    b = c;
  }
  return b;
}

Poly<Rational> free_charlier(int k, const Rational& t) {
  Poly<Rational> a = Poly<Rational>::constant(Rational(1)), b = Poly<Rational>::x();
  if (k == 0) return a;
  Poly<Rational> xm1(std::vector<Rational>{Rational(-1), Rational(1)});
  for (int m = 1; m < k; ++m) {
    Poly<Rational> c = xm1 * b - a * t;
    a = b;
    b = c;
  }
  return b;
}

Rational expect(const LawSpec& law, const Poly<Rational>& p) {
  Rational acc(0);
  for (int k = 0; k <= p.degree(); ++k)
    if (!p.c[k].is_zero()) acc += p.c[k] * law.moment(k);
  return acc;
}

std::string law_to_json(const LawSpec& law) {
  nlohmann::ordered_json j;
  j["name"] = law.name;
  j["kind"] = kind_name(law.kind);
  std::vector<std::string> m, c;
  for (auto& v : law.moments) m.push_back(v.str());
  for (auto& v : law.cumulants) c.push_back(v.str());
  j["moments"] = m;
  j["cumulants"] = c;
  return j.dump();
}

LawSpec law_from_json(const std::string& text) {
  try {
    auto j = nlohmann::json::parse(text);
    std::string kind = j.at("kind").get<std::string>();
    if (kind != "classical" && kind != "free")
      throw ValidationError("invalid_law", "kind must be classical or free", "kind");
    std::vector<Rational> m;
    for (auto& v : j.at("moments")) {
      std::string s = v.is_string() ? v.get<std::string>() : v.dump();
      auto r = Rational::try_parse(s);
      if (!r) throw ValidationError("parse_error", "bad moment '" + s + "'", "moments");
      m.push_back(*r);
    }
    if (m.empty()) throw ValidationError("invalid_law", "empty moment sequence", "moments");
    return law_from_moments(j.value("name", "custom"), kind == "classical" ? LawKind::classical : LawKind::free_,
                            std::move(m));
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception& e) {
    throw ValidationError("parse_error", std::string("law JSON: ") + e.what(), "law");
  }
}

std::vector<std::string> poly_strings(const Poly<Rational>& p) {
  std::vector<std::string> out;
  for (auto& c : p.c) out.push_back(c.str());
  if (out.empty()) out.push_back("0/1");
  return out;
}

std::string poly_pretty(const Poly<Rational>& p) {
  if (p.is_zero()) return "0";
  std::string out;
  for (int k = p.degree(); k >= 0; --k) {
    Rational c = p.c[k];
    if (c.is_zero()) continue;
    bool neg = c.sign() < 0;
    Rational a = abs(c);
    if (out.empty()) out += neg ? "-" : "";
    else out += neg ? " - " : " + ";
    bool unit = a == Rational(1);
    if (!unit || k == 0) out += a.short_str();
    if (k > 0) out += (unit ? "" : "*") + std::string("x") + (k > 1 ? "^" + std::to_string(k) : "");
  }
  return out;
}

} // namespace ck
