#include "chaoskit/kernels.hpp"

#include "chaoskit/errors.hpp"

#include <json.hpp>

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ck {

std::uint64_t ipow(int base, int exp) {
  std::uint64_t r = 1;
  for (int k = 0; k < exp; ++k) r *= static_cast<std::uint64_t>(base);
  return r;
}

namespace {

constexpr std::uint64_t kMaxEntries = std::uint64_t{1} << 26;

template <typename T>
bool near_equal(const T& a, const T& b) {
  if constexpr (std::is_same_v<T, double>) return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b));
  else return a == b;
}

template <typename T>
bool is_zero_value(const T& a) {
  if constexpr (std::is_same_v<T, double>) return a == 0.0;
  else return a.is_zero();
}

template <typename T>
T fact(int n) {
  T r(1);
  for (int k = 2; k <= n; ++k) r *= T(k);
  return r;
}

bool has_repeat(const std::vector<int>& idx) {
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = a + 1; b < idx.size(); ++b)
      if (idx[a] == idx[b]) return true;
  return false;
}

} // namespace

template <typename T>
Kernel<T>::Kernel(int n, int d) : n_(n), d_(d) {
  if (n < 1) throw ValidationError("invalid_kernel", "alphabet size must be positive", "n");
  if (d < 0) throw ValidationError("invalid_kernel", "degree must be non-negative", "d");
  auto sz = ipow(n, d);
  if (d > 0 && (sz > kMaxEntries || std::log2(double(n)) * d > 40))
    throw SizeLimitError("kernel with n^d = " + std::to_string(n) + "^" + std::to_string(d) + " entries is too large", "d");
  coeffs_.assign(static_cast<std::size_t>(sz), T(0));
}

template <typename T>
Kernel<T> Kernel<T>::scalar(const T& v) {
  Kernel k(1, 0);
  k.coeffs_[0] = v;
  return k;
}

template <typename T>
void Kernel<T>::set_scale_sq(const T& s) {
  if (s < T(0)) throw ValidationError("invalid_kernel", "scale_sq must be non-negative", "scale_sq");
  scale_sq_ = s;
  fold_scale();
}

template <typename T>
bool Kernel<T>::fold_scale() {
  if (scale_sq_ == T(1)) return true;
  T root;
  if constexpr (std::is_same_v<T, double>) {
    root = std::sqrt(scale_sq_);
  } else {
    auto r = exact_sqrt(scale_sq_);
    if (!r) return false;
    root = *r;
  }
  for (auto& c : coeffs_) c *= root;
  scale_sq_ = T(1);
  return true;
}

template <typename T>
Surd<T> Kernel<T>::value(const Index& idx) const {
  return scaled_value(coeff(idx), scale_sq_, 1);
}

template <typename T>
std::size_t Kernel<T>::flat_index(const Index& idx) const {
  if (static_cast<int>(idx.size()) != d_)
    throw ValidationError("index_out_of_range", "index tuple has length " + std::to_string(idx.size()) +
                                                    ", expected " + std::to_string(d_), "idx");
  std::size_t flat = 0;
  for (int v : idx) {
    if (v < 1 || v > n_)
      throw ValidationError("index_out_of_range", "index " + std::to_string(v) + " outside 1.." + std::to_string(n_), "idx");
    flat = flat * static_cast<std::size_t>(n_) + static_cast<std::size_t>(v - 1);
  }
  return flat;
}

template <typename T>
typename Kernel<T>::Index Kernel<T>::unflatten(std::size_t flat) const {
  Index idx(static_cast<std::size_t>(d_));
  for (int l = d_ - 1; l >= 0; --l) {
    idx[l] = static_cast<int>(flat % static_cast<std::size_t>(n_)) + 1;
    flat /= static_cast<std::size_t>(n_);
  }
  return idx;
}

template <typename T>
void Kernel<T>::compute_flags(std::size_t limit) {
  if (coeffs_.size() > limit) {
    flags_ = {};
    return;
  }
  flags_.symmetric = check_symmetric(*this);
  flags_.mirror_symmetric = check_mirror_symmetric(*this);
  flags_.vanishes_on_diagonals = check_vanishes_on_diagonals(*this);
}

template <typename T>
bool Kernel<T>::is_zero() const {
  return std::all_of(coeffs_.begin(), coeffs_.end(), [](const T& c) { return is_zero_value(c); }) ||
         is_zero_value(scale_sq_);
}

template <typename T>
Kernel<double> Kernel<T>::to_double() const {
  Kernel<double> k(n_, d_);
  double s = std::sqrt(ck::to_double(scale_sq_));
  for (std::size_t i = 0; i < coeffs_.size(); ++i) k.coeff(i) = ck::to_double(coeffs_[i]) * s;
  k.compute_flags();
  return k;
}

template <typename T>
Kernel<T> build_kernel(int n, int d, const std::vector<KernelEntry<T>>& entries, bool symmetrize) {
  Kernel<T> f(n, d);
  std::vector<char> set(f.size(), 0);
  for (auto& e : entries) {
    auto flat = f.flat_index(e.idx);
    if (set[flat] && !(f.coeff(flat) == e.val))
      throw ValidationError("conflicting_entry", "conflicting duplicate entry", "entries");
    f.coeff(flat) = e.val;
    set[flat] = 1;
  }
  if (symmetrize) f = symmetrized(f);
  f.compute_flags();
  return f;
}

template <typename T>
Kernel<T> symmetrized(const Kernel<T>& f) {
  const int d = f.d();
  Kernel<T> out(f.n(), d);
  out.set_scale_sq(f.scale_sq());
  std::vector<int> perm(static_cast<std::size_t>(d));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<int>> perms;
  do perms.push_back(perm);
  while (std::next_permutation(perm.begin(), perm.end()));
  const T count(static_cast<int>(perms.size()));
  for (std::size_t flat = 0; flat < f.size(); ++flat) {
    auto idx = f.unflatten(flat);
    T acc(0);
    std::vector<int> p(static_cast<std::size_t>(d));
    for (auto& s : perms) {
      for (int l = 0; l < d; ++l) p[l] = idx[s[l]];
      acc += f.coeff(p);
    }
    out.coeff(flat) = acc / count;
  }
  out.compute_flags();
  return out;
}

template <typename T>
Kernel<T> mirrored(const Kernel<T>& f) {
  Kernel<T> out(f.n(), f.d());
  out.set_scale_sq(f.scale_sq());
  for (std::size_t flat = 0; flat < f.size(); ++flat) {
    auto idx = f.unflatten(flat);
    std::reverse(idx.begin(), idx.end());
    out.coeff(flat) = f.coeff(idx);
  }
  return out;
}

template <typename T>
bool check_symmetric(const Kernel<T>& f) {
  for (std::size_t flat = 0; flat < f.size(); ++flat) {
    auto idx = f.unflatten(flat);
    for (int l = 0; l + 1 < f.d(); ++l) {
      auto p = idx;
      std::swap(p[l], p[l + 1]);
      if (!near_equal(f.coeff(p), f.coeff(flat))) return false;
    }
  }
  return true;
}

template <typename T>
bool check_mirror_symmetric(const Kernel<T>& f) {
  for (std::size_t flat = 0; flat < f.size(); ++flat) {
    auto idx = f.unflatten(flat);
    std::reverse(idx.begin(), idx.end());
    if (!near_equal(f.coeff(idx), f.coeff(flat))) return false;
  }
  return true;
}

template <typename T>
bool check_vanishes_on_diagonals(const Kernel<T>& f) {
  for (std::size_t flat = 0; flat < f.size(); ++flat)
    if (!is_zero_value(f.coeff(flat)) && has_repeat(f.unflatten(flat))) return false;
  return true;
}

template <typename T>
T norm_sq(const Kernel<T>& f) {
  T acc(0);
  for (auto& c : f.coeffs()) acc += c * c;
  return acc * f.scale_sq();
}

template <typename T>
Surd<T> inner(const Kernel<T>& f, const Kernel<T>& g) {
  if (f.n() != g.n() || f.d() != g.d())
    throw ValidationError("shape_mismatch", "inner product of kernels with different shapes");
  T acc(0);
  for (std::size_t i = 0; i < f.size(); ++i) acc += f.coeff(i) * g.coeff(i);
  if (f.scale_sq() == g.scale_sq()) return Surd<T>(acc * f.scale_sq());
  return Surd<T>(T(0), acc, f.scale_sq() * g.scale_sq());
}

template <typename T>
Surd<T> distance_sq(const Kernel<T>& f, const Kernel<T>& g) {
  Surd<T> r(norm_sq(f) + norm_sq(g));
  Surd<T> ip = inner(f, g);
  r -= ip * T(2);
  return r;
}

template <typename T>
Kernel<T> normalized(const Kernel<T>& f, Flavor flavor) {
  T v = norm_sq(f);
  if (flavor == Flavor::classical) v *= fact<T>(f.d());
  if (is_zero_value(v)) throw ValidationError("zero_kernel", "cannot normalize the zero kernel", "kernel");
  Kernel<T> out = f;
  out.set_scale_sq(f.scale_sq() / v);
  out.compute_flags();
  return out;
}

template <typename T>
ValidationReport<T> validate(const Kernel<T>& f, Flavor flavor) {
  ValidationReport<T> rep;
  rep.flavor = flavor;
  rep.variance = norm_sq(f);
  if (flavor == Flavor::classical) rep.variance *= fact<T>(f.d());
  const bool diag = check_vanishes_on_diagonals(f);
  if (flavor == Flavor::mirror) {
    rep.clauses.push_back({"mirror_symmetry", check_mirror_symmetric(f), ""});
  } else {
    rep.clauses.push_back({"symmetry", check_symmetric(f), ""});
  }
  rep.clauses.push_back({"vanishes_on_diagonals", diag, ""});
  rep.clauses.push_back({"unit_variance", near_equal(rep.variance, T(1)),
                         (flavor == Flavor::classical ? "d!*sum f^2 = " : "sum f^2 = ") + scalar_str(rep.variance)});
  return rep;
}

template <typename T>
Kernel<T> contraction(const Kernel<T>& f, const Kernel<T>& g, int q) {
  if (f.n() != g.n()) throw ValidationError("shape_mismatch", "contraction of kernels over different alphabets", "n");
  if (q < 0 || q > std::min(f.d(), g.d()))
    throw ValidationError("invalid_order", "contraction order out of range", "q");
  const int n = f.n();
  const int df = f.d() - q, dg = g.d() - q;
  const auto rows = static_cast<Eigen::Index>(ipow(n, df));
  const auto inner_sz = static_cast<Eigen::Index>(ipow(n, q));
  const auto cols = static_cast<Eigen::Index>(ipow(n, dg));
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const Mat> F(f.coeffs().data(), rows, inner_sz);
  // G(i₁..i_q, s) = g(i_q..i₁, s)
  Mat G(inner_sz, cols);
  std::vector<int> digits(static_cast<std::size_t>(q));
  for (Eigen::Index a = 0; a < inner_sz; ++a) {
    std::size_t x = static_cast<std::size_t>(a);
    for (int l = q - 1; l >= 0; --l) {
      digits[l] = static_cast<int>(x % static_cast<std::size_t>(n));
      x /= static_cast<std::size_t>(n);
    }
    std::size_t rev = 0;
    for (int l = q - 1; l >= 0; --l) rev = rev * static_cast<std::size_t>(n) + static_cast<std::size_t>(digits[l]);
    for (Eigen::Index s = 0; s < cols; ++s) G(a, s) = g.coeff(rev * static_cast<std::size_t>(cols) + static_cast<std::size_t>(s));
  }
  Kernel<T> out(n, df + dg);
  Mat R = F * G;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      out.coeff(static_cast<std::size_t>(i * cols + j)) = R(i, j);
  out.set_scale_sq(f.scale_sq() * g.scale_sq());
  return out;
}

template <typename T>
Kernel<T> star_contraction(const Kernel<T>& f, const Kernel<T>& g, int r) {
  if (f.n() != g.n()) throw ValidationError("shape_mismatch", "star contraction over different alphabets", "n");
  if (r < 1 || r > std::min(f.d(), g.d()))
    throw ValidationError("invalid_order", "star contraction order out of range", "r");
  const int n = f.n();
  const int dt = f.d() - r, ds = g.d() - r, m = r - 1;
  const std::size_t nt = ipow(n, dt), ns = ipow(n, ds), ni = ipow(n, m);
  Kernel<T> out(n, dt + ds + 1);
  const std::size_t N = static_cast<std::size_t>(n);
  std::vector<std::size_t> rev(ni);
  for (std::size_t a = 0; a < ni; ++a) {
    std::size_t x = a, rv = 0;
    for (int l = 0; l < m; ++l) {
      rv = rv * N + x % N;
      x /= N;
    }
    rev[a] = rv;
  }
  for (std::size_t t = 0; t < nt; ++t)
    for (std::size_t gam = 0; gam < N; ++gam)
      for (std::size_t s = 0; s < ns; ++s) {
        T acc(0);
        for (std::size_t a = 0; a < ni; ++a) {
          // f(t, γ, i₁..i_m): t, then γ, then a
          const T& fv = f.coeff((t * N + gam) * ni + a);
          if (is_zero_value(fv)) continue;
          // g(i_m..i₁, γ, s)
          const T& gv = g.coeff((rev[a] * N + gam) * ns + s);
          acc += fv * gv;
        }
        out.coeff((t * N + gam) * ns + s) = acc;
      }
  out.set_scale_sq(f.scale_sq() * g.scale_sq());
  return out;
}

template <typename T>
std::vector<T> influence(const Kernel<T>& f, InfluenceNorm norm) {
  std::vector<T> inf(static_cast<std::size_t>(f.n()), T(0));
  for (std::size_t flat = 0; flat < f.size(); ++flat) {
    const T& c = f.coeff(flat);
    if (is_zero_value(c)) continue;
    T sq = c * c;
    for (int i : f.unflatten(flat)) inf[i - 1] += sq;
  }
  T s = f.scale_sq();
  if (norm == InfluenceNorm::slot_average && f.d() > 0) s /= T(f.d());
  for (auto& v : inf) v *= s;
  return inf;
}

template <typename T>
T tau_max(const Kernel<T>& f, InfluenceNorm norm) {
  auto inf = influence(f, norm);
  T best(0);
  for (auto& v : inf)
    if (v > best) best = v;
  return best;
}

template <typename T>
Kernel<T> slice(const Kernel<T>& f, const std::vector<int>& prefix) {
  const int m = static_cast<int>(prefix.size());
  if (m > f.d()) throw ValidationError("invalid_order", "slice prefix longer than the degree", "prefix");
  std::size_t base = 0;
  for (int v : prefix) {
    if (v < 1 || v > f.n()) throw ValidationError("index_out_of_range", "slice index out of range", "prefix");
    base = base * static_cast<std::size_t>(f.n()) + static_cast<std::size_t>(v - 1);
  }
  Kernel<T> out(f.n(), f.d() - m);
  base *= out.size();
  for (std::size_t k = 0; k < out.size(); ++k) out.coeff(k) = f.coeff(base + k);
  out.set_scale_sq(f.scale_sq());
  return out;
}

template <typename T>
LiftedKernel<T>::LiftedKernel(Kernel<T> base, std::vector<int> orders)
    : base_(std::move(base)), orders_(std::move(orders)) {
  if (static_cast<int>(orders_.size()) != base_.d())
    throw ValidationError("invalid_orders", "one order per kernel argument is required", "orders");
  for (std::size_t j = 0; j < orders_.size(); ++j) {
    if (orders_[j] < 1) throw ValidationError("invalid_orders", "orders must be positive", "orders");
    if (orders_[j] != orders_[orders_.size() - 1 - j])
      throw ValidationError("invalid_orders", "orders must be palindromic", "orders");
    total_ += orders_[j];
  }
}

template <typename T>
Kernel<T> LiftedKernel<T>::materialize() const {
  Kernel<T> k(base_.n(), total_);
  for (std::size_t flat = 0; flat < base_.size(); ++flat) {
    auto idx = base_.unflatten(flat);
    std::vector<int> big;
    for (std::size_t j = 0; j < idx.size(); ++j)
      for (int h = 0; h < orders_[j]; ++h) big.push_back(idx[j]);
    k.coeff(big) = base_.coeff(flat);
  }
  k.set_scale_sq(base_.scale_sq());
  return k;
}

template <typename T>
std::vector<typename LiftedKernel<T>::NormEntry> LiftedKernel<T>::contraction_norms() const {
  std::vector<NormEntry> out;
  const int d = base_.d();
  int acc = 0;
  for (int q = 1; q <= d; ++q) {
    const int h = orders_[q - 1];
    if (h > 1) {
      T v = norm_sq(star_contraction(base_, base_, q));
      for (int t = 1; t < h; ++t) out.push_back({acc + t, v, Source::star, q});
    }
    acc += h;
    if (acc < total_) out.push_back({acc, norm_sq(contraction(base_, base_, q)), Source::contraction, q});
  }
  return out;
}

template <typename T>
Surd<T> LiftedKernel<T>::midpoint_norm_sq() const {
  const int d = base_.d();
  if (total_ % 2) throw ValidationError("odd_degree", "midpoint needs an even lifted degree", "orders");
  if (d % 2 == 0) return distance_sq(contraction(base_, base_, d / 2), base_);
  return distance_sq(star_contraction(base_, base_, (d + 1) / 2), base_);
}

KernelDocument parse_kernel_json(const std::string& text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ValidationError("parse_error", std::string("kernel JSON: ") + e.what(), "kernel");
  }
  KernelDocument doc;
  try {
    doc.n = j.at("n").get<int>();
    doc.d = j.at("d").get<int>();
    std::string mode = j.value("mode", "exact");
    if (mode != "exact" && mode != "float") throw ValidationError("invalid_mode", "mode must be exact or float", "mode");
    doc.exact = mode == "exact";
    doc.symmetrize = j.value("symmetrize", false);
    if (j.contains("scale_sq")) {
      auto& s = j["scale_sq"];
      doc.scale_sq = s.is_string() ? s.get<std::string>() : s.dump();
    }
    for (auto& e : j.at("entries")) {
      std::vector<int> idx = e.at("idx").get<std::vector<int>>();
      auto& v = e.at("val");
      std::string val = v.is_string() ? v.get<std::string>() : v.dump();
      doc.entries.emplace_back(std::move(idx), std::move(val));
    }
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception& e) {
    throw ValidationError("parse_error", std::string("kernel JSON: ") + e.what(), "kernel");
  }
  return doc;
}

Kernel<Rational> kernel_from_document(const KernelDocument& doc) {
  std::vector<KernelEntry<Rational>> entries;
  for (auto& [idx, val] : doc.entries) {
    auto r = Rational::try_parse(val);
    if (!r) throw ValidationError("parse_error", "bad kernel value '" + val + "'", "val");
    entries.push_back({idx, *r});
  }
  auto f = build_kernel<Rational>(doc.n, doc.d, entries, doc.symmetrize);
  auto s = Rational::try_parse(doc.scale_sq);
  if (!s) throw ValidationError("parse_error", "bad scale_sq '" + doc.scale_sq + "'", "scale_sq");
  f.set_scale_sq(*s);
  return f;
}

Kernel<double> kernel_from_document_float(const KernelDocument& doc) {
  return kernel_from_document(doc).to_double();
}

template <typename T>
std::string kernel_to_json(const Kernel<T>& f) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["n"] = f.n();
  j["d"] = f.d();
  j["mode"] = std::is_same_v<T, double> ? "float" : "exact";
  j["symmetrize"] = false;
  if (!(f.scale_sq() == T(1))) j["scale_sq"] = scalar_str(f.scale_sq());
  ordered_json entries = ordered_json::array();
  for (std::size_t flat = 0; flat < f.size(); ++flat) {
    if (is_zero_value(f.coeff(flat))) continue;
    ordered_json e;
    e["idx"] = f.unflatten(flat);
    if constexpr (std::is_same_v<T, double>) e["val"] = f.coeff(flat);
    else e["val"] = f.coeff(flat).str();
    entries.push_back(e);
  }
  j["entries"] = entries;
  return j.dump();
}

namespace families {

namespace {
template <typename Pred>
Kernel<Rational> indicator(int n, const Rational& scale_sq, Pred pred) {
  Kernel<Rational> f(n, 2);
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j)
      if (i != j && pred(i, j)) f.coeff({i, j}) = Rational(1);
  f.set_scale_sq(scale_sq);
  f.compute_flags();
  return f;
}
} // namespace

Kernel<Rational> off_diagonal(int n, const Rational& scale_sq) {
  return indicator(n, scale_sq, [](int, int) { return true; });
}

Kernel<Rational> star(int n, const Rational& scale_sq) {
  return indicator(n, scale_sq, [](int i, int j) { return i == 1 || j == 1; });
}

Kernel<Rational> avoid_first(int n, const Rational& scale_sq) {
  return indicator(n, scale_sq, [](int i, int j) { return i != 1 && j != 1; });
}

Kernel<Rational> constant_off_diagonal(int n, int d, const Rational& scale_sq) {
  Kernel<Rational> f(n, d);
  for (std::size_t flat = 0; flat < f.size(); ++flat)
    if (!has_repeat(f.unflatten(flat))) f.coeff(flat) = Rational(1);
  f.set_scale_sq(scale_sq);
  f.compute_flags();
  return f;
}

} // namespace families

#define CK_INSTANTIATE(T)                                                                         \
  template class Kernel<T>;                                                                       \
  template class LiftedKernel<T>;                                                                 \
  template Kernel<T> build_kernel(int, int, const std::vector<KernelEntry<T>>&, bool);            \
  template Kernel<T> symmetrized(const Kernel<T>&);                                               \
  template Kernel<T> mirrored(const Kernel<T>&);                                                  \
  template bool check_symmetric(const Kernel<T>&);                                                \
  template bool check_mirror_symmetric(const Kernel<T>&);                                         \
  template bool check_vanishes_on_diagonals(const Kernel<T>&);                                    \
  template T norm_sq(const Kernel<T>&);                                                           \
  template Surd<T> inner(const Kernel<T>&, const Kernel<T>&);                                     \
  template Surd<T> distance_sq(const Kernel<T>&, const Kernel<T>&);                               \
  template Kernel<T> normalized(const Kernel<T>&, Flavor);                                        \
  template ValidationReport<T> validate(const Kernel<T>&, Flavor);                                \
  template Kernel<T> contraction(const Kernel<T>&, const Kernel<T>&, int);                        \
  template Kernel<T> star_contraction(const Kernel<T>&, const Kernel<T>&, int);                   \
  template std::vector<T> influence(const Kernel<T>&, InfluenceNorm);                             \
  template T tau_max(const Kernel<T>&, InfluenceNorm);                                            \
  template Kernel<T> slice(const Kernel<T>&, const std::vector<int>&);                            \
  template std::string kernel_to_json(const Kernel<T>&);

CK_INSTANTIATE(Rational)
CK_INSTANTIATE(double)

} // namespace ck
