#include "commands.hpp"

#include "chaoskit/errors.hpp"
#include "chaoskit/homsum.hpp"
#include "chaoskit/kernels.hpp"
#include "chaoskit/laws.hpp"
#include "chaoskit/orthopoly.hpp"
#include "chaoskit/partlat.hpp"
#include "chaoskit/report.hpp"
#include "chaoskit/stochsim.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <sstream>

namespace ck::cli {

namespace {

struct Common {
  std::string format = "json";
  std::string output;
  int threads = 1;
};

std::string read_file(const std::string& path, const std::string& field) {
  std::ifstream in(path);
  if (!in) throw ValidationError("unreadable_file", "cannot read '" + path + "'", field);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

LawSpec load_law(const std::string& arg, int order) {
  if (arg.size() > 5 && arg.substr(arg.size() - 5) == ".json") return law_from_json(read_file(arg, "law"));
  return parse_law_argument(arg, std::max(order, kDefaultLawOrder));
}

template <typename T>
Kernel<T> load_kernel(const std::string& path) {
  KernelDocument doc = parse_kernel_json(read_file(path, "kernel"));
  if constexpr (std::is_same_v<T, Rational>) return kernel_from_document(doc);
  else return kernel_from_document_float(doc);
}

Flavor parse_flavor(const std::string& s) {
  if (s == "classical") return Flavor::classical;
  if (s == "free") return Flavor::free_;
  if (s == "mirror") return Flavor::mirror;
  throw ValidationError("invalid_argument", "flavor must be classical, free or mirror", "flavor");
}

InfluenceNorm parse_norm(const std::string& s) {
  if (s == "slot_sum") return InfluenceNorm::slot_sum;
  if (s == "slot_average") return InfluenceNorm::slot_average;
  throw ValidationError("invalid_argument", "norm must be slot_sum or slot_average", "norm");
}

std::vector<Rational> parse_rational_list(const std::string& text, const std::string& field, char sep = ',') {
  std::vector<Rational> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    auto r = Rational::try_parse(item);
    if (!r) throw ValidationError("parse_error", "cannot parse '" + item + "' as a rational", field);
    out.push_back(*r);
  }
  return out;
}

template <typename T>
std::string sval(const T& v) {
  if constexpr (std::is_same_v<T, Rational>) return v.str();
  else return format_double(v);
}

template <typename T>
std::string sval(const Surd<T>& v) {
  if constexpr (std::is_same_v<T, Rational>) return v.str();
  else return format_double(v.to_double());
}

Json cstr(const Complex& z) { return Json::array({z.real(), z.imag()}); }

std::string cplx(const Complex& z) {
  if (z.imag() == 0.0) return format_double(z.real());
  return format_double(z.real()) + (z.imag() < 0 ? "-" : "+") + format_double(std::fabs(z.imag())) + "i";
}

Json poly_json(const Poly<Rational>& p) { return Json(poly_strings(p)); }

const char* bool_str(bool b) { return b ? "true" : "false"; }

// ---------------------------------------------------------------------------

struct PartitionsArgs {
  int n = 4;
  bool pairings = false;
  bool noncrossing = false;
  std::vector<int> blocks;
  std::vector<int> respect;
  std::vector<int> block_class;
  bool count_only = false;
};

Report cmd_partitions(const PartitionsArgs& a) {
  check_partition_cap(a.n);
  PartitionFilter f;
  f.noncrossing = a.noncrossing;
  if (a.pairings) f.allowed_block_sizes = std::set<int>{2};
  if (!a.blocks.empty()) f.allowed_block_sizes = std::set<int>(a.blocks.begin(), a.blocks.end());
  if (!a.respect.empty()) f.respects = SetPartition::intervals(a.respect);
  if (!a.block_class.empty()) f.block_class = a.block_class;
  Report r;
  r.command = "partitions";
  r.config = {{"n", a.n}, {"pairings", a.pairings}, {"noncrossing", a.noncrossing}, {"blocks", a.blocks},
              {"respect", a.respect}, {"class", a.block_class}, {"count_only", a.count_only}};
  if (a.count_only) {
    r.result["count"] = count_partitions(a.n, f);
    return r;
  }
  auto parts = enumerate_partitions(a.n, f);
  r.result["count"] = parts.size();
  Json list = Json::array();
  Table t{{"index", "partition", "class", "noncrossing"}, {}};
  for (std::size_t i = 0; i < parts.size(); ++i) {
    list.push_back(parts[i].str());
    std::string cls;
    for (int s : parts[i].block_class()) cls += (cls.empty() ? "" : ",") + std::to_string(s);
    t.rows.push_back({std::to_string(i + 1), parts[i].str(), cls, bool_str(parts[i].is_noncrossing())});
  }
  r.result["partitions"] = list;
  r.tables.push_back(std::move(t));
  return r;
}

// ---------------------------------------------------------------------------

struct KernelArgs {
  std::string kernel;
  std::string mode = "exact";
  std::string flavor = "classical";
  std::string kernel2;
  int q = 1;
  int star = 0;
  std::string norm = "slot_sum";
};

template <typename T>
Report kernel_validate(const KernelArgs& a) {
  Kernel<T> f = load_kernel<T>(a.kernel);
  auto rep = validate(f, parse_flavor(a.flavor));
  Report r;
  r.command = "kernel-validate";
  r.config = {{"kernel", a.kernel}, {"mode", a.mode}, {"flavor", a.flavor}};
  r.result["n"] = f.n();
  r.result["d"] = f.d();
  r.result["variance"] = sval(rep.variance);
  r.result["admissible"] = rep.admissible();
  Table t{{"clause", "pass", "detail"}, {}};
  Json cl = Json::array();
  for (const auto& c : rep.clauses) {
    cl.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    t.rows.push_back({c.name, bool_str(c.pass), c.detail});
  }
  r.result["clauses"] = cl;
  r.tables.push_back(std::move(t));
  return r;
}

template <typename T>
Report contract_cmd(const KernelArgs& a) {
  Kernel<T> f = load_kernel<T>(a.kernel);
  Kernel<T> g = a.kernel2.empty() ? f : load_kernel<T>(a.kernel2);
  Kernel<T> h = a.star > 0 ? star_contraction(f, g, a.star) : contraction(f, g, a.q);
  Report r;
  r.command = "contract";
  r.config = {{"kernel", a.kernel}, {"kernel2", a.kernel2.empty() ? a.kernel : a.kernel2}, {"mode", a.mode},
              {"q", a.q}, {"star", a.star}};
  r.result["operation"] = a.star > 0 ? "star" : "contraction";
  r.result["n"] = h.n();
  r.result["d"] = h.d();
  r.result["norm_sq"] = sval(norm_sq(h));
  r.result["kernel"] = Json::parse(kernel_to_json(h));
  Table t{{"index", "value"}, {}};
  for (std::size_t flat = 0; flat < h.size(); ++flat) {
    if (h.coeff(flat) == T(0)) continue;
    std::string ix;
    for (int v : h.unflatten(flat)) ix += (ix.empty() ? "" : ",") + std::to_string(v);
    t.rows.push_back({ix, sval(h.value(h.unflatten(flat)))});
  }
  r.tables.push_back(std::move(t));
  return r;
}

template <typename T>
Report influence_cmd(const KernelArgs& a) {
  Kernel<T> f = load_kernel<T>(a.kernel);
  const InfluenceNorm norm = parse_norm(a.norm);
  auto inf = influence(f, norm);
  Report r;
  r.command = "influence";
  r.config = {{"kernel", a.kernel}, {"mode", a.mode}, {"norm", a.norm}};
  Json arr = Json::array();
  Table t{{"i", "influence"}, {}};
  for (std::size_t i = 0; i < inf.size(); ++i) {
    arr.push_back(sval(inf[i]));
    t.rows.push_back({std::to_string(i + 1), sval(inf[i])});
  }
  r.result["tau_max"] = sval(tau_max(f, norm));
  r.result["influences"] = arr;
  r.tables.push_back(std::move(t));
  return r;
}

// ---------------------------------------------------------------------------

struct MomentArgs {
  std::string kernel;
  std::string law = "gaussian";
  int order = 2;
  std::string mode = "exact";
  bool oracle = false;
  std::vector<int> lift;
};

template <typename T>
Report moment_cmd(const MomentArgs& a) {
  Kernel<T> f = load_kernel<T>(a.kernel);
  LawSpec law = load_law(a.law, a.order * f.d());
  Report r;
  r.command = "moment";
  r.config = {{"kernel", a.kernel}, {"law", law.name}, {"order", a.order}, {"mode", a.mode}, {"oracle", a.oracle},
              {"lift", a.lift}};
  if (!a.lift.empty()) {
    LiftedKernel<T> lk(f, a.lift);
    auto v = wick_moment(lk, a.order, law.kind);
    r.result["value"] = sval(v);
    r.result["value_float"] = v.to_double();
    r.result["method"] = "pairings";
    return r;
  }
  SumSpec<T> spec{f, SumLaw::iid(law)};
  auto v = moment_exact(spec, a.order);
  r.result["value"] = sval(v);
  r.result["value_float"] = v.to_double();
  r.result["kind"] = kind_name(law.kind);
  if (a.oracle) {
    auto o = moment_oracle(spec, a.order);
    r.result["oracle"] = sval(o);
    if constexpr (std::is_same_v<T, Rational>) r.result["oracle_matches"] = o == v;
    else r.result["oracle_matches"] = std::fabs(o.to_double() - v.to_double()) <= 1e-9 * std::max(1.0, std::fabs(v.to_double()));
  }
  return r;
}

template <typename T>
Report fourth_moment_cmd(const MomentArgs& a) {
  Kernel<T> f = load_kernel<T>(a.kernel);
  LawSpec law = load_law(a.law, 4 * f.d());
  auto dec = fourth_moment_formula(SumSpec<T>{f, SumLaw::iid(law)});
  Report r;
  r.command = "fourth-moment";
  r.config = {{"kernel", a.kernel}, {"law", law.name}, {"mode", a.mode}};
  r.result["kind"] = kind_name(dec.kind);
  r.result["value"] = sval(dec.value);
  r.result["reference_term"] = sval(dec.reference_term);
  r.result["chi4"] = sval(dec.chi4);
  r.result["enumeration_total"] = sval(dec.enumeration_total);
  r.result["enumeration_matches"] = dec.enumeration_matches;
  r.result["slice_total"] = sval(dec.slice_total);
  r.result["slice_matches"] = dec.slice_matches;
  if (dec.kind == LawKind::classical) {
    r.result["stated_total"] = sval(dec.stated_total);
    r.result["stated_matches"] = dec.stated_matches;
    r.result["corrected_total"] = sval(dec.corrected_total);
    r.result["corrected_matches"] = dec.corrected_matches;
  }
  r.result["assumption_violations"] = dec.assumption_violations;
  Table t{{"m", "partitions", "partition_sum", "cumulant_weight", "slice_sum", "stated_coef", "corrected_coef"}, {}};
  Json terms = Json::array();
  for (const auto& c : dec.terms) {
    terms.push_back({{"m", c.m}, {"partitions", c.partitions}, {"partition_sum", sval(c.partition_sum)},
                     {"cumulant_weight", sval(c.cumulant_weight)}, {"slice_sum", sval(c.slice_sum)},
                     {"stated_coefficient", sval(c.stated_coefficient)},
                     {"corrected_coefficient", sval(c.corrected_coefficient)}});
    t.rows.push_back({std::to_string(c.m), std::to_string(c.partitions), sval(c.partition_sum),
                      sval(c.cumulant_weight), sval(c.slice_sum), sval(c.stated_coefficient),
                      sval(c.corrected_coefficient)});
  }
  r.result["terms"] = terms;
  r.tables.push_back(std::move(t));
  return r;
}

struct FmtArgs {
  std::string kernel;
  std::string law = "gaussian";
  std::string mode = "exact";
  std::string norm = "slot_sum";
  double tol = -1;
  std::string target = "gamma";
  std::string param;
};

template <typename T>
Report fmt_cmd(const FmtArgs& a) {
  Kernel<T> f = load_kernel<T>(a.kernel);
  LawSpec law = load_law(a.law, 4 * f.d());
  auto rep = fmt_report(SumSpec<T>{f, SumLaw::iid(law)}, parse_norm(a.norm), a.tol);
  Report r;
  r.command = "fmt-check";
  r.config = {{"kernel", a.kernel}, {"law", law.name}, {"mode", a.mode}, {"norm", a.norm}, {"tol", a.tol}};
  r.result["kind"] = kind_name(rep.kind);
  r.result["variance"] = sval(rep.variance);
  r.result["third_moment"] = sval(rep.third_moment);
  r.result["fourth_moment"] = sval(rep.fourth_moment);
  r.result["fourth_cumulant"] = sval(rep.fourth_cumulant);
  r.result["tau_max"] = sval(rep.tau_max);
  Json cn = Json::array(), sn = Json::array();
  for (const auto& v : rep.contraction_norms) cn.push_back(sval(v));
  for (const auto& v : rep.star_norms) sn.push_back(sval(v));
  r.result["contraction_norms"] = cn;
  r.result["star_norms"] = sn;
  Json vs = Json::array();
  Table t{{"verdict", "holds", "gap", "detail"}, {}};
  for (const auto& v : rep.verdicts) {
    vs.push_back({{"name", v.name}, {"holds", v.holds}, {"gap", v.gap}, {"detail", v.detail}});
    t.rows.push_back({v.name, bool_str(v.holds), format_double(v.gap), v.detail});
  }
  r.result["verdicts"] = vs;
  r.tables.push_back(std::move(t));
  return r;
}

template <typename T>
Report noncentral_cmd(const FmtArgs& a) {
  Kernel<T> f = load_kernel<T>(a.kernel);
  LawSpec law = load_law(a.law, 4 * f.d());
  NoncentralTarget target;
  if (a.target == "gamma") target = NoncentralTarget::gamma;
  else if (a.target == "free_poisson") target = NoncentralTarget::free_poisson;
  else throw ValidationError("invalid_argument", "target must be gamma or free_poisson", "target");
  std::optional<Rational> param;
  if (!a.param.empty()) param = Rational::parse(a.param);
  auto rep = noncentral_report(SumSpec<T>{f, SumLaw::iid(law)}, target, param);
  Report r;
  r.command = "noncentral-check";
  r.config = {{"kernel", a.kernel}, {"law", law.name}, {"mode", a.mode}, {"target", a.target},
              {"param", a.param.empty() ? Json(nullptr) : Json(a.param)}};
  r.result["parameter"] = sval(rep.parameter);
  r.result["second_moment"] = sval(rep.second_moment);
  r.result["third_moment"] = sval(rep.third_moment);
  r.result["fourth_moment"] = sval(rep.fourth_moment);
  r.result["statistic"] = sval(rep.statistic);
  r.result["target_value"] = sval(rep.target_value);
  r.result["gap"] = sval(rep.gap);
  r.result["midpoint_distance_sq"] = sval(rep.midpoint_distance_sq);
  r.result["star_norm_sq"] = sval(rep.star_norm_sq);
  Json off = Json::array();
  for (const auto& v : rep.off_midpoint_norms) off.push_back(sval(v));
  r.result["off_midpoint_norms"] = off;
  return r;
}

struct JointArgs {
  std::vector<std::string> kernels;
  std::vector<int> word;
  std::string law = "gaussian";
  std::string mode = "exact";
  bool oracle = false;
};

template <typename T>
Report joint_cmd(const JointArgs& a) {
  std::vector<Kernel<T>> ks;
  int dsum = 0;
  for (const auto& p : a.kernels) {
    ks.push_back(load_kernel<T>(p));
    dsum += ks.back().d();
  }
  std::vector<int> w;
  for (int v : a.word) {
    if (v < 1 || v > static_cast<int>(ks.size()))
      throw ValidationError("index_out_of_range", "word letter " + std::to_string(v) + " has no kernel", "word");
    w.push_back(v - 1);
  }
  LawSpec law = load_law(a.law, dsum * static_cast<int>(w.size()));
  const SumLaw sl = SumLaw::iid(law);
  auto v = joint_moment(ks, w, sl);
  Report r;
  r.command = "joint-moment";
  r.config = {{"kernels", a.kernels}, {"word", a.word}, {"law", law.name}, {"mode", a.mode}, {"oracle", a.oracle}};
  r.result["value"] = sval(v);
  r.result["value_float"] = v.to_double();
  if (a.oracle) {
    auto o = joint_moment_oracle(ks, w, sl);
    r.result["oracle"] = sval(o);
    r.result["oracle_matches"] = std::fabs(o.to_double() - v.to_double()) <= 1e-9 * std::max(1.0, std::fabs(v.to_double()));
  }
  return r;
}

struct SteinArgs {
  std::string kernel;
  std::string law = "gaussian";
  std::string norm = "slot_sum";
  double abs_m3 = -1;
  double r3 = 1;
  double q4 = -1;
  double tau = -1;
  double m4 = -1;
  double x2p1 = -1;
  double hyper_q = 4;
  double hyper_gamma = 3;
};

Report stein_cmd(const SteinArgs& a) {
  Report r;
  r.command = "stein-bound";
  r.config = {{"kernel", a.kernel.empty() ? Json(nullptr) : Json(a.kernel)}, {"law", a.law}, {"norm", a.norm},
              {"abs_m3", a.abs_m3}, {"r3", a.r3}, {"q4", a.q4}, {"tau", a.tau}, {"m4", a.m4},
              {"x2p1", a.x2p1}, {"hyper_q", a.hyper_q}, {"hyper_gamma", a.hyper_gamma}};
  if (a.abs_m3 < 0) throw ValidationError("missing_argument", "--abs-m3 (E|X|^3) is required", "abs_m3");
  SteinBound b;
  double second = 1;
  int d = 2;
  if (!a.kernel.empty()) {
    Kernel<Rational> f = load_kernel<Rational>(a.kernel);
    LawSpec law = load_law(a.law, 8);
    d = f.d();
    b = stein_wasserstein_bound(SumSpec<Rational>{f, SumLaw::iid(law)}, a.abs_m3, a.r3, parse_norm(a.norm));
    second = moment_exact(SumSpec<Rational>{f, SumLaw::iid(law)}, 2).to_double();
  } else {
    if (a.q4 < 0 || a.tau < 0 || a.m4 < 0)
      throw ValidationError("missing_argument", "give --kernel or all of --q4, --tau, --m4", "kernel");
    SteinInputs in;
    in.fourth_moment_q = a.q4;
    in.tau = a.tau;
    in.m4 = a.m4;
    in.abs_m3 = a.abs_m3;
    in.x2_plus_1_sq = a.x2p1 >= 0 ? a.x2p1 : a.m4 + 3;  // m₂ = 1
    in.rosenthal_r3 = a.r3;
    b = stein_wasserstein_bound(in);
  }
  r.result["bound"] = b.value;
  r.result["p1"] = b.p1;
  r.result["gaussian_part"] = b.gaussian_part;
  r.result["influence_part"] = b.influence_part;
  r.result["fourth_moment_q"] = b.inputs.fourth_moment_q;
  r.result["tau"] = b.inputs.tau;
  r.result["m4"] = b.inputs.m4;
  r.result["x2_plus_1_sq"] = b.inputs.x2_plus_1_sq;
  r.result["hypercontractivity_bound"] = hypercontractivity_bound(d, a.hyper_q, a.hyper_gamma, second);
  return r;
}

// ---------------------------------------------------------------------------

struct OrthoArgs {
  std::string law = "gaussian";
  std::string moments;
  std::vector<std::string> groups;
  int N = 3;
  int n = 0;
  int m = 0;
  int k = 1;
  std::string route = "determinant";
  std::vector<int> multi;
  std::vector<std::string> coords;
  std::string method = "quadrature";
  bool appel = false;
  double tol = 1e-8;
  std::string shift;
};

MomentFunctional functional_from(const OrthoArgs& a, int order) {
  MomentFunctional F = a.moments.empty() ? MomentFunctional::from_law(load_law(a.law, order))
                                         : MomentFunctional::from_moments(parse_rational_list(a.moments, "moments"));
  for (const auto& g : a.groups) {
    auto seq = parse_rational_list(g, "group", ';');
    if (seq.empty() || seq[0] != Rational(1))
      throw ValidationError("invalid_moments", "group sequences must start with 1", "group");
    F.tail.push_back(seq);
  }
  if (!a.shift.empty()) F = F.shifted(Rational::parse(a.shift));
  return F;
}

Json source_config(const OrthoArgs& a) {
  Json c = Json::object();
  if (a.moments.empty()) c["law"] = a.law;
  else c["moments"] = a.moments;
  c["groups"] = a.groups;
  c["shift"] = a.shift.empty() ? "0" : a.shift;
  return c;
}

Report gops_cmd(const OrthoArgs& a) {
  Report r;
  r.command = "gops";
  r.config = source_config(a);
  r.config["route"] = a.route;
  if (!a.multi.empty()) {
    MultiMomentFunctional MF;
    int order = 2 * *std::max_element(a.multi.begin(), a.multi.end()) + 2;
    std::vector<std::string> cs = a.coords;
    if (cs.empty()) cs.assign(a.multi.size(), a.law);
    if (cs.size() != a.multi.size())
      throw ValidationError("shape_mismatch", "one coordinate law per multi-index entry", "coords");
    for (const auto& c : cs) MF.coords.push_back(load_law(c, order).moments);
    r.config["multi"] = a.multi;
    r.config["coords"] = cs;
    MultiGOP g = a.route == "expectation" ? multi_gops_expectation(MF, a.multi) : multi_gops_determinant(MF, a.multi);
    r.result["polynomial"] = g.p.str();
    r.result["degenerate"] = g.degenerate;
    Table t{{"exponent", "coefficient"}, {}};
    Json terms = Json::array();
    for (const auto& [e, c] : g.p.terms) {
      std::string es;
      for (int v : e) es += (es.empty() ? "" : ",") + std::to_string(v);
      terms.push_back({{"exponent", e}, {"coefficient", c.str()}});
      t.rows.push_back({es, c.str()});
    }
    r.result["terms"] = terms;
    if (a.route == "both") {
      MultiGOP e = multi_gops_expectation(MF, a.multi);
      std::optional<Rational> q;
      if (!g.p.terms.empty() && e.p.terms.size() == g.p.terms.size()) {
        Rational ratio = e.p.terms.begin()->second / g.p.terms.begin()->second;
        bool ok = true;
        for (const auto& [ex, c] : g.p.terms) {
          auto it = e.p.terms.find(ex);
          ok = ok && it != e.p.terms.end() && it->second == c * ratio;
        }
        if (ok) q = ratio;
      }
      r.result["expectation_polynomial"] = e.p.str();
      r.result["ratio"] = q ? Json(q->str()) : Json(nullptr);
    }
    r.tables.push_back(std::move(t));
    return r;
  }
  const int top = a.n > 0 ? a.n : a.N;
  MomentFunctional F = functional_from(a, 2 * top + 2);
  std::vector<std::pair<int, int>> cells;
  if (a.n > 0) {
    cells.emplace_back(a.n, a.m > 0 ? a.m : 1);
    r.config["n"] = a.n;
    r.config["m"] = a.m > 0 ? a.m : 1;
  } else {
    r.config["N"] = a.N;
    for (int n = 1; n <= a.N; ++n)
      for (int m = 1; m <= n; ++m) cells.emplace_back(n, m);
  }
  Table t{{"n", "m", "degenerate", "polynomial", "ratio"}, {}};
  Json entries = Json::array();
  for (auto [n, m] : cells) {
    GOPEntry g = a.route == "expectation" ? gops_expectation(F, n, m) : gops_determinant(F, n, m);
    Json e = {{"n", n}, {"m", m}, {"coefficients", poly_json(g.p)}, {"degenerate", g.degenerate}};
    std::string ratio = "";
    if (a.route == "both") {
      GOPEntry x = gops_expectation(F, n, m);
      auto q = proportionality(x.p, g.p);
      e["expectation_coefficients"] = poly_json(x.p);
      e["ratio"] = q ? Json(q->str()) : Json(nullptr);
      ratio = q ? q->short_str() : "-";
    }
    auto prof = orthogonality_profile(F.with_translated_tails(m), g.p, n - m + 1);
    Json pj = Json::array();
    for (const auto& v : prof) pj.push_back(v.str());
    e["orthogonality"] = pj;
    entries.push_back(e);
    t.rows.push_back({std::to_string(n), std::to_string(m), bool_str(g.degenerate), poly_pretty(g.p), ratio});
  }
  r.result["entries"] = entries;
  r.tables.push_back(std::move(t));
  return r;
}

Report recurrence_cmd(const OrthoArgs& a) {
  MomentFunctional F = functional_from(a, 2 * a.N + 1);
  Recurrence rec = recurrence_coeffs(F, a.N);
  Report r;
  r.command = "recurrence";
  r.config = source_config(a);
  r.config["N"] = a.N;
  Json al = Json::array(), be = Json::array(), polys = Json::array();
  Table t{{"k", "alpha", "beta", "p_k"}, {}};
  for (int k = 0; k < a.N; ++k) {
    al.push_back(rec.alpha[k].str());
    be.push_back(rec.beta[k].str());
    polys.push_back(poly_json(rec.monic[k + 1]));
    t.rows.push_back({std::to_string(k + 1), rec.alpha[k].str(), rec.beta[k].str(), poly_pretty(rec.monic[k + 1])});
  }
  r.result["alpha"] = al;
  r.result["beta"] = be;
  r.result["monic"] = polys;
  r.tables.push_back(std::move(t));
  return r;
}

Report quadrature_cmd(const OrthoArgs& a) {
  const int n = a.n > 0 ? a.n : 2;
  MomentFunctional F = functional_from(a, 2 * n + 1);
  QuadratureRule q = quadrature_rule(F, n, a.tol);
  Report r;
  r.command = "quadrature";
  r.config = source_config(a);
  r.config["n"] = n;
  r.config["tol"] = a.tol;
  r.result["node_kind"] = q.node_kind;
  r.result["exactness_degree"] = q.exactness_degree;
  r.result["max_residual"] = q.max_residual;
  Json nodes = Json::array(), weights = Json::array();
  Table t{{"node_re", "node_im", "weight_re", "weight_im"}, {}};
  for (int i = 0; i < n; ++i) {
    nodes.push_back(cstr(q.nodes[i]));
    weights.push_back(cstr(q.weights[i]));
    t.rows.push_back({format_double(q.nodes[i].real()), format_double(q.nodes[i].imag()),
                      format_double(q.weights[i].real()), format_double(q.weights[i].imag())});
  }
  r.result["nodes"] = nodes;
  r.result["weights"] = weights;
  if (q.exact_nodes) {
    Json en = Json::array(), ew = Json::array();
    for (const auto& v : *q.exact_nodes) en.push_back(v.str());
    for (const auto& v : *q.exact_weights) ew.push_back(v.str());
    r.result["exact_nodes"] = en;
    r.result["exact_weights"] = ew;
  }
  r.tables.push_back(std::move(t));
  return r;
}

Report discriminant_cmd(const OrthoArgs& a) {
  DiscriminantMethod m;
  if (a.method == "quadrature") m = DiscriminantMethod::quadrature;
  else if (a.method == "expansion") m = DiscriminantMethod::expansion;
  else if (a.method == "lu_gaussian") m = DiscriminantMethod::lu_gaussian;
  else throw ValidationError("invalid_argument", "method must be quadrature, expansion or lu_gaussian", "method");
  LawSpec law = load_law(a.law, 2 * a.k * (a.N - 1) + 2);
  auto d = discriminant_moment(law, a.N, a.k, m);
  Report r;
  r.command = "discriminant";
  r.config = {{"law", law.name}, {"N", a.N}, {"k", a.k}, {"method", a.method}};
  r.result["value"] = d.value;
  if (d.exact) r.result["exact"] = d.exact->str();
  if (d.rule_size) r.result["rule_size"] = d.rule_size;
  return r;
}

Report sylvester_cmd(const OrthoArgs& a) {
  const int n = a.n > 0 ? a.n : 2;
  const int order = a.appel ? 2 * n + 1 : n * (2 * a.k - 1) + 2 * a.k * (n - 1) + 2;
  MomentFunctional F = functional_from(a, order);
  SylvesterResult s = a.appel ? sylvester_appel(F, n, a.tol) : sylvester_decompose(F, n, a.k, a.tol);
  Report r;
  r.command = "sylvester";
  r.config = source_config(a);
  r.config["n"] = n;
  r.config["k"] = a.appel ? Json(nullptr) : Json(a.k);
  r.config["appel"] = a.appel;
  r.config["tol"] = a.tol;
  r.result["degree"] = s.degree;
  r.result["target"] = poly_json(s.target);
  r.result["target_pretty"] = poly_pretty(s.target);
  r.result["apolar"] = poly_json(s.apolar);
  r.result["simple_roots"] = s.simple_roots;
  r.result["singular"] = s.singular;
  r.result["weight_sum"] = cstr(s.weight_sum);
  r.result["residuals"] = s.residuals;
  r.result["max_residual"] = s.max_residual;
  if (!a.appel) {
    Json b = Json::array();
    for (const auto& v : s.b) b.push_back(v.str());
    r.result["b"] = b;
    r.result["discriminant_moment"] = s.discriminant_moment.str();
    r.result["sum_equals_moment"] = s.sum_equals_moment;
    r.result["sum_equals_signed_moment"] = s.sum_equals_signed_moment;
  }
  Table t{{"j", "node", "weight", "exact_node", "exact_weight"}, {}};
  Json terms = Json::array();
  for (std::size_t j = 0; j < s.nodes.size(); ++j) {
    Json e = {{"node", cstr(s.nodes[j])}};
    std::string en, ew;
    if (j < s.weights.size()) e["weight"] = cstr(s.weights[j]);
    if (s.exact) {
      en = (*s.exact)[j].node.str();
      ew = (*s.exact)[j].weight.str();
      e["exact_node"] = en;
      e["exact_weight"] = ew;
    }
    terms.push_back(e);
    t.rows.push_back({std::to_string(j + 1), cplx(s.nodes[j]), j < s.weights.size() ? cplx(s.weights[j]) : "-",
                      en.empty() ? "-" : en, ew.empty() ? "-" : ew});
  }
  r.result["terms"] = terms;
  r.result["exact"] = s.exact.has_value();
  r.tables.push_back(std::move(t));
  return r;
}

// ---------------------------------------------------------------------------

struct SimArgs {
  std::string family = "off_diagonal";
  std::string law_a = "gaussian";
  std::string law_b = "rademacher";
  std::vector<int> sizes{4, 8, 16, 32};
  std::vector<int> orders{2, 3, 4};
  long trials = 20000;
  std::uint64_t seed = 1;
  bool exact = true;
  double lambda = 2;
  std::string jumps = "rademacher";
  double sigma2 = 0;
  double horizon = 1;
  long paths = 10000;
  std::vector<int> var_orders{3};
  bool show_path = false;
  std::string cells_kind = "compound_poisson";
  int kstat_n = 3;
  int cells = 100;
};

Kernel<Rational> family_kernel(const std::string& name, int n) {
  if (name == "off_diagonal") return families::off_diagonal(n, Rational(1, n * (n - 1)));
  if (name == "star") return families::star(n, Rational(1, 2 * n - 2));
  if (name == "avoid_first") return families::avoid_first(n, Rational(1, (n - 1) * (n - 2)));
  throw ValidationError("invalid_argument", "family must be off_diagonal, star or avoid_first", "family");
}

Report invariance_cmd(const SimArgs& a, int threads) {
  Sampler A = Sampler::parse(a.law_a, a.seed);
  Sampler B = Sampler::parse(a.law_b, a.seed + 1);
  if (a.law_a == a.law_b) B.seed = A.seed;
  InvarianceConfig cfg;
  cfg.sizes = a.sizes;
  cfg.orders = a.orders;
  cfg.trials = a.trials;
  cfg.threads = threads;
  cfg.exact = a.exact;
  auto rows = invariance_decay_experiment([&](int n) { return family_kernel(a.family, n); }, A, B, cfg);
  Report r;
  r.command = "simulate-invariance";
  r.config = {{"family", a.family}, {"law_a", A.name()}, {"law_b", B.name()}, {"sizes", a.sizes},
              {"orders", a.orders}, {"trials", a.trials}, {"seed", a.seed}, {"exact", a.exact}, {"threads", threads}};
  Table t{{"n", "tau", "sqrt_tau"}, {}};
  for (int m : a.orders) t.columns.push_back("gap_m" + std::to_string(m));
  t.columns.push_back("w1");
  Json js = Json::array();
  for (const auto& row : rows) {
    std::vector<std::string> cells{std::to_string(row.n), format_double(row.tau), format_double(row.sqrt_tau)};
    for (double g : row.moment_gaps) cells.push_back(format_double(g));
    cells.push_back(format_double(row.w1));
    t.rows.push_back(cells);
    js.push_back({{"n", row.n}, {"tau", row.tau}, {"sqrt_tau", row.sqrt_tau}, {"moment_gaps", row.moment_gaps},
                  {"gap_exact", row.gap_exact}, {"w1", row.w1}});
  }
  r.result["rows"] = js;
  r.tables.push_back(std::move(t));
  return r;
}

Report levy_cmd(const SimArgs& a, int threads) {
  Sampler J = Sampler::parse(a.jumps, a.seed);
  auto chk = variations_cumulant_check(a.lambda, J, a.sigma2, a.horizon, a.var_orders, a.paths, a.seed, threads);
  Report r;
  r.command = "simulate-levy";
  r.config = {{"lambda", a.lambda}, {"jumps", J.name()}, {"sigma2", a.sigma2}, {"T", a.horizon},
              {"paths", a.paths}, {"orders", a.var_orders}, {"seed", a.seed}, {"threads", threads}};
  r.result["estimate"] = chk.estimate.mean;
  r.result["se"] = chk.estimate.se;
  r.result["target"] = chk.target;
  r.result["z"] = chk.z;
  r.result["within_5se"] = std::fabs(chk.z) <= 5;
  if (a.show_path) {
    JumpPath p = compound_poisson_path(a.lambda, J, a.sigma2, a.horizon, a.seed, 0);
    Table t{{"time", "size"}, {}};
    for (std::size_t i = 0; i < p.times.size(); ++i)
      t.rows.push_back({format_double(p.times[i]), format_double(p.sizes[i])});
    r.result["path_level"] = variation(p, 1);
    r.tables.push_back(std::move(t));
  }
  return r;
}

Report kstat_cmd(const SimArgs& a, int threads) {
  CellModel m;
  if (a.cells_kind == "brownian") m.kind = CellKind::brownian;
  else if (a.cells_kind == "compound_poisson") m.kind = CellKind::compound_poisson;
  else throw ValidationError("invalid_argument", "cells must be brownian or compound_poisson", "cells");
  m.sigma2 = a.cells_kind == "brownian" && a.sigma2 == 0 ? 1.0 : a.sigma2;
  m.lambda = a.lambda;
  m.jumps = Sampler::parse(a.jumps, a.seed);
  m.horizon = a.horizon;
  auto k = kstat_experiment(m, a.kstat_n, a.cells, a.paths, a.seed, threads);
  Report r;
  r.command = "kstat";
  r.config = {{"cells", a.cells_kind}, {"n", a.kstat_n}, {"N", a.cells}, {"lambda", a.lambda},
              {"jumps", m.jumps.name()}, {"sigma2", m.sigma2}, {"T", a.horizon}, {"paths", a.paths},
              {"seed", a.seed}, {"threads", threads}};
  r.result["estimate"] = k.estimate.mean;
  r.result["se"] = k.estimate.se;
  r.result["target"] = k.target;
  r.result["z"] = k.z;
  r.result["within_5se"] = std::fabs(k.z) <= 5;
  return r;
}

// ---------------------------------------------------------------------------

void add_common(CLI::App* sub, Common& c, bool threads) {
  sub->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"json", "csv", "text"}));
  sub->add_option("--output", c.output, "Output file (stdout when empty)");
  if (threads) sub->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
}

void add_mode(CLI::App* sub, std::string& mode) {
  sub->add_option("--mode", mode, "Arithmetic mode")->check(CLI::IsMember({"exact", "float"}));
}

void add_source(CLI::App* sub, OrthoArgs& o) {
  sub->add_option("--law", o.law, "Law name with parameters or a law JSON file");
  sub->add_option("--moments", o.moments, "Comma-separated moment sequence a_0,a_1,... (overrides --law)");
  sub->add_option("--group", o.groups, "Tail group moments a_j0;a_j1;... (repeatable)");
  sub->add_option("--shift", o.shift, "Translate the law by this rational");
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Moments, fourth-moment diagnostics and orthogonal polynomials for homogeneous sums", "chaoskit"};
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "TOML/INI configuration file (flags take precedence)");
  app.require_subcommand(1);

  Common common;
  PartitionsArgs pa;
  KernelArgs ka;
  MomentArgs ma;
  FmtArgs fa;
  JointArgs ja;
  SteinArgs sa;
  OrthoArgs oa;
  SimArgs sim;
  std::map<std::string, std::function<Report()>> handlers;

  auto* s = app.add_subcommand("partitions", "Enumerate set partitions with filters");
  s->add_option("--n", pa.n, "Ground set size");
  s->add_flag("--pairings", pa.pairings, "Only pair partitions");
  s->add_flag("--noncrossing", pa.noncrossing, "Only non-crossing partitions");
  s->add_option("--blocks", pa.blocks, "Allowed block sizes")->delimiter(',');
  s->add_option("--respect", pa.respect, "Interval sizes the partition must respect")->delimiter(',');
  s->add_option("--class", pa.block_class, "Required block-size census")->delimiter(',');
  s->add_flag("--count-only", pa.count_only, "Print only the count");
  add_common(s, common, false);
  handlers["partitions"] = [&] { return cmd_partitions(pa); };

  auto kernel_sub = [&](const std::string& name, const std::string& desc) {
    auto* k = app.add_subcommand(name, desc);
    k->add_option("--kernel", ka.kernel, "Kernel JSON file")->required();
    add_mode(k, ka.mode);
    add_common(k, common, false);
    return k;
  };
  s = kernel_sub("kernel-validate", "Check symmetry, diagonal vanishing and normalization");
  s->add_option("--flavor", ka.flavor, "Admissibility flavor")->check(CLI::IsMember({"classical", "free", "mirror"}));
  handlers["kernel-validate"] = [&] {
    return ka.mode == "exact" ? kernel_validate<Rational>(ka) : kernel_validate<double>(ka);
  };
  s = kernel_sub("contract", "Contraction f ~q g or star contraction");
  s->add_option("--kernel2", ka.kernel2, "Second kernel (defaults to the first)");
  s->add_option("--q", ka.q, "Contraction order");
  s->add_option("--star", ka.star, "Star contraction order r (0 for the plain contraction)");
  handlers["contract"] = [&] { return ka.mode == "exact" ? contract_cmd<Rational>(ka) : contract_cmd<double>(ka); };
  s = kernel_sub("influence", "Influence profile and tau_max");
  s->add_option("--norm", ka.norm, "Influence normalization")->check(CLI::IsMember({"slot_sum", "slot_average"}));
  handlers["influence"] = [&] { return ka.mode == "exact" ? influence_cmd<Rational>(ka) : influence_cmd<double>(ka); };

  s = app.add_subcommand("moment", "Moment E[Q^m] (or phi(Q^m) for free laws)");
  s->add_option("--kernel", ma.kernel, "Kernel JSON file")->required();
  s->add_option("--law", ma.law, "Law name with parameters or a law JSON file");
  s->add_option("--order", ma.order, "Moment order");
  add_mode(s, ma.mode);
  s->add_flag("--oracle", ma.oracle, "Also evaluate the brute-force oracle");
  s->add_option("--lift", ma.lift, "Hermite/Chebyshev orders per slot (pairing formula)")->delimiter(',');
  add_common(s, common, false);
  handlers["moment"] = [&] { return ma.mode == "exact" ? moment_cmd<Rational>(ma) : moment_cmd<double>(ma); };

  s = app.add_subcommand("fourth-moment", "Fourth-moment decomposition by partition classes");
  s->add_option("--kernel", ma.kernel, "Kernel JSON file")->required();
  s->add_option("--law", ma.law, "Law name with parameters or a law JSON file");
  add_mode(s, ma.mode);
  add_common(s, common, false);
  handlers["fourth-moment"] = [&] {
    return ma.mode == "exact" ? fourth_moment_cmd<Rational>(ma) : fourth_moment_cmd<double>(ma);
  };

  auto fmt_sub = [&](const std::string& name, const std::string& desc) {
    auto* f = app.add_subcommand(name, desc);
    f->add_option("--kernel", fa.kernel, "Kernel JSON file")->required();
    f->add_option("--law", fa.law, "Law name with parameters or a law JSON file");
    add_mode(f, fa.mode);
    add_common(f, common, false);
    return f;
  };
  s = fmt_sub("fmt-check", "Fourth moment theorem diagnostics");
  s->add_option("--norm", fa.norm, "Influence normalization")->check(CLI::IsMember({"slot_sum", "slot_average"}));
  s->add_option("--tol", fa.tol, "Tolerance for verdicts (negative: mode default)");
  handlers["fmt-check"] = [&] { return fa.mode == "exact" ? fmt_cmd<Rational>(fa) : fmt_cmd<double>(fa); };
  s = fmt_sub("noncentral-check", "Gamma / free Poisson target diagnostics");
  s->add_option("--target", fa.target, "Target law")->check(CLI::IsMember({"gamma", "free_poisson"}));
  s->add_option("--param", fa.param, "Target parameter (default from the second moment)");
  handlers["noncentral-check"] = [&] {
    return fa.mode == "exact" ? noncentral_cmd<Rational>(fa) : noncentral_cmd<double>(fa);
  };

  s = app.add_subcommand("joint-moment", "Mixed moment of several homogeneous sums");
  s->add_option("--kernels", ja.kernels, "Kernel JSON files")->delimiter(',')->required();
  s->add_option("--word", ja.word, "Word of 1-based kernel positions")->delimiter(',')->required();
  s->add_option("--law", ja.law, "Law name with parameters or a law JSON file");
  add_mode(s, ja.mode);
  s->add_flag("--oracle", ja.oracle, "Also evaluate the brute-force oracle");
  add_common(s, common, false);
  handlers["joint-moment"] = [&] { return ja.mode == "exact" ? joint_cmd<Rational>(ja) : joint_cmd<double>(ja); };

  s = app.add_subcommand("stein-bound", "Wasserstein bound for quadratic forms and the hypercontractivity constant");
  s->add_option("--kernel", sa.kernel, "Kernel JSON file (d = 2)");
  s->add_option("--law", sa.law, "Law name with parameters or a law JSON file");
  s->add_option("--norm", sa.norm, "Influence normalization")->check(CLI::IsMember({"slot_sum", "slot_average"}));
  s->add_option("--abs-m3", sa.abs_m3, "E|X|^3");
  s->add_option("--r3", sa.r3, "Rosenthal constant");
  s->add_option("--q4", sa.q4, "E[Q^4] when no kernel is given");
  s->add_option("--tau", sa.tau, "Maximal influence when no kernel is given");
  s->add_option("--m4", sa.m4, "E[X^4] when no kernel is given");
  s->add_option("--x2p1", sa.x2p1, "E[(X^2+1)^2] (negative: m4 + 3)");
  s->add_option("--hyper-q", sa.hyper_q, "Exponent q of the hypercontractivity bound");
  s->add_option("--hyper-gamma", sa.hyper_gamma, "Moment constant gamma of the hypercontractivity bound");
  add_common(s, common, false);
  handlers["stein-bound"] = [&] { return stein_cmd(sa); };

  s = app.add_subcommand("gops", "Generalized orthogonal polynomials");
  add_source(s, oa);
  s->add_option("--N", oa.N, "Table size (all 1 <= m <= n <= N)");
  s->add_option("--n", oa.n, "Single degree n (0: table)");
  s->add_option("--m", oa.m, "Single index m");
  s->add_option("--route", oa.route, "Construction")->check(CLI::IsMember({"determinant", "expectation", "both"}));
  s->add_option("--multi", oa.multi, "Multi-index n (multivariate)")->delimiter(',');
  s->add_option("--coords", oa.coords, "Coordinate laws (multivariate)")->delimiter(',');
  add_common(s, common, false);
  handlers["gops"] = [&] { return gops_cmd(oa); };

  s = app.add_subcommand("recurrence", "Three-term recurrence coefficients of the monic OPs");
  add_source(s, oa);
  s->add_option("--N", oa.N, "Number of coefficients");
  add_common(s, common, false);
  handlers["recurrence"] = [&] { return recurrence_cmd(oa); };

  s = app.add_subcommand("quadrature", "Gauss quadrature nodes and Christoffel numbers");
  add_source(s, oa);
  s->add_option("--n", oa.n, "Rule size (0: 2)");
  s->add_option("--tol", oa.tol, "Root simplicity tolerance");
  add_common(s, common, false);
  handlers["quadrature"] = [&] { return quadrature_cmd(oa); };

  s = app.add_subcommand("discriminant", "Moments of random discriminants");
  s->add_option("--law", oa.law, "Law name with parameters or a law JSON file");
  s->add_option("--N", oa.N, "Sample size");
  s->add_option("--k", oa.k, "Power: E[Delta^(2k)]");
  s->add_option("--method", oa.method, "Method")->check(CLI::IsMember({"quadrature", "expansion", "lu_gaussian"}));
  add_common(s, common, false);
  handlers["discriminant"] = [&] { return discriminant_cmd(oa); };

  s = app.add_subcommand("sylvester", "Sylvester decompositions into powers of linear forms");
  add_source(s, oa);
  s->add_option("--n", oa.n, "n (0: 2)");
  s->add_option("--k", oa.k, "k of p_{n,k}");
  s->add_flag("--appel", oa.appel, "Decompose A_{2n-1} over the roots of p_n");
  s->add_option("--tol", oa.tol, "Root simplicity tolerance");
  add_common(s, common, false);
  handlers["sylvester"] = [&] { return sylvester_cmd(oa); };

  s = app.add_subcommand("simulate-invariance", "Moment gaps and W1 between two entry laws along a kernel family");
  s->add_option("--family", sim.family, "Kernel family")->check(CLI::IsMember({"off_diagonal", "star", "avoid_first"}));
  s->add_option("--law-a", sim.law_a, "First sampler");
  s->add_option("--law-b", sim.law_b, "Second sampler");
  s->add_option("--sizes", sim.sizes, "Values of n")->delimiter(',');
  s->add_option("--orders", sim.orders, "Moment orders")->delimiter(',');
  s->add_option("--trials", sim.trials, "Monte Carlo trials per law and size");
  s->add_option("--seed", sim.seed, "Random seed");
  s->add_option("--exact", sim.exact, "Exact moment gaps when both laws are rational");
  add_common(s, common, true);
  handlers["simulate-invariance"] = [&] { return invariance_cmd(sim, common.threads); };

  s = app.add_subcommand("simulate-levy", "Compound Poisson variations and their joint cumulants");
  s->add_option("--lambda", sim.lambda, "Jump rate");
  s->add_option("--jumps", sim.jumps, "Jump sampler");
  s->add_option("--sigma2", sim.sigma2, "Gaussian variance per unit time");
  s->add_option("--T", sim.horizon, "Horizon");
  s->add_option("--paths", sim.paths, "Number of paths");
  s->add_option("--orders", sim.var_orders, "Variation orders (one to three)")->delimiter(',');
  s->add_option("--seed", sim.seed, "Random seed");
  s->add_flag("--show-path", sim.show_path, "Emit the jumps of the first path");
  add_common(s, common, true);
  handlers["simulate-levy"] = [&] { return levy_cmd(sim, common.threads); };

  s = app.add_subcommand("kstat", "Diagonal-measure estimate of a cumulant over N cells");
  s->add_option("--cells", sim.cells_kind, "Cell model")->check(CLI::IsMember({"brownian", "compound_poisson"}));
  s->add_option("--n", sim.kstat_n, "Power n");
  s->add_option("--N", sim.cells, "Number of cells");
  s->add_option("--lambda", sim.lambda, "Jump rate");
  s->add_option("--jumps", sim.jumps, "Jump sampler");
  s->add_option("--sigma2", sim.sigma2, "Gaussian variance per unit time (brownian: 0 means 1)");
  s->add_option("--T", sim.horizon, "Horizon");
  s->add_option("--paths", sim.paths, "Number of paths");
  s->add_option("--seed", sim.seed, "Random seed");
  add_common(s, common, true);
  handlers["kstat"] = [&] { return kstat_cmd(sim, common.threads); };

  std::vector<std::string> rev(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(rev.begin(), rev.end());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    err << e.what() << "\n";
    CLI::App* failing = &app;
    for (auto* sub : app.get_subcommands()) failing = sub;
    err << failing->help();
    return 64;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    Format fmt = parse_format(common.format);
    Report r = handlers.at(name)();
    r.config["format"] = common.format;
    const std::string text = render(r, fmt);
    if (common.output.empty()) {
      out << text;
    } else {
      std::ofstream f(common.output);
      if (!f) throw ValidationError("unwritable_path", "cannot write '" + common.output + "'", "output");
      f << text;
    }
    return 0;
  } catch (const ValidationError& e) {
    out << error_record(e.code(), e.what(), e.field()).dump(2) << "\n";
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    out << error_record("internal", e.what()).dump(2) << "\n";
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
}

} // namespace ck::cli
