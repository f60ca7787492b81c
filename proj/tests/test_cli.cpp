#include "commands.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kData = CK_DATA_DIR;
const std::string kGolden = CK_GOLDEN_DIR;

struct Run {
  int code = 0;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "chaoskit");
  std::ostringstream out, err;
  Run r;
  r.code = ck::cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string data(const std::string& name) { return kData + "/" + name; }

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (std::size_t p = 0; (p = s.find(from, p)) != std::string::npos; p += to.size()) s.replace(p, from.size(), to);
  return s;
}

// Numbers compare to 1e-9 relative; everything else exactly.
bool same(const json& a, const json& b, const std::string& path, std::string& why) {
  if (a.is_number() && b.is_number()) {
    const double x = a.get<double>(), y = b.get<double>();
    if (std::abs(x - y) <= 1e-9 * std::max(1.0, std::abs(y))) return true;
    why = path + ": " + a.dump() + " vs " + b.dump();
    return false;
  }
  if (a.type() != b.type()) {
    why = path + ": type " + a.dump() + " vs " + b.dump();
    return false;
  }
  if (a.is_object()) {
    if (a.size() != b.size()) {
      why = path + ": key count";
      return false;
    }
    for (auto it = a.begin(); it != a.end(); ++it) {
      if (!b.contains(it.key())) {
        why = path + ": missing " + it.key();
        return false;
      }
      if (!same(it.value(), b.at(it.key()), path + "." + it.key(), why)) return false;
    }
    return true;
  }
  if (a.is_array()) {
    if (a.size() != b.size()) {
      why = path + ": length";
      return false;
    }
    for (std::size_t i = 0; i < a.size(); ++i)
      if (!same(a[i], b[i], path + "[" + std::to_string(i) + "]", why)) return false;
    return true;
  }
  if (a != b) {
    why = path + ": " + a.dump() + " vs " + b.dump();
    return false;
  }
  return true;
}

// Set CK_UPDATE_GOLDEN=1 to rewrite the files.
void check_golden(const std::string& name, const std::vector<std::string>& args) {
  auto r = run(args);
  INFO(name, "\n", r.err);
  REQUIRE(r.code == 0);
  const std::string text = replace_all(r.out, kData, "@DATA@");
  const fs::path file = fs::path(kGolden) / (name + ".json");
  if (std::getenv("CK_UPDATE_GOLDEN")) {
    std::ofstream(file) << text;
    return;
  }
  std::ifstream in(file);
  REQUIRE_MESSAGE(in.good(), "missing golden file ", file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  std::string why;
  CHECK_MESSAGE(same(json::parse(text), json::parse(ss.str()), "$", why), why);
}

} // namespace

TEST_CASE("golden outputs") {
  check_golden("partitions", {"partitions", "--n", "6", "--pairings", "--respect", "2", "2", "2"});
  check_golden("partitions_nc", {"partitions", "--n", "4", "--pairings", "--noncrossing"});
  check_golden("partitions_class", {"partitions", "--n", "5", "--class", "2", "2", "1", "--count-only"});
  check_golden("kernel_validate", {"kernel-validate", "--kernel", data("off_diagonal4.json")});
  check_golden("kernel_validate_mirror",
               {"kernel-validate", "--kernel", data("mirror3.json"), "--flavor", "mirror"});
  check_golden("contract", {"contract", "--kernel", data("sqrt_off_diagonal4.json"), "--q", "1"});
  check_golden("contract_star", {"contract", "--kernel", data("star5.json"), "--star", "1"});
  check_golden("influence", {"influence", "--kernel", data("star5.json")});
  check_golden("moment", {"moment", "--kernel", data("half.json"), "--law", data("law_skew.json"), "--order", "4",
                          "--oracle"});
  check_golden("moment_free", {"moment", "--kernel", data("mirror3.json"), "--law", "free_poisson:lambda=2",
                               "--order", "3"});
  check_golden("moment_lift", {"moment", "--kernel", data("off_diagonal4.json"), "--lift", "2", "2", "--order",
                               "3"});
  check_golden("fourth_moment", {"fourth-moment", "--kernel", data("off_diagonal4.json"), "--law", "rademacher"});
  check_golden("fmt_check", {"fmt-check", "--kernel", data("off_diagonal4.json"), "--law", "uniform"});
  check_golden("noncentral", {"noncentral-check", "--kernel", data("half.json"), "--law", "free_poisson",
                              "--target", "free_poisson"});
  check_golden("joint_moment", {"joint-moment", "--kernels", data("off_diagonal4.json"), data("sqrt_off_diagonal4.json"),
                                "--word", "1", "2", "2", "--law", "rademacher", "--oracle"});
  check_golden("stein_bound", {"stein-bound", "--kernel", data("off_diagonal4.json"), "--law", "rademacher",
                               "--abs-m3", "1", "--r3", "1"});
  check_golden("gops", {"gops", "--law", "gaussian", "--N", "3", "--route", "both"});
  check_golden("gops_multi", {"gops", "--multi", "1", "1", "--coords", "gaussian", "gaussian", "--route", "both"});
  check_golden("recurrence", {"recurrence", "--law", "semicircle", "--N", "4"});
  check_golden("quadrature", {"quadrature", "--law", "gaussian", "--n", "3"});
  check_golden("discriminant", {"discriminant", "--law", "gaussian", "--N", "3", "--k", "2", "--method",
                                "expansion"});
  check_golden("sylvester", {"sylvester", "--law", "gaussian", "--n", "2", "--k", "2"});
  check_golden("sylvester_appel", {"sylvester", "--law", "gaussian", "--n", "3", "--appel"});
  check_golden("simulate_invariance", {"simulate-invariance", "--sizes", "4", "6", "--orders", "2", "4", "--trials",
                                       "500", "--seed", "3"});
  check_golden("simulate_levy", {"simulate-levy", "--paths", "500", "--orders", "1", "2", "--seed", "4"});
  check_golden("kstat", {"kstat", "--N", "10", "--paths", "500", "--seed", "5"});
}

TEST_CASE("help lists every flag with its default") {
  const std::map<std::string, std::vector<std::string>> flags{
      {"partitions", {"--n INT [4]", "--pairings", "--noncrossing", "--blocks", "--respect", "--class", "--count-only"}},
      {"kernel-validate", {"--kernel", "--mode TEXT:{exact,float} [exact]", "--flavor"}},
      {"contract", {"--kernel", "--kernel2", "--q", "--star", "--mode"}},
      {"influence", {"--kernel", "--norm", "--mode"}},
      {"moment", {"--kernel", "--law TEXT [gaussian]", "--order INT [2]", "--mode", "--oracle", "--lift"}},
      {"fourth-moment", {"--kernel", "--law", "--mode"}},
      {"fmt-check", {"--kernel", "--law", "--norm", "--tol", "--mode"}},
      {"noncentral-check", {"--kernel", "--law", "--target", "--param", "--mode"}},
      {"joint-moment", {"--kernels", "--word", "--law", "--oracle", "--mode"}},
      {"stein-bound", {"--kernel", "--law", "--abs-m3", "--r3", "--q4", "--tau", "--m4", "--x2p1", "--hyper-q",
                       "--hyper-gamma"}},
      {"gops", {"--law", "--moments", "--group", "--shift", "--N INT [3]", "--n", "--m", "--route", "--multi",
                "--coords"}},
      {"recurrence", {"--law", "--N"}},
      {"quadrature", {"--law", "--n", "--tol"}},
      {"discriminant", {"--law", "--N", "--k", "--method"}},
      {"sylvester", {"--law", "--n", "--k", "--appel", "--tol"}},
      {"simulate-invariance", {"--family", "--law-a", "--law-b", "--sizes", "--orders", "--trials INT [20000]",
                               "--seed UINT [1]", "--exact", "--threads"}},
      {"simulate-levy", {"--lambda FLOAT [2]", "--jumps", "--sigma2", "--T", "--paths", "--orders", "--seed",
                         "--show-path", "--threads"}},
      {"kstat", {"--cells", "--n", "--N INT [100]", "--lambda", "--jumps", "--sigma2", "--T", "--paths", "--seed",
                 "--threads"}},
  };
  for (auto& [cmd, list] : flags) {
    auto r = run({cmd, "--help"});
    INFO(cmd);
    CHECK(r.code == 0);
    for (auto& f : list) CHECK_MESSAGE(r.out.find(f) != std::string::npos, f);
    CHECK(r.out.find("--format TEXT:{json,csv,text} [json]") != std::string::npos);
    CHECK(r.out.find("--output") != std::string::npos);
  }
  auto top = run({"--help"});
  CHECK(top.code == 0);
  for (auto& [cmd, list] : flags) CHECK(top.out.find(cmd) != std::string::npos);
}

TEST_CASE("exit codes and error records") {
  CHECK(run({}).code == 64);
  CHECK(run({"frobnicate"}).code == 64);
  auto bad_int = run({"moment", "--kernel", data("half.json"), "--order", "x"});
  CHECK(bad_int.code == 64);
  CHECK(bad_int.out.empty());
  CHECK(run({"moment"}).code == 64);

  auto bad = run({"moment", "--kernel", data("bad_kernel.json")});
  CHECK(bad.code == 2);
  auto rec = json::parse(bad.out);
  CHECK(rec["error"]["code"] == "parse_error");
  CHECK(bad.err.rfind("error: ", 0) == 0);

  auto diag = run({"kernel-validate", "--kernel", data("diag_kernel.json")});
  if (diag.code == 0) {
    CHECK(json::parse(diag.out)["admissible"] == false);
  } else {
    CHECK(diag.code == 2);
  }
  auto missing = run({"influence", "--kernel", data("no_such_file.json")});
  CHECK(missing.code == 2);
  CHECK(json::parse(missing.out).contains("error"));
  auto law = run({"moment", "--kernel", data("half.json"), "--law", "cauchy"});
  CHECK(law.code == 2);
  CHECK(json::parse(law.out)["error"]["field"] == "law");
}

TEST_CASE("config files and flag precedence") {
  const fs::path cfg = fs::temp_directory_path() / "chaoskit_test_config.toml";
  std::ofstream(cfg) << "[moment]\norder = 4\nlaw = \"" << data("law_skew.json") << "\"\n";
  auto from_file = run({"--config", cfg.string(), "moment", "--kernel", data("half.json")});
  REQUIRE(from_file.code == 0);
  auto j = json::parse(from_file.out);
  CHECK(j["config"]["order"] == 4);
  CHECK(j["value"] == "16/1");
  auto flag = run({"--config", cfg.string(), "moment", "--kernel", data("half.json"), "--order", "3"});
  auto k = json::parse(flag.out);
  CHECK(k["config"]["order"] == 3);
  CHECK(k["value"] == "1/1");
  fs::remove(cfg);
}

TEST_CASE("output files and formats") {
  const fs::path file = fs::temp_directory_path() / "chaoskit_test_out.csv";
  auto r = run({"quadrature", "--law", "gaussian", "--n", "4", "--format", "csv", "--output", file.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.empty());
  std::ifstream in(file);
  std::string line;
  std::vector<std::string> body;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') body.push_back(line);
  REQUIRE(body.size() >= 5);
  CHECK(body[0] == "node_re,node_im,weight_re,weight_im");
  CHECK(body.size() == 5);
  fs::remove(file);

  auto text = run({"influence", "--kernel", data("star5.json"), "--format", "text"});
  CHECK(text.out.find("# command: influence") != std::string::npos);
  CHECK(text.out.find("# format: text") != std::string::npos);
  CHECK(text.out.find("tau_max  1") != std::string::npos);
}

TEST_CASE("partition cap from the environment") {
  ::setenv("HOMSUM_CAP", "6", 1);
  auto r = run({"partitions", "--n", "8", "--count-only"});
  ::unsetenv("HOMSUM_CAP");
  CHECK(r.code == 2);
  CHECK(json::parse(r.out)["error"]["code"] == "size_limit");
  ::setenv("HOMSUM_CAP", "zero", 1);
  auto bad = run({"partitions", "--n", "3"});
  ::unsetenv("HOMSUM_CAP");
  CHECK(bad.code == 2);
  CHECK(json::parse(bad.out)["error"]["field"] == "HOMSUM_CAP");
}

TEST_CASE("float mode matches exact mode") {
  auto e = json::parse(run({"moment", "--kernel", data("star5.json"), "--order", "4"}).out);
  auto f = json::parse(run({"moment", "--kernel", data("star5.json"), "--order", "4", "--mode", "float"}).out);
  CHECK(f["value_float"].get<double>() == doctest::Approx(e["value_float"].get<double>()));
}

TEST_CASE("simulations are seed deterministic and thread invariant") {
  std::vector<std::string> args{"simulate-invariance", "--sizes", "4", "--orders", "3", "--trials", "400",
                                "--exact", "0", "--seed", "9"};
  auto one = run(args);
  args.insert(args.end(), {"--threads", "3"});
  auto three = run(args);
  auto a = json::parse(one.out), b = json::parse(three.out);
  a.erase("config");
  b.erase("config");
  CHECK(a == b);
}
