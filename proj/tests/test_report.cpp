#include "chaoskit/errors.hpp"
#include "chaoskit/report.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace ck;

namespace {

Report sample() {
  Report r;
  r.command = "demo";
  r.config["n"] = 3;
  r.config["law"] = "gaussian";
  r.result["value"] = 1.0 / 3;
  r.result["exact"] = "1/3";
  r.result["list"] = Json::array({1, 2});
  return r;
}

} // namespace

TEST_CASE("doubles keep 12 significant digits") {
  CHECK(format_double(1.0 / 3) == "0.333333333333");
  CHECK(format_double(2) == "2");
  CHECK(format_double(-0.0) == "0");
  CHECK(format_double(1e-20) == "1e-20");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("formats") {
  CHECK(parse_format("csv") == Format::csv);
  CHECK(format_name(Format::text) == "text");
  CHECK_THROWS_AS(parse_format("xml"), ValidationError);
}

TEST_CASE("JSON rendering echoes the config") {
  auto doc = Json::parse(render(sample(), Format::json));
  CHECK(doc["command"] == "demo");
  CHECK(doc["config"]["n"] == 3);
  CHECK(doc["value"].get<double>() == 0.333333333333);
  CHECK(doc["exact"] == "1/3");
  CHECK(doc["list"].size() == 2);
}

TEST_CASE("CSV rendering") {
  auto out = render(sample(), Format::csv);
  CHECK(out.rfind("# command: demo\n# n: 3\n# law: gaussian\n", 0) == 0);
  CHECK(out.find("key,value\n") != std::string::npos);
  CHECK(out.find("value,0.333333333333\n") != std::string::npos);
  CHECK(out.find("list,\"[1,2]\"\n") != std::string::npos);

  Table t{{"a", "b"}, {{"x,y", "say \"hi\""}}};
  CHECK(render_table_csv(t) == "a,b\n\"x,y\",\"say \"\"hi\"\"\"\n");
}

TEST_CASE("text rendering aligns columns") {
  Table t{{"n", "value"}, {{"10", "1"}, {"2", "0.25"}}};
  CHECK(render_table_text(t) == "n   value\n--  -----\n10  1\n2   0.25\n");
  Report r = sample();
  r.tables.push_back(t);
  auto out = render(r, Format::text);
  CHECK(out.find("value  0.333333333333\n") != std::string::npos);
  CHECK(out.find("exact  1/3\n") != std::string::npos);
  CHECK(out.find("list") == std::string::npos);
  CHECK(out.find("--  -----") != std::string::npos);
}

TEST_CASE("error records") {
  auto e = error_record("invalid_kernel", "bad", "kernel");
  CHECK(e["error"]["code"] == "invalid_kernel");
  CHECK(e["error"]["field"] == "kernel");
  CHECK(error_record("x", "y")["error"]["field"].is_null());
}
