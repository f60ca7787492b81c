#include "chaoskit/report.hpp"

#include "chaoskit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace ck {

namespace {

std::string scalar_text(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) return format_double(v.get<double>());
  return v.dump();
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void header_lines(std::ostream& os, const Report& r) {
  os << "# command: " << r.command << "\n";
  for (const auto& [k, v] : r.config.items()) os << "# " << k << ": " << scalar_text(v) << "\n";
}

// Floats inside JSON are emitted with 12 significant digits as well.
Json rounded(const Json& v) {
  if (v.is_number_float()) {
    double x = v.get<double>();
    if (!std::isfinite(x)) return format_double(x);
    return std::stod(format_double(x));
  }
  if (v.is_array()) {
    Json out = Json::array();
    for (const auto& e : v) out.push_back(rounded(e));
    return out;
  }
  if (v.is_object()) {
    Json out = Json::object();
    for (const auto& [k, e] : v.items()) out[k] = rounded(e);
    return out;
  }
  return v;
}

} // namespace

Format parse_format(const std::string& s) {
  if (s == "json") return Format::json;
  if (s == "csv") return Format::csv;
  if (s == "text") return Format::text;
  throw ValidationError("invalid_format", "format must be json, csv or text", "format");
}

std::string format_name(Format f) {
  switch (f) {
    case Format::json: return "json";
    case Format::csv: return "csv";
    case Format::text: return "text";
  }
  return "json";
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v == 0.0 ? 0.0 : v);
  return buf;
}

std::string render_table_text(const Table& t) {
  std::vector<std::size_t> w(t.columns.size(), 0);
  for (std::size_t c = 0; c < t.columns.size(); ++c) w[c] = t.columns[c].size();
  for (const auto& row : t.rows)
    for (std::size_t c = 0; c < row.size() && c < w.size(); ++c) w[c] = std::max(w[c], row[c].size());
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t c = 0; c < w.size(); ++c) {
      const std::string& cell = c < cells.size() ? cells[c] : std::string();
      s += cell;
      if (c + 1 < w.size()) s += std::string(w[c] - cell.size() + 2, ' ');
    }
    while (!s.empty() && s.back() == ' ') s.pop_back();
    os << s << "\n";
  };
  line(t.columns);
  std::vector<std::string> rule;
  for (std::size_t c = 0; c < w.size(); ++c) rule.push_back(std::string(w[c], '-'));
  line(rule);
  for (const auto& row : t.rows) line(row);
  return os.str();
}

std::string render_table_csv(const Table& t) {
  std::ostringstream os;
  for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << csv_cell(t.columns[c]);
  os << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << csv_cell(row[c]);
    os << "\n";
  }
  return os.str();
}

std::string render(const Report& r, Format f) {
  std::ostringstream os;
  switch (f) {
    case Format::json: {
      Json doc = Json::object();
      doc["command"] = r.command;
      doc["config"] = rounded(r.config);
      for (const auto& [k, v] : r.result.items()) doc[k] = rounded(v);
      os << doc.dump(2) << "\n";
      break;
    }
    case Format::csv: {
      header_lines(os, r);
      if (!r.tables.empty()) {
        for (std::size_t i = 0; i < r.tables.size(); ++i) {
          if (i) os << "\n";
          os << render_table_csv(r.tables[i]);
        }
      } else {
        Table t{{"key", "value"}, {}};
        for (const auto& [k, v] : r.result.items()) t.rows.push_back({k, scalar_text(v)});
        os << render_table_csv(t);
      }
      break;
    }
    case Format::text: {
      header_lines(os, r);
      std::size_t w = 0;
      std::vector<std::pair<std::string, std::string>> kv;
      for (const auto& [k, v] : r.result.items()) {
        if (v.is_array() || v.is_object()) continue;
        kv.emplace_back(k, scalar_text(v));
        w = std::max(w, k.size());
      }
      for (const auto& [k, v] : kv) os << k << std::string(w - k.size() + 2, ' ') << v << "\n";
      for (const auto& t : r.tables) os << "\n" << render_table_text(t);
      break;
    }
  }
  return os.str();
}

Json error_record(const std::string& code, const std::string& message, const std::string& field) {
  Json e = Json::object();
  e["code"] = code;
  e["message"] = message;
  e["field"] = field.empty() ? Json(nullptr) : Json(field);
  return Json{{"error", e}};
}

} // namespace ck
