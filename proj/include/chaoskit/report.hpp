#pragma once

#include <json.hpp>

#include <string>
#include <vector>

namespace ck {

using Json = nlohmann::ordered_json;

enum class Format { json, csv, text };

Format parse_format(const std::string& s);
std::string format_name(Format f);

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

// Output of one command: the resolved configuration is echoed into every
// rendering (JSON "config" object, CSV and text "#" header lines).
struct Report {
  std::string command;
  Json config = Json::object();
  Json result = Json::object();
  std::vector<Table> tables;
};

// 12 significant digits.
std::string format_double(double v);

std::string render(const Report& r, Format f);
std::string render_table_text(const Table& t);
std::string render_table_csv(const Table& t);

Json error_record(const std::string& code, const std::string& message, const std::string& field = {});

} // namespace ck
