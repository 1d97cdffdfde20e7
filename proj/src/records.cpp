#include <set>
#include <sstream>

#include "rvol/cli.hpp"
#include "rvol/errors.hpp"

namespace rvol {

using json = nlohmann::ordered_json;

namespace {

std::string cell(const json& v) {
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return format_real(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_null()) return "";
  return v.dump();
}

std::string csv_cell(const json& v) {
  std::string s = cell(v);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

// Keeps first and last rows.
std::vector<std::size_t> downsample(std::size_t count, std::size_t cap) {
  std::vector<std::size_t> idx;
  if (count <= cap) {
    for (std::size_t i = 0; i < count; ++i) idx.push_back(i);
    return idx;
  }
  std::set<std::size_t> s;
  for (std::size_t i = 0; i < cap; ++i) s.insert((i * (count - 1) + (cap - 1) / 2) / (cap - 1));
  return {s.begin(), s.end()};
}

void flatten(const json& j, const std::string& prefix, std::ostringstream& os) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object())
      flatten(*it, key, os);
    else if (it->is_array()) {
      os << "  " << key << ": [";
      for (std::size_t i = 0; i < it->size(); ++i) os << (i ? ", " : "") << cell((*it)[i]);
      os << "]\n";
    } else
      os << "  " << key << ": " << cell(*it) << "\n";
  }
}

void table(const ResultRecord& r, std::ostringstream& os, std::size_t cap) {
  if (r.table_header.empty()) return;
  os << "  |";
  for (const auto& h : r.table_header) os << " " << h << " |";
  os << "\n";
  const auto rows = downsample(r.table_rows.size(), cap);
  if (rows.size() < r.table_rows.size())
    os << "  (" << rows.size() << " of " << r.table_rows.size() << " rows)\n";
  for (std::size_t i : rows) {
    os << "  |";
    for (const auto& c : r.table_rows[i]) os << " " << cell(c) << " |";
    os << "\n";
  }
}

}  // namespace

std::string tool_version() { return "rvol 0.1.0"; }

json ResultRecord::to_json() const {
  json j;
  j["command"] = command;
  j["version"] = version;
  j["config_hash"] = config_hash;
  j["config"] = config;
  j["status"] = status;
  j["wall_clock_s"] = wall_clock;
  j["payload"] = payload;
  json t;
  t["header"] = table_header;
  t["rows"] = json::array();
  for (const auto& row : table_rows) t["rows"].push_back(row);
  j["table"] = t;
  return j;
}

ResultRecord ResultRecord::from_json(const json& j) {
  ResultRecord r;
  try {
    r.command = j.at("command").get<std::string>();
    r.version = j.at("version").get<std::string>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.config = j.at("config").get<std::string>();
    r.status = j.at("status").get<std::string>();
    r.wall_clock = j.at("wall_clock_s").get<double>();
    r.payload = j.at("payload");
    r.table_header = j.at("table").at("header").get<std::vector<std::string>>();
    for (const auto& row : j.at("table").at("rows")) r.table_rows.push_back(row.get<std::vector<json>>());
  } catch (const json::exception& e) {
    fail(ErrorKind::ConfigInvalid, std::string("malformed result record: ") + e.what());
  }
  return r;
}

std::string ResultRecord::csv() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < table_header.size(); ++i) os << (i ? "," : "") << table_header[i];
  os << "\n";
  for (const auto& row : table_rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_cell(row[i]);
    os << "\n";
  }
  return os.str();
}

std::string emit_report(const std::vector<ResultRecord>& records) {
  if (records.empty()) fail(ErrorKind::ConfigInvalid, "report needs at least one record");
  struct Section {
    std::string title;
    std::set<std::string> commands;
  };
  const std::vector<Section> sections{
      {"Sign tables", {"signtable"}},
      {"Hessians", {"hessian"}},
      {"Volume identities", {"rv", "gaussbonnet"}},
      {"Coefficients and tensors", {"curvature", "vk", "ltensor", "variation"}},
      {"Flow histories", {"flow"}},
  };
  std::ostringstream os;
  os << "rvol report (" << records.size() << " record" << (records.size() == 1 ? "" : "s") << ")\n";
  for (const auto& s : sections) {
    std::vector<const ResultRecord*> in;
    for (const auto& r : records)
      if (s.commands.count(r.command)) in.push_back(&r);
    if (in.empty()) continue;
    os << "\n== " << s.title << " ==\n";
    for (const auto* r : in) {
      os << "\n-- " << r->command << " [" << r->config_hash << "] status: " << r->status << "\n";
      flatten(r->payload, "", os);
      table(*r, os, 200);
    }
  }
  return os.str();
}

}  // namespace rvol
