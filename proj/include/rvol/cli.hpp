#pragma once

// Configuration, result records, reports and the command-line front end.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace rvol {

enum class ValueType { Int, Real, Text, IntList, RealList, TextList };

struct ConfigKey {
  std::string name;
  ValueType type;
  std::string unit;  // empty when dimensionless or not numeric
  std::string help;
};

// Every accepted key, in canonical order.
const std::vector<ConfigKey>& config_schema();

const std::vector<std::string>& command_names();

// Flat key = value text. '#' starts a comment; blank lines are ignored.
class RunConfig {
 public:
  std::string command;

  static RunConfig parse(std::string_view text);
  static RunConfig load(const std::string& path);

  // Validates against the schema and stores the canonical spelling.
  void set(const std::string& key, const std::string& raw, int line = 0);
  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

  long get_int(const std::string& key, long fallback) const;
  double get_real(const std::string& key, double fallback) const;
  std::string get_text(const std::string& key, const std::string& fallback) const;
  std::vector<long> get_ints(const std::string& key, std::vector<long> fallback) const;
  std::vector<double> get_reals(const std::string& key, std::vector<double> fallback) const;
  std::vector<std::string> get_texts(const std::string& key, std::vector<std::string> fallback) const;

  // command first, then set keys in schema order, each annotated with its unit.
  std::string canonical() const;
  // FNV-1a of canonical(), 16 hex digits.
  std::string hash() const;

  bool operator==(const RunConfig& o) const { return command == o.command && values_ == o.values_; }

 private:
  std::map<std::string, std::string> values_;
};

std::string format_real(double x);

struct ResultRecord {
  std::string command;
  std::string config;       // canonical text
  std::string config_hash;
  std::string version;
  std::string status = "ok";  // or the error kind
  nlohmann::ordered_json payload = nlohmann::ordered_json::object();
  std::vector<std::string> table_header;
  std::vector<std::vector<nlohmann::ordered_json>> table_rows;
  double wall_clock = 0.0;  // seconds; kept out of the payload

  nlohmann::ordered_json to_json() const;
  static ResultRecord from_json(const nlohmann::ordered_json& j);
  std::string csv() const;
};

std::string tool_version();

// Runs one configured command. Throws rvol::Error on failure.
ResultRecord run_command(const RunConfig& cfg);

// Deterministic text summary; sections without records are omitted.
std::string emit_report(const std::vector<ResultRecord>& records);

// Exit code 0 on success, 1 on validation errors, 2 on numerical failures.
int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rvol
