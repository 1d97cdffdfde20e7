#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rvol/cli.hpp"
#include "rvol/errors.hpp"

namespace rvol {

namespace {

[[noreturn]] void invalid(int line, const std::string& key, const std::string& msg) {
  std::ostringstream os;
  if (line > 0) os << "line " << line << ": ";
  if (!key.empty()) os << "key '" << key << "': ";
  os << msg;
  fail(ErrorKind::ConfigInvalid, os.str());
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, ',')) out.push_back(trim(cur));
  return out;
}

const ConfigKey* find_key(const std::string& name) {
  for (const auto& k : config_schema())
    if (k.name == name) return &k;
  return nullptr;
}

std::string canonical_int(const std::string& s, int line, const std::string& key) {
  long v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || p != end) invalid(line, key, "expected an integer, got '" + s + "'");
  return std::to_string(v);
}

std::string canonical_real(const std::string& s, int line, const std::string& key) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || p != end) invalid(line, key, "expected a number, got '" + s + "'");
  if (!std::isfinite(v)) invalid(line, key, "value must be finite");
  return format_real(v);
}

std::string canonical_text(const std::string& s, int line, const std::string& key) {
  if (s.empty()) invalid(line, key, "empty value");
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '/' || c == '-' || c == '+'))
      invalid(line, key, std::string("character '") + c + "' not allowed");
  return s;
}

}  // namespace

std::string format_real(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"curvature", "vk",          "ltensor", "variation", "hessian",
                                              "signtable", "rv",          "gaussbonnet", "flow",  "report"};
  return names;
}

const std::vector<ConfigKey>& config_schema() {
  using V = ValueType;
  static const std::vector<ConfigKey> schema{
      {"model", V::Text, "",
       "sphere | round_sphere | einstein | torus | sphere_product | einstein_product | ball | hyperbolic | "
       "hyperbolic4"},
      {"n", V::Int, "", "dimension of the model (boundary dimension for hyperbolic)"},
      {"radius", V::Real, "length", "sphere radius"},
      {"a", V::Real, "1/length^2", "Einstein constant, Ric = 2a(n-1)g"},
      {"periods", V::RealList, "length", "torus periods"},
      {"dims", V::IntList, "", "factor dimensions of a sphere product"},
      {"radii", V::RealList, "length", "factor radii of a sphere product"},
      {"kappa", V::Real, "1/length", "curvature scale of a hyperbolic ball"},
      {"ball_radius", V::Real, "length", "geodesic radius of a hyperbolic ball"},
      {"k", V::Int, "", "volume coefficient index"},
      {"kmin", V::Int, "", "smallest k"},
      {"kmax", V::Int, "", "largest k"},
      {"functional", V::Text, "", "Fk | V"},
      {"lmax", V::Int, "", "harmonic degree cap of the basis"},
      {"nmin", V::Int, "", "smallest dimension in sweeps"},
      {"nmax", V::Int, "", "largest dimension in sweeps"},
      {"geodcomp", V::Int, "", "1 to evaluate the bulk formula (odd n only)"},
      {"chi", V::Int, "", "Euler characteristic"},
      {"tol", V::Real, "", "convergence tolerance"},
      {"samples", V::Int, "", "random test draws"},
      {"seed", V::Int, "", "seed for random points and fields"},
      {"amplitude", V::Real, "", "initial conformal factor amplitude"},
      {"grid", V::Int, "", "torus grid points per coordinate"},
      {"max_steps", V::Int, "", "accepted flow steps"},
      {"dt0", V::Real, "length^2", "initial flow step (0 = automatic)"},
      {"inputs", V::TextList, "", "result files for report"},
      {"json", V::Text, "", "result record path"},
      {"csv", V::Text, "", "table path"},
      {"output", V::Text, "", "report path"},
  };
  return schema;
}

void RunConfig::set(const std::string& key, const std::string& raw, int line) {
  if (key == "command") {
    const std::string v = trim(raw);
    if (std::find(command_names().begin(), command_names().end(), v) == command_names().end())
      fail(ErrorKind::UnknownCommand, (line > 0 ? "line " + std::to_string(line) + ": " : std::string()) +
                                          "unknown command '" + v + "'");
    command = v;
    return;
  }
  const ConfigKey* k = find_key(key);
  if (!k) invalid(line, key, "unknown key");
  const std::string v = trim(raw);
  std::string out;
  switch (k->type) {
    case ValueType::Int: out = canonical_int(v, line, key); break;
    case ValueType::Real: out = canonical_real(v, line, key); break;
    case ValueType::Text: out = canonical_text(v, line, key); break;
    case ValueType::IntList:
    case ValueType::RealList:
    case ValueType::TextList: {
      const auto parts = split_list(v);
      if (parts.empty()) invalid(line, key, "empty list");
      for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += ",";
        out += k->type == ValueType::IntList    ? canonical_int(parts[i], line, key)
               : k->type == ValueType::RealList ? canonical_real(parts[i], line, key)
                                                : canonical_text(parts[i], line, key);
      }
      break;
    }
  }
  values_[key] = out;
}

RunConfig RunConfig::parse(std::string_view text) {
  RunConfig c;
  std::istringstream is{std::string(text)};
  std::string line;
  int no = 0;
  std::map<std::string, int> seen;
  while (std::getline(is, line)) {
    ++no;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) invalid(no, "", "expected 'key = value'");
    const std::string key = trim(body.substr(0, eq));
    if (key.empty()) invalid(no, "", "missing key");
    if (seen.count(key)) invalid(no, key, "duplicate (first set on line " + std::to_string(seen[key]) + ")");
    seen[key] = no;
    c.set(key, body.substr(eq + 1), no);
  }
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorKind::ConfigInvalid, "cannot read config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

std::string RunConfig::canonical() const {
  std::ostringstream os;
  if (!command.empty()) os << "command = " << command << "\n";
  for (const auto& k : config_schema()) {
    const auto it = values_.find(k.name);
    if (it == values_.end()) continue;
    os << k.name << " = " << it->second;
    if (!k.unit.empty()) os << "  # [" << k.unit << "]";
    os << "\n";
  }
  return os.str();
}

std::string RunConfig::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

long RunConfig::get_int(const std::string& key, long fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : std::stol(it->second);
}

double RunConfig::get_real(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  double v = 0.0;
  std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
  return v;
}

std::string RunConfig::get_text(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::vector<long> RunConfig::get_ints(const std::string& key, std::vector<long> fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<long> out;
  for (const auto& s : split_list(it->second)) out.push_back(std::stol(s));
  return out;
}

std::vector<double> RunConfig::get_reals(const std::string& key, std::vector<double> fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<double> out;
  for (const auto& s : split_list(it->second)) {
    double v = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), v);
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> RunConfig::get_texts(const std::string& key, std::vector<std::string> fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : split_list(it->second);
}

}  // namespace rvol
