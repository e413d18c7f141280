#include "vpfp/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "vpfp/errors.hpp"

namespace vpfp {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// Drop a '#' comment that is not inside a string.
std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

double parse_number(const std::string& s, int line) {
  std::string t = trim(s);
  t.erase(std::remove(t.begin(), t.end(), '_'), t.end());
  if (t.empty()) throw ConfigError("empty value", line);
  std::size_t used = 0;
  double v;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw ConfigError("not a number: '" + t + "'", line);
  }
  if (used != t.size()) throw ConfigError("not a number: '" + t + "'", line);
  if (!std::isfinite(v)) throw ConfigError("non-finite number: '" + t + "'", line);
  return v;
}

ConfigValue parse_value(const std::string& raw, int line) {
  const std::string s = trim(raw);
  if (s.empty()) throw ConfigError("missing value", line);
  if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"') throw ConfigError("unterminated string", line);
    return {s.substr(1, s.size() - 2), line};
  }
  if (s == "true") return {true, line};
  if (s == "false") return {false, line};
  if (s.front() == '[') {
    if (s.back() != ']') throw ConfigError("unterminated array", line);
    std::vector<double> xs;
    std::stringstream in(s.substr(1, s.size() - 2));
    std::string item;
    while (std::getline(in, item, ',')) {
      if (trim(item).empty()) continue;
      xs.push_back(parse_number(item, line));
    }
    return {xs, line};
  }
  return {parse_number(s, line), line};
}

}  // namespace

ConfigTable parse_config_text(const std::string& text) {
  ConfigTable table;
  std::stringstream in(text);
  std::string raw, section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(strip_comment(raw));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError("malformed section header", line);
      section = trim(s.substr(1, s.size() - 2));
      if (section.empty()) throw ConfigError("empty section name", line);
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value", line);
    const std::string key = trim(s.substr(0, eq));
    if (key.empty()) throw ConfigError("empty key", line);
    const std::string full = section.empty() ? key : section + "." + key;
    if (table.count(full)) throw ConfigError("duplicate key '" + full + "'", line);
    table[full] = parse_value(s.substr(eq + 1), line);
  }
  return table;
}

ConfigTable parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string(), 0);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

namespace {

class Reader {
 public:
  explicit Reader(const ConfigTable& t) : t_(t) {}

  double number(const std::string& key, double def, bool positive = false) {
    const auto* v = find(key);
    if (!v) return def;
    const auto* d = std::get_if<double>(&v->value);
    if (!d) throw ConfigError("'" + key + "' must be a number", v->line);
    if (positive && !(*d > 0.0)) throw ConfigError("'" + key + "' must be positive", v->line);
    return *d;
  }
  int integer(const std::string& key, int def, int min_value) {
    const auto* v = find(key);
    if (!v) return def;
    const auto* d = std::get_if<double>(&v->value);
    if (!d || std::floor(*d) != *d) throw ConfigError("'" + key + "' must be an integer", v->line);
    if (*d < min_value)
      throw ConfigError("'" + key + "' must be at least " + std::to_string(min_value), v->line);
    return static_cast<int>(*d);
  }
  std::string string(const std::string& key, const std::string& def,
                     const std::vector<std::string>& allowed = {}) {
    const auto* v = find(key);
    if (!v) return def;
    const auto* s = std::get_if<std::string>(&v->value);
    if (!s) throw ConfigError("'" + key + "' must be a string", v->line);
    if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), *s) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw ConfigError("'" + key + "' must be one of " + list, v->line);
    }
    return *s;
  }
  bool boolean(const std::string& key, bool def) {
    const auto* v = find(key);
    if (!v) return def;
    const auto* b = std::get_if<bool>(&v->value);
    if (!b) throw ConfigError("'" + key + "' must be true or false", v->line);
    return *b;
  }
  std::vector<double> array(const std::string& key) {
    const auto* v = find(key);
    if (!v) return {};
    const auto* a = std::get_if<std::vector<double>>(&v->value);
    if (!a) throw ConfigError("'" + key + "' must be an array of numbers", v->line);
    return *a;
  }
  int line(const std::string& key) const {
    const auto it = t_.find(key);
    return it == t_.end() ? 0 : it->second.line;
  }
  void check_unknown() const {
    for (const auto& [k, v] : t_)
      if (!used_.count(k)) throw ConfigError("unknown key '" + k + "'", v.line);
  }

 private:
  const ConfigValue* find(const std::string& key) {
    used_.insert(key);
    const auto it = t_.find(key);
    return it == t_.end() ? nullptr : &it->second;
  }
  const ConfigTable& t_;
  std::set<std::string> used_;
};

}  // namespace

ExperimentConfig config_from_table(const ConfigTable& table) {
  Reader r(table);
  ExperimentConfig c;
  c.family = r.string("potential.family", "power_law", {"power_law", "tabulated"});
  c.alpha = r.number("potential.alpha", 2.0, true);
  c.domain_radius = r.number("potential.domain_radius", 8.0, true);
  c.table_path = r.string("potential.table_path", "");
  if (c.family == "tabulated" && c.table_path.empty())
    throw ConfigError("tabulated potentials need potential.table_path", r.line("potential.family"));

  c.mass = r.number("physics.mass", 1.0, true);
  c.N = r.integer("grid.N", 128, 16);
  if (c.N % 2) throw ConfigError("grid.N must be even", r.line("grid.N"));
  c.X_max = r.number("grid.X_max", c.domain_radius, true);
  if (c.X_max > c.domain_radius)
    throw ConfigError("grid.X_max cannot exceed potential.domain_radius", r.line("grid.X_max"));
  c.K = r.integer("basis.K", 16, 4);

  const std::string mode = r.string("run.mode", "linear", {"linear", "parabolic", "nonlinear"});
  c.mode = mode == "linear" ? RunMode::linear : mode == "parabolic" ? RunMode::parabolic : RunMode::nonlinear;
  c.eps = r.number("run.eps", 1.0, true);
  c.eps_list = r.array("run.eps_list");
  for (std::size_t i = 0; i < c.eps_list.size(); ++i) {
    if (!(c.eps_list[i] > 0.0)) throw ConfigError("run.eps_list entries must be positive", r.line("run.eps_list"));
    if (i > 0 && !(c.eps_list[i] < c.eps_list[i - 1]))
      throw ConfigError("run.eps_list must be sorted in descending order", r.line("run.eps_list"));
  }
  if (c.mode == RunMode::nonlinear && c.eps != 1.0)
    throw ConfigError("nonlinear runs use eps = 1", r.line("run.eps"));
  const std::string policy =
      r.string("run.delta_policy", "half_delta_star", {"half_delta_star", "optimize", "explicit"});
  c.delta_policy = policy == "half_delta_star" ? DeltaPolicy::half_delta_star
                   : policy == "optimize"      ? DeltaPolicy::optimize
                                               : DeltaPolicy::explicit_value;
  c.delta = r.number("run.delta", 0.0);
  if (c.delta_policy == DeltaPolicy::explicit_value && !(c.delta > 0.0))
    throw ConfigError("delta_policy = \"explicit\" needs run.delta > 0", r.line("run.delta_policy"));
  const std::string cm = r.string("run.cm_method", "direct_operator_norm",
                                  {"direct_operator_norm", "chain_bound"});
  c.cm_method = cm == "chain_bound" ? CMMethod::chain_bound : CMMethod::direct_operator_norm;
  c.dt = r.number("run.dt", 0.0);
  if (c.dt < 0.0) throw ConfigError("run.dt must be nonnegative (0 = automatic)", r.line("run.dt"));
  c.t_end = r.number("run.t_end", 20.0, true);
  c.record_every = r.integer("run.record_every", 10, 1);
  c.seed = static_cast<std::uint64_t>(r.integer("run.seed", 1, 0));
  c.output = r.string("run.output", "out");
  c.verbose_dissipation = r.boolean("run.verbose_dissipation", false);

  const std::string kind =
      r.string("profile.kind", "gaussian_bump", {"gaussian_bump", "mode_seed", "random"});
  c.profile.kind = kind == "gaussian_bump" ? ProfileKind::gaussian_bump
                   : kind == "mode_seed"   ? ProfileKind::mode_seed
                                           : ProfileKind::random;
  c.profile.x0 = r.number("profile.x0", 0.5);
  c.profile.sigma = r.number("profile.sigma", 0.5, true);
  c.profile.mode = r.integer("profile.mode", 0, 0);
  c.profile.k = r.integer("profile.k", 0, 0);
  c.profile.wavenumber = r.number("profile.wavenumber", 1.0);
  c.profile.amplitude = r.number("profile.amplitude", 1.0, true);
  c.profile.seed = static_cast<std::uint64_t>(r.integer("profile.seed", static_cast<int>(c.seed), 0));
  if (c.profile.mode >= c.K || c.profile.k >= c.K)
    throw ConfigError("profile mode outside the Hermite basis", r.line("profile.mode"));
  r.check_unknown();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  ExperimentConfig c = config_from_table(parse_config_file(path));
  c.source_dir = path.parent_path();
  return c;
}

PotentialSpec ExperimentConfig::potential() const {
  if (family == "power_law") return PotentialSpec::power_law(alpha, domain_radius);
  std::filesystem::path p(table_path);
  if (p.is_relative()) p = source_dir / p;
  return PotentialSpec::load_table(p, domain_radius);
}

}  // namespace vpfp
