#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "vpfp/evolution.hpp"
#include "vpfp/potential.hpp"
#include "vpfp/rates.hpp"

namespace vpfp {

// Sectioned key = value text: [section] headers, numbers, "strings", true/false,
// flat arrays [a, b, c], '#' comments. Keys are stored as "section.key".
struct ConfigValue {
  std::variant<double, std::string, bool, std::vector<double>> value;
  int line = 0;
};
using ConfigTable = std::map<std::string, ConfigValue>;

ConfigTable parse_config_text(const std::string& text);
ConfigTable parse_config_file(const std::filesystem::path& path);

struct ExperimentConfig {
  // [potential]
  std::string family = "power_law";
  double alpha = 2.0;
  double domain_radius = 8.0;
  std::string table_path;
  // [physics]
  double mass = 1.0;
  // [grid]
  int N = 128;
  double X_max = 0.0;  // simulation radius, defaults to domain_radius, never above it
  // [basis]
  int K = 16;
  // [run]
  RunMode mode = RunMode::linear;
  double eps = 1.0;
  std::vector<double> eps_list;
  DeltaPolicy delta_policy = DeltaPolicy::half_delta_star;
  double delta = 0.0;
  CMMethod cm_method = CMMethod::direct_operator_norm;
  double dt = 0.0;
  double t_end = 20.0;
  int record_every = 10;
  std::uint64_t seed = 1;
  std::string output = "out";
  bool verbose_dissipation = false;
  // [profile]
  InitialProfile profile;

  std::filesystem::path source_dir;  // directory of the config file, for table_path

  PotentialSpec potential() const;
};

ExperimentConfig config_from_table(const ConfigTable& table);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace vpfp
