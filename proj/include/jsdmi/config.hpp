#pragma once

// Run configuration for the staircase benchmark, read from a flat TOML file.
//
// Only the flat subset of TOML is understood: `key = value` lines, `#`
// comments, integers, floats, booleans, basic double-quoted strings and
// (possibly nested, possibly multi-line) arrays. Tables are rejected.
//
//   d = 5
//   transform = "identity"          # identity | cubic | asinh | halfcube
//   schedule = [[2, 4000], [4, 4000], [6, 4000], [8, 4000], [10, 4000]]
//   seed = 0                        # first seed
//   n_seeds = 10                    # seeds = seed .. seed + n_seeds - 1
//   seeds = [0, 1, 2]               # explicit list, overrides seed/n_seeds
//   estimators = ["jsd_lb", "two_step", "mine", "nwj", "cpc", "smile"]
//   batch_size = 64
//   output = "runs/gauss_d5"
//   window_fraction = 0.2
//   smile_tau = 1.0
//   hidden = 256

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "jsdmi/mi_estimators.hpp"
#include "jsdmi/synth_data.hpp"

namespace jsdmi {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TomlValue {
  struct Array {
    std::vector<TomlValue> items;
  };
  std::variant<bool, std::int64_t, double, std::string, Array> value;

  bool is_number() const;
  double as_number(std::string_view key) const;
  std::int64_t as_integer(std::string_view key) const;
  const std::string& as_string(std::string_view key) const;
  const std::vector<TomlValue>& as_array(std::string_view key) const;
};

using TomlTable = std::map<std::string, TomlValue, std::less<>>;

TomlTable parse_flat_toml(std::string_view text);

struct RunConfig {
  std::size_t d = 5;
  Transform transform = Transform::identity;
  StaircaseSchedule schedule = default_staircase(5);
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<Estimator> estimators = {Estimator::jsd_lb, Estimator::two_step};
  std::size_t batch_size = 64;
  std::filesystem::path output = "staircase_out";
  double window_fraction = 0.2;
  double smile_tau = kDefaultSmileTau;
  std::size_t hidden = kDefaultHidden;

  /// Throws ConfigError on any invariant violation.
  void validate() const;
};

RunConfig run_config_from_toml(const TomlTable& table);
RunConfig load_run_config(const std::filesystem::path& path);

/// Renders the effective configuration in the same flat TOML dialect.
std::string to_toml(const RunConfig& config);

}  // namespace jsdmi
