#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace gre {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using KeyValues = std::map<std::string, std::string>;

/// Resolved run settings. Precedence per key: command-line flag, then config
/// file, then built-in default; the seed additionally falls back to GRE_SEED
/// before its default.
struct GlobalConfig {
  double theta_km = 25.0;
  double clip_epsilon = 0.2;
  double kl_beta = 0.04;
  double accuracy_weight = 1.0;
  double format_weight = 1.0;
  std::uint64_t seed = 0;
  std::vector<double> thresholds_km{1.0, 25.0, 200.0, 750.0, 2500.0};
  double lr = 0.5;
  double truth_ratio = 1.0;
  std::size_t group_size = 8;
  std::size_t steps = 200;

  std::map<std::string, std::string> sources;  // key -> flag | config | env | default
};

const std::vector<std::string>& config_keys();

/// "key = value" lines; '#' starts a comment; blank lines ignored. Throws
/// ConfigError naming the line for malformed lines or unknown keys.
KeyValues parse_config_text(std::string_view text);
KeyValues load_config_file(const std::filesystem::path& path);

/// Throws ConfigError for unparseable or out-of-range values.
GlobalConfig resolve_config(const KeyValues& flags, const KeyValues& file,
                            const std::optional<std::string>& env_seed);

std::vector<double> parse_threshold_list(std::string_view text);

nlohmann::json to_json(const GlobalConfig& c);

}  // namespace gre
