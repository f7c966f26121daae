#include "gre/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace gre {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, std::string_view text) {
  text = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw ConfigError(key + ": not a number: '" + std::string(text) + "'");
  }
  return v;
}

std::uint64_t to_uint(const std::string& key, std::string_view text) {
  text = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError(key + ": not a non-negative integer: '" + std::string(text) + "'");
  }
  return v;
}

void require(bool ok, const std::string& key, const char* rule) {
  if (!ok) throw ConfigError(key + " " + rule);
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "theta-km", "clip-epsilon", "kl-beta", "accuracy-weight", "format-weight", "seed",
      "thresholds", "lr", "truth-ratio", "group-size", "steps"};
  return keys;
}

KeyValues parse_config_text(std::string_view text) {
  KeyValues out;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    const auto& keys = config_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    if (value.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": empty value for '" + key + "'");
    }
    out[key] = value;
  }
  return out;
}

KeyValues load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str());
}

std::vector<double> parse_threshold_list(std::string_view text) {
  std::vector<double> out;
  std::string_view rest = text;
  while (true) {
    const auto comma = rest.find(',');
    out.push_back(to_double("thresholds", rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    require(out[i] > 0.0, "thresholds", "must be > 0");
    require(i == 0 || out[i] > out[i - 1], "thresholds", "must be strictly increasing");
  }
  return out;
}

GlobalConfig resolve_config(const KeyValues& flags, const KeyValues& file,
                            const std::optional<std::string>& env_seed) {
  GlobalConfig c;
  auto lookup = [&](const std::string& key) -> std::optional<std::string> {
    if (auto it = flags.find(key); it != flags.end()) {
      c.sources[key] = "flag";
      return it->second;
    }
    if (auto it = file.find(key); it != file.end()) {
      c.sources[key] = "config";
      return it->second;
    }
    if (key == "seed" && env_seed) {
      c.sources[key] = "env";
      return *env_seed;
    }
    c.sources[key] = "default";
    return std::nullopt;
  };

  if (auto v = lookup("theta-km")) c.theta_km = to_double("theta-km", *v);
  if (auto v = lookup("clip-epsilon")) c.clip_epsilon = to_double("clip-epsilon", *v);
  if (auto v = lookup("kl-beta")) c.kl_beta = to_double("kl-beta", *v);
  if (auto v = lookup("accuracy-weight")) c.accuracy_weight = to_double("accuracy-weight", *v);
  if (auto v = lookup("format-weight")) c.format_weight = to_double("format-weight", *v);
  if (auto v = lookup("seed")) c.seed = to_uint("seed", *v);
  if (auto v = lookup("thresholds")) c.thresholds_km = parse_threshold_list(*v);
  if (auto v = lookup("lr")) c.lr = to_double("lr", *v);
  if (auto v = lookup("truth-ratio")) c.truth_ratio = to_double("truth-ratio", *v);
  if (auto v = lookup("group-size")) c.group_size = to_uint("group-size", *v);
  if (auto v = lookup("steps")) c.steps = to_uint("steps", *v);

  require(c.theta_km > 0.0, "theta-km", "must be > 0");
  require(c.clip_epsilon > 0.0 && c.clip_epsilon < 1.0, "clip-epsilon", "must lie in (0, 1)");
  require(c.kl_beta >= 0.0, "kl-beta", "must be >= 0");
  require(c.accuracy_weight >= 0.0, "accuracy-weight", "must be >= 0");
  require(c.format_weight >= 0.0, "format-weight", "must be >= 0");
  require(c.lr > 0.0, "lr", "must be > 0");
  require(c.truth_ratio >= 0.0, "truth-ratio", "must be >= 0");
  require(c.group_size >= 2, "group-size", "must be >= 2");
  return c;
}

nlohmann::json to_json(const GlobalConfig& c) {
  return {{"theta_km", c.theta_km},
          {"clip_epsilon", c.clip_epsilon},
          {"kl_beta", c.kl_beta},
          {"accuracy_weight", c.accuracy_weight},
          {"format_weight", c.format_weight},
          {"seed", c.seed},
          {"thresholds_km", c.thresholds_km},
          {"lr", c.lr},
          {"truth_ratio", c.truth_ratio},
          {"group_size", c.group_size},
          {"steps", c.steps},
          {"sources", c.sources}};
}

}  // namespace gre
