#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace gre {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct JsonLine {
  std::size_t line = 0;  // 1-based
  std::optional<nlohmann::json> value;
  std::string error;  // parse error when value is empty
};

/// Streams non-blank lines of a UTF-8 JSONL file. Throws IoError if the file
/// cannot be opened; malformed lines are delivered with an error string.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const JsonLine&)>& fn);

std::vector<JsonLine> read_jsonl(const std::filesystem::path& path);

/// Writes one compact object per line (LF terminated). Throws IoError.
void write_jsonl(const std::filesystem::path& path, std::span<const nlohmann::json> rows);

void write_json(const std::filesystem::path& path, const nlohmann::json& value);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace gre
