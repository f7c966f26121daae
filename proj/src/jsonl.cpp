#include "gre/jsonl.hpp"

#include <fstream>

namespace gre {

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const JsonLine&)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    JsonLine line;
    line.line = line_no;
    try {
      line.value = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      line.error = e.what();
    }
    fn(line);
  }
  if (in.bad()) throw IoError("read error on " + path.string());
}

std::vector<JsonLine> read_jsonl(const std::filesystem::path& path) {
  std::vector<JsonLine> out;
  for_each_jsonl(path, [&](const JsonLine& l) { out.push_back(l); });
  return out;
}

void write_jsonl(const std::filesystem::path& path, std::span<const nlohmann::json> rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& row : rows) out << row.dump() << '\n';
  if (!out) throw IoError("write error on " + path.string());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& value) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << value.dump(2) << '\n';
  if (!out) throw IoError("write error on " + path.string());
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace gre
