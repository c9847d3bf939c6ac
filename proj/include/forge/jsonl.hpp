#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/util.hpp"

namespace forge {

// nlohmann::json objects keep keys sorted, and dump() emits no incidental
// whitespace, so serialized records are canonical: same value, same bytes.
inline std::string canonical_json_line(const nlohmann::json& j) { return j.dump(); }

template <typename T>
void write_jsonl(const std::filesystem::path& path, const std::vector<T>& records) {
  std::string out;
  for (const auto& r : records) {
    nlohmann::json j = r;
    out += canonical_json_line(j);
    out += '\n';
  }
  fsio::write_file(path, out);
}

template <typename T>
std::vector<T> read_jsonl(const std::filesystem::path& path) {
  std::vector<T> out;
  auto lines = fsio::read_lines(path);
  for (size_t i = 0; i < lines.size(); ++i) {
    auto trimmed = str::strip(lines[i]);
    if (trimmed.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(trimmed);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path.string() + ":" + std::to_string(i + 1) + ": bad JSON line: " +
                       e.what());
    }
    out.push_back(j.template get<T>());
  }
  return out;
}

}  // namespace forge
