#include "sqlforge/jsonl.hpp"

#include <fstream>

#include "sqlforge/error.hpp"
#include "sqlforge/text.hpp"

namespace sqlforge {

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const nlohmann::json&, std::size_t line)>& fn) {
  std::ifstream in(path);
  if (!in) throw FileNotFound("cannot open " + path.string());
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw InvalidInput(path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
    fn(record, number);
  }
  if (in.bad()) throw IoError("read failed: " + path.string());
}

void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : records) out << r.dump() << '\n';
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

std::string require_string(const nlohmann::json& record, const char* key, std::size_t line) {
  const auto it = record.find(key);
  if (!record.is_object() || it == record.end() || !it->is_string()) {
    throw InvalidInput("line " + std::to_string(line) + ": missing string field \"" + key + "\"");
  }
  return it->get<std::string>();
}

}  // namespace sqlforge
