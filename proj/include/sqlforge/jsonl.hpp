#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace sqlforge {

// Calls `fn` with each non-blank line of a JSON-lines file, parsed. The line
// number (1-based) is passed for error messages.
//
// Throws FileNotFound, or InvalidInput for a line that is not valid JSON.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const nlohmann::json&, std::size_t line)>& fn);

// One compact JSON document per line, '\n' terminated. Creates parent
// directories. Throws IoError.
void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& records);

// Required string member, with InvalidInput naming the file position.
std::string require_string(const nlohmann::json& record, const char* key, std::size_t line);

}  // namespace sqlforge
