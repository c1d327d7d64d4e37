#pragma once

#include <string>
#include <string_view>

namespace sqlforge {

// ASCII case folding. SQL identifiers compare case-insensitively.
std::string to_lower(std::string_view text);
bool iequals(std::string_view a, std::string_view b) noexcept;

// Collapses whitespace runs to one space and trims both ends.
std::string normalize_whitespace(std::string_view text);

// Trims leading and trailing ASCII whitespace.
std::string_view trim(std::string_view text) noexcept;

}  // namespace sqlforge
