#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ata {

// Minimal RFC-4180-style CSV: fields containing comma, quote, or newline
// are quoted, quotes doubled.
std::string csv_escape(std::string_view field);
std::string csv_join(const std::vector<std::string>& fields);
std::vector<std::string> csv_split(std::string_view line);
// Splits a whole document into rows (handles quoted newlines).
std::vector<std::vector<std::string>> csv_parse(std::string_view text);

}  // namespace ata
