#include "ata/csv.hpp"

#include "ata/error.hpp"

namespace ata {

std::string csv_escape(std::string_view field) {
  const bool needs_quotes =
      field.find_first_of(",\"\n\r") != std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string csv_join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); i++) {
    if (i) out.push_back(',');
    out += csv_escape(fields[i]);
  }
  return out;
}

std::vector<std::string> csv_split(std::string_view line) {
  auto rows = csv_parse(line);
  if (rows.empty()) return {};
  return rows.front();
}

std::vector<std::vector<std::string>> csv_parse(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t i = 0;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    if (field_started || !field.empty() || !row.empty()) {
      end_field();
      rows.push_back(std::move(row));
      row.clear();
    }
  };
  while (i < text.size()) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          i += 2;
          continue;
        }
        in_quotes = false;
        i++;
        continue;
      }
      field.push_back(c);
      i++;
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        field_started = true;
        i++;
        break;
      case ',':
        end_field();
        field_started = true;  // next field exists even if empty
        i++;
        break;
      case '\r':
        i++;
        break;
      case '\n':
        end_row();
        i++;
        break;
      default:
        field.push_back(c);
        field_started = true;
        i++;
        break;
    }
  }
  if (in_quotes) throw ParseError("unterminated quote in CSV input");
  end_row();
  return rows;
}

}  // namespace ata
