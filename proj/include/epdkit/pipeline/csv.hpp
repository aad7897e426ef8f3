#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace epd::pipeline {

// "%.6f" for finite values, otherwise "inf", "-inf" or "nan".
std::string format_number(double value);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column; FormatError when absent.
  std::size_t column(const std::string& name) const;
};

// Fields containing a comma, quote or newline are quoted. Throws IoError.
void write_csv(const std::filesystem::path& path, const CsvTable& table);
std::string to_csv(const CsvTable& table);

// RFC 4180 style reader: quoted fields, doubled quotes, CRLF or LF. Throws
// IoError when unreadable and FormatError for ragged rows or an empty file.
CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(const std::string& text);

}  // namespace epd::pipeline
