#pragma once

#include "ppls/numerics.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace ppls {

/// A numeric CSV file: one header row, then rows of numbers.
struct CsvMatrix {
  std::vector<std::string> header;
  Matrix values;
};

/// RFC-4180 fields (quoted fields, doubled quotes, CRLF or LF). Every data
/// cell must parse completely as a double. Errors are Error(ParseError) with
/// the file name and 1-based row and column; header is row 1.
CsvMatrix read_csv_matrix(const std::filesystem::path& path);
CsvMatrix parse_csv_matrix(const std::string& text, const std::string& source = "<input>");

/// Splits CSV text into records of raw fields.
std::vector<std::vector<std::string>> parse_csv_records(const std::string& text,
                                                        const std::string& source = "<input>");

/// Shortest decimal text that reads back to the same double ("%.17g" class
/// guarantee, without trailing noise).
std::string format_double(double v);

/// Quotes a field if it contains a comma, quote or line break.
std::string csv_field(const std::string& s);

void write_csv_matrix(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const Matrix& values);

}  // namespace ppls
