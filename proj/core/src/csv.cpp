#include "ppls/csv.hpp"

#include "ppls/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ppls {

namespace {

[[noreturn]] void parse_fail(const std::string& source, std::size_t row, std::size_t col,
                             const std::string& what) {
  throw Error(ErrorCode::ParseError, source + ": row " + std::to_string(row) + ", column " +
                                         std::to_string(col) + ": " + what);
}

}  // namespace

std::vector<std::vector<std::string>> parse_csv_records(const std::string& text,
                                                        const std::string& source) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;  // distinguishes an empty last line from an empty field
  std::size_t row = 1;
  auto end_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    records.push_back(std::move(record));
    record.clear();
    field_started = false;
    ++row;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (!field.empty()) parse_fail(source, row, record.size() + 1, "stray quote inside field");
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        end_record();
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(ch);
        field_started = true;
    }
  }
  if (in_quotes) parse_fail(source, row, record.size() + 1, "unterminated quoted field");
  if (field_started || !record.empty()) end_record();
  return records;
}

CsvMatrix parse_csv_matrix(const std::string& text, const std::string& source) {
  std::string body = text;
  if (body.rfind("\xEF\xBB\xBF", 0) == 0) body.erase(0, 3);  // UTF-8 byte order mark
  const auto records = parse_csv_records(body, source);
  if (records.empty()) throw Error(ErrorCode::ParseError, source + ": missing header row");
  CsvMatrix out;
  out.header = records.front();
  const std::size_t cols = out.header.size();
  const std::size_t rows = records.size() - 1;
  out.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    const auto& rec = records[i + 1];
    if (rec.size() != cols) {
      parse_fail(source, i + 2, std::min(rec.size(), cols) + 1,
                 "expected " + std::to_string(cols) + " fields, found " +
                     std::to_string(rec.size()));
    }
    for (std::size_t j = 0; j < cols; ++j) {
      const std::string& cell = rec[j];
      std::size_t b = 0;
      std::size_t e = cell.size();
      while (b < e && (cell[b] == ' ' || cell[b] == '\t')) ++b;
      while (e > b && (cell[e - 1] == ' ' || cell[e - 1] == '\t')) --e;
      if (b < e && cell[b] == '+') ++b;  // from_chars rejects a leading plus
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data() + b, cell.data() + e, v);
      if (b == e || ec != std::errc() || ptr != cell.data() + e) {
        parse_fail(source, i + 2, j + 1, "'" + cell + "' is not a number");
      }
      if (!std::isfinite(v)) parse_fail(source, i + 2, j + 1, "'" + cell + "' is not finite");
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }
  return out;
}

CsvMatrix read_csv_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv_matrix(ss.str(), path.string());
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

void write_csv_matrix(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const Matrix& values) {
  if (static_cast<Eigen::Index>(header.size()) != values.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "header and matrix column counts differ");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
  for (std::size_t j = 0; j < header.size(); ++j) {
    out << (j ? "," : "") << csv_field(header[j]);
  }
  out << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      out << (j ? "," : "") << format_double(values(i, j));
    }
    out << '\n';
  }
}

}  // namespace ppls
