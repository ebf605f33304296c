#include "latstruct/csv.hpp"

#include <cstdio>

namespace latstruct {

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) os_ << ',';
    os_ << escape(cells[i]);
  }
  os_ << "\r\n";
}

std::string CsvWriter::escape(const std::string& cell) {
  bool needs_quotes = false;
  for (char c : cell)
    if (c == ',' || c == '"' || c == '\n' || c == '\r') needs_quotes = true;
  if (!needs_quotes) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string CsvWriter::num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

std::string CsvWriter::num(long x) { return std::to_string(x); }

}  // namespace latstruct
