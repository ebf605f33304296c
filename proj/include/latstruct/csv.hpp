#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace latstruct {

// RFC 4180 CSV: CRLF row endings, quoting only where required.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  void row(const std::vector<std::string>& cells);

  static std::string escape(const std::string& cell);
  static std::string num(double x);
  static std::string num(long x);

 private:
  std::ostream& os_;
};

}  // namespace latstruct
