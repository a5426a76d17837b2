#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "ldg/common.hpp"

namespace ldg {

// Formats a double so the value round-trips exactly through the text form.
std::string format_double(double v);

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);

  void row(const std::vector<std::string>& fields);
  void flush() { out_.flush(); }

  static std::string field(double v) { return format_double(v); }
  static std::string field(int v) { return std::to_string(v); }
  static std::string field(std::size_t v) { return std::to_string(v); }
  static std::string field(const std::string& v) { return v; }

 private:
  std::ofstream out_;
  std::size_t width_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 if absent
};

CsvTable read_csv(const std::string& path);

}  // namespace ldg
