#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdec {

// Minimal RFC-4180 CSV writer. Cells containing commas, quotes, or newlines
// are quoted with doubled inner quotes; everything else is written verbatim.
// Doubles are formatted with %.17g so equal values always serialize to equal
// bytes and round-trip exactly.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> columns)
      : columns_(std::move(columns)) {
    if (columns_.empty()) {
      throw std::invalid_argument("CsvWriter: no columns");
    }
  }

  static std::string format(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
  }
  static std::string format(std::int64_t v) { return std::to_string(v); }
  static std::string format(std::uint64_t v) { return std::to_string(v); }
  static std::string format(int v) { return std::to_string(v); }

  void add_row(std::vector<std::string> cells) {
    if (cells.size() != columns_.size()) {
      throw std::invalid_argument("CsvWriter: row width mismatch");
    }
    rows_.push_back(std::move(cells));
  }

  std::size_t row_count() const { return rows_.size(); }

  std::string to_string() const {
    std::string out;
    append_line(out, columns_);
    for (const auto& row : rows_) append_line(out, row);
    return out;
  }

  void write(const std::string& path) const {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("CsvWriter: cannot open " + path);
    file << to_string();
    if (!file) throw std::runtime_error("CsvWriter: write failed for " + path);
  }

 private:
  static void append_line(std::string& out,
                          const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i > 0) out += ',';
      out += quote(cells[i]);
    }
    out += '\n';
  }

  static std::string quote(const std::string& cell) {
    if (cell.find_first_of(",\"\n\r") == std::string::npos) return cell;
    std::string quoted = "\"";
    for (char c : cell) {
      if (c == '"') quoted += '"';
      quoted += c;
    }
    quoted += '"';
    return quoted;
  }

  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace sdec
