// Copyright 2026 The nestla Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace nestla {

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);
/// Strict parse of a whole token; throws std::invalid_argument.
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

/// Comma-separated table with optional leading `# key=value` metadata lines.
struct CsvTable {
  std::vector<std::string> comments;  // without the leading "# "
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws if absent.
  std::size_t column(std::string_view name) const;
  std::vector<double> numeric_column(std::string_view name) const;
};

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : table_{{}, std::move(header), {}} {}

  void comment(std::string line) { table_.comments.push_back(std::move(line)); }
  void row(std::vector<std::string> cells);
  const CsvTable& table() const { return table_; }

  void write(std::ostream& out) const;
  void save(const std::string& path) const;
  std::string str() const;

 private:
  CsvTable table_;
};

CsvTable read_csv(std::istream& in);
CsvTable load_csv(const std::string& path);

}  // namespace nestla
