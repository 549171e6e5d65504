#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace transit_access {

// A comma-separated file with a header row, loaded fully into memory.
class CsvTable {
 public:
  struct Row {
    std::size_t line = 0;  // 1-based line number in the source file
    std::vector<std::string> fields;
  };

  // Throws InputError when the file cannot be opened.
  static CsvTable read(const std::filesystem::path& path);
  static CsvTable parse(std::string_view text, std::string source_name);

  const std::string& source() const { return source_; }
  const std::vector<std::string>& header() const { return header_; }
  const std::vector<Row>& rows() const { return rows_; }

  std::optional<std::size_t> column(std::string_view name) const;
  // Throws InputError naming the file when the column is absent.
  std::size_t require_column(std::string_view name) const;

  // Field value or empty string if the row is short.
  std::string_view get(const Row& row, std::size_t column) const;

 private:
  std::string source_;
  std::vector<std::string> header_;
  std::vector<Row> rows_;
};

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  void row(std::span<const std::string> fields);
  void row(std::initializer_list<std::string> fields);

 private:
  std::ostream& out_;
};

std::string csv_escape(std::string_view field);

}  // namespace transit_access
