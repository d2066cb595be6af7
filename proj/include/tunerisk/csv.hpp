#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tunerisk::csv {

struct Row {
  std::size_t line = 0;  // 1-based line number in the source file
  std::vector<std::string> cells;
};

struct Table {
  std::vector<std::string> header;
  std::size_t header_line = 0;
  std::vector<Row> rows;

  /// Column index by exact name.
  [[nodiscard]] std::optional<std::size_t> column(std::string_view name) const;
};

/// Parses comma-separated text with RFC 4180 quoting. Blank lines and lines
/// starting with '#' are skipped. Every row must have as many cells as the
/// header, otherwise ValidationError names the line.
[[nodiscard]] Table parse(std::string_view text, std::string_view source = "<memory>");
[[nodiscard]] Table read(const std::filesystem::path& path);

/// Quotes a cell when it contains a separator, quote, or newline.
[[nodiscard]] std::string escape(std::string_view cell);

/// Shortest round-trip text for a double.
[[nodiscard]] std::string number(double v);

/// CSV artifact with a leading "# config-hash: <hex>" provenance line.
class Writer {
 public:
  Writer(const std::filesystem::path& path, std::string_view config_hash,
         const std::vector<std::string>& header);

  Writer& row(const std::vector<std::string>& cells);

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

}  // namespace tunerisk::csv
