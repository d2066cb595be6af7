#include "tunerisk/csv.hpp"

#include <charconv>
#include <sstream>

#include "tunerisk/error.hpp"

namespace tunerisk::csv {

std::optional<std::size_t> Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

Table parse(std::string_view text, std::string_view source) {
  Table table;
  std::size_t line = 1;
  std::size_t pos = 0;
  bool have_header = false;

  while (pos < text.size()) {
    const std::size_t record_line = line;
    // Comment and blank lines are only recognized at the start of a record.
    if (text[pos] == '#' || text[pos] == '\n' || text[pos] == '\r') {
      const auto eol = text.find('\n', pos);
      pos = eol == std::string_view::npos ? text.size() : eol + 1;
      ++line;
      continue;
    }
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    bool done = false;
    while (!done) {
      if (pos >= text.size()) {
        if (quoted) {
          throw ValidationError(std::string(source) + ":" + std::to_string(record_line) +
                                ": unterminated quoted field");
        }
        cells.push_back(std::move(cell));
        break;
      }
      const char c = text[pos++];
      if (quoted) {
        if (c == '"') {
          if (pos < text.size() && text[pos] == '"') {
            cell += '"';
            ++pos;
          } else {
            quoted = false;
          }
        } else {
          if (c == '\n') ++line;
          cell += c;
        }
      } else if (c == '"' && cell.empty()) {
        quoted = true;
      } else if (c == ',') {
        cells.push_back(std::move(cell));
        cell.clear();
      } else if (c == '\n') {
        ++line;
        cells.push_back(std::move(cell));
        done = true;
      } else if (c != '\r') {
        cell += c;
      }
    }
    if (!have_header) {
      table.header = std::move(cells);
      table.header_line = record_line;
      have_header = true;
    } else {
      if (cells.size() != table.header.size()) {
        throw ValidationError(std::string(source) + ":" + std::to_string(record_line) +
                              ": expected " + std::to_string(table.header.size()) +
                              " cells, found " + std::to_string(cells.size()));
      }
      table.rows.push_back(Row{record_line, std::move(cells)});
    }
  }
  if (!have_header) throw ValidationError(std::string(source) + ": missing header row");
  return table;
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

std::string escape(std::string_view cell) {
  if (cell.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(cell);
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string number(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

Writer::Writer(const std::filesystem::path& path, std::string_view config_hash,
               const std::vector<std::string>& header)
    : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
  if (!out_) throw IoError("cannot write '" + path.string() + "'");
  out_ << "# config-hash: " << config_hash << '\n';
  row(header);
}

Writer& Writer::row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << escape(cells[i]);
  }
  out_ << '\n';
  if (!out_) throw IoError("write failed for '" + path_.string() + "'");
  return *this;
}

}  // namespace tunerisk::csv
