#pragma once

// Tabular artifacts. CSV files start with '#' metadata lines (schema version
// and the full config), then a header row; fields are quoted RFC 4180 style
// when needed. JSON output is one record per line: a metadata record
// followed by one record per row. Doubles are written with 17 significant
// digits so identical runs give identical bytes.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "relstable/tracelab.hpp"

namespace relstable {

inline constexpr int kSchemaVersion = 1;

using Cell = std::variant<std::int64_t, double, std::string, bool>;
using Metadata = std::vector<std::pair<std::string, std::string>>;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  Table(std::string table_name, std::vector<std::string> cols)
      : name(std::move(table_name)), columns(std::move(cols)) {}
  /// Throws InvalidParameter when the row width does not match.
  void add(std::vector<Cell> row);
};

enum class Format { Csv, Json };

Format parse_format(const std::string& text);
std::string extension(Format f);

std::string csv_field(const std::string& s);
std::string format_cell(const Cell& c);

void write_csv(std::ostream& os, const Table& table, const Metadata& meta);
void write_jsonl(std::ostream& os, const Table& table, const Metadata& meta);
void write_table(std::ostream& os, const Table& table, Format f, const Metadata& meta);
/// Writes to path (creating parent directories).
void write_table_file(const std::string& path, const Table& table, Format f,
                      const Metadata& meta);

/// One row per estimate: t, value, std_error, n_samples, dt, raw_value, bias, meta.
Table estimate_table(const std::string& name, const std::vector<TraceEstimate>& estimates);
std::string meta_text(const std::map<std::string, std::string>& meta);

}  // namespace relstable
