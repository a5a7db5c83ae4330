#include "relstable/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "relstable/errors.hpp"

namespace relstable {

namespace {

std::string real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::ordered_json cell_json(const Cell& c) {
  return std::visit(
      [](const auto& v) -> nlohmann::ordered_json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) {
          if (!std::isfinite(v)) return real(v);
          return v;
        } else {
          return v;
        }
      },
      c);
}

}  // namespace

void Table::add(std::vector<Cell> row) {
  if (row.size() != columns.size()) {
    throw InvalidParameter("table " + name + ": row has " + std::to_string(row.size()) +
                           " cells, expected " + std::to_string(columns.size()));
  }
  rows.push_back(std::move(row));
}

Format parse_format(const std::string& text) {
  if (text == "csv") return Format::Csv;
  if (text == "json") return Format::Json;
  throw InvalidParameter("unknown format '" + text + "' (csv or json)");
}

std::string extension(Format f) { return f == Format::Csv ? ".csv" : ".jsonl"; }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_cell(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) return real(v);
        else if constexpr (std::is_same_v<T, std::int64_t>) return std::to_string(v);
        else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
        else return v;
      },
      c);
}

void write_csv(std::ostream& os, const Table& table, const Metadata& meta) {
  os << "# schema_version=" << kSchemaVersion << "\n";
  os << "# table=" << table.name << "\n";
  for (const auto& [k, v] : meta) os << "# " << k << "=" << v << "\n";
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    os << (i ? "," : "") << csv_field(table.columns[i]);
  }
  os << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      os << (i ? "," : "") << csv_field(format_cell(row[i]));
    }
    os << "\n";
  }
}

void write_jsonl(std::ostream& os, const Table& table, const Metadata& meta) {
  nlohmann::ordered_json head;
  head["record"] = "metadata";
  head["schema_version"] = kSchemaVersion;
  head["table"] = table.name;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : meta) cfg[k] = v;
  head["config"] = cfg;
  head["columns"] = table.columns;
  os << head.dump() << "\n";
  for (const auto& row : table.rows) {
    nlohmann::ordered_json rec;
    rec["record"] = table.name;
    rec["schema_version"] = kSchemaVersion;
    for (std::size_t i = 0; i < row.size(); ++i) rec[table.columns[i]] = cell_json(row[i]);
    os << rec.dump() << "\n";
  }
}

void write_table(std::ostream& os, const Table& table, Format f, const Metadata& meta) {
  if (f == Format::Csv) write_csv(os, table, meta);
  else write_jsonl(os, table, meta);
}

void write_table_file(const std::string& path, const Table& table, Format f,
                      const Metadata& meta) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidParameter("cannot write " + path);
  write_table(out, table, f, meta);
}

std::string meta_text(const std::map<std::string, std::string>& meta) {
  std::string s;
  for (const auto& [k, v] : meta) {
    if (!s.empty()) s += ';';
    s += k + "=" + v;
  }
  return s;
}

Table estimate_table(const std::string& name, const std::vector<TraceEstimate>& estimates) {
  Table table(name, {"t", "value", "std_error", "n_samples", "dt", "raw_value", "bias", "meta"});
  for (const auto& e : estimates) {
    table.add({e.t, e.value, e.std_error, static_cast<std::int64_t>(e.n_samples), e.dt,
               e.raw_value, e.bias, meta_text(e.meta)});
  }
  return table;
}

}  // namespace relstable
