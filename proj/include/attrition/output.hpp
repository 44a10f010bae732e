#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace attrition {

/// Locale-independent decimal text with 17 significant digits ("nan", "inf" for non-finite).
[[nodiscard]] std::string format_double(double x);

using Cell = std::variant<double, long long, std::string>;

/// A rectangular result with `key=value` metadata.
struct Table {
    std::vector<std::pair<std::string, std::string>> metadata;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void meta(std::string key, std::string value) { metadata.emplace_back(std::move(key), std::move(value)); }
    void add_row(std::vector<Cell> row);
};

enum class OutputFormat { csv, json };

/// CSV: one `# key=value` line per metadata entry, a header line, then rows.
void write_csv(std::ostream& os, const Table& table);
/// JSON: {"metadata": {...}, "columns": [...], "rows": [[...], ...]}.
void write_json(std::ostream& os, const Table& table);
void write_table(std::ostream& os, const Table& table, OutputFormat format);

}  // namespace attrition
