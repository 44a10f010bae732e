#include "attrition/output.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

#include <nlohmann/json.hpp>

#include "attrition/errors.hpp"

namespace attrition {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    return {buf, res.ptr};
}

void Table::add_row(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw InvalidParameter("row width does not match the header");
    rows.push_back(std::move(row));
}

namespace {

std::string cell_text(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
    if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
    return std::get<std::string>(c);
}

nlohmann::ordered_json cell_json(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) {
        if (!std::isfinite(*d)) return format_double(*d);
        return *d;
    }
    if (const auto* i = std::get_if<long long>(&c)) return *i;
    return std::get<std::string>(c);
}

}  // namespace

void write_csv(std::ostream& os, const Table& table) {
    for (const auto& [k, v] : table.metadata) os << "# " << k << '=' << v << '\n';
    for (std::size_t i = 0; i < table.columns.size(); ++i) os << (i ? "," : "") << table.columns[i];
    os << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << cell_text(row[i]);
        os << '\n';
    }
}

void write_json(std::ostream& os, const Table& table) {
    nlohmann::ordered_json meta = nlohmann::ordered_json::object();
    for (const auto& [k, v] : table.metadata) meta[k] = v;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : table.rows) {
        nlohmann::ordered_json r = nlohmann::ordered_json::array();
        for (const auto& c : row) r.push_back(cell_json(c));
        rows.push_back(std::move(r));
    }
    nlohmann::ordered_json doc;
    doc["metadata"] = std::move(meta);
    doc["columns"] = table.columns;
    doc["rows"] = std::move(rows);
    os << doc.dump(2) << '\n';
}

void write_table(std::ostream& os, const Table& table, OutputFormat format) {
    if (format == OutputFormat::json) {
        write_json(os, table);
    } else {
        write_csv(os, table);
    }
}

}  // namespace attrition
