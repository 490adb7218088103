#include "born_calderon/result_table.hpp"

#include "born_calderon/errors.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#ifndef BORN_CALDERON_GIT_REV
#define BORN_CALDERON_GIT_REV "unknown"
#endif

namespace bc {

namespace {

const char* type_name(ColumnType t)
{
    switch (t) {
    case ColumnType::integer: return "int";
    case ColumnType::real: return "real";
    default: return "complex";
    }
}

void write_file(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path);
    }
    out << text;
    if (!out) {
        throw Error("write failed for " + path);
    }
}

double parse_real(std::string_view s)
{
    if (s == "nan") return std::nan("");
    if (s == "inf") return HUGE_VAL;
    if (s == "-inf") return -HUGE_VAL;
    const std::string tmp(s);
    char* end = nullptr;
    const double v = std::strtod(tmp.c_str(), &end);
    if (end == tmp.c_str() || *end != '\0') {
        throw SchemaError("not a number in CSV: \"" + tmp + "\"");
    }
    return v;
}

std::vector<std::string_view> split(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.push_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

} // namespace

ResultTable::ResultTable(std::vector<Column> columns) : columns_(std::move(columns)) {}

void ResultTable::add_row(std::vector<Cell> row)
{
    if (row.size() != columns_.size()) {
        throw DomainError("row has " + std::to_string(row.size()) + " cells, table has " +
                          std::to_string(columns_.size()) + " columns");
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
        const ColumnType t = columns_[i].type;
        const bool ok = (t == ColumnType::integer && std::holds_alternative<long long>(row[i])) ||
                        (t == ColumnType::real && std::holds_alternative<double>(row[i])) ||
                        (t == ColumnType::complex && std::holds_alternative<cplx>(row[i]));
        if (!ok) {
            throw DomainError("cell type does not match column " + columns_[i].name);
        }
    }
    rows_.push_back(std::move(row));
}

std::string ResultTable::header() const
{
    std::string h;
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (i > 0) h += ',';
        const Column& c = columns_[i];
        if (c.type == ColumnType::complex)
            h += c.name + "_re:real," + c.name + "_im:real";
        else
            h += c.name + ':' + type_name(c.type);
    }
    return h;
}

std::string ResultTable::to_csv() const
{
    std::string out = header() + '\n';
    for (const auto& row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i > 0) out += ',';
            if (const auto* n = std::get_if<long long>(&row[i]))
                out += std::to_string(*n);
            else if (const auto* x = std::get_if<double>(&row[i]))
                out += format_real(*x);
            else {
                const cplx z = std::get<cplx>(row[i]);
                out += format_real(z.real()) + ',' + format_real(z.imag());
            }
        }
        out += '\n';
    }
    return out;
}

nlohmann::json ResultTable::sidecar() const
{
    nlohmann::json j = meta_;
    nlohmann::json cols = nlohmann::json::array();
    for (const Column& c : columns_) cols.push_back({{"name", c.name}, {"type", type_name(c.type)}});
    j["columns"] = cols;
    j["rows"] = rows_.size();
    if (!j.contains("git_revision")) j["git_revision"] = git_revision();
    return j;
}

void ResultTable::write(const std::string& path) const
{
    write_file(path, to_csv());
    write_file(path + ".meta.json", sidecar().dump(2) + '\n');
}

int ParsedTable::find(std::string_view name) const
{
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i);
    return -1;
}

ParsedTable parse_csv(std::string_view text)
{
    ParsedTable t;
    std::size_t pos = 0;
    bool first = true;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        const auto cells = split(line);
        if (first) {
            for (std::string_view c : cells) {
                const std::size_t colon = c.rfind(':');
                if (colon == std::string_view::npos) throw SchemaError("CSV header entry without a type");
                t.names.emplace_back(c.substr(0, colon));
                t.types.emplace_back(c.substr(colon + 1));
            }
            first = false;
            continue;
        }
        if (cells.size() != t.names.size()) throw SchemaError("CSV row width does not match the header");
        std::vector<double> row;
        row.reserve(cells.size());
        for (std::string_view c : cells) row.push_back(parse_real(c));
        t.rows.push_back(std::move(row));
    }
    if (first) throw SchemaError("empty CSV");
    return t;
}

ParsedTable read_csv(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str());
}

std::string format_real(double x)
{
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::uint64_t fnv1a64(std::string_view data)
{
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string git_revision() { return BORN_CALDERON_GIT_REV; }

} // namespace bc
