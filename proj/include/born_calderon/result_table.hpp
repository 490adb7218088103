#pragma once

#include "born_calderon/geometry.hpp"

#include <cstdint>
#include <json.hpp>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace bc {

enum class ColumnType { integer, real, complex };

struct Column {
    std::string name;
    ColumnType type = ColumnType::real;
};

using Cell = std::variant<long long, double, cplx>;

/// Typed CSV table. The header names every CSV column as name:int or name:real;
/// a complex column c becomes the pair c_re:real, c_im:real. Reals are
/// written with 17 significant digits.
class ResultTable {
public:
    explicit ResultTable(std::vector<Column> columns);

    void add_row(std::vector<Cell> row);

    [[nodiscard]] const std::vector<Column>& columns() const { return columns_; }
    [[nodiscard]] const std::vector<std::vector<Cell>>& rows() const { return rows_; }
    [[nodiscard]] nlohmann::json& meta() { return meta_; }
    [[nodiscard]] const nlohmann::json& meta() const { return meta_; }

    [[nodiscard]] std::string header() const;
    [[nodiscard]] std::string to_csv() const;
    /// Sidecar JSON: the user metadata plus column types and row count.
    [[nodiscard]] nlohmann::json sidecar() const;

    /// Writes `path` and `path + ".meta.json"`.
    void write(const std::string& path) const;

private:
    std::vector<Column> columns_;
    std::vector<std::vector<Cell>> rows_;
    nlohmann::json meta_ = nlohmann::json::object();
};

/// CSV as read back: the header entries (name:type) and numeric cells.
struct ParsedTable {
    std::vector<std::string> names;
    std::vector<std::string> types;
    std::vector<std::vector<double>> rows;

    /// Position of a CSV column by name, or -1.
    [[nodiscard]] int find(std::string_view name) const;
};

ParsedTable parse_csv(std::string_view text);
ParsedTable read_csv(const std::string& path);

/// %.17g, with nan, inf and -inf spelled out.
std::string format_real(double x);

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

/// Short git revision of the source tree at configure time.
std::string git_revision();

} // namespace bc
