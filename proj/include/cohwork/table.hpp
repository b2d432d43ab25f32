#pragma once

#include "cohwork/errors.hpp"
#include "cohwork/linalg.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

namespace cohwork::sweep {

using Json = nlohmann::ordered_json;

enum class Format { csv, json };

// Numeric result set with ordered columns and a metadata block carrying the
// fully resolved configuration, engine version and run timestamp.
struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    Json metadata;
};

namespace detail {

// Locale-independent formatting with 17 significant digits.
inline std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

// RFC 4180: quote fields containing separators, quotes or line breaks.
inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace detail

inline void emit(const ResultTable& table, std::ostream& os, Format format) {
    if (format == Format::csv) {
        if (!table.metadata.is_null())
            os << "# cohwork-metadata: " << table.metadata.dump() << "\n";
        for (std::size_t c = 0; c < table.columns.size(); ++c)
            os << (c ? "," : "") << detail::csv_field(table.columns[c]);
        os << "\n";
        for (const auto& row : table.rows) {
            for (std::size_t c = 0; c < row.size(); ++c)
                os << (c ? "," : "") << detail::format_number(row[c]);
            os << "\n";
        }
    } else {
        Json doc;
        doc["metadata"] = table.metadata;
        doc["columns"] = table.columns;
        Json rows = Json::array();
        for (const auto& row : table.rows) rows.push_back(row);
        doc["rows"] = std::move(rows);
        os << doc.dump(2) << "\n";
    }
}

inline void emit_to_file(const ResultTable& table, const std::string& path, Format format) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    emit(table, os, format);
    os.flush();
    if (!os) throw IoError("write failed: " + path);
}

// Reads back a table emitted in JSON format.
inline ResultTable read_table_json(std::istream& is) {
    Json doc = Json::parse(is);
    ResultTable table;
    table.metadata = doc.at("metadata");
    table.columns = doc.at("columns").get<std::vector<std::string>>();
    for (const auto& row : doc.at("rows"))
        table.rows.push_back(row.get<std::vector<double>>());
    return table;
}

// Debug wire format for dense complex matrices: row-major (re, im) pairs.
inline Json matrix_to_json(const Matrix& m) {
    Json out;
    out["rows"] = m.rows();
    out["cols"] = m.cols();
    Json data = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            data.push_back(m(r, c).real());
            data.push_back(m(r, c).imag());
        }
    out["data"] = std::move(data);
    return out;
}

inline Matrix matrix_from_json(const Json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto& data = j.at("data");
    if (rows < 0 || cols < 0 ||
        data.size() != static_cast<std::size_t>(2 * rows * cols))
        throw ConfigError("matrix_from_json: data length does not match 2*rows*cols");
    Matrix m(rows, cols);
    std::size_t i = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) {
            const double re = data[i++].get<double>();
            const double im = data[i++].get<double>();
            m(r, c) = Complex(re, im);
        }
    return m;
}

}  // namespace cohwork::sweep
