#pragma once

#include <brep/error.hpp>
#include <brep/linalg.hpp>

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace brep::app {

/// Malformed input file; the message names the offending line.
class InputError : public Error {
  public:
    using Error::Error;
};

struct CsvTable {
    std::vector<std::string> header;
    Mat values; ///< one row per data line
};

namespace detail {

inline std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_row(const std::string &line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
        out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

inline bool parse_double(const std::string &s, double &v) {
    if (s.empty())
        return false;
    const char *first = s.data();
    if (*first == '+')
        ++first;
    const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    return ec == std::errc() && ptr == s.data() + s.size();
}

inline bool is_numeric_row(const std::vector<std::string> &cells) {
    double v = 0.0;
    for (const auto &c : cells)
        if (!parse_double(c, v))
            return false;
    return !cells.empty();
}

} // namespace detail

/// Reads a comma-separated numeric table. With require_header the first
/// non-blank line must be a header; otherwise a non-numeric first line is
/// taken as header. Blank lines and lines starting with '#' are skipped.
inline CsvTable read_csv(const std::string &path, bool require_header) {
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot open " + path);
    CsvTable t;
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string tl = detail::trim(line);
        if (tl.empty() || tl.front() == '#')
            continue;
        auto cells = detail::split_row(tl);
        if (!have_header && rows.empty()) {
            if (require_header || !detail::is_numeric_row(cells)) {
                if (detail::is_numeric_row(cells))
                    throw InputError(path + ":" + std::to_string(lineno) + ": header row required");
                t.header = cells;
                width = cells.size();
                have_header = true;
                continue;
            }
            width = cells.size();
        }
        if (cells.size() != width)
            throw InputError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(width) +
                             " columns, found " + std::to_string(cells.size()));
        std::vector<double> r(width);
        for (std::size_t j = 0; j < width; ++j)
            if (!detail::parse_double(cells[j], r[j]))
                throw InputError(path + ":" + std::to_string(lineno) + ": column " + std::to_string(j + 1) +
                                 " is not a number ('" + cells[j] + "')");
        rows.push_back(std::move(r));
    }
    if (require_header && !have_header)
        throw InputError(path + ": empty file, header row required");
    t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < width; ++j)
            t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return t;
}

struct RegressionData {
    Mat x; ///< points as rows
    Vec y;
};

/// Header `x1, ..., xd, y` required.
inline RegressionData read_regression_csv(const std::string &path) {
    CsvTable t = read_csv(path, true);
    const auto &h = t.header;
    if (h.size() < 2 || h.back() != "y")
        throw InputError(path + ":1: header must be x1,...,xd,y");
    for (std::size_t j = 0; j + 1 < h.size(); ++j)
        if (h[j] != "x" + std::to_string(j + 1))
            throw InputError(path + ":1: header must be x1,...,xd,y (column " + std::to_string(j + 1) + " is '" +
                             h[j] + "')");
    if (t.values.rows() == 0)
        throw InputError(path + ": no data rows");
    const Eigen::Index d = t.values.cols() - 1;
    return {t.values.leftCols(d), t.values.col(d)};
}

/// Observation vector: a single column `y`, or a regression file whose last column is y.
inline Vec read_observations_csv(const std::string &path) {
    CsvTable t = read_csv(path, true);
    if (t.header.empty() || t.header.back() != "y")
        throw InputError(path + ":1: last header column must be y");
    if (t.values.rows() == 0)
        throw InputError(path + ": no data rows");
    return t.values.col(t.values.cols() - 1);
}

/// Numeric matrix, header optional.
inline Mat read_matrix_csv(const std::string &path) {
    CsvTable t = read_csv(path, false);
    if (t.values.size() == 0)
        throw InputError(path + ": empty matrix");
    return t.values;
}

} // namespace brep::app
