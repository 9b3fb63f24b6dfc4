#ifndef DIFFCORR_IO_HPP
#define DIFFCORR_IO_HPP

#include "core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

/**
 * @file io.hpp
 * @brief CSV ingestion and matrix serialization.
 *
 * Sample files have a header row of variable labels followed by one row per
 * observation. Fields are comma-separated, numbers use '.' as the decimal point
 * and are parsed without locale. Rows and columns in error messages are 1-based
 * positions in the file, header included.
 */

namespace diffcorr {

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
        s = s.substr(1, s.size() - 2);
    }
    return s;
}

inline std::vector<std::string> split_fields(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

inline bool blank(std::string_view line) { return trim(line).empty(); }

} // namespace detail

/// Header plus raw string cells; every data row has the header's width.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    /// 1-based file line of each data row.
    std::vector<std::size_t> lines;
};

inline CsvTable read_csv_table(std::istream& in) {
    CsvTable table;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::blank(line)) {
            continue;
        }
        auto fields = detail::split_fields(line);
        if (!have_header) {
            table.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size()) {
            throw ParseError("expected " + std::to_string(table.header.size()) + " fields, found " +
                                 std::to_string(fields.size()),
                             lineno, std::min(fields.size(), table.header.size()) + 1);
        }
        table.rows.push_back(std::move(fields));
        table.lines.push_back(lineno);
    }
    if (!have_header) {
        throw ParseError("empty CSV input, no header row", 1, 1);
    }
    return table;
}

inline double parse_number(const std::string& cell, std::size_t row, std::size_t column) {
    double value = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (first != last && *first == '+') {
        ++first;
    }
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (cell.empty() || ec != std::errc{} || ptr != last) {
        throw ParseError("cannot parse '" + cell + "' as a number", row, column);
    }
    if (!std::isfinite(value)) {
        throw ParseError("non-finite value '" + cell + "'", row, column);
    }
    return value;
}

namespace detail {

inline Matrix numeric_block(const CsvTable& table, const std::vector<std::size_t>& rows,
                            const std::vector<std::size_t>& columns) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                parse_number(table.rows[rows[r]][columns[c]], table.lines[rows[r]], columns[c] + 1);
        }
    }
    return out;
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open '" + path + "'");
    }
    return in;
}

} // namespace detail

inline SampleMatrix read_sample_csv(std::istream& in) {
    const auto table = read_csv_table(in);
    std::vector<std::size_t> rows(table.rows.size()), cols(table.header.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i] = i;
    }
    for (std::size_t j = 0; j < cols.size(); ++j) {
        cols[j] = j;
    }
    return SampleMatrix(detail::numeric_block(table, rows, cols), table.header);
}

inline SampleMatrix read_sample_csv(const std::string& path) {
    auto in = detail::open_input(path);
    return read_sample_csv(in);
}

/// Two sample files over identical labels in identical order.
inline TwoGroupDataset ingest_two_group(const std::string& path1, const std::string& path2) {
    return TwoGroupDataset(read_sample_csv(path1), read_sample_csv(path2));
}

/**
 * @brief Which labels form each group, e.g. "A+B:C" pools A and B against C.
 */
struct GroupSpec {
    std::vector<std::string> group1;
    std::vector<std::string> group2;
};

inline GroupSpec parse_group_spec(const std::string& spec) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos || spec.find(':', colon + 1) != std::string::npos) {
        throw ValidationError("group specification '" + spec + "' must look like A+B:C");
    }
    auto side = [&](std::string_view s) {
        std::vector<std::string> out;
        std::size_t start = 0;
        while (true) {
            const auto pos = s.find('+', start);
            auto label = detail::trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
            if (label.empty()) {
                throw ValidationError("group specification '" + spec + "' has an empty label");
            }
            out.emplace_back(label);
            if (pos == std::string_view::npos) {
                break;
            }
            start = pos + 1;
        }
        return out;
    };
    const std::string_view sv(spec);
    GroupSpec out{side(sv.substr(0, colon)), side(sv.substr(colon + 1))};
    for (const auto& a : out.group1) {
        for (const auto& b : out.group2) {
            if (a == b) {
                throw ValidationError("label '" + a + "' appears on both sides of the group specification");
            }
        }
    }
    return out;
}

/**
 * One file holding both groups, with a label column. Without a spec the file must
 * contain exactly two distinct labels; the first one encountered becomes group 1.
 * Rows whose label is not named in the spec are ignored.
 */
inline TwoGroupDataset ingest_labeled(std::istream& in, const std::string& label_column,
                                      const std::optional<GroupSpec>& spec = std::nullopt) {
    const auto table = read_csv_table(in);
    std::size_t label_idx = table.header.size();
    for (std::size_t j = 0; j < table.header.size(); ++j) {
        if (table.header[j] == label_column) {
            label_idx = j;
        }
    }
    if (label_idx == table.header.size()) {
        throw ValidationError("label column '" + label_column + "' not found in header");
    }

    GroupSpec groups;
    if (spec) {
        groups = *spec;
    } else {
        std::vector<std::string> seen;
        for (const auto& row : table.rows) {
            if (std::find(seen.begin(), seen.end(), row[label_idx]) == seen.end()) {
                seen.push_back(row[label_idx]);
            }
        }
        if (seen.size() != 2) {
            throw ValidationError("label column '" + label_column + "' has " + std::to_string(seen.size()) +
                                  " distinct labels; pass a group specification to pool them into two groups");
        }
        groups = GroupSpec{{seen[0]}, {seen[1]}};
    }
    const std::set<std::string> in1(groups.group1.begin(), groups.group1.end());
    const std::set<std::string> in2(groups.group2.begin(), groups.group2.end());

    std::vector<std::size_t> rows1, rows2, cols;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& label = table.rows[i][label_idx];
        if (in1.count(label)) {
            rows1.push_back(i);
        } else if (in2.count(label)) {
            rows2.push_back(i);
        }
    }
    std::vector<std::string> names;
    for (std::size_t j = 0; j < table.header.size(); ++j) {
        if (j != label_idx) {
            cols.push_back(j);
            names.push_back(table.header[j]);
        }
    }
    return TwoGroupDataset(SampleMatrix(detail::numeric_block(table, rows1, cols), names),
                           SampleMatrix(detail::numeric_block(table, rows2, cols), names));
}

inline TwoGroupDataset ingest_labeled(const std::string& path, const std::string& label_column,
                                      const std::optional<GroupSpec>& spec = std::nullopt) {
    auto in = detail::open_input(path);
    return ingest_labeled(in, label_column, spec);
}

/// Shortest form that still carries 17 significant digits, so values re-read exactly.
inline std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

struct LabeledMatrix {
    Matrix values;
    std::vector<std::string> row_names;
    std::vector<std::string> col_names;
};

/// Header row of column labels (first cell empty), then one labeled row per matrix row.
inline void write_matrix_csv(std::ostream& out, const Matrix& m, const std::vector<std::string>& row_names,
                             const std::vector<std::string>& col_names) {
    for (const auto& c : col_names) {
        out << ',' << c;
    }
    out << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        out << row_names[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            out << ',' << format_number(m(i, j));
        }
        out << '\n';
    }
}

inline LabeledMatrix read_matrix_csv(std::istream& in) {
    const auto table = read_csv_table(in);
    if (table.header.size() < 2) {
        throw ParseError("matrix file needs at least one column", 1, 1);
    }
    LabeledMatrix out;
    out.col_names.assign(table.header.begin() + 1, table.header.end());
    std::vector<std::size_t> rows(table.rows.size()), cols;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i] = i;
        out.row_names.push_back(table.rows[i][0]);
    }
    for (std::size_t j = 1; j < table.header.size(); ++j) {
        cols.push_back(j);
    }
    out.values = detail::numeric_block(table, rows, cols);
    return out;
}

} // namespace diffcorr

#endif
