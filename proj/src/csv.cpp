#include "mg/csv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mg {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

bool parse_timestamp(const std::string& text, std::int64_t& out) {
    if (text.empty()) return false;
    // Epoch seconds: optional sign then digits only.
    const bool all_digits =
        std::all_of(text.begin() + (text[0] == '-' ? 1 : 0), text.end(),
                    [](char c) { return c >= '0' && c <= '9'; });
    if (all_digits && text != "-") {
        out = std::stoll(text);
        return true;
    }
    int y, mo, d, h, mi, s;
    char sep;
    if (std::sscanf(text.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi,
                    &s) == 7 &&
        (sep == 'T' || sep == ' ')) {
        if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || s > 60) {
            return false;
        }
        out = days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + s;
        return true;
    }
    return false;
}

bool parse_value(const std::string& text, double& out) {
    if (text.empty()) return false;
    char* end = nullptr;
    out = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size()) return false;
    return std::isfinite(out);
}

}  // namespace

const std::vector<double>& RawTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < column_names.size(); ++i) {
        if (column_names[i] == name) return columns[i];
    }
    throw MissingColumn(name);
}

Unit RawTable::column_unit(const std::string& name) const {
    for (std::size_t i = 0; i < column_names.size(); ++i) {
        if (column_names[i] == name) return column_units[i];
    }
    throw MissingColumn(name);
}

RawTable parse_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open csv: " + path);
    std::string line;
    if (!std::getline(in, line)) throw EmptyFile(path);

    const auto header = split_row(trim(line));
    auto find_col = [&](const std::string& name) -> std::size_t {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        throw MissingColumn(name);
    };

    const std::size_t ts_idx = find_col(schema.timestamp_column);
    std::vector<std::size_t> value_idx;
    RawTable table;
    for (const auto& [name, unit] : schema.value_columns) {
        value_idx.push_back(find_col(name));
        table.column_names.push_back(name);
        table.column_units.push_back(unit);
        table.columns.emplace_back();
    }

    std::int64_t last_ts = 0;
    bool have_rows = false;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        const auto cells = split_row(line);
        std::int64_t ts;
        if (cells.size() <= ts_idx || !parse_timestamp(cells[ts_idx], ts)) {
            ++table.dropped_rows;
            continue;
        }
        std::vector<double> values(value_idx.size());
        bool ok = true;
        for (std::size_t i = 0; i < value_idx.size(); ++i) {
            if (cells.size() <= value_idx[i] || !parse_value(cells[value_idx[i]], values[i])) {
                ok = false;
                break;
            }
        }
        if (!ok) {
            ++table.dropped_rows;
            continue;
        }
        if (have_rows && ts <= last_ts) {
            throw std::runtime_error("timestamps not strictly increasing in " + path);
        }
        last_ts = ts;
        have_rows = true;
        table.timestamps.push_back(ts);
        for (std::size_t i = 0; i < values.size(); ++i) {
            table.columns[i].push_back(values[i]);
        }
    }
    if (!have_rows && table.dropped_rows == 0) throw EmptyFile(path);
    return table;
}

TimeSeries to_timeseries(const RawTable& table, const std::string& column,
                         std::int64_t resolution_s, std::size_t max_gap_steps) {
    if (resolution_s <= 0) {
        throw std::invalid_argument("to_timeseries: resolution must be positive");
    }
    const auto& values = table.column(column);
    if (values.empty()) throw std::runtime_error("to_timeseries: no rows");

    const std::int64_t start = table.timestamps.front();
    const std::int64_t span = table.timestamps.back() - start;
    if (span % resolution_s != 0) {
        throw GapTooLong("to_timeseries: last timestamp off grid");
    }
    const std::size_t n = static_cast<std::size_t>(span / resolution_s) + 1;
    std::vector<double> grid(n, std::nan(""));
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
        const std::int64_t off = table.timestamps[r] - start;
        if (off % resolution_s != 0) {
            throw GapTooLong("to_timeseries: timestamp off grid at row " +
                             std::to_string(r));
        }
        grid[static_cast<std::size_t>(off / resolution_s)] = values[r];
    }

    // Fill interior gaps by linear interpolation between observed neighbours.
    std::size_t i = 0;
    while (i < n) {
        if (!std::isnan(grid[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && std::isnan(grid[j])) ++j;
        const std::size_t gap = j - i;
        if (gap >= max_gap_steps) {
            throw GapTooLong("to_timeseries: gap of " + std::to_string(gap) +
                             " steps exceeds limit " + std::to_string(max_gap_steps - 1));
        }
        const double lo = grid[i - 1];  // i > 0: first grid point is observed
        const double hi = grid[j];
        for (std::size_t k = i; k < j; ++k) {
            const double t = static_cast<double>(k - i + 1) / static_cast<double>(gap + 1);
            grid[k] = lo + (hi - lo) * t;
        }
        i = j;
    }
    return TimeSeries(start, resolution_s, table.column_unit(column), std::move(grid));
}

}  // namespace mg
