#ifndef MG_CSV_HPP
#define MG_CSV_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mg/timeseries.hpp"

namespace mg {

struct MissingColumn : std::runtime_error {
    explicit MissingColumn(const std::string& name)
        : std::runtime_error("missing column: " + name) {}
};

struct EmptyFile : std::runtime_error {
    explicit EmptyFile(const std::string& path)
        : std::runtime_error("empty csv file: " + path) {}
};

struct GapTooLong : std::runtime_error {
    explicit GapTooLong(const std::string& what) : std::runtime_error(what) {}
};

/// Declares which columns to pull out of a CSV file.
struct CsvSchema {
    std::string timestamp_column;
    std::vector<std::pair<std::string, Unit>> value_columns;
};

/// Parsed rows sharing one timestamp column. Rows with any unparseable
/// field are dropped during parse and counted in `dropped_rows`.
struct RawTable {
    std::vector<std::int64_t> timestamps;            // strictly increasing
    std::vector<std::string> column_names;
    std::vector<Unit> column_units;
    std::vector<std::vector<double>> columns;        // per column, row-major per entry
    std::size_t dropped_rows = 0;

    std::size_t n_rows() const { return timestamps.size(); }
    const std::vector<double>& column(const std::string& name) const;
    Unit column_unit(const std::string& name) const;
};

/// Reads a CSV with a header row. Timestamps may be epoch seconds or
/// RFC-3339 (naive UTC, "YYYY-MM-DDTHH:MM:SS" with optional trailing Z).
/// Decimal separator is the period.
RawTable parse_csv(const std::string& path, const CsvSchema& schema);

/// Converts one column to a uniform series at `resolution_s`. Timestamps
/// must land on the grid anchored at the first row. Interior gaps shorter
/// than `max_gap_steps` are filled by linear interpolation; longer gaps
/// raise GapTooLong.
TimeSeries to_timeseries(const RawTable& table, const std::string& column,
                         std::int64_t resolution_s, std::size_t max_gap_steps = 6);

}  // namespace mg

#endif  // MG_CSV_HPP
