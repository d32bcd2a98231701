#ifndef MG_TIMESERIES_HPP
#define MG_TIMESERIES_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mg {

/// Unit tag carried by every series. Canonical internal convention:
/// power in kW, energy in kWh, money in CAD, time in UNIX seconds.
enum class Unit {
    kW,
    kWh,
    CadPerKwh,
    Celsius,
    WattPerM2,
    Dimensionless,
};

std::string unit_name(Unit u);
Unit unit_from_name(const std::string& name);

/// Uniformly sampled signal. Immutable after construction; construction
/// rejects NaN/inf values, empty series, and non-positive resolutions.
class TimeSeries {
public:
    TimeSeries(std::int64_t start_epoch, std::int64_t resolution_s, Unit unit,
               std::vector<double> values);

    std::int64_t start_epoch() const { return start_epoch_; }
    std::int64_t resolution_s() const { return resolution_s_; }
    Unit unit() const { return unit_; }
    const std::vector<double>& values() const { return values_; }
    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }

    std::int64_t epoch_at(std::size_t i) const {
        return start_epoch_ + static_cast<std::int64_t>(i) * resolution_s_;
    }

    double max() const;
    double min() const;
    double sum() const;

    /// Same clock and unit, different values.
    TimeSeries with_values(std::vector<double> values) const {
        return TimeSeries(start_epoch_, resolution_s_, unit_, std::move(values));
    }

    /// Elementwise multiply by a positive constant.
    TimeSeries scaled(double factor) const;

    bool same_clock(const TimeSeries& other) const {
        return start_epoch_ == other.start_epoch_ &&
               resolution_s_ == other.resolution_s_ &&
               values_.size() == other.values_.size();
    }

private:
    std::int64_t start_epoch_;
    std::int64_t resolution_s_;
    Unit unit_;
    std::vector<double> values_;
};

}  // namespace mg

#endif  // MG_TIMESERIES_HPP
