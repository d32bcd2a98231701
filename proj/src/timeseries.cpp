#include "mg/timeseries.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mg {

std::string unit_name(Unit u) {
    switch (u) {
        case Unit::kW: return "kW";
        case Unit::kWh: return "kWh";
        case Unit::CadPerKwh: return "CAD/kWh";
        case Unit::Celsius: return "C";
        case Unit::WattPerM2: return "W/m2";
        case Unit::Dimensionless: return "1";
    }
    throw std::logic_error("unit_name: unknown unit");
}

Unit unit_from_name(const std::string& name) {
    if (name == "kW") return Unit::kW;
    if (name == "kWh") return Unit::kWh;
    if (name == "CAD/kWh") return Unit::CadPerKwh;
    if (name == "C") return Unit::Celsius;
    if (name == "W/m2") return Unit::WattPerM2;
    if (name == "1") return Unit::Dimensionless;
    throw std::invalid_argument("unit_from_name: unknown unit '" + name + "'");
}

TimeSeries::TimeSeries(std::int64_t start_epoch, std::int64_t resolution_s, Unit unit,
                       std::vector<double> values)
    : start_epoch_(start_epoch), resolution_s_(resolution_s), unit_(unit),
      values_(std::move(values)) {
    if (resolution_s_ <= 0) {
        throw std::invalid_argument("TimeSeries: resolution must be positive");
    }
    if (values_.empty()) {
        throw std::invalid_argument("TimeSeries: empty value vector");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("TimeSeries: non-finite value");
        }
    }
}

double TimeSeries::max() const {
    return *std::max_element(values_.begin(), values_.end());
}

double TimeSeries::min() const {
    return *std::min_element(values_.begin(), values_.end());
}

double TimeSeries::sum() const {
    return std::accumulate(values_.begin(), values_.end(), 0.0);
}

TimeSeries TimeSeries::scaled(double factor) const {
    std::vector<double> out(values_.size());
    for (std::size_t i = 0; i < values_.size(); ++i) out[i] = values_[i] * factor;
    return TimeSeries(start_epoch_, resolution_s_, unit_, std::move(out));
}

}  // namespace mg
