#include "mg/config.hpp"

#include <algorithm>
#include <stdexcept>

namespace mg {

void MicrogridConfig::validate() const {
    auto nonneg = [](double v, const char* name) {
        if (!(v >= 0.0)) {
            throw std::invalid_argument(std::string("MicrogridConfig: ") + name +
                                        " must be >= 0");
        }
    };
    nonneg(battery_capacity_kwh, "battery_capacity_kwh");
    nonneg(battery_max_charge_kw, "battery_max_charge_kw");
    nonneg(battery_max_discharge_kw, "battery_max_discharge_kw");
    nonneg(pv_peak_kw, "pv_peak_kw");
    nonneg(wind_peak_kw, "wind_peak_kw");
    nonneg(fuel_cell_max_kw, "fuel_cell_max_kw");
    nonneg(generator_max_kw, "generator_max_kw");
    if (!(initial_soc_fraction >= 0.0 && initial_soc_fraction <= 1.0)) {
        throw std::invalid_argument(
            "MicrogridConfig: initial_soc_fraction must be in [0, 1]");
    }
    if (step_seconds <= 0) {
        throw std::invalid_argument("MicrogridConfig: step_seconds must be positive");
    }
}

MicrogridConfig MicrogridConfig::rye_preset() {
    MicrogridConfig c;
    c.battery_capacity_kwh = 500.0;
    c.battery_max_charge_kw = 400.0;
    c.battery_max_discharge_kw = 400.0;
    c.pv_peak_kw = 86.4;
    c.wind_peak_kw = 225.0;
    c.fuel_cell_max_kw = 0.0;
    c.generator_max_kw = 0.0;
    c.initial_soc_fraction = 0.5;
    c.step_seconds = 3600;
    return c;
}

void TieredTariff::validate() const {
    if (!(tier1_rate > 0.0)) {
        throw std::invalid_argument("TieredTariff: tier1_rate must be > 0");
    }
    if (!(tier2_rate > tier1_rate)) {
        throw std::invalid_argument("TieredTariff: tier2_rate must exceed tier1_rate");
    }
    if (!(tier1_limit_kwh_per_day > 0.0)) {
        throw std::invalid_argument("TieredTariff: tier limit must be > 0");
    }
}

double TieredTariff::cost(double total_kwh_today) const {
    if (total_kwh_today <= 0.0) return 0.0;
    const double in_tier1 = std::min(total_kwh_today, tier1_limit_kwh_per_day);
    const double in_tier2 = std::max(0.0, total_kwh_today - tier1_limit_kwh_per_day);
    return tier1_rate * in_tier1 + tier2_rate * in_tier2;
}

}  // namespace mg
