#ifndef MG_CONFIG_HPP
#define MG_CONFIG_HPP

#include <cstdint>
#include <stdexcept>

namespace mg {

/// Hardware description of one microgrid installation.
struct MicrogridConfig {
    double battery_capacity_kwh = 0.0;
    double battery_max_charge_kw = 0.0;
    double battery_max_discharge_kw = 0.0;
    double pv_peak_kw = 0.0;
    double wind_peak_kw = 0.0;
    double fuel_cell_max_kw = 0.0;
    double generator_max_kw = 0.0;
    double initial_soc_fraction = 0.5;
    std::int64_t step_seconds = 3600;

    /// Hours per step; energy per step = power * step_hours.
    double step_hours() const { return static_cast<double>(step_seconds) / 3600.0; }

    double generation_capacity_kw() const {
        return pv_peak_kw + wind_peak_kw + fuel_cell_max_kw + generator_max_kw;
    }

    double initial_soc_kwh() const { return initial_soc_fraction * battery_capacity_kwh; }

    void validate() const;

    /// The Norwegian pilot installation: 225 kW wind turbine, 86.4 kWp PV,
    /// 500 kWh battery at hourly resolution.
    static MicrogridConfig rye_preset();
};

/// Two-tier daily purchase tariff. The threshold applies to the cumulative
/// energy bought within one calendar day.
struct TieredTariff {
    double tier1_limit_kwh_per_day = 40.0;
    double tier1_rate = 0.06905;   // CAD/kWh
    double tier2_rate = 0.10652;   // CAD/kWh

    void validate() const;

    /// Total cost of having bought `total_kwh_today` within one day.
    double cost(double total_kwh_today) const;
};

}  // namespace mg

#endif  // MG_CONFIG_HPP
