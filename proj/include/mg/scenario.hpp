#ifndef MG_SCENARIO_HPP
#define MG_SCENARIO_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mg/config.hpp"
#include "mg/timeseries.hpp"

namespace mg {

/// Aligned bundle of input series plus the hardware config the simulation
/// environments and baselines run against.
///
/// `loads` holds one series for single-feeder sites and three for sites that
/// split demand into critical / non-critical / essential feeders.
struct Scenario {
    MicrogridConfig config;
    std::vector<TimeSeries> loads;          // kW; size 1 or 3
    std::optional<TimeSeries> solar;        // kW
    std::optional<TimeSeries> wind;         // kW
    std::optional<TimeSeries> price;        // CAD/kWh spot; absent if tariff set
    std::optional<TieredTariff> tariff;
    std::map<std::string, TimeSeries> weather;

    std::size_t n_steps() const { return loads.empty() ? 0 : loads[0].size(); }
    std::int64_t step_seconds() const { return config.step_seconds; }

    double total_load_kw(std::size_t step) const;
    double solar_kw(std::size_t step) const;
    double wind_kw(std::size_t step) const;
    double renewable_kw(std::size_t step) const { return solar_kw(step) + wind_kw(step); }

    /// Spot price for the step. Tariff scenarios have no single spot price;
    /// callers that need one use marginal_buy_rate / sell_rate instead.
    double spot_price(std::size_t step) const;

    bool has_tariff() const { return tariff.has_value(); }

    /// Purchase rate that applies after `bought_today_kwh` has already been
    /// bought within the current day. Spot scenarios return the spot price.
    double marginal_buy_rate(std::size_t step, double bought_today_kwh) const;

    /// Export remuneration. Tariff scenarios sell flat at the tier-1 rate.
    double sell_rate(std::size_t step) const;

    /// Exact purchase cost for importing `import_kwh` at this step given the
    /// day's cumulative purchases so far (handles tier crossings exactly).
    double buy_cost(std::size_t step, double bought_today_kwh, double import_kwh) const;

    std::size_t steps_per_day() const {
        return static_cast<std::size_t>(86400 / config.step_seconds);
    }

    /// Checks series alignment (shared clock), load count, and config.
    void validate() const;

    /// Directory round trip: one CSV per series plus scenario.ini.
    void save(const std::string& dir) const;
    static Scenario load(const std::string& dir);
};

}  // namespace mg

#endif  // MG_SCENARIO_HPP
