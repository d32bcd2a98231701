#ifndef MG_SYNTH_HPP
#define MG_SYNTH_HPP

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mg/config.hpp"
#include "mg/rng.hpp"
#include "mg/scenario.hpp"
#include "mg/timeseries.hpp"

namespace mg {

struct InsufficientData : std::runtime_error {
    explicit InsufficientData(const std::string& what) : std::runtime_error(what) {}
};

struct NegativeIrradiance : std::runtime_error {
    NegativeIrradiance() : std::runtime_error("irradiance must be >= 0") {}
};

/// Anything that maps calendar features to a single-building demand in kW.
class LoadModel {
public:
    virtual ~LoadModel() = default;
    virtual double predict(double temperature_c, double hour_of_day,
                           int day_of_year) const = 0;
};

/// Linear model on [temperature, sin/cos(hour), sin/cos(day_of_year), bias].
/// Predictions are clamped at zero.
class LoadRegressor final : public LoadModel {
public:
    LoadRegressor() : coef_(6, 0.0) {}
    explicit LoadRegressor(std::vector<double> coef);

    double predict(double temperature_c, double hour_of_day,
                   int day_of_year) const override;

    const std::vector<double>& coefficients() const { return coef_; }

    static std::vector<double> features(double temperature_c, double hour_of_day,
                                        int day_of_year);

private:
    std::vector<double> coef_;
};

struct TrainRow {
    double temperature_c;
    double hour_of_day;   // 0..24
    int day_of_year;      // 1..366
    double load_kw;
};

struct FitReport {
    double r2_adjusted = 0.0;
    double rmse = 0.0;
    bool constant_target = false;  // r2 reported as 1.0 when set
};

/// Fits on a deterministic 80% of the rows and scores on the other 20%
/// (every fifth row is held out). Requires at least 100 rows.
LoadRegressor fit_load_regressor(const std::vector<TrainRow>& rows, FitReport* report);

/// One building: out_t = max(0, predict_t * scale * m + e_t) with
/// m ~ Normal(1, mult_sigma) drawn once and e_t ~ Normal(0, add_sigma)
/// drawn per step. `weather` is the temperature series and provides the clock.
TimeSeries synth_building_load(const LoadModel& model, const TimeSeries& weather,
                               Rng& rng, double scale = 1.5, double mult_sigma = 0.2,
                               double add_sigma = 0.1);

/// Sum of n buildings, each generated from an independent substream of `rng`
/// (building b uses rng.substream(b)).
TimeSeries synth_town_load(const LoadModel& model, const TimeSeries& weather, Rng& rng,
                           std::size_t n_buildings = 30, double scale = 1.5,
                           double mult_sigma = 0.2, double add_sigma = 0.1);

struct SolarPlant {
    double panel_area_m2 = 0.0;
    double efficiency = 0.0;

    void validate() const;
};

/// Energy for one 3600 s step: irradiance * area * efficiency / 3600.
double solar_energy_kwh(double irradiance_w_m2, const SolarPlant& plant);

/// Daily purchase cost under the two-tier tariff; order-independent.
double tiered_cost(const std::vector<double>& daily_purchases_kwh,
                   const TieredTariff& tariff);
double tiered_cost(double total_kwh, const TieredTariff& tariff);

/// Everything generate_scenario needs beyond the weather input.
struct SynthConfig {
    MicrogridConfig grid;
    SolarPlant plant;
    TieredTariff tariff;
    LoadRegressor regressor;
    std::size_t n_buildings = 30;
    double scale = 1.5;
    double mult_sigma = 0.2;
    double add_sigma = 0.1;
};

/// Builds a tariff-priced scenario from weather fixtures. `weather` must
/// contain "temperature" (C) and "irradiance" (W/m2) series on a shared
/// clock matching grid.step_seconds.
Scenario generate_scenario(const SynthConfig& config,
                           const std::map<std::string, TimeSeries>& weather, Rng& rng);

}  // namespace mg

#endif  // MG_SYNTH_HPP
