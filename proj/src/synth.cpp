#include "mg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mg/clock.hpp"
#include "mg/linalg.hpp"

namespace mg {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

LoadRegressor::LoadRegressor(std::vector<double> coef) : coef_(std::move(coef)) {
    if (coef_.size() != 6) {
        throw std::invalid_argument("LoadRegressor: expected 6 coefficients");
    }
}

std::vector<double> LoadRegressor::features(double temperature_c, double hour_of_day,
                                            int day_of_year) {
    const double ha = kTwoPi * hour_of_day / 24.0;
    const double da = kTwoPi * static_cast<double>(day_of_year) / 366.0;
    return {temperature_c, std::sin(ha), std::cos(ha), std::sin(da), std::cos(da), 1.0};
}

double LoadRegressor::predict(double temperature_c, double hour_of_day,
                              int day_of_year) const {
    const auto f = features(temperature_c, hour_of_day, day_of_year);
    double y = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) y += coef_[i] * f[i];
    return std::max(0.0, y);
}

LoadRegressor fit_load_regressor(const std::vector<TrainRow>& rows, FitReport* report) {
    if (rows.size() < 100) {
        throw InsufficientData("fit_load_regressor: need >= 100 rows, got " +
                               std::to_string(rows.size()));
    }
    // Every fifth row is held out; the split is deterministic so fits are
    // reproducible without threading an RNG through.
    std::vector<std::vector<double>> x_train;
    std::vector<double> y_train;
    std::vector<const TrainRow*> holdout;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i % 5 == 4) {
            holdout.push_back(&rows[i]);
        } else {
            x_train.push_back(LoadRegressor::features(rows[i].temperature_c,
                                                      rows[i].hour_of_day,
                                                      rows[i].day_of_year));
            y_train.push_back(rows[i].load_kw);
        }
    }
    LoadRegressor reg(least_squares(x_train, y_train));

    if (report) {
        double ss_res = 0.0;
        double mean = 0.0;
        for (const TrainRow* r : holdout) mean += r->load_kw;
        mean /= static_cast<double>(holdout.size());
        double ss_tot = 0.0;
        for (const TrainRow* r : holdout) {
            const double pred = reg.predict(r->temperature_c, r->hour_of_day,
                                            r->day_of_year);
            ss_res += (r->load_kw - pred) * (r->load_kw - pred);
            ss_tot += (r->load_kw - mean) * (r->load_kw - mean);
        }
        const double n = static_cast<double>(holdout.size());
        report->rmse = std::sqrt(ss_res / n);
        report->constant_target = ss_tot == 0.0;
        if (report->constant_target) {
            report->r2_adjusted = 1.0;
        } else {
            const double r2 = 1.0 - ss_res / ss_tot;
            const double p = 5.0;  // predictors excluding the bias
            report->r2_adjusted = 1.0 - (1.0 - r2) * (n - 1.0) / (n - p - 1.0);
        }
    }
    return reg;
}

TimeSeries synth_building_load(const LoadModel& model, const TimeSeries& weather,
                               Rng& rng, double scale, double mult_sigma,
                               double add_sigma) {
    const double m = rng.normal(1.0, mult_sigma);
    std::vector<double> out(weather.size());
    for (std::size_t t = 0; t < weather.size(); ++t) {
        const std::int64_t epoch = weather.epoch_at(t);
        const double pred = model.predict(weather[t], hour_of_day(epoch),
                                          day_of_year(epoch));
        const double e = rng.normal(0.0, add_sigma);
        out[t] = std::max(0.0, pred * scale * m + e);
    }
    return TimeSeries(weather.start_epoch(), weather.resolution_s(), Unit::kW,
                      std::move(out));
}

TimeSeries synth_town_load(const LoadModel& model, const TimeSeries& weather, Rng& rng,
                           std::size_t n_buildings, double scale, double mult_sigma,
                           double add_sigma) {
    std::vector<double> total(weather.size(), 0.0);
    for (std::size_t b = 0; b < n_buildings; ++b) {
        Rng sub = rng.substream(b);
        const TimeSeries building =
            synth_building_load(model, weather, sub, scale, mult_sigma, add_sigma);
        for (std::size_t t = 0; t < total.size(); ++t) total[t] += building[t];
    }
    return TimeSeries(weather.start_epoch(), weather.resolution_s(), Unit::kW,
                      std::move(total));
}

void SolarPlant::validate() const {
    if (!(panel_area_m2 > 0.0)) {
        throw std::invalid_argument("SolarPlant: area must be > 0");
    }
    if (!(efficiency > 0.0 && efficiency <= 1.0)) {
        throw std::invalid_argument("SolarPlant: efficiency must be in (0, 1]");
    }
}

double solar_energy_kwh(double irradiance_w_m2, const SolarPlant& plant) {
    if (irradiance_w_m2 < 0.0) throw NegativeIrradiance();
    return irradiance_w_m2 * plant.panel_area_m2 * plant.efficiency / 3600.0;
}

double tiered_cost(double total_kwh, const TieredTariff& tariff) {
    return tariff.cost(total_kwh);
}

double tiered_cost(const std::vector<double>& daily_purchases_kwh,
                   const TieredTariff& tariff) {
    double total = 0.0;
    for (double p : daily_purchases_kwh) {
        if (p < 0.0) throw std::invalid_argument("tiered_cost: negative purchase");
        total += p;
    }
    return tariff.cost(total);
}

Scenario generate_scenario(const SynthConfig& config,
                           const std::map<std::string, TimeSeries>& weather, Rng& rng) {
    config.grid.validate();
    config.tariff.validate();
    config.plant.validate();
    const auto temp_it = weather.find("temperature");
    const auto irr_it = weather.find("irradiance");
    if (temp_it == weather.end() || irr_it == weather.end()) {
        throw std::invalid_argument(
            "generate_scenario: weather needs temperature and irradiance");
    }
    const TimeSeries& temp = temp_it->second;
    const TimeSeries& irr = irr_it->second;
    if (!temp.same_clock(irr)) {
        throw std::invalid_argument("generate_scenario: weather series not aligned");
    }

    Scenario sc;
    sc.config = config.grid;
    sc.loads.push_back(synth_town_load(config.regressor, temp, rng, config.n_buildings,
                                       config.scale, config.mult_sigma,
                                       config.add_sigma));

    // Hourly-step energy read as average power over the step.
    std::vector<double> solar_kw(irr.size());
    const double step_hours = sc.config.step_hours();
    for (std::size_t t = 0; t < irr.size(); ++t) {
        solar_kw[t] = solar_energy_kwh(irr[t], config.plant) / step_hours;
    }
    sc.solar = TimeSeries(irr.start_epoch(), irr.resolution_s(), Unit::kW,
                          std::move(solar_kw));
    sc.tariff = config.tariff;
    sc.weather = weather;
    sc.validate();
    return sc;
}

}  // namespace mg
