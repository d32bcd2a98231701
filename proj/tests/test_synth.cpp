#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "mg/clock.hpp"
#include "mg/rng.hpp"
#include "mg/synth.hpp"

using namespace mg;

namespace {

LoadRegressor constant_model(double kw) {
    return LoadRegressor({0.0, 0.0, 0.0, 0.0, 0.0, kw});
}

TimeSeries flat_weather(std::size_t n, double temp_c = 10.0) {
    return TimeSeries(0, 3600, Unit::Celsius, std::vector<double>(n, temp_c));
}

}  // namespace

TEST_CASE("clock: hour and day-of-year helpers") {
    CHECK(hour_of_day(0) == 0.0);
    CHECK(hour_of_day(3600 * 13 + 1800) == doctest::Approx(13.5));
    CHECK(day_of_year(0) == 1);                   // 1970-01-01
    CHECK(day_of_year(1577836800) == 1);          // 2020-01-01
    CHECK(day_of_year(1583020800) == 61);         // 2020-03-01, leap year
    CHECK(day_of_year(1609372800) == 366);        // 2020-12-31
}

TEST_CASE("fit: realizable target recovers the model") {
    // Target drawn from the regressor's own hypothesis class, kept positive.
    LoadRegressor truth({0.3, 2.0, -1.0, 0.5, 0.25, 20.0});
    std::vector<TrainRow> rows;
    Rng rng = seeded_rng(1);
    for (int i = 0; i < 400; ++i) {
        const double temp = rng.uniform(-20.0, 30.0);
        const double hour = rng.uniform(0.0, 24.0);
        const int doy = static_cast<int>(rng.randint(365)) + 1;
        rows.push_back({temp, hour, doy, truth.predict(temp, hour, doy)});
    }
    FitReport report;
    LoadRegressor fit = fit_load_regressor(rows, &report);
    CHECK(report.r2_adjusted >= 0.99);
    CHECK(report.rmse < 1e-6);
    CHECK_FALSE(report.constant_target);
    CHECK(fit.predict(5.0, 12.0, 100) ==
          doctest::Approx(truth.predict(5.0, 12.0, 100)).epsilon(1e-6));
}

TEST_CASE("fit: constant target reported as r2 = 1 with flag") {
    std::vector<TrainRow> rows;
    Rng rng = seeded_rng(2);
    for (int i = 0; i < 150; ++i) {
        rows.push_back({rng.uniform(-10.0, 10.0), rng.uniform(0.0, 24.0),
                        static_cast<int>(rng.randint(365)) + 1, 5.0});
    }
    FitReport report;
    fit_load_regressor(rows, &report);
    CHECK(report.constant_target);
    CHECK(report.r2_adjusted == 1.0);
    CHECK(report.rmse < 1e-5);
}

TEST_CASE("fit: too few rows") {
    std::vector<TrainRow> rows(10, TrainRow{0.0, 0.0, 1, 1.0});
    CHECK_THROWS_AS(fit_load_regressor(rows, nullptr), InsufficientData);
}

TEST_CASE("building load: zero noise is scale times prediction") {
    LoadRegressor model = constant_model(2.0);
    Rng rng = seeded_rng(3);
    TimeSeries out = synth_building_load(model, flat_weather(24), rng, 1.5, 0.0, 0.0);
    for (std::size_t t = 0; t < out.size(); ++t) {
        CHECK(out[t] == doctest::Approx(3.0).epsilon(1e-12));
    }
}

TEST_CASE("building load: multiplier moments over many buildings") {
    LoadRegressor model = constant_model(1.0);
    TimeSeries w = flat_weather(1);
    Rng rng = seeded_rng(4);
    const int n = 10000;
    double sum = 0.0;
    std::vector<double> multipliers;
    for (int b = 0; b < n; ++b) {
        Rng sub = rng.substream(b);
        TimeSeries noisy = synth_building_load(model, w, sub, 1.5, 0.2, 0.1);
        sum += noisy[0];
        Rng sub2 = rng.substream(b);
        TimeSeries clean = synth_building_load(model, w, sub2, 1.5, 0.2, 0.0);
        multipliers.push_back(clean[0] / 1.5);
    }
    const double mean_out = sum / n;
    CHECK(mean_out >= 1.47);
    CHECK(mean_out <= 1.53);

    double m_mean = 0.0;
    for (double m : multipliers) m_mean += m;
    m_mean /= n;
    double var = 0.0;
    for (double m : multipliers) var += (m - m_mean) * (m - m_mean);
    const double stddev = std::sqrt(var / (n - 1));
    CHECK(m_mean >= 0.98);
    CHECK(m_mean <= 1.02);
    CHECK(stddev >= 0.19);
    CHECK(stddev <= 0.21);
}

TEST_CASE("building load: negative draws clamp to zero") {
    LoadRegressor model = constant_model(0.0);
    Rng rng = seeded_rng(5);
    TimeSeries out = synth_building_load(model, flat_weather(200), rng, 1.5, 0.2, 0.1);
    bool any_zero = false;
    for (std::size_t t = 0; t < out.size(); ++t) {
        CHECK(out[t] >= 0.0);
        if (out[t] == 0.0) any_zero = true;
    }
    CHECK(any_zero);  // prediction 0 plus symmetric noise must clamp sometimes
}

TEST_CASE("town load: single building matches substream zero") {
    LoadRegressor model = constant_model(2.0);
    TimeSeries w = flat_weather(10);
    Rng town_rng = seeded_rng(6);
    TimeSeries town = synth_town_load(model, w, town_rng, 1);
    Rng sub = seeded_rng(6).substream(0);
    TimeSeries single = synth_building_load(model, w, sub);
    CHECK(town.values() == single.values());
}

TEST_CASE("town load: zero noise scales linearly with building count") {
    LoadRegressor model = constant_model(2.0);
    TimeSeries w = flat_weather(5);
    Rng rng = seeded_rng(7);
    TimeSeries town = synth_town_load(model, w, rng, 30, 1.5, 0.0, 0.0);
    for (std::size_t t = 0; t < town.size(); ++t) {
        CHECK(town[t] == doctest::Approx(90.0).epsilon(1e-12));
    }
}

TEST_CASE("town load: zero buildings gives a zero series") {
    LoadRegressor model = constant_model(2.0);
    Rng rng = seeded_rng(8);
    TimeSeries town = synth_town_load(model, flat_weather(4), rng, 0);
    for (std::size_t t = 0; t < town.size(); ++t) CHECK(town[t] == 0.0);
}

TEST_CASE("solar energy: pinned arithmetic") {
    SolarPlant plant{2.0, 0.2};
    CHECK(solar_energy_kwh(0.0, plant) == 0.0);
    CHECK(solar_energy_kwh(500.0, plant) == doctest::Approx(200.0 / 3600.0).epsilon(1e-12));
    SolarPlant unit{1.0, 1.0};
    CHECK(solar_energy_kwh(3600.0, unit) == 1.0);
    CHECK_THROWS_AS(solar_energy_kwh(-1.0, plant), NegativeIrradiance);
}

TEST_CASE("solar energy: linear in each factor") {
    Rng rng = seeded_rng(9);
    for (int i = 0; i < 50; ++i) {
        const double irr = rng.uniform(0.0, 1000.0);
        const double area = rng.uniform(0.1, 500.0);
        const double eff = rng.uniform(0.05, 1.0);
        SolarPlant p{area, eff};
        SolarPlant p2{2.0 * area, eff};
        CHECK(solar_energy_kwh(2.0 * irr, p) ==
              doctest::Approx(2.0 * solar_energy_kwh(irr, p)).epsilon(1e-12));
        CHECK(solar_energy_kwh(irr, p2) ==
              doctest::Approx(2.0 * solar_energy_kwh(irr, p)).epsilon(1e-12));
    }
}

TEST_CASE("tiered cost: pinned values and order independence") {
    TieredTariff t;
    CHECK(tiered_cost(0.0, t) == 0.0);
    CHECK(tiered_cost(40.0, t) == doctest::Approx(2.7620).epsilon(1e-12));
    CHECK(tiered_cost(50.0, t) == doctest::Approx(3.8272).epsilon(1e-12));

    std::vector<double> purchases = {10.0, 20.0, 5.0, 15.0};
    const double a = tiered_cost(purchases, t);
    Rng rng = seeded_rng(10);
    rng.shuffle(purchases);
    CHECK(tiered_cost(purchases, t) == doctest::Approx(a).epsilon(1e-12));
    CHECK(a == doctest::Approx(3.8272).epsilon(1e-12));
    CHECK_THROWS(tiered_cost(std::vector<double>{-1.0}, t));
}

TEST_CASE("tiered cost: continuous, monotone, kink only at the limit") {
    TieredTariff t;
    Rng rng = seeded_rng(11);
    double prev_total = 0.0;
    double prev_cost = 0.0;
    for (int i = 0; i < 200; ++i) {
        const double total = prev_total + rng.uniform(0.0, 2.0);
        const double cost = tiered_cost(total, t);
        CHECK(cost >= prev_cost);
        prev_total = total;
        prev_cost = cost;
    }
    const double eps = 1e-7;
    CHECK(tiered_cost(40.0 + eps, t) - tiered_cost(40.0, t) ==
          doctest::Approx(eps * t.tier2_rate).epsilon(1e-3));
    CHECK(tiered_cost(40.0, t) - tiered_cost(40.0 - eps, t) ==
          doctest::Approx(eps * t.tier1_rate).epsilon(1e-3));
}

TEST_CASE("generate_scenario: zero irradiance, determinism, summer peak") {
    SynthConfig cfg;
    cfg.grid = MicrogridConfig::rye_preset();
    cfg.plant = SolarPlant{100.0, 0.2};
    cfg.regressor = constant_model(2.0);
    cfg.n_buildings = 3;

    SUBCASE("zero irradiance gives zero solar") {
        std::map<std::string, TimeSeries> weather;
        weather.emplace("temperature", flat_weather(24));
        weather.emplace("irradiance",
                        TimeSeries(0, 3600, Unit::WattPerM2, std::vector<double>(24, 0.0)));
        Rng rng = seeded_rng(12);
        Scenario sc = generate_scenario(cfg, weather, rng);
        for (std::size_t t = 0; t < sc.n_steps(); ++t) CHECK(sc.solar_kw(t) == 0.0);
        CHECK(sc.has_tariff());
        CHECK(sc.loads.size() == 1);
    }

    SUBCASE("same seed gives identical scenarios") {
        std::map<std::string, TimeSeries> weather;
        weather.emplace("temperature", flat_weather(48));
        std::vector<double> irr(48);
        for (int t = 0; t < 48; ++t) irr[t] = std::max(0.0, 600.0 * std::sin(t * 0.26));
        weather.emplace("irradiance", TimeSeries(0, 3600, Unit::WattPerM2, irr));
        Rng r1 = seeded_rng(13);
        Rng r2 = seeded_rng(13);
        Scenario a = generate_scenario(cfg, weather, r1);
        Scenario b = generate_scenario(cfg, weather, r2);
        CHECK(a.loads[0].values() == b.loads[0].values());
        CHECK(a.solar->values() == b.solar->values());
    }

    SUBCASE("annual sinusoidal irradiance peaks where the input peaks") {
        const std::size_t n = 8760;
        std::vector<double> irr(n), temp(n, 5.0);
        for (std::size_t t = 0; t < n; ++t) {
            // Annual envelope peaking mid-year times a diurnal half-wave.
            const double annual =
                0.5 - 0.5 * std::cos(6.283185307179586 * static_cast<double>(t) / n);
            const double diurnal =
                std::max(0.0, std::sin(6.283185307179586 * (t % 24) / 24.0));
            irr[t] = 800.0 * annual * diurnal;
        }
        std::map<std::string, TimeSeries> weather;
        weather.emplace("temperature", TimeSeries(0, 3600, Unit::Celsius, temp));
        weather.emplace("irradiance", TimeSeries(0, 3600, Unit::WattPerM2, irr));
        Rng rng = seeded_rng(14);
        cfg.n_buildings = 1;
        Scenario sc = generate_scenario(cfg, weather, rng);
        const auto& solar = sc.solar->values();
        const auto argmax =
            std::max_element(solar.begin(), solar.end()) - solar.begin();
        const auto irr_argmax = std::max_element(irr.begin(), irr.end()) - irr.begin();
        CHECK(argmax == irr_argmax);
        CHECK(static_cast<std::size_t>(argmax) > n / 3);
        CHECK(static_cast<std::size_t>(argmax) < 2 * n / 3);
    }
}
