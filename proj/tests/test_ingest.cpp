#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "mg/csv.hpp"
#include "mg/ingest.hpp"
#include "mg/rng.hpp"

using namespace mg;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << content;
    return path.string();
}

CsvSchema load_schema() {
    return CsvSchema{"timestamp", {{"load", Unit::kW}}};
}

}  // namespace

TEST_CASE("parse_csv: well-formed rows all kept") {
    const auto path = write_temp("mg_csv_ok.csv",
                                 "timestamp,load\n"
                                 "0,1.5\n"
                                 "300,2.5\n"
                                 "600,3.5\n");
    RawTable t = parse_csv(path, load_schema());
    CHECK(t.n_rows() == 3);
    CHECK(t.dropped_rows == 0);
    CHECK(t.column("load")[1] == 2.5);
    CHECK(t.column_unit("load") == Unit::kW);
    CHECK(t.timestamps[2] == 600);
}

TEST_CASE("parse_csv: unparseable row dropped and counted") {
    const auto path = write_temp("mg_csv_nan.csv",
                                 "timestamp,load\n"
                                 "0,1.0\n"
                                 "300,NaN\n"
                                 "600,3.0\n");
    RawTable t = parse_csv(path, load_schema());
    CHECK(t.n_rows() == 2);
    CHECK(t.dropped_rows == 1);
}

TEST_CASE("parse_csv: missing declared column") {
    const auto path = write_temp("mg_csv_miss.csv", "timestamp,power\n0,1.0\n");
    CHECK_THROWS_AS(parse_csv(path, load_schema()), MissingColumn);
}

TEST_CASE("parse_csv: empty file") {
    const auto path = write_temp("mg_csv_empty.csv", "");
    CHECK_THROWS_AS(parse_csv(path, load_schema()), EmptyFile);
}

TEST_CASE("parse_csv: rfc3339 timestamps") {
    const auto path = write_temp("mg_csv_rfc.csv",
                                 "timestamp,load\n"
                                 "1970-01-01T00:00:00,1.0\n"
                                 "1970-01-01T01:00:00Z,2.0\n"
                                 "2020-01-01T00:00:00,3.0\n");
    RawTable t = parse_csv(path, load_schema());
    REQUIRE(t.n_rows() == 3);
    CHECK(t.timestamps[0] == 0);
    CHECK(t.timestamps[1] == 3600);
    CHECK(t.timestamps[2] == 1577836800);  // 2020-01-01 UTC
}

TEST_CASE("to_timeseries: short gaps interpolated, long gaps rejected") {
    RawTable t;
    t.column_names = {"load"};
    t.column_units = {Unit::kW};
    SUBCASE("3-step gap filled linearly") {
        t.timestamps = {0, 300, 1500};
        t.columns = {{0.0, 4.0, 12.0}};
        TimeSeries ts = to_timeseries(t, "load", 300);
        REQUIRE(ts.size() == 6);
        CHECK(ts[1] == 4.0);
        CHECK(ts[2] == doctest::Approx(6.0));
        CHECK(ts[3] == doctest::Approx(8.0));
        CHECK(ts[4] == doctest::Approx(10.0));
        CHECK(ts[5] == 12.0);
    }
    SUBCASE("6-step gap is an error") {
        t.timestamps = {0, 2100};  // 6 missing grid points
        t.columns = {{0.0, 1.0}};
        CHECK_THROWS_AS(to_timeseries(t, "load", 300), GapTooLong);
    }
    SUBCASE("off-grid timestamp is an error") {
        t.timestamps = {0, 450};
        t.columns = {{0.0, 1.0}};
        CHECK_THROWS_AS(to_timeseries(t, "load", 300), GapTooLong);
    }
}

TEST_CASE("resample: hourly to 30-min linear keeps endpoints") {
    TimeSeries ts(0, 3600, Unit::kW, {2.0, 4.0});
    TimeSeries out = resample(ts, 1800, ResampleMode::interpolate_linear);
    REQUIRE(out.size() == 3);
    CHECK(out[0] == 2.0);
    CHECK(out[1] == doctest::Approx(3.0));
    CHECK(out[2] == 4.0);
    CHECK(out.resolution_s() == 1800);
}

TEST_CASE("resample: constant 5-min block to hourly mean") {
    TimeSeries ts(0, 300, Unit::kW, std::vector<double>(12, 1.0));
    TimeSeries out = resample(ts, 3600, ResampleMode::aggregate_mean);
    REQUIRE(out.size() == 1);
    CHECK(out[0] == doctest::Approx(1.0));
}

TEST_CASE("resample: ramp mean preserves energy") {
    std::vector<double> ramp(12);
    for (int i = 0; i < 12; ++i) ramp[i] = i;
    TimeSeries ts(0, 300, Unit::kW, ramp);
    TimeSeries out = resample(ts, 3600, ResampleMode::aggregate_mean);
    REQUIRE(out.size() == 1);
    CHECK(out[0] == doctest::Approx(5.5).epsilon(1e-12));
    const double energy_src = ts.sum() * (300.0 / 3600.0);
    const double energy_out = out.sum() * 1.0;
    CHECK(energy_src == doctest::Approx(energy_out).epsilon(1e-12));
}

TEST_CASE("resample: aggregate round trip conserves energy") {
    Rng rng = seeded_rng(17);
    std::vector<double> v(240);
    for (double& x : v) x = rng.uniform(0.0, 50.0);
    TimeSeries ts(0, 300, Unit::kW, v);
    TimeSeries down = resample(ts, 3600, ResampleMode::aggregate_mean);
    TimeSeries back = resample(down, 300, ResampleMode::aggregate_mean);
    const double e0 = ts.sum() * (300.0 / 3600.0);
    const double e1 = down.sum();
    const double e2 = back.sum() * (300.0 / 3600.0);
    CHECK(std::abs(e1 - e0) <= 1e-9 * std::abs(e0));
    CHECK(std::abs(e2 - e0) <= 1e-9 * std::abs(e0));
}

TEST_CASE("resample: incompatible resolutions rejected") {
    TimeSeries ts(0, 3600, Unit::kW, {1.0, 2.0, 3.0});
    CHECK_THROWS_AS(resample(ts, 2500, ResampleMode::aggregate_mean),
                    IncompatibleResolution);
    CHECK_THROWS_AS(resample(ts, 7200, ResampleMode::aggregate_mean),
                    IncompatibleResolution);  // 3 not divisible by 2
    TimeSeries four(0, 300, Unit::kW, {0.0, 1.0, 2.0, 3.0});
    CHECK_THROWS_AS(resample(four, 600, ResampleMode::interpolate_linear),
                    IncompatibleResolution);  // endpoints misaligned
    CHECK(resample(four, 900, ResampleMode::interpolate_linear).values() ==
          std::vector<double>{0.0, 3.0});
}

TEST_CASE("clip_outliers: quantile winsorizing") {
    TimeSeries ts(0, 3600, Unit::kW, {0.0, 1.0, 2.0, 100.0});
    TimeSeries out = clip_outliers(ts, 0.0, 0.75);
    CHECK(out.values() == std::vector<double>{0.0, 1.0, 2.0, 2.0});

    CHECK(clip_outliers(ts, 0.0, 1.0).values() == ts.values());
    TimeSeries flat(0, 3600, Unit::kW, {5.0, 5.0, 5.0});
    CHECK(clip_outliers(flat, 0.1, 0.9).values() == flat.values());
    CHECK_THROWS(clip_outliers(ts, 0.9, 0.1));
}

TEST_CASE("scale_load_to_capacity: exact peak") {
    MicrogridConfig c;
    c.pv_peak_kw = 40.0;
    c.wind_peak_kw = 30.0;
    c.fuel_cell_max_kw = 20.0;
    c.generator_max_kw = 10.0;
    TimeSeries load(0, 3600, Unit::kW, {1.0, 10.0, 4.0});
    TimeSeries out = scale_load_to_capacity(load, c, 0.8);
    CHECK(out.max() == 80.0);
    CHECK(out[0] == doctest::Approx(8.0));
    CHECK(out[2] == doctest::Approx(32.0));

    TimeSeries at_peak(0, 3600, Unit::kW, {100.0, 50.0});
    CHECK(scale_load_to_capacity(at_peak, c, 1.0).values() ==
          std::vector<double>{100.0, 50.0});

    TimeSeries zero(0, 3600, Unit::kW, {0.0, 0.0});
    CHECK_THROWS_AS(scale_load_to_capacity(zero, c, 0.8), ZeroPeak);
}

TEST_CASE("scale_load_to_capacity: scale invariance") {
    MicrogridConfig c;
    c.pv_peak_kw = 100.0;
    Rng rng = seeded_rng(5);
    std::vector<double> v(50);
    for (double& x : v) x = rng.uniform(0.1, 9.0);
    TimeSeries s(0, 3600, Unit::kW, v);
    TimeSeries a = scale_load_to_capacity(s, c, 0.8);
    TimeSeries b = scale_load_to_capacity(s.scaled(3.0), c, 0.8);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
    }
}

TEST_CASE("rescale_test_to_train: max ratio") {
    TimeSeries train(0, 3600, Unit::kW, {4.0, 10.0});
    TimeSeries test(0, 3600, Unit::kW, {20.0, 8.0});
    TimeSeries out = rescale_test_to_train(test, train);
    CHECK(out.max() == 10.0);
    CHECK(out[1] == doctest::Approx(4.0));

    TimeSeries same(0, 3600, Unit::kW, {3.0, 10.0});
    CHECK(rescale_test_to_train(same, train).values() == same.values());

    TimeSeries single(0, 3600, Unit::kW, {5.0});
    CHECK(rescale_test_to_train(single, train).values() == std::vector<double>{10.0});

    TimeSeries zero(0, 3600, Unit::kW, {0.0});
    CHECK_THROWS_AS(rescale_test_to_train(zero, train), ZeroPeak);
}
