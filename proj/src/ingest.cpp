#include "mg/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace mg {

TimeSeries resample(const TimeSeries& series, std::int64_t target_resolution_s,
                    ResampleMode mode) {
    const std::int64_t src = series.resolution_s();
    if (target_resolution_s <= 0) {
        throw IncompatibleResolution("resample: target resolution must be positive");
    }
    if (target_resolution_s == src) return series;

    const auto& v = series.values();
    const std::size_t n = v.size();

    if (target_resolution_s > src) {
        // Coarsening by an integer factor.
        if (target_resolution_s % src != 0) {
            throw IncompatibleResolution("resample: target not a multiple of source");
        }
        const std::size_t f = static_cast<std::size_t>(target_resolution_s / src);
        if (mode == ResampleMode::aggregate_mean) {
            if (n % f != 0) {
                throw IncompatibleResolution(
                    "resample: length not divisible by aggregation factor");
            }
            std::vector<double> out(n / f);
            for (std::size_t i = 0; i < out.size(); ++i) {
                double acc = 0.0;
                for (std::size_t k = 0; k < f; ++k) acc += v[i * f + k];
                out[i] = acc / static_cast<double>(f);
            }
            return TimeSeries(series.start_epoch(), target_resolution_s, series.unit(),
                              std::move(out));
        }
        // Linear decimation keeps every f-th sample; both endpoints must land.
        if ((n - 1) % f != 0) {
            throw IncompatibleResolution(
                "resample: endpoints do not align for linear decimation");
        }
        std::vector<double> out((n - 1) / f + 1);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = v[i * f];
        return TimeSeries(series.start_epoch(), target_resolution_s, series.unit(),
                          std::move(out));
    }

    // Refining by an integer factor.
    if (src % target_resolution_s != 0) {
        throw IncompatibleResolution("resample: target not a divisor of source");
    }
    const std::size_t f = static_cast<std::size_t>(src / target_resolution_s);
    if (mode == ResampleMode::aggregate_mean) {
        // Piecewise-constant repeat keeps the integral of each block.
        std::vector<double> out(n * f);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < f; ++k) out[i * f + k] = v[i];
        }
        return TimeSeries(series.start_epoch(), target_resolution_s, series.unit(),
                          std::move(out));
    }
    if (n == 1) {
        return TimeSeries(series.start_epoch(), target_resolution_s, series.unit(),
                          {v[0]});
    }
    std::vector<double> out((n - 1) * f + 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t k = 0; k < f; ++k) {
            const double t = static_cast<double>(k) / static_cast<double>(f);
            out[i * f + k] = v[i] + (v[i + 1] - v[i]) * t;
        }
    }
    out.back() = v.back();
    return TimeSeries(series.start_epoch(), target_resolution_s, series.unit(),
                      std::move(out));
}

TimeSeries clip_outliers(const TimeSeries& series, double lo_quantile,
                         double hi_quantile) {
    if (!(lo_quantile >= 0.0 && lo_quantile < hi_quantile && hi_quantile <= 1.0)) {
        throw std::invalid_argument("clip_outliers: need 0 <= lo < hi <= 1");
    }
    std::vector<double> sorted = series.values();
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    auto order_stat = [&](double q) {
        return sorted[static_cast<std::size_t>(
            std::floor(q * static_cast<double>(n - 1)))];
    };
    const double lo = order_stat(lo_quantile);
    const double hi = order_stat(hi_quantile);
    std::vector<double> out = series.values();
    for (double& x : out) x = std::clamp(x, lo, hi);
    return series.with_values(std::move(out));
}

TimeSeries scale_load_to_capacity(const TimeSeries& load, const MicrogridConfig& config,
                                  double fraction) {
    const double peak = load.max();
    if (!(peak > 0.0)) throw ZeroPeak("scale_load_to_capacity: load peak is zero");
    const double capacity = config.generation_capacity_kw();
    if (!(capacity > 0.0)) {
        throw ZeroPeak("scale_load_to_capacity: generation capacity is zero");
    }
    const double target = fraction * capacity;
    // Divide by the peak first so the peak sample maps to target exactly.
    std::vector<double> out = load.values();
    for (double& x : out) x = (x / peak) * target;
    return load.with_values(std::move(out));
}

TimeSeries rescale_test_to_train(const TimeSeries& test, const TimeSeries& train) {
    const double test_max = test.max();
    const double train_max = train.max();
    if (!(test_max > 0.0)) throw ZeroPeak("rescale_test_to_train: test peak is zero");
    if (!(train_max > 0.0)) throw ZeroPeak("rescale_test_to_train: train peak is zero");
    std::vector<double> out = test.values();
    for (double& x : out) x = (x / test_max) * train_max;
    return test.with_values(std::move(out));
}

}  // namespace mg
