#ifndef MG_INGEST_HPP
#define MG_INGEST_HPP

#include <stdexcept>

#include "mg/config.hpp"
#include "mg/timeseries.hpp"

namespace mg {

struct IncompatibleResolution : std::runtime_error {
    explicit IncompatibleResolution(const std::string& what)
        : std::runtime_error(what) {}
};

struct ZeroPeak : std::runtime_error {
    explicit ZeroPeak(const std::string& what) : std::runtime_error(what) {}
};

enum class ResampleMode {
    aggregate_mean,
    interpolate_linear,
};

/// Changes the sampling period. aggregate_mean preserves the time integral
/// of power: block means when coarsening (length must divide evenly),
/// repetition when refining. interpolate_linear connects samples with
/// straight lines when refining and decimates when coarsening; endpoints
/// are reproduced exactly either way.
TimeSeries resample(const TimeSeries& series, std::int64_t target_resolution_s,
                    ResampleMode mode);

/// Winsorizes to the empirical quantiles taken as order statistics
/// (sorted[floor(q * (n - 1))]). Length is unchanged.
TimeSeries clip_outliers(const TimeSeries& series, double lo_quantile,
                         double hi_quantile);

/// Rescales so the peak equals fraction * total generation capacity.
/// Shape-preserving: out = load * constant.
TimeSeries scale_load_to_capacity(const TimeSeries& load, const MicrogridConfig& config,
                                  double fraction = 0.8);

/// Rescales so max(out) == max(train) exactly.
TimeSeries rescale_test_to_train(const TimeSeries& test, const TimeSeries& train);

}  // namespace mg

#endif  // MG_INGEST_HPP
