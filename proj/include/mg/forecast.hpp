#ifndef MG_FORECAST_HPP
#define MG_FORECAST_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mg/autodiff.hpp"
#include "mg/env.hpp"
#include "mg/rng.hpp"
#include "mg/timeseries.hpp"

namespace mg {

struct TooShort : std::invalid_argument {
    explicit TooShort(const std::string& what) : std::invalid_argument(what) {}
};

struct BadContextLength : std::invalid_argument {
    explicit BadContextLength(const std::string& what) : std::invalid_argument(what) {}
};

enum class ForecastKind { persistence, linear_ar, attention };

/// All forecasters read a fixed window of the 10 most recent values.
inline constexpr std::size_t kContextLen = 10;

/// Single-head scaled-dot-product attention over the embedded context.
/// Each lag is embedded as value * val_embed + its positional row; the last
/// position's attention output feeds a linear head.
struct AttentionParams {
    Mat wq;         // d x d
    Mat wk;         // d x d
    Mat wv;         // d x d
    Mat pos;        // context_len x d
    Mat val_embed;  // 1 x d
    Mat head;       // d x 1
    Mat head_bias;  // 1 x 1

    std::size_t d_model() const { return wq.rows; }
};

/// Immutable once fitted. Normalization constants are frozen from the
/// fitted series; a constant series stores span 0 so every denormalized
/// prediction collapses back to the constant.
struct ForecastModel {
    ForecastKind kind = ForecastKind::persistence;
    double norm_min = 0.0;
    double norm_span = 1.0;
    std::vector<double> ar_weights;  // context_len lag weights, oldest first
    double ar_bias = 0.0;
    AttentionParams attn;

    double normalize(double x) const {
        return norm_span > 0.0 ? (x - norm_min) / norm_span : 0.0;
    }
    double denormalize(double y) const { return norm_min + y * norm_span; }
};

struct ForecastTrainConfig {
    std::size_t d_model = 16;
    std::size_t epochs = 1500;
    double lr = 0.02;
    std::uint64_t seed = 1;
};

struct ForecastReport {
    double mse = 0.0;  // held-out MSE over the last 20% of windows, normalized units
};

struct FitResult {
    ForecastModel model;
    ForecastReport report;
};

/// Fits one forecaster on a series (>= 50 points, else TooShort). The
/// series is min-max normalized internally; linear_ar solves least squares
/// over the lag windows, attention runs gradient descent on squared error.
FitResult fit(ForecastKind kind, const TimeSeries& series,
              const ForecastTrainConfig& cfg = {});

/// One-step forecast from exactly kContextLen finite normalized values.
/// Output is clamped to [0, 1]. Throws BadContextLength.
double predict(const ForecastModel& model, const std::vector<double>& context);

/// Recursive rollout: each prediction is appended to the context for the
/// next step. steps >= 1.
std::vector<double> predict_horizon(const ForecastModel& model,
                                    std::vector<double> context,
                                    std::size_t steps);

/// Plain attention forward pass used by predict and by the trainer.
double attention_predict(const AttentionParams& params,
                         const std::vector<double>& context);

struct AttentionBackward {
    double loss = 0.0;  // squared error on this window
    /// Gradient order: wq, wk, wv, pos, val_embed, head, head_bias.
    std::vector<Mat> grads;
};

/// Squared-error loss and parameter gradients for one context/target pair.
AttentionBackward attention_backward(const AttentionParams& params,
                                     const std::vector<double>& context,
                                     double target);

/// Versioned binary format, 8-byte magic "MGFC0001". Load failures throw
/// binio::StreamError (truncation) or std::runtime_error (bad header).
void save_forecast(const std::string& path, const ForecastModel& model);
ForecastModel load_forecast(const std::string& path);

/// Adapter feeding fitted models into environment observations. Holds one
/// model per signal name; signals without a model fall back to persistence.
class ModelObsForecaster : public ObsForecaster {
public:
    void set_model(const TimeSeries* series, ForecastModel model);
    double forecast(const TimeSeries& series, std::size_t t,
                    std::size_t steps_ahead) const override;

private:
    std::vector<std::pair<const TimeSeries*, ForecastModel>> models_;
};

}  // namespace mg

#endif  // MG_FORECAST_HPP
