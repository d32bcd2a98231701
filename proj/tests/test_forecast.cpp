#include "mg/forecast.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "mg/binio.hpp"
#include "mg/rng.hpp"
#include "mg/timeseries.hpp"

using namespace mg;

namespace {

TimeSeries series_of(std::vector<double> vals) {
    return TimeSeries(0, 3600, Unit::kW, std::move(vals));
}

TimeSeries sinusoid_series(std::size_t n, double mean = 50.0, double amp = 20.0,
                           double period = 10.0) {
    std::vector<double> vals(n);
    for (std::size_t t = 0; t < n; ++t) {
        vals[t] = mean + amp * std::sin(2.0 * M_PI * static_cast<double>(t) / period);
    }
    return series_of(std::move(vals));
}

std::vector<double> last_context_normalized(const ForecastModel& m,
                                            const TimeSeries& s) {
    std::vector<double> ctx(kContextLen);
    for (std::size_t i = 0; i < kContextLen; ++i) {
        ctx[i] = m.normalize(s[s.size() - kContextLen + i]);
    }
    return ctx;
}

ForecastModel identity_ar_model() {
    ForecastModel m;
    m.kind = ForecastKind::linear_ar;
    m.norm_min = 0.0;
    m.norm_span = 1.0;
    m.ar_weights.assign(kContextLen, 0.0);
    m.ar_weights.back() = 1.0;
    m.ar_bias = 0.0;
    return m;
}

bool mats_equal(const Mat& a, const Mat& b) {
    return a.rows == b.rows && a.cols == b.cols && a.a == b.a;
}

}  // namespace

TEST_CASE("constant series fits with zero error and predicts the constant") {
    const TimeSeries s = series_of(std::vector<double>(60, 42.5));
    for (const ForecastKind kind :
         {ForecastKind::persistence, ForecastKind::linear_ar, ForecastKind::attention}) {
        const FitResult res = fit(kind, s);
        CHECK(res.report.mse == 0.0);
        CHECK(res.model.norm_span == 0.0);
        const std::vector<double> ctx(kContextLen, 0.0);
        CHECK(predict(res.model, ctx) == 0.0);
        CHECK(res.model.denormalize(predict(res.model, ctx)) == 42.5);
    }
}

TEST_CASE("linear model recovers a pure decay recursion") {
    std::vector<double> vals(200);
    vals[0] = 1.0;
    for (std::size_t t = 1; t < vals.size(); ++t) vals[t] = 0.9 * vals[t - 1];
    const FitResult res = fit(ForecastKind::linear_ar, series_of(std::move(vals)));
    CHECK(res.report.mse <= 1e-6);
}

TEST_CASE("linear model recovers a mean-reverting affine recursion") {
    // x_{t+1} = 0.9 x_t + 2 from 0 stays affine after min-max scaling, so the
    // intercept makes the target exactly realizable.
    std::vector<double> vals(200);
    vals[0] = 0.0;
    for (std::size_t t = 1; t < vals.size(); ++t) vals[t] = 0.9 * vals[t - 1] + 2.0;
    const FitResult res = fit(ForecastKind::linear_ar, series_of(std::move(vals)));
    CHECK(res.report.mse <= 1e-10);
}

TEST_CASE("attention model learns a period-10 sinusoid") {
    const TimeSeries s = sinusoid_series(200);
    const FitResult res = fit(ForecastKind::attention, s);
    CHECK(res.report.mse < 0.001);

    // out-of-sample next step, normalized units
    const double pred = predict(res.model, last_context_normalized(res.model, s));
    const double truth_raw =
        50.0 + 20.0 * std::sin(2.0 * M_PI * static_cast<double>(s.size()) / 10.0);
    CHECK(std::fabs(pred - res.model.normalize(truth_raw)) < 0.05);
}

TEST_CASE("persistence returns the last context value") {
    ForecastModel m;  // defaults to persistence, span 1
    std::vector<double> ctx = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.5, 0.4, 0.6, 0.7};
    CHECK(predict(m, ctx) == 0.7);
}

TEST_CASE("one-hot last-lag linear model equals persistence") {
    const ForecastModel ar = identity_ar_model();
    ForecastModel pers;
    Rng rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> ctx(kContextLen);
        for (double& v : ctx) v = rng.uniform();
        CHECK(predict(ar, ctx) == doctest::Approx(predict(pers, ctx)).epsilon(1e-12));
    }
}

TEST_CASE("predictions clamp to the unit interval") {
    ForecastModel m = identity_ar_model();
    m.ar_bias = 5.0;
    const std::vector<double> ctx(kContextLen, 0.5);
    CHECK(predict(m, ctx) == 1.0);
    m.ar_bias = -5.0;
    CHECK(predict(m, ctx) == 0.0);
}

TEST_CASE("malformed contexts are rejected") {
    const ForecastModel m;
    CHECK_THROWS_AS((void)predict(m, std::vector<double>(9, 0.5)), BadContextLength);
    CHECK_THROWS_AS((void)predict(m, std::vector<double>(11, 0.5)), BadContextLength);
    std::vector<double> ctx(kContextLen, 0.5);
    ctx[3] = std::nan("");
    CHECK_THROWS_AS((void)predict(m, ctx), BadContextLength);
    CHECK_THROWS_AS((void)predict_horizon(m, ctx, 3), BadContextLength);
}

TEST_CASE("multi-step rollout recursion") {
    const std::vector<double> ctx = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.5, 0.4, 0.6, 0.7};

    SUBCASE("persistence repeats the last value") {
        const ForecastModel m;
        const std::vector<double> out = predict_horizon(m, ctx, 5);
        REQUIRE(out.size() == 5);
        for (const double v : out) CHECK(v == 0.7);
    }
    SUBCASE("one step matches predict") {
        const ForecastModel m = identity_ar_model();
        const std::vector<double> out = predict_horizon(m, ctx, 1);
        REQUIRE(out.size() == 1);
        CHECK(out[0] == predict(m, ctx));
    }
    SUBCASE("identity recursion copies the last value forward") {
        const ForecastModel m = identity_ar_model();
        const std::vector<double> out = predict_horizon(m, ctx, 4);
        REQUIRE(out.size() == 4);
        for (const double v : out) CHECK(v == doctest::Approx(0.7).epsilon(1e-12));
    }
    SUBCASE("zero steps is rejected") {
        const ForecastModel m;
        CHECK_THROWS_AS((void)predict_horizon(m, ctx, 0), std::invalid_argument);
    }
}

TEST_CASE("fitting rejects series shorter than fifty points") {
    CHECK_THROWS_AS((void)fit(ForecastKind::persistence,
                              series_of(std::vector<double>(49, 1.0))),
                    TooShort);
    CHECK_NOTHROW((void)fit(ForecastKind::persistence,
                            series_of(std::vector<double>(50, 1.0))));
}

TEST_CASE("fitting is deterministic for a fixed config") {
    const TimeSeries s = sinusoid_series(80);
    ForecastTrainConfig cfg;
    cfg.epochs = 40;  // determinism needs no convergence
    const FitResult a = fit(ForecastKind::attention, s, cfg);
    const FitResult b = fit(ForecastKind::attention, s, cfg);
    CHECK(a.report.mse == b.report.mse);
    CHECK(mats_equal(a.model.attn.wq, b.model.attn.wq));
    CHECK(mats_equal(a.model.attn.pos, b.model.attn.pos));
    CHECK(mats_equal(a.model.attn.head, b.model.attn.head));
}

TEST_CASE("denormalized predictions stay inside the observed range") {
    const TimeSeries s = sinusoid_series(120);
    Rng rng(11);
    for (const ForecastKind kind :
         {ForecastKind::persistence, ForecastKind::linear_ar, ForecastKind::attention}) {
        ForecastTrainConfig cfg;
        cfg.epochs = 60;
        const FitResult res = fit(kind, s, cfg);
        for (int rep = 0; rep < 25; ++rep) {
            std::vector<double> ctx(kContextLen);
            for (double& v : ctx) v = rng.uniform();
            const double raw = res.model.denormalize(predict(res.model, ctx));
            CHECK(raw >= s.min());
            CHECK(raw <= s.max());
        }
    }
}

TEST_CASE("attention gradients match central finite differences") {
    Rng rng(5);
    AttentionParams p;
    {
        ForecastTrainConfig cfg;
        cfg.epochs = 3;  // a few steps away from init, still generic position
        const FitResult res = fit(ForecastKind::attention, sinusoid_series(60), cfg);
        p = res.model.attn;
    }
    std::vector<double> ctx(kContextLen);
    for (double& v : ctx) v = rng.uniform();
    const double target = 0.35;

    const AttentionBackward back = attention_backward(p, ctx, target);
    REQUIRE(back.grads.size() == 7);

    std::vector<Mat*> tensors = {&p.wq, &p.wk,   &p.wv,       &p.pos,
                                 &p.val_embed, &p.head, &p.head_bias};
    const double h = 1e-5;
    for (int probe = 0; probe < 20; ++probe) {
        const std::size_t k = rng.randint(tensors.size());
        const std::size_t i = rng.randint(tensors[k]->size());
        const double saved = tensors[k]->a[i];

        tensors[k]->a[i] = saved + h;
        const double up = attention_predict(p, ctx) - target;
        tensors[k]->a[i] = saved - h;
        const double dn = attention_predict(p, ctx) - target;
        tensors[k]->a[i] = saved;

        const double fd = (up * up - dn * dn) / (2.0 * h);
        const double ad = back.grads[k].a[i];
        const double rel = std::fabs(ad - fd) / std::max(1e-8, std::fabs(fd));
        CAPTURE(k);
        CAPTURE(i);
        CHECK(rel < 1e-4);
    }
}

TEST_CASE("saved models round trip through the binary format") {
    const TimeSeries s = sinusoid_series(100);
    ForecastTrainConfig cfg;
    cfg.epochs = 50;
    const std::string path = "test_forecast_model.bin";

    for (const ForecastKind kind :
         {ForecastKind::persistence, ForecastKind::linear_ar, ForecastKind::attention}) {
        const FitResult res = fit(kind, s, cfg);
        save_forecast(path, res.model);
        const ForecastModel loaded = load_forecast(path);
        CHECK(loaded.kind == res.model.kind);
        CHECK(loaded.norm_min == res.model.norm_min);
        CHECK(loaded.norm_span == res.model.norm_span);
        CHECK(loaded.ar_weights == res.model.ar_weights);
        CHECK(loaded.ar_bias == res.model.ar_bias);
        CHECK(mats_equal(loaded.attn.wq, res.model.attn.wq));
        CHECK(mats_equal(loaded.attn.pos, res.model.attn.pos));
        CHECK(mats_equal(loaded.attn.head_bias, res.model.attn.head_bias));
        const std::vector<double> ctx = last_context_normalized(res.model, s);
        CHECK(predict(loaded, ctx) == predict(res.model, ctx));
    }
    std::remove(path.c_str());
}

TEST_CASE("model loader rejects foreign and truncated files") {
    const std::string bad = "test_forecast_bad.bin";
    {
        std::ofstream os(bad, std::ios::binary);
        os << "NOTAMODELATALL";
    }
    CHECK_THROWS_AS((void)load_forecast(bad), std::runtime_error);
    {
        std::ofstream os(bad, std::ios::binary);
        os << "MGFC0001";  // header only, body missing
    }
    CHECK_THROWS_AS((void)load_forecast(bad), binio::StreamError);
    std::remove(bad.c_str());
    CHECK_THROWS_AS((void)load_forecast("no_such_model.bin"), std::runtime_error);
}

TEST_CASE("observation adapter forecasts through its fitted model") {
    std::vector<double> vals(60);
    for (std::size_t t = 0; t < vals.size(); ++t) {
        vals[t] = 10.0 + static_cast<double>(t % 7);
    }
    const TimeSeries s = series_of(vals);
    const TimeSeries other = series_of(std::vector<double>(60, 3.0));

    const FitResult res = fit(ForecastKind::linear_ar, s);
    ModelObsForecaster fc;
    fc.set_model(&s, res.model);

    const std::size_t t = 40;
    std::vector<double> ctx(kContextLen);
    for (std::size_t i = 0; i < kContextLen; ++i) {
        ctx[i] = res.model.normalize(s[t - (kContextLen - 1) + i]);
    }
    const double expect1 = res.model.denormalize(predict(res.model, ctx));
    CHECK(fc.forecast(s, t, 1) == doctest::Approx(expect1).epsilon(1e-12));

    const std::vector<double> two = predict_horizon(res.model, ctx, 2);
    CHECK(fc.forecast(s, t, 2) ==
          doctest::Approx(res.model.denormalize(two.back())).epsilon(1e-12));

    // unmatched series falls back to persistence
    CHECK(fc.forecast(other, 12, 3) == 3.0);
}
