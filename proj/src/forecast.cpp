#include "mg/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "mg/binio.hpp"
#include "mg/linalg.hpp"

namespace mg {

namespace {

void check_context(const std::vector<double>& context) {
    if (context.size() != kContextLen) {
        throw BadContextLength("context must hold exactly 10 values");
    }
    for (const double v : context) {
        if (!std::isfinite(v)) throw BadContextLength("non-finite context value");
    }
}

/// Builds the attention graph for one window. Parameter ids are returned in
/// the AttentionBackward gradient order.
struct AttentionGraph {
    Tape tape;
    std::vector<Tape::Id> params;
    Tape::Id output;  // 1 x 1
};

AttentionGraph attention_graph(const AttentionParams& p,
                               const std::vector<double>& context) {
    AttentionGraph g;
    Tape& t = g.tape;
    const Tape::Id wq = t.input(p.wq);
    const Tape::Id wk = t.input(p.wk);
    const Tape::Id wv = t.input(p.wv);
    const Tape::Id pos = t.input(p.pos);
    const Tape::Id val_embed = t.input(p.val_embed);
    const Tape::Id head = t.input(p.head);
    const Tape::Id head_bias = t.input(p.head_bias);
    g.params = {wq, wk, wv, pos, val_embed, head, head_bias};

    const Tape::Id ctx = t.input(Mat::column_vector(context));   // 10 x 1
    const Tape::Id embed = t.add(t.matmul(ctx, val_embed), pos); // 10 x d
    const Tape::Id q = t.matmul(embed, wq);
    const Tape::Id k = t.matmul(embed, wk);
    const Tape::Id v = t.matmul(embed, wv);
    const Tape::Id scores =
        t.scale(t.matmul(q, t.transpose(k)),
                1.0 / std::sqrt(static_cast<double>(p.d_model())));
    const Tape::Id mixed = t.matmul(t.row_softmax(scores), v);   // 10 x d

    Mat select(1, kContextLen);
    select.at(0, kContextLen - 1) = 1.0;
    const Tape::Id last = t.matmul(t.input(std::move(select)), mixed);  // 1 x d
    g.output = t.add(t.matmul(last, head), head_bias);                   // 1 x 1
    return g;
}

AttentionParams init_attention(std::size_t d_model, Rng& rng) {
    AttentionParams p;
    const double s = 1.0 / std::sqrt(static_cast<double>(d_model));
    auto randmat = [&](std::size_t r, std::size_t c) {
        Mat m(r, c);
        for (double& v : m.a) v = rng.normal(0.0, s);
        return m;
    };
    p.wq = randmat(d_model, d_model);
    p.wk = randmat(d_model, d_model);
    p.wv = randmat(d_model, d_model);
    p.pos = randmat(kContextLen, d_model);
    p.val_embed = randmat(1, d_model);
    p.head = randmat(d_model, 1);
    p.head_bias = Mat(1, 1);
    return p;
}

std::vector<Mat*> attention_tensors(AttentionParams& p) {
    return {&p.wq, &p.wk, &p.wv, &p.pos, &p.val_embed, &p.head, &p.head_bias};
}

struct Window {
    std::vector<double> context;
    double target = 0.0;
};

double window_mse(const ForecastModel& model, const std::vector<Window>& windows) {
    if (windows.empty()) return 0.0;
    double sum = 0.0;
    for (const Window& w : windows) {
        const double err = predict(model, w.context) - w.target;
        sum += err * err;
    }
    return sum / static_cast<double>(windows.size());
}

void fit_attention(ForecastModel& model, const std::vector<Window>& train,
                   const ForecastTrainConfig& cfg) {
    Rng rng(cfg.seed);
    model.attn = init_attention(cfg.d_model, rng);
    std::vector<Mat*> tensors = attention_tensors(model.attn);

    std::vector<Mat> m1, m2;
    for (const Mat* t : tensors) {
        m1.emplace_back(t->rows, t->cols);
        m2.emplace_back(t->rows, t->cols);
    }
    long step = 0;
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;

    const double n = static_cast<double>(train.size());
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<Mat> total;
        for (const Mat* t : tensors) total.emplace_back(t->rows, t->cols);
        for (const Window& w : train) {
            const AttentionBackward back =
                attention_backward(model.attn, w.context, w.target);
            for (std::size_t k = 0; k < total.size(); ++k) {
                for (std::size_t i = 0; i < total[k].size(); ++i) {
                    total[k].a[i] += back.grads[k].a[i] / n;
                }
            }
        }
        step += 1;
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
        for (std::size_t k = 0; k < tensors.size(); ++k) {
            for (std::size_t i = 0; i < tensors[k]->size(); ++i) {
                const double gr = total[k].a[i];
                m1[k].a[i] = b1 * m1[k].a[i] + (1.0 - b1) * gr;
                m2[k].a[i] = b2 * m2[k].a[i] + (1.0 - b2) * gr * gr;
                tensors[k]->a[i] -=
                    cfg.lr * (m1[k].a[i] / c1) / (std::sqrt(m2[k].a[i] / c2) + eps);
            }
        }
    }
}

}  // namespace

double attention_predict(const AttentionParams& params,
                         const std::vector<double>& context) {
    AttentionGraph g = attention_graph(params, context);
    return g.tape.value(g.output).a[0];
}

AttentionBackward attention_backward(const AttentionParams& params,
                                     const std::vector<double>& context,
                                     double target) {
    AttentionGraph g = attention_graph(params, context);
    Tape& t = g.tape;
    const Tape::Id err = t.add_scalar(g.output, -target);
    const Tape::Id loss = t.mul(err, err);
    AttentionBackward out;
    out.loss = t.value(loss).a[0];
    t.backward(loss);
    for (const Tape::Id id : g.params) out.grads.push_back(t.grad(id));
    return out;
}

FitResult fit(ForecastKind kind, const TimeSeries& series,
              const ForecastTrainConfig& cfg) {
    if (series.size() < 50) {
        throw TooShort("forecast fitting needs at least 50 points");
    }
    FitResult out;
    out.model.kind = kind;
    out.model.norm_min = series.min();
    const double span = series.max() - series.min();
    out.model.norm_span = span;

    std::vector<double> norm(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        norm[i] = span > 0.0 ? (series[i] - out.model.norm_min) / span : 0.0;
    }

    std::vector<Window> windows;
    for (std::size_t t = kContextLen; t < norm.size(); ++t) {
        Window w;
        w.context.assign(norm.begin() + static_cast<std::ptrdiff_t>(t - kContextLen),
                         norm.begin() + static_cast<std::ptrdiff_t>(t));
        w.target = norm[t];
        windows.push_back(std::move(w));
    }
    const std::size_t held = std::max<std::size_t>(1, windows.size() / 5);
    const std::size_t split = windows.size() - held;
    const std::vector<Window> train(windows.begin(),
                                    windows.begin() + static_cast<std::ptrdiff_t>(split));
    const std::vector<Window> test(windows.begin() + static_cast<std::ptrdiff_t>(split),
                                   windows.end());

    if (span <= 0.0) {
        out.report.mse = 0.0;  // constant series: nothing to learn, predict collapses
        return out;
    }

    switch (kind) {
        case ForecastKind::persistence:
            break;
        case ForecastKind::linear_ar: {
            std::vector<std::vector<double>> x;
            std::vector<double> y;
            for (const Window& w : train) {
                std::vector<double> row = w.context;
                row.push_back(1.0);  // intercept
                x.push_back(std::move(row));
                y.push_back(w.target);
            }
            const std::vector<double> beta = least_squares(x, y);
            out.model.ar_weights.assign(beta.begin(), beta.end() - 1);
            out.model.ar_bias = beta.back();
            break;
        }
        case ForecastKind::attention:
            fit_attention(out.model, train, cfg);
            break;
    }
    out.report.mse = window_mse(out.model, test);
    return out;
}

double predict(const ForecastModel& model, const std::vector<double>& context) {
    check_context(context);
    // Constant-series collapse: span 0 normalizes everything to 0 and
    // denormalize ignores y, so 0 is the only self-consistent output.
    if (model.norm_span <= 0.0) return 0.0;
    double y = 0.0;
    switch (model.kind) {
        case ForecastKind::persistence:
            y = context.back();
            break;
        case ForecastKind::linear_ar: {
            if (model.ar_weights.size() != kContextLen) {
                throw std::logic_error("linear_ar model has no fitted weights");
            }
            y = model.ar_bias;
            for (std::size_t i = 0; i < kContextLen; ++i) {
                y += model.ar_weights[i] * context[i];
            }
            break;
        }
        case ForecastKind::attention:
            y = attention_predict(model.attn, context);
            break;
    }
    return std::clamp(y, 0.0, 1.0);
}

std::vector<double> predict_horizon(const ForecastModel& model,
                                    std::vector<double> context,
                                    std::size_t steps) {
    if (steps < 1) throw std::invalid_argument("predict_horizon needs steps >= 1");
    check_context(context);
    std::vector<double> out;
    out.reserve(steps);
    for (std::size_t s = 0; s < steps; ++s) {
        const double y = predict(model, context);
        out.push_back(y);
        context.erase(context.begin());
        context.push_back(y);
    }
    return out;
}

void save_forecast(const std::string& path, const ForecastModel& model) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open forecast file for writing: " + path);
    os.write("MGFC0001", 8);
    os.put(static_cast<char>(model.kind));
    binio::put_f64(os, model.norm_min);
    binio::put_f64(os, model.norm_span);
    binio::put_u32(os, static_cast<std::uint32_t>(model.ar_weights.size()));
    for (const double w : model.ar_weights) binio::put_f64(os, w);
    binio::put_f64(os, model.ar_bias);
    binio::put_mat(os, model.attn.wq);
    binio::put_mat(os, model.attn.wk);
    binio::put_mat(os, model.attn.wv);
    binio::put_mat(os, model.attn.pos);
    binio::put_mat(os, model.attn.val_embed);
    binio::put_mat(os, model.attn.head);
    binio::put_mat(os, model.attn.head_bias);
    if (!os) throw std::runtime_error("write failed: " + path);
}

ForecastModel load_forecast(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open forecast file: " + path);
    char magic[8];
    binio::get_bytes(is, magic, 8);
    if (std::memcmp(magic, "MGFC", 4) != 0) {
        throw std::runtime_error("not a forecast model file: " + path);
    }
    if (std::memcmp(magic + 4, "0001", 4) != 0) {
        throw std::runtime_error("unsupported forecast model version");
    }
    ForecastModel model;
    char kind_byte;
    binio::get_bytes(is, &kind_byte, 1);
    const int kind = static_cast<unsigned char>(kind_byte);
    if (kind > 2) throw std::runtime_error("corrupt forecast header");
    model.kind = static_cast<ForecastKind>(kind);
    model.norm_min = binio::get_f64(is);
    model.norm_span = binio::get_f64(is);
    const std::size_t nw = binio::get_u32(is);
    model.ar_weights.resize(nw);
    for (double& w : model.ar_weights) w = binio::get_f64(is);
    model.ar_bias = binio::get_f64(is);
    model.attn.wq = binio::get_mat(is);
    model.attn.wk = binio::get_mat(is);
    model.attn.wv = binio::get_mat(is);
    model.attn.pos = binio::get_mat(is);
    model.attn.val_embed = binio::get_mat(is);
    model.attn.head = binio::get_mat(is);
    model.attn.head_bias = binio::get_mat(is);
    return model;
}

void ModelObsForecaster::set_model(const TimeSeries* series, ForecastModel model) {
    models_.emplace_back(series, std::move(model));
}

double ModelObsForecaster::forecast(const TimeSeries& series, std::size_t t,
                                    std::size_t steps_ahead) const {
    const ForecastModel* model = nullptr;
    for (const auto& [key, m] : models_) {
        if (key == &series) {
            model = &m;
            break;
        }
    }
    if (model == nullptr || steps_ahead == 0) {
        return ObsForecaster::forecast(series, t, steps_ahead);
    }
    const std::size_t last = std::min(t, series.size() - 1);
    std::vector<double> ctx(kContextLen);
    for (std::size_t i = 0; i < kContextLen; ++i) {
        const std::size_t back = kContextLen - 1 - i;
        const std::size_t idx = last >= back ? last - back : 0;
        ctx[i] = model->normalize(series[idx]);
    }
    const std::vector<double> preds = predict_horizon(*model, std::move(ctx), steps_ahead);
    return model->denormalize(preds.back());
}

}  // namespace mg
