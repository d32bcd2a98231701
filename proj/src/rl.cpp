#include "mg/rl.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>

#include "mg/binio.hpp"
#include "mg/hash.hpp"

namespace mg {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

void gemm_acc(const Mat& a, const Mat& b, Mat& c) {
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = &a.a[i * a.cols];
        double* crow = &c.a[i * c.cols];
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = &b.a[k * b.cols];
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
}

std::vector<Mat*> tensor_list(PolicyParams& p) {
    std::vector<Mat*> out;
    for (std::size_t l = 0; l < p.policy.n_layers(); ++l) {
        out.push_back(&p.policy.w[l]);
        out.push_back(&p.policy.b[l]);
    }
    for (std::size_t l = 0; l < p.value.n_layers(); ++l) {
        out.push_back(&p.value.w[l]);
        out.push_back(&p.value.b[l]);
    }
    if (p.kind == ActionKind::continuous) out.push_back(&p.log_std);
    return out;
}

/// Dropout mask with inverted scaling, entries 0 or 1/(1-rate).
Mat dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
    Mat m(rows, cols, 1.0 / (1.0 - rate));
    for (double& v : m.a) {
        if (rng.uniform() < rate) v = 0.0;
    }
    return m;
}

/// Builds an MLP forward pass on the tape. Fresh masks are drawn from rng
/// for each hidden layer when train_mode is set.
Tape::Id mlp_on_tape(Tape& t, const Mlp& mlp, const std::vector<Tape::Id>& w_ids,
                     const std::vector<Tape::Id>& b_ids, Tape::Id x,
                     bool train_mode, Rng& rng) {
    Tape::Id cur = x;
    for (std::size_t l = 0; l < mlp.n_layers(); ++l) {
        cur = t.add_rowvec(t.matmul(cur, w_ids[l]), b_ids[l]);
        if (l + 1 < mlp.n_layers()) {
            cur = t.relu(cur);
            if (train_mode && mlp.dropout_rate > 0.0) {
                const Mat& h = t.value(cur);
                cur = t.mul(cur, t.input(dropout_mask(h.rows, h.cols,
                                                      mlp.dropout_rate, rng)));
            }
        }
    }
    return cur;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::vector<double> softmax(const std::vector<double>& logits) {
    double mx = logits.front();
    for (const double z : logits) mx = std::max(mx, z);
    std::vector<double> p(logits.size());
    double denom = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        denom += p[i];
    }
    for (double& v : p) v /= denom;
    return p;
}

double logsumexp(const std::vector<double>& z) {
    double mx = z.front();
    for (const double v : z) mx = std::max(mx, v);
    double s = 0.0;
    for (const double v : z) s += std::exp(v - mx);
    return mx + std::log(s);
}

std::size_t argmax_index(const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = i;
    }
    return best;
}

std::vector<double> mat_row(const Mat& m, std::size_t r) {
    std::vector<double> out(m.cols);
    for (std::size_t j = 0; j < m.cols; ++j) out[j] = m.at(r, j);
    return out;
}

struct SampledAction {
    int discrete = 0;
    std::vector<double> continuous;
    double log_prob = 0.0;
};

SampledAction sample_action(const PolicyParams& params, const std::vector<double>& head,
                            bool deterministic, Rng& rng) {
    SampledAction out;
    if (params.kind == ActionKind::discrete) {
        if (deterministic) {
            out.discrete = static_cast<int>(argmax_index(head));
        } else {
            const std::vector<double> p = softmax(head);
            const double u = rng.uniform();
            double acc = 0.0;
            out.discrete = static_cast<int>(p.size()) - 1;
            for (std::size_t i = 0; i < p.size(); ++i) {
                acc += p[i];
                if (u < acc) {
                    out.discrete = static_cast<int>(i);
                    break;
                }
            }
        }
        out.log_prob = head[static_cast<std::size_t>(out.discrete)] - logsumexp(head);
    } else {
        out.continuous.resize(head.size());
        out.log_prob = 0.0;
        for (std::size_t j = 0; j < head.size(); ++j) {
            const double log_std = params.log_std.at(0, j);
            const double std = std::exp(log_std);
            const double a = deterministic ? head[j] : head[j] + std * rng.normal();
            out.continuous[j] = a;
            const double zs = (a - head[j]) / std;
            out.log_prob += -0.5 * (zs * zs + kLog2Pi) - log_std;
        }
    }
    return out;
}

ContinuousAction to_continuous_action(const std::vector<double>& v) {
    ContinuousAction a;
    a.battery = v.size() > 0 ? v[0] : 0.0;
    a.fuel_cell = v.size() > 1 ? v[1] : 0.0;
    a.generator = v.size() > 2 ? v[2] : 0.0;
    a.island = v.size() > 3 ? v[3] : 0.0;
    return a;
}

void put_mlp(std::ostream& os, const Mlp& mlp) {
    binio::put_u32(os, static_cast<std::uint32_t>(mlp.n_layers()));
    binio::put_f64(os, mlp.dropout_rate);
    for (std::size_t l = 0; l < mlp.n_layers(); ++l) {
        binio::put_mat(os, mlp.w[l]);
        binio::put_mat(os, mlp.b[l]);
    }
}

Mlp get_mlp(std::istream& is) {
    Mlp mlp;
    const std::size_t n = binio::get_u32(is);
    mlp.dropout_rate = binio::get_f64(is);
    for (std::size_t l = 0; l < n; ++l) {
        mlp.w.push_back(binio::get_mat(is));
        mlp.b.push_back(binio::get_mat(is));
    }
    return mlp;
}

}  // namespace

Mlp make_mlp(std::size_t in_dim, const std::vector<std::size_t>& hidden,
             std::size_t out_dim, double dropout_rate, Rng& rng,
             double head_scale) {
    Mlp mlp;
    mlp.dropout_rate = dropout_rate;
    std::vector<std::size_t> dims;
    dims.push_back(in_dim);
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(out_dim);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const bool last = l + 2 == dims.size();
        const double stddev =
            std::sqrt(2.0 / static_cast<double>(dims[l])) * (last ? head_scale : 1.0);
        Mat w(dims[l], dims[l + 1]);
        for (double& v : w.a) v = rng.normal(0.0, stddev);
        mlp.w.push_back(std::move(w));
        mlp.b.emplace_back(1, dims[l + 1]);
    }
    return mlp;
}

MlpForwardResult mlp_forward(const Mlp& mlp, const Mat& input, bool train_mode,
                             Rng& rng) {
    if (mlp.n_layers() == 0) throw ShapeMismatch("mlp_forward: empty network");
    if (input.cols != mlp.in_dim()) {
        throw ShapeMismatch("mlp_forward: input width does not match first layer");
    }
    MlpForwardResult res;
    Mat cur = input;
    for (std::size_t l = 0; l < mlp.n_layers(); ++l) {
        Mat z(cur.rows, mlp.w[l].cols);
        for (std::size_t i = 0; i < z.rows; ++i) {
            for (std::size_t j = 0; j < z.cols; ++j) z.at(i, j) = mlp.b[l].at(0, j);
        }
        gemm_acc(cur, mlp.w[l], z);
        if (l + 1 < mlp.n_layers()) {
            for (double& v : z.a) v = std::max(0.0, v);
            if (train_mode && mlp.dropout_rate > 0.0) {
                const double keep = 1.0 - mlp.dropout_rate;
                for (double& v : z.a) {
                    v = (rng.uniform() < mlp.dropout_rate) ? 0.0 : v / keep;
                }
            }
            res.activations.push_back(z);
        }
        cur = std::move(z);
    }
    res.output = std::move(cur);
    return res;
}

PolicyParams PolicyParams::init(std::size_t obs_dim, std::size_t action_dim,
                                ActionKind kind, const std::vector<std::size_t>& hidden,
                                double dropout_rate, Rng& rng) {
    PolicyParams p;
    p.kind = kind;
    // Small head scale keeps the initial policy near uniform / near zero-mean.
    p.policy = make_mlp(obs_dim, hidden, action_dim, dropout_rate, rng, 0.01);
    p.value = make_mlp(obs_dim, hidden, 1, dropout_rate, rng, 1.0);
    if (kind == ActionKind::continuous) {
        p.log_std = Mat(1, action_dim, std::log(0.5));
    }
    return p;
}

void PolicyParams::validate() const {
    if (policy.n_layers() == 0 || value.n_layers() == 0) {
        throw std::invalid_argument("policy and value networks must be non-empty");
    }
    if (policy.dropout_rate < 0.0 || policy.dropout_rate >= 0.5 ||
        value.dropout_rate < 0.0 || value.dropout_rate >= 0.5) {
        throw std::invalid_argument("dropout_rate must lie in [0, 0.5)");
    }
    if (value.out_dim() != 1) {
        throw std::invalid_argument("value head must be scalar");
    }
    if (kind == ActionKind::continuous && log_std.cols != policy.out_dim()) {
        throw std::invalid_argument("log_std width must match the action head");
    }
    auto finite = [](const Mat& m) {
        for (const double v : m.a) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    };
    for (const Mlp* mlp : {&policy, &value}) {
        for (std::size_t l = 0; l < mlp->n_layers(); ++l) {
            if (!finite(mlp->w[l]) || !finite(mlp->b[l])) {
                throw std::invalid_argument("non-finite network weight");
            }
        }
    }
    if (!finite(log_std)) throw std::invalid_argument("non-finite log_std");
}

void PPOConfig::validate() const {
    if (!(clip_eps > 0.0 && clip_eps < 1.0)) {
        throw std::invalid_argument("clip_eps must lie in (0, 1)");
    }
    if (!(gamma > 0.0 && gamma <= 1.0) || !(gae_lambda > 0.0 && gae_lambda <= 1.0)) {
        throw std::invalid_argument("gamma and gae_lambda must lie in (0, 1]");
    }
    if (lr_final > lr_initial) {
        throw std::invalid_argument("lr_final must not exceed lr_initial");
    }
    if (epochs == 0 || minibatch_size == 0 || rollout_len == 0) {
        throw std::invalid_argument("epochs, minibatch_size, rollout_len must be positive");
    }
    if (dropout_rate < 0.0 || dropout_rate >= 0.5) {
        throw std::invalid_argument("dropout_rate must lie in [0, 0.5)");
    }
}

std::uint64_t config_hash(const PPOConfig& config) {
    char buf[64];
    std::string s;
    auto addf = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g|", v);
        s += buf;
    };
    auto addu = [&](std::size_t v) {
        std::snprintf(buf, sizeof buf, "%zu|", v);
        s += buf;
    };
    addf(config.clip_eps);
    addf(config.vf_coef);
    addf(config.ent_coef);
    addf(config.gamma);
    addf(config.gae_lambda);
    addu(config.epochs);
    addu(config.minibatch_size);
    addf(config.lr_initial);
    addf(config.lr_final);
    addf(config.max_policy_std);
    addf(config.std_reset_value);
    addf(config.kl_threshold);
    addf(config.grad_norm_clip);
    addu(config.rollout_len);
    for (const std::size_t h : config.hidden) addu(h);
    addf(config.dropout_rate);
    s += config.action_kind == ActionKind::discrete ? "discrete" : "continuous";
    return fnv1a64(s);
}

void RolloutBuffer::clear() {
    observations.clear();
    actions_disc.clear();
    actions_cont.clear();
    log_prob_old.clear();
    rewards.clear();
    values.clear();
    dones.clear();
    advantages.clear();
    returns.clear();
}

void RolloutBuffer::normalize_advantages() {
    if (advantages.empty()) return;
    const double n = static_cast<double>(advantages.size());
    const double mean = std::accumulate(advantages.begin(), advantages.end(), 0.0) / n;
    double var = 0.0;
    for (const double a : advantages) var += (a - mean) * (a - mean);
    const double std = std::sqrt(var / n);
    for (double& a : advantages) a = (a - mean) / (std + 1e-8);
}

GaeResult gae(const std::vector<double>& rewards, const std::vector<double>& values,
              const std::vector<std::uint8_t>& dones, double gamma, double lambda,
              double bootstrap_value) {
    const std::size_t n = rewards.size();
    if (values.size() != n || dones.size() != n) {
        throw std::invalid_argument("gae: input lengths differ");
    }
    GaeResult out;
    out.advantages.assign(n, 0.0);
    out.returns.assign(n, 0.0);
    double acc = 0.0;
    for (std::size_t k = n; k-- > 0;) {
        const double nonterm = dones[k] ? 0.0 : 1.0;
        const double next_v = (k + 1 == n) ? bootstrap_value : values[k + 1];
        const double delta = rewards[k] + gamma * next_v * nonterm - values[k];
        acc = delta + gamma * lambda * nonterm * acc;
        out.advantages[k] = acc;
        out.returns[k] = acc + values[k];
    }
    return out;
}

PpoBackwardResult ppo_backward(const RolloutBuffer& batch,
                               const std::vector<std::size_t>& index,
                               const PolicyParams& params, const PPOConfig& config,
                               bool train_mode, Rng& rng) {
    if (index.empty()) throw std::invalid_argument("ppo_backward: empty batch");
    if (batch.advantages.size() != batch.size() || batch.returns.size() != batch.size()) {
        throw std::invalid_argument("ppo_backward: advantages not computed");
    }
    const std::size_t n = index.size();
    const std::size_t obs_dim = batch.observations.front().size();
    const std::size_t act_dim = params.action_dim();

    Mat X(n, obs_dim);
    Mat adv(n, 1);
    Mat ret(n, 1);
    Mat lp_old(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = index[i];
        const Observation& o = batch.observations[r];
        if (o.size() != obs_dim) throw ShapeMismatch("ppo_backward: ragged observations");
        for (std::size_t j = 0; j < obs_dim; ++j) X.at(i, j) = o[j];
        adv.at(i, 0) = batch.advantages[r];
        ret.at(i, 0) = batch.returns[r];
        lp_old.at(i, 0) = batch.log_prob_old[r];
    }

    Tape t;
    std::vector<Tape::Id> param_ids;
    std::vector<Tape::Id> pw, pb, vw, vb;
    for (std::size_t l = 0; l < params.policy.n_layers(); ++l) {
        pw.push_back(t.input(params.policy.w[l]));
        pb.push_back(t.input(params.policy.b[l]));
        param_ids.push_back(pw.back());
        param_ids.push_back(pb.back());
    }
    for (std::size_t l = 0; l < params.value.n_layers(); ++l) {
        vw.push_back(t.input(params.value.w[l]));
        vb.push_back(t.input(params.value.b[l]));
        param_ids.push_back(vw.back());
        param_ids.push_back(vb.back());
    }
    Tape::Id log_std_id = -1;
    if (params.kind == ActionKind::continuous) {
        log_std_id = t.input(params.log_std);
        param_ids.push_back(log_std_id);
    }

    const Tape::Id x = t.input(std::move(X));
    const Tape::Id head = mlp_on_tape(t, params.policy, pw, pb, x, train_mode, rng);
    const Tape::Id v_pred = mlp_on_tape(t, params.value, vw, vb, x, train_mode, rng);

    Tape::Id lp_new;  // n x 1
    Tape::Id entropy; // 1 x 1
    if (params.kind == ActionKind::discrete) {
        Mat onehot(n, act_dim);
        for (std::size_t i = 0; i < n; ++i) {
            const int a = batch.actions_disc[index[i]];
            if (a < 0 || static_cast<std::size_t>(a) >= act_dim) {
                throw std::invalid_argument("ppo_backward: action id out of range");
            }
            onehot.at(i, static_cast<std::size_t>(a)) = 1.0;
        }
        const Tape::Id lse = t.row_logsumexp(head);
        const Tape::Id picked = t.row_sum(t.mul(head, t.input(std::move(onehot))));
        lp_new = t.sub(picked, lse);
        // -sum p log p == lse - sum(p * z), stable for extreme logits.
        const Tape::Id p = t.row_softmax(head);
        entropy = t.mean_all(t.sub(lse, t.row_sum(t.mul(p, head))));
    } else {
        Mat acts(n, act_dim);
        for (std::size_t i = 0; i < n; ++i) {
            const std::vector<double>& a = batch.actions_cont[index[i]];
            if (a.size() != act_dim) throw ShapeMismatch("ppo_backward: ragged actions");
            for (std::size_t j = 0; j < act_dim; ++j) acts.at(i, j) = a[j];
        }
        const Tape::Id diff = t.sub(t.input(std::move(acts)), head);
        const Tape::Id inv_var = t.exp(t.scale(log_std_id, -2.0));
        const Tape::Id quad = t.row_sum(t.mul_rowvec(t.mul(diff, diff), inv_var));
        const Tape::Id sum_log_std = t.scale(t.sum_all(log_std_id), 2.0);
        const Tape::Id ones = t.input(Mat(n, 1, 1.0));
        const Tape::Id inner =
            t.add_scalar(t.add(quad, t.matmul(ones, sum_log_std)),
                         static_cast<double>(act_dim) * kLog2Pi);
        lp_new = t.scale(inner, -0.5);
        entropy = t.scale(
            t.add_scalar(t.scale(t.sum_all(log_std_id), 2.0),
                         static_cast<double>(act_dim) * (1.0 + kLog2Pi)),
            0.5);
    }

    const Tape::Id adv_id = t.input(std::move(adv));
    const Tape::Id ratio = t.exp(t.sub(lp_new, t.input(std::move(lp_old))));
    const Tape::Id unclipped = t.mul(ratio, adv_id);
    const Tape::Id clipped =
        t.mul(t.clamp(ratio, 1.0 - config.clip_eps, 1.0 + config.clip_eps), adv_id);
    const Tape::Id l_clip = t.mean_all(t.minimum(unclipped, clipped));

    const Tape::Id err = t.sub(v_pred, t.input(std::move(ret)));
    const Tape::Id l_vf = t.mean_all(t.mul(err, err));

    const Tape::Id l_total =
        t.add(t.add(t.scale(l_clip, -1.0), t.scale(l_vf, config.vf_coef)),
              t.scale(entropy, -config.ent_coef));

    PpoBackwardResult res;
    res.losses.l_clip = t.value(l_clip).a[0];
    res.losses.l_vf = t.value(l_vf).a[0];
    res.losses.entropy = t.value(entropy).a[0];
    res.losses.l_total = t.value(l_total).a[0];
    if (!std::isfinite(res.losses.l_total) || !std::isfinite(res.losses.l_clip) ||
        !std::isfinite(res.losses.l_vf) || !std::isfinite(res.losses.entropy)) {
        throw NaNLoss();
    }

    double kl = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        kl += batch.log_prob_old[index[i]] - t.value(lp_new).at(i, 0);
    }
    res.approx_kl = kl / static_cast<double>(n);

    t.backward(l_total);
    res.grads.reserve(param_ids.size());
    for (const Tape::Id id : param_ids) res.grads.push_back(t.grad(id));
    return res;
}

PpoLossTerms ppo_losses(const RolloutBuffer& batch, const PolicyParams& params,
                        const PPOConfig& config) {
    std::vector<std::size_t> all(batch.size());
    std::iota(all.begin(), all.end(), 0);
    Rng unused(0);
    return ppo_backward(batch, all, params, config, false, unused).losses;
}

UpdateResult update(PolicyParams& params, const RolloutBuffer& buffer,
                    const PPOConfig& config, double lr, Rng& rng, AdamState* adam) {
    if (buffer.size() == 0) throw std::invalid_argument("update: empty buffer");
    if (buffer.advantages.size() != buffer.size()) {
        throw std::invalid_argument("update: advantages not computed");
    }
    const PolicyParams snapshot = params;
    const std::vector<Mat*> tensors = tensor_list(params);
    if (adam != nullptr && adam->m.empty()) {
        for (const Mat* t : tensors) {
            adam->m.emplace_back(t->rows, t->cols);
            adam->v.emplace_back(t->rows, t->cols);
        }
    }

    UpdateResult out;
    std::vector<std::size_t> order(buffer.size());
    std::iota(order.begin(), order.end(), 0);

    try {
        for (std::size_t epoch = 0; epoch < config.epochs && !out.kl_stopped; ++epoch) {
            rng.shuffle(order);
            for (std::size_t start = 0; start < order.size();
                 start += config.minibatch_size) {
                const std::size_t stop =
                    std::min(order.size(), start + config.minibatch_size);
                const std::vector<std::size_t> chunk(order.begin() + start,
                                                     order.begin() + stop);
                PpoBackwardResult res =
                    ppo_backward(buffer, chunk, params, config, true, rng);
                out.last_losses = res.losses;
                out.approx_kl = res.approx_kl;
                // The first minibatch always steps; afterwards a KL overshoot
                // stops the remaining epochs without applying another step.
                if (out.minibatch_steps > 0 && res.approx_kl > config.kl_threshold) {
                    out.kl_stopped = true;
                    break;
                }
                if (config.grad_norm_clip > 0.0) {
                    double sq = 0.0;
                    for (const Mat& g : res.grads) {
                        for (const double v : g.a) sq += v * v;
                    }
                    const double norm = std::sqrt(sq);
                    if (norm > config.grad_norm_clip) {
                        const double scale = config.grad_norm_clip / norm;
                        for (Mat& g : res.grads) {
                            for (double& v : g.a) v *= scale;
                        }
                    }
                }
                if (adam != nullptr) {
                    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
                    adam->step += 1;
                    const double c1 = 1.0 - std::pow(b1, static_cast<double>(adam->step));
                    const double c2 = 1.0 - std::pow(b2, static_cast<double>(adam->step));
                    for (std::size_t k = 0; k < tensors.size(); ++k) {
                        Mat& m = adam->m[k];
                        Mat& v = adam->v[k];
                        Mat& w = *tensors[k];
                        const Mat& g = res.grads[k];
                        for (std::size_t i = 0; i < w.size(); ++i) {
                            m.a[i] = b1 * m.a[i] + (1.0 - b1) * g.a[i];
                            v.a[i] = b2 * v.a[i] + (1.0 - b2) * g.a[i] * g.a[i];
                            w.a[i] -= lr * (m.a[i] / c1) / (std::sqrt(v.a[i] / c2) + eps);
                        }
                    }
                } else {
                    for (std::size_t k = 0; k < tensors.size(); ++k) {
                        Mat& w = *tensors[k];
                        const Mat& g = res.grads[k];
                        for (std::size_t i = 0; i < w.size(); ++i) {
                            w.a[i] -= lr * g.a[i];
                        }
                    }
                }
                ++out.minibatch_steps;
            }
        }
    } catch (const NaNLoss&) {
        params = snapshot;
        throw;
    }
    return out;
}

double lr_schedule(double progress, double lr_initial, double lr_final) {
    if (progress < 0.0 || progress > 1.0) {
        throw std::invalid_argument("lr_schedule: progress outside [0, 1]");
    }
    return lr_initial + progress * (lr_final - lr_initial);
}

void std_clamp_callback(PolicyParams& params, double max_policy_std,
                        double std_reset_value) {
    if (params.kind != ActionKind::continuous || params.log_std.size() == 0) return;
    bool exceeded = false;
    for (const double ls : params.log_std.a) {
        if (std::exp(ls) > max_policy_std) exceeded = true;
    }
    if (!exceeded) return;
    for (double& ls : params.log_std.a) {
        ls = std::log(std::min(std::exp(ls), std_reset_value));
    }
}

TrainResult train(Env& env, const PPOConfig& config, std::size_t total_steps,
                  Rng& rng) {
    config.validate();
    const std::size_t action_dim =
        config.action_kind == ActionKind::discrete ? kNumDiscreteActions : 4;
    TrainResult out;
    out.params = PolicyParams::init(env.obs_dim(), action_dim, config.action_kind,
                                    config.hidden, config.dropout_rate, rng);
    AdamState adam;
    RolloutBuffer buf;
    buf.capacity = config.rollout_len;

    Observation obs;
    bool need_reset = true;
    double running_episode_reward = 0.0;
    std::size_t update_index = 0;

    while (out.total_env_steps < total_steps) {
        const double progress =
            std::min(1.0, static_cast<double>(out.total_env_steps) /
                              static_cast<double>(total_steps));
        const double lr = lr_schedule(progress, config.lr_initial, config.lr_final);

        buf.clear();
        std::vector<double> completed;
        for (std::size_t step = 0; step < config.rollout_len; ++step) {
            if (need_reset) {
                obs = env.reset(rng);
                need_reset = false;
            }
            const Mat x = Mat::row_vector(obs);
            const std::vector<double> head =
                mat_row(mlp_forward(out.params.policy, x, false, rng).output, 0);
            const double v =
                mlp_forward(out.params.value, x, false, rng).output.at(0, 0);
            const SampledAction act = sample_action(out.params, head, false, rng);
            const StepResult sr = config.action_kind == ActionKind::discrete
                                      ? env.step_discrete(act.discrete)
                                      : env.step_continuous(
                                            to_continuous_action(act.continuous));
            buf.observations.push_back(obs);
            buf.actions_disc.push_back(act.discrete);
            buf.actions_cont.push_back(act.continuous);
            buf.log_prob_old.push_back(act.log_prob);
            buf.rewards.push_back(sr.reward);
            buf.values.push_back(v);
            buf.dones.push_back(sr.done ? 1 : 0);
            running_episode_reward += sr.reward;
            if (sr.done) {
                completed.push_back(running_episode_reward);
                running_episode_reward = 0.0;
                need_reset = true;
            }
            obs = sr.observation;
            ++out.total_env_steps;
        }

        double bootstrap = 0.0;
        if (!buf.dones.back()) {
            const Mat x = Mat::row_vector(obs);
            bootstrap = mlp_forward(out.params.value, x, false, rng).output.at(0, 0);
        }
        const GaeResult g = gae(buf.rewards, buf.values, buf.dones, config.gamma,
                                config.gae_lambda, bootstrap);
        buf.advantages = g.advantages;
        buf.returns = g.returns;
        buf.normalize_advantages();

        const UpdateResult ur = update(out.params, buf, config, lr, rng, &adam);
        if (config.action_kind == ActionKind::continuous) {
            std_clamp_callback(out.params, config.max_policy_std,
                               config.std_reset_value);
        }

        LearningCurveRow row;
        row.update_index = update_index++;
        row.mean_reward = completed.empty()
                              ? std::accumulate(buf.rewards.begin(), buf.rewards.end(), 0.0)
                              : mean_of(completed);
        row.l_clip = ur.last_losses.l_clip;
        row.l_vf = ur.last_losses.l_vf;
        row.entropy = ur.last_losses.entropy;
        row.lr = lr;
        if (config.action_kind == ActionKind::continuous) {
            double s = 0.0;
            for (const double ls : out.params.log_std.a) s += std::exp(ls);
            row.policy_std = s / static_cast<double>(out.params.log_std.size());
        }
        out.curve.push_back(row);
    }
    return out;
}

EvalResult evaluate(const PolicyParams& params, Env& env, std::size_t episodes,
                    bool deterministic, Rng& rng) {
    if (episodes == 0) throw EmptyTrace();
    EvalResult out;
    Rng unused(0);
    for (std::size_t e = 0; e < episodes; ++e) {
        Observation obs = env.reset(rng);
        double total = 0.0;
        while (!env.done()) {
            const Mat x = Mat::row_vector(obs);
            const std::vector<double> head =
                mat_row(mlp_forward(params.policy, x, false, unused).output, 0);
            const SampledAction act = sample_action(params, head, deterministic, rng);
            const StepResult sr = params.kind == ActionKind::discrete
                                      ? env.step_discrete(act.discrete)
                                      : env.step_continuous(
                                            to_continuous_action(act.continuous));
            total += sr.reward;
            obs = sr.observation;
        }
        const EpisodeMetrics m = episode_metrics(env.trace(), env.scenario());
        out.mean_metrics.cost_cad += m.cost_cad;
        out.mean_metrics.island_fraction += m.island_fraction;
        out.mean_metrics.grid_load_fraction += m.grid_load_fraction;
        out.mean_metrics.unmet_fraction += m.unmet_fraction;
        out.episode_rewards.push_back(total);
    }
    const double n = static_cast<double>(episodes);
    out.mean_metrics.cost_cad /= n;
    out.mean_metrics.island_fraction /= n;
    out.mean_metrics.grid_load_fraction /= n;
    out.mean_metrics.unmet_fraction /= n;
    out.mean_reward = mean_of(out.episode_rewards);
    return out;
}

void save_checkpoint(const std::string& path, const PolicyParams& params,
                     std::uint64_t config_hash_value) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw CheckpointError("cannot open checkpoint for writing: " + path);
    os.write("MGRL0001", 8);
    os.put(params.kind == ActionKind::discrete ? 0 : 1);
    put_mlp(os, params.policy);
    put_mlp(os, params.value);
    binio::put_mat(os, params.log_std);
    binio::put_u64(os, config_hash_value);
    if (!os) throw CheckpointError("write failed: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw CheckpointError("cannot open checkpoint: " + path);
    try {
        char magic[8];
        binio::get_bytes(is, magic, 8);
        if (std::memcmp(magic, "MGRL", 4) != 0) {
            throw CheckpointError("not a policy checkpoint: " + path);
        }
        if (std::memcmp(magic + 4, "0001", 4) != 0) {
            throw CheckpointError("unsupported checkpoint version");
        }
        LoadedCheckpoint out;
        const int kind = is.get();
        if (kind != 0 && kind != 1) throw CheckpointError("corrupt checkpoint header");
        out.params.kind = kind == 0 ? ActionKind::discrete : ActionKind::continuous;
        out.params.policy = get_mlp(is);
        out.params.value = get_mlp(is);
        out.params.log_std = binio::get_mat(is);
        out.config_hash = binio::get_u64(is);
        return out;
    } catch (const binio::StreamError& e) {
        throw CheckpointError(std::string(e.what()) + ": " + path);
    }
}

void write_learning_curve_csv(const std::string& path,
                              const std::vector<LearningCurveRow>& curve) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open learning curve file: " + path);
    os << "update_index,mean_reward,l_clip,l_vf,entropy,lr,policy_std\n";
    char buf[512];
    for (const LearningCurveRow& r : curve) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      r.update_index, r.mean_reward, r.l_clip, r.l_vf, r.entropy,
                      r.lr, r.policy_std);
        os << buf;
    }
}

}  // namespace mg
