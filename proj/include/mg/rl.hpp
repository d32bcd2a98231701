#ifndef MG_RL_HPP
#define MG_RL_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mg/autodiff.hpp"
#include "mg/env.hpp"
#include "mg/rng.hpp"

namespace mg {

/// A loss became non-finite. Raised by the loss functions and by update,
/// which restores the pre-update parameters before throwing.
struct NaNLoss : std::runtime_error {
    NaNLoss() : std::runtime_error("non-finite loss") {}
};

struct CheckpointError : std::runtime_error {
    explicit CheckpointError(const std::string& what) : std::runtime_error(what) {}
};

/// Fully connected net: w[l] is in x out, b[l] is 1 x out. ReLU after every
/// layer except the last; inverted dropout after each hidden ReLU when a
/// forward pass runs in train mode.
struct Mlp {
    std::vector<Mat> w;
    std::vector<Mat> b;
    double dropout_rate = 0.0;

    std::size_t n_layers() const { return w.size(); }
    std::size_t in_dim() const { return w.empty() ? 0 : w.front().rows; }
    std::size_t out_dim() const { return w.empty() ? 0 : w.back().cols; }
};

/// Builds an MLP with the given hidden widths. Hidden weights use
/// normal(0, sqrt(2/fan_in)); the output layer is scaled by head_scale so a
/// policy head can start near-uniform.
Mlp make_mlp(std::size_t in_dim, const std::vector<std::size_t>& hidden,
             std::size_t out_dim, double dropout_rate, Rng& rng,
             double head_scale = 1.0);

struct MlpForwardResult {
    Mat output;
    std::vector<Mat> activations;  // post-ReLU, post-dropout hidden layers
};

/// Forward pass over a batch of row observations. Dropout masks are drawn
/// from rng only in train mode, with inverted scaling so the eval-mode
/// output equals the train-mode expectation.
MlpForwardResult mlp_forward(const Mlp& mlp, const Mat& input, bool train_mode,
                             Rng& rng);

enum class ActionKind { discrete, continuous };

/// Actor-critic parameter set. The policy head emits logits (discrete) or
/// means (continuous); continuous policies add a state-independent log_std
/// row vector.
struct PolicyParams {
    Mlp policy;
    Mlp value;
    Mat log_std;  // 1 x action_dim, continuous only
    ActionKind kind = ActionKind::discrete;

    static PolicyParams init(std::size_t obs_dim, std::size_t action_dim,
                             ActionKind kind, const std::vector<std::size_t>& hidden,
                             double dropout_rate, Rng& rng);

    std::size_t action_dim() const { return policy.out_dim(); }
    void validate() const;  // finite weights, dropout in [0, 0.5)
};

struct PPOConfig {
    double clip_eps = 0.2;
    double vf_coef = 0.5;
    double ent_coef = 0.01;
    double gamma = 0.99;
    double gae_lambda = 0.95;
    std::size_t epochs = 10;
    std::size_t minibatch_size = 64;
    double lr_initial = 3e-4;
    double lr_final = 1e-4;
    double max_policy_std = 1.0;
    double std_reset_value = 0.5;
    double kl_threshold = 0.03;
    double grad_norm_clip = 0.5;
    std::size_t rollout_len = 2016;
    std::vector<std::size_t> hidden = {512, 128, 64};
    double dropout_rate = 0.1;
    ActionKind action_kind = ActionKind::discrete;

    void validate() const;
};

std::uint64_t config_hash(const PPOConfig& config);

/// Fixed-length on-policy storage. Continuous actions use `actions_cont`
/// rows; discrete use `actions_disc`. Advantages and returns are filled by
/// gae(); advantages are normalized in place before the update.
struct RolloutBuffer {
    std::size_t capacity = 0;
    std::vector<Observation> observations;
    std::vector<int> actions_disc;
    std::vector<std::vector<double>> actions_cont;
    std::vector<double> log_prob_old;
    std::vector<double> rewards;
    std::vector<double> values;
    std::vector<std::uint8_t> dones;
    std::vector<double> advantages;
    std::vector<double> returns;

    std::size_t size() const { return observations.size(); }
    bool full() const { return size() == capacity && capacity > 0; }
    void clear();
    /// Mean 0, std 1 (guard epsilon 1e-8 on the std).
    void normalize_advantages();
};

struct GaeResult {
    std::vector<double> advantages;
    std::vector<double> returns;
};

/// delta_t = r_t + gamma*V_{t+1}*(1-done_t) - V_t, advantage recursion
/// A_t = delta_t + gamma*lambda*(1-done_t)*A_{t+1}, returns = A + V.
/// V_{T} is the supplied bootstrap value.
GaeResult gae(const std::vector<double>& rewards, const std::vector<double>& values,
              const std::vector<std::uint8_t>& dones, double gamma, double lambda,
              double bootstrap_value);

struct PpoLossTerms {
    double l_clip = 0.0;
    double l_vf = 0.0;
    double entropy = 0.0;
    double l_total = 0.0;  // -l_clip + vf_coef*l_vf - ent_coef*entropy
};

/// Losses over the whole buffer, eval-mode forward (no dropout).
/// Throws NaNLoss when any term is non-finite.
PpoLossTerms ppo_losses(const RolloutBuffer& batch, const PolicyParams& params,
                        const PPOConfig& config);

struct PpoBackwardResult {
    PpoLossTerms losses;
    /// Gradients of l_total, ordered policy (w0,b0,w1,b1,...), value
    /// (w0,b0,...), then log_std for continuous policies.
    std::vector<Mat> grads;
    double approx_kl = 0.0;  // mean(log_prob_old - log_prob_new)
};

/// Loss and gradients over the rows of `batch` selected by `index`. When
/// train_mode is set, dropout masks are drawn from rng per hidden layer.
PpoBackwardResult ppo_backward(const RolloutBuffer& batch,
                               const std::vector<std::size_t>& index,
                               const PolicyParams& params, const PPOConfig& config,
                               bool train_mode, Rng& rng);

/// First-moment/second-moment state for Adam, one slot per tensor in the
/// ppo_backward gradient order.
struct AdamState {
    std::vector<Mat> m;
    std::vector<Mat> v;
    long step = 0;
};

struct UpdateResult {
    PpoLossTerms last_losses;
    double approx_kl = 0.0;
    std::size_t minibatch_steps = 0;
    bool kl_stopped = false;
};

/// Epochs of shuffled minibatch steps on the clipped-surrogate total loss.
/// Gradients are clipped to grad_norm_clip (global norm); the epoch loop
/// stops early once approximate KL exceeds kl_threshold. Plain gradient
/// descent unless an AdamState is supplied. A non-finite loss restores the
/// entry parameters and throws NaNLoss.
UpdateResult update(PolicyParams& params, const RolloutBuffer& buffer,
                    const PPOConfig& config, double lr, Rng& rng,
                    AdamState* adam = nullptr);

/// lr_initial + progress * (lr_final - lr_initial), progress in [0, 1].
double lr_schedule(double progress, double lr_initial, double lr_final);

/// If any exp(log_std) exceeds max_policy_std, every entry is reassigned to
/// min(current std, std_reset_value). No-op otherwise, and for discrete
/// policies.
void std_clamp_callback(PolicyParams& params, double max_policy_std,
                        double std_reset_value);

struct LearningCurveRow {
    std::size_t update_index = 0;
    double mean_reward = 0.0;
    double l_clip = 0.0;
    double l_vf = 0.0;
    double entropy = 0.0;
    double lr = 0.0;
    double policy_std = 0.0;  // mean std for continuous, 0 for discrete
};

struct TrainResult {
    PolicyParams params;
    std::vector<LearningCurveRow> curve;
    std::size_t total_env_steps = 0;
};

/// rollout -> GAE -> normalized advantages -> update -> std clamp, repeated
/// until total_steps env steps have been collected. Rollout actions are
/// sampled from eval-mode forwards; update passes run train-mode.
/// Deterministic given the seed carried by rng.
TrainResult train(Env& env, const PPOConfig& config, std::size_t total_steps,
                  Rng& rng);

struct EvalResult {
    EpisodeMetrics mean_metrics;
    double mean_reward = 0.0;
    std::vector<double> episode_rewards;
};

/// Runs full episodes with mode actions (deterministic) or sampled actions.
/// Throws EmptyTrace when episodes == 0.
EvalResult evaluate(const PolicyParams& params, Env& env, std::size_t episodes,
                    bool deterministic, Rng& rng);

/// Versioned binary checkpoint: 8-byte magic "MGRL0001", action kind,
/// dropout rate, layer shapes and weights for both nets, log_std, then the
/// config hash of the producing run.
void save_checkpoint(const std::string& path, const PolicyParams& params,
                     std::uint64_t config_hash_value);

struct LoadedCheckpoint {
    PolicyParams params;
    std::uint64_t config_hash = 0;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

/// CSV: update_index,mean_reward,l_clip,l_vf,entropy,lr,policy_std.
void write_learning_curve_csv(const std::string& path,
                              const std::vector<LearningCurveRow>& curve);

}  // namespace mg

#endif  // MG_RL_HPP
