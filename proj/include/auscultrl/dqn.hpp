#pragma once

// Deep Q-learning: epsilon-greedy action selection, Bellman targets computed
// with a periodically synchronized target network, experience replay and the
// episode/training loops. Environments plug in through QEnvironment.

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"

#include "episode.hpp"
#include "errors.hpp"
#include "qnet.hpp"
#include "random.hpp"
#include "replay.hpp"

namespace auscultrl {

template <class E>
concept QEnvironment = requires(E& env, const E& cenv, const typename E::exam_type& exam, int a, Rng& rng) {
    env.reset(exam, rng);
    { cenv.observation() } -> std::convertible_to<Eigen::VectorXd>;
    { env.step_index(a, rng) } -> std::same_as<EnvStep>;
    { cenv.legal_actions() } -> std::convertible_to<ActionMask>;
    { cenv.action_count() } -> std::convertible_to<int>;
    { cenv.acquisitions() } -> std::convertible_to<int>;
};

struct TrainConfig {
    int episodes = 200;
    double gamma = 0.93;
    AdamConfig adam{};
    std::size_t replay_capacity = 10000;
    std::size_t batch_size = 32;
    int target_sync_interval = 100; // in update steps
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    double epsilon_decay_fraction = 0.7; // share of episodes over which epsilon anneals linearly
    int updates_per_step = 1;
    std::vector<int> layer_sizes = default_layer_sizes();
    std::uint64_t seed = 0;

    void validate() const {
        if (episodes < 0) throw ConfigError("train: episodes must be >= 0");
        if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("train: gamma must lie in [0,1)");
        if (!(adam.lr > 0.0)) throw ConfigError("train: learning rate must be positive");
        if (replay_capacity == 0 || batch_size == 0) throw ConfigError("train: replay capacity and batch size must be positive");
        if (target_sync_interval <= 0 || updates_per_step <= 0) throw ConfigError("train: intervals must be positive");
        auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
        if (!unit(epsilon_start) || !unit(epsilon_end)) throw ConfigError("train: epsilon must lie in [0,1]");
        if (!(epsilon_decay_fraction > 0.0 && epsilon_decay_fraction <= 1.0))
            throw ConfigError("train: epsilon decay fraction must lie in (0,1]");
    }

    nlohmann::json to_json() const {
        return {{"episodes", episodes},
                {"gamma", gamma},
                {"lr", adam.lr},
                {"replay_capacity", replay_capacity},
                {"batch_size", batch_size},
                {"target_sync_interval", target_sync_interval},
                {"epsilon_start", epsilon_start},
                {"epsilon_end", epsilon_end},
                {"epsilon_decay_fraction", epsilon_decay_fraction},
                {"updates_per_step", updates_per_step},
                {"layer_sizes", layer_sizes},
                {"seed", seed}};
    }
};

// Linear anneal from epsilon_start to epsilon_end, then constant.
inline double epsilon_at(const TrainConfig& c, int episode) {
    const double horizon = c.epsilon_decay_fraction * static_cast<double>(c.episodes);
    if (horizon <= 0.0 || episode >= horizon) return c.epsilon_end;
    const double frac = static_cast<double>(episode) / horizon;
    return c.epsilon_start + (c.epsilon_end - c.epsilon_start) * frac;
}

// Highest Q among legal actions; ties go to the lowest index.
inline int greedy_action(const Eigen::VectorXd& q, ActionMask legal) {
    int best = -1;
    for (int a = 0; a < static_cast<int>(q.size()); ++a) {
        if (!is_legal(legal, a)) continue;
        if (best < 0 || q[a] > q[best]) best = a;
    }
    if (best < 0) throw PreconditionError("greedy_action: no legal action");
    return best;
}

inline int select_action(const Eigen::VectorXd& q, double epsilon, Rng& rng,
                         ActionMask legal = ~ActionMask{0}) {
    legal &= all_actions(static_cast<int>(q.size()));
    if (legal == 0) throw PreconditionError("select_action: no legal action");
    if (uniform(rng, 0.0, 1.0) < epsilon) {
        int k = uniform_int(rng, 0, legal_count(legal) - 1);
        for (int a = 0; a < static_cast<int>(q.size()); ++a)
            if (is_legal(legal, a) && k-- == 0) return a;
    }
    return greedy_action(q, legal);
}

inline double bellman_target(double reward, bool done, double max_next_q, double gamma) {
    return done ? reward : reward + gamma * max_next_q;
}

// One replay update. Returns the batch loss, or nullopt (and leaves everything
// untouched) when the buffer holds fewer than batch_size transitions.
inline std::optional<double> train_step(QNetwork& params, const QNetwork& target_params, AdamState& adam,
                                        const ReplayBuffer& buffer, const TrainConfig& config, Rng& rng,
                                        BackpropWorkspace* workspace = nullptr) {
    if (buffer.size() < config.batch_size) return std::nullopt;
    const auto idx = buffer.sample_indices(config.batch_size, rng);
    const Eigen::Index b = static_cast<Eigen::Index>(idx.size());
    const Eigen::Index in = params.input_size();
    QBatch batch{Eigen::MatrixXd(in, b), std::vector<int>(idx.size()), Eigen::VectorXd(b)};
    Eigen::MatrixXd next(in, b);
    for (Eigen::Index j = 0; j < b; ++j) {
        const Transition& t = buffer[idx[static_cast<std::size_t>(j)]];
        batch.states.col(j) = t.state;
        batch.actions[static_cast<std::size_t>(j)] = t.action;
        next.col(j) = t.done ? Eigen::VectorXd(t.state) : t.next_state;
    }
    const Eigen::MatrixXd next_q = forward_batch(target_params, next);
    for (Eigen::Index j = 0; j < b; ++j) {
        const Transition& t = buffer[idx[static_cast<std::size_t>(j)]];
        double max_next = 0.0;
        if (!t.done) max_next = next_q.col(j)[greedy_action(next_q.col(j), t.next_legal)];
        batch.targets[j] = bellman_target(t.reward, t.done, max_next, config.gamma);
    }
    BackpropWorkspace local;
    BackpropWorkspace& ws = workspace != nullptr ? *workspace : local;
    const double loss = loss_and_gradients(params, batch, ws);
    adam_step(params, adam, ws.grads);
    return loss;
}

struct EpisodeResult {
    double total_reward = 0.0;
    int steps = 0;
    int acquisitions = 0;
    std::optional<int> declared_label;
    bool correct = false;
    bool limit_reached = false;
    std::vector<int> actions;
};

// Plays one epsilon-greedy episode. Every transition goes to `buffer` when
// one is supplied; `after_step` runs after each push (used for replay updates).
template <QEnvironment Env, class AfterStep = void (*)()>
EpisodeResult run_episode(const QNetwork& params, Env& env, const typename Env::exam_type& exam, double epsilon,
                          Rng& rng, ReplayBuffer* buffer = nullptr, AfterStep&& after_step = [] {}) {
    env.reset(exam, rng);
    EpisodeResult r;
    Eigen::VectorXd obs = env.observation();
    for (;;) {
        const ActionMask legal = env.legal_actions();
        const Eigen::VectorXd q = forward(params, obs);
        const int a = select_action(q, epsilon, rng, legal);
        const EnvStep s = env.step_index(a, rng);
        Eigen::VectorXd next = env.observation();
        r.total_reward += s.reward;
        ++r.steps;
        r.actions.push_back(a);
        if (buffer != nullptr) {
            buffer->push({obs, a, s.reward, next, s.done, s.done ? ActionMask{0} : env.legal_actions()});
            after_step();
        }
        if (s.done) {
            r.declared_label = s.declared_label;
            r.correct = s.correct;
            r.limit_reached = s.limit_reached;
            break;
        }
        obs = std::move(next);
    }
    r.acquisitions = env.acquisitions();
    return r;
}

struct LearningCurves {
    std::vector<double> rewards;
    std::vector<int> acquisitions;
};

inline void write_curves(const LearningCurves& c, const std::filesystem::path& reward_path,
                         const std::filesystem::path& acquisition_path) {
    std::ofstream r(reward_path), a(acquisition_path);
    if (!r || !a) throw Error("cannot write learning curves");
    r.precision(17);
    r << "episode,total_reward\n";
    a << "episode,auscultation_count\n";
    for (std::size_t i = 0; i < c.rewards.size(); ++i) {
        r << i + 1 << ',' << c.rewards[i] << '\n';
        a << i + 1 << ',' << c.acquisitions[i] << '\n';
    }
}

// Compared lexicographically, higher is better on both keys.
struct ValidationScore {
    double score = 0.0;
    double tiebreak = 0.0;
};

struct TrainHooks {
    // When set, the best-scoring parameters are returned; full ties go to the later checkpoint.
    std::function<ValidationScore(const QNetwork&)> validate;
    int validation_interval = 0; // episodes between validations
};

struct TrainResult {
    QNetwork params;
    AdamState adam;
    LearningCurves curves;
    std::int64_t updates = 0;
    std::optional<ValidationScore> best_validation;
    int best_episode = -1; // episodes completed when the returned params were captured
};

template <QEnvironment Env>
TrainResult train(Env env, std::span<const typename Env::exam_type> cohort, const TrainConfig& config,
                  const TrainHooks& hooks = {}) {
    config.validate();
    if (cohort.empty()) throw PreconditionError("train: empty cohort");
    TrainResult out;
    out.params = init_params(derive_seed(config.seed, {0x1417}), config.layer_sizes);
    if (out.params.input_size() != static_cast<int>(env.observation().size()) ||
        out.params.output_size() != env.action_count())
        throw ConfigError("train: layer sizes do not match the environment");
    out.adam = AdamState::for_params(out.params, config.adam);
    QNetwork target = out.params;
    ReplayBuffer buffer(config.replay_capacity);
    BackpropWorkspace workspace;
    Rng rng(config.seed);
    std::uniform_int_distribution<std::size_t> pick(0, cohort.size() - 1);

    const bool validating = static_cast<bool>(hooks.validate) && hooks.validation_interval > 0;
    QNetwork best;
    auto consider = [&](int episodes_done) {
        const auto score = hooks.validate(out.params);
        const auto& b = out.best_validation;
        if (!b || score.score > b->score || (score.score == b->score && score.tiebreak >= b->tiebreak)) {
            out.best_validation = score;
            out.best_episode = episodes_done;
            best = out.params;
        }
    };

    auto update = [&] {
        for (int u = 0; u < config.updates_per_step; ++u) {
            if (!train_step(out.params, target, out.adam, buffer, config, rng, &workspace)) return;
            if (++out.updates % config.target_sync_interval == 0) {
                for (std::size_t k = 0; k < target.layers.size(); ++k) {
                    target.layers[k].weights = out.params.layers[k].weights;
                    target.layers[k].bias = out.params.layers[k].bias;
                }
            }
        }
    };

    for (int ep = 0; ep < config.episodes; ++ep) {
        const auto& exam = cohort[pick(rng)];
        const auto r = run_episode(out.params, env, exam, epsilon_at(config, ep), rng, &buffer, update);
        out.curves.rewards.push_back(r.total_reward);
        out.curves.acquisitions.push_back(r.acquisitions);
        if (validating && ((ep + 1) % hooks.validation_interval == 0 || ep + 1 == config.episodes)) consider(ep + 1);
    }
    if (validating && out.best_validation) out.params = std::move(best);
    return out;
}

} // namespace auscultrl
