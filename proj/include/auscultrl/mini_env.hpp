#pragma once

// Miniature feature-acquisition problem used as a dynamic-programming oracle:
// two points with binary, noiseless findings, two labels, the same reward
// structure as the full environment (correct 2.0, wrong -1.0, -0.01 per
// acquisition, -10.0 on hitting the acquisition limit). Small enough to
// enumerate exactly.

#include <array>
#include <cmath>
#include <map>
#include <queue>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "episode.hpp"
#include "errors.hpp"
#include "random.hpp"
#include "value_iteration.hpp"

namespace auscultrl {

struct MiniExam {
    std::array<int, 2> findings{}; // 0/1 per point
    int label = 0;                 // 0 not alarm, 1 alarm

    friend bool operator==(const MiniExam&, const MiniExam&) = default;
};

struct MiniExamType {
    MiniExam exam;
    double weight = 0.0;
};

struct MiniEnvConfig {
    std::vector<MiniExamType> types{
        {{{0, 0}, 0}, 0.45},
        {{{1, 0}, 1}, 0.40},
        {{{0, 1}, 1}, 0.05},
        {{{1, 1}, 1}, 0.10},
    };
    double step_penalty = -0.01;
    double limit_penalty = -10.0;
    int acquisition_limit = 4;
    double correct_reward = 2.0;
    double wrong_reward = -1.0;

    void validate() const {
        double w = 0.0;
        for (const auto& t : types) {
            if (!(t.weight >= 0.0)) throw ConfigError("mini env: negative weight");
            for (int f : t.exam.findings)
                if (f != 0 && f != 1) throw ConfigError("mini env: findings must be binary");
            if (t.exam.label != 0 && t.exam.label != 1) throw ConfigError("mini env: labels must be 0 or 1");
            w += t.weight;
        }
        if (types.empty() || std::abs(w - 1.0) > 1e-9) throw ConfigError("mini env: weights must sum to 1");
        if (acquisition_limit < 1) throw ConfigError("mini env: acquisition limit must be >= 1");
    }
};

// Actions: 0, 1 acquire point 1 or 2; 2, 3 declare label 0 or 1.
inline constexpr int kMiniActionCount = 4;
inline constexpr int kMiniObservationSize = 4;

struct MiniState {
    std::array<int, 2> counts{};
    std::array<int, 2> values{-1, -1}; // -1 until observed

    int total() const { return counts[0] + counts[1]; }
    friend auto operator<=>(const MiniState&, const MiniState&) = default;

    std::string to_string() const {
        auto one = [&](int i) {
            return values[static_cast<std::size_t>(i)] < 0 ? std::string("?")
                                                           : std::to_string(values[static_cast<std::size_t>(i)]) + "x" +
                                                                 std::to_string(counts[static_cast<std::size_t>(i)]);
        };
        return "[" + one(0) + "," + one(1) + "]";
    }
};

// [value1, count1 / limit, value2, count2 / limit]; unobserved values encode as 0.
inline Eigen::VectorXd encode_mini_state(const MiniState& s, int limit) {
    Eigen::VectorXd v(kMiniObservationSize);
    for (int i = 0; i < 2; ++i) {
        v[2 * i] = s.values[static_cast<std::size_t>(i)] > 0 ? 1.0 : 0.0;
        v[2 * i + 1] = static_cast<double>(s.counts[static_cast<std::size_t>(i)]) / limit;
    }
    return v;
}

class MiniEnv {
public:
    using exam_type = MiniExam;

    explicit MiniEnv(MiniEnvConfig config = {}) : config_(std::move(config)) { config_.validate(); }

    void reset(const MiniExam& exam, Rng&) {
        exam_ = &exam;
        state_ = MiniState{};
        done_ = false;
    }

    static constexpr int action_count() { return kMiniActionCount; }
    Eigen::VectorXd observation() const { return encode_mini_state(state_, config_.acquisition_limit); }
    ActionMask legal_actions() const { return all_actions(kMiniActionCount); }
    int acquisitions() const { return state_.total(); }
    const MiniState& state() const { return state_; }

    EnvStep step_index(int action, Rng&) {
        if (exam_ == nullptr || done_) throw StateError("mini env: step on finished or unstarted episode");
        if (action < 0 || action >= kMiniActionCount) throw RangeError("mini env: action out of range");
        EnvStep s;
        if (action >= 2) {
            const int label = action - 2;
            s.done = true;
            s.declared_label = label;
            s.correct = label == exam_->label;
            s.reward = s.correct ? config_.correct_reward : config_.wrong_reward;
        } else {
            state_.counts[static_cast<std::size_t>(action)] += 1;
            state_.values[static_cast<std::size_t>(action)] = exam_->findings[static_cast<std::size_t>(action)];
            s.reward = config_.step_penalty;
            if (state_.total() >= config_.acquisition_limit) {
                s.reward += config_.limit_penalty;
                s.done = true;
                s.limit_reached = true;
            }
        }
        done_ = s.done;
        return s;
    }

    const MiniEnvConfig& config() const { return config_; }

private:
    MiniEnvConfig config_;
    const MiniExam* exam_ = nullptr;
    MiniState state_{};
    bool done_ = false;
};

// Examinations in proportion to the type weights (weight * copies rounded).
inline std::vector<MiniExam> mini_cohort(const MiniEnvConfig& config, int copies = 20) {
    config.validate();
    std::vector<MiniExam> out;
    for (const auto& t : config.types) {
        const auto n = std::lround(t.weight * copies);
        for (long i = 0; i < n; ++i) out.push_back(t.exam);
    }
    return out;
}

struct MiniMdp {
    TabularMdp mdp;
    std::vector<MiniState> states; // index -> state; every entry is reachable and non-terminal
    int start = 0;
};

// Belief-state MDP of the miniature problem: states are observation histories,
// transitions follow the posterior over examination types. Only states reachable
// from the empty state with positive probability are enumerated.
inline MiniMdp build_mini_mdp(const MiniEnvConfig& config) {
    config.validate();
    MiniMdp out;
    std::map<MiniState, int> index;
    std::queue<MiniState> frontier;
    auto intern = [&](const MiniState& s) {
        auto it = index.find(s);
        if (it != index.end()) return it->second;
        const int id = static_cast<int>(out.states.size());
        index.emplace(s, id);
        out.states.push_back(s);
        frontier.push(s);
        return id;
    };
    auto consistent = [](const MiniExam& e, const MiniState& s) {
        for (std::size_t i = 0; i < 2; ++i)
            if (s.values[i] >= 0 && s.values[i] != e.findings[i]) return false;
        return true;
    };

    out.start = intern(MiniState{});
    std::vector<std::vector<std::vector<MdpOutcome>>> table;
    while (!frontier.empty()) {
        const MiniState s = frontier.front();
        frontier.pop();
        std::vector<const MiniExamType*> post;
        double mass = 0.0;
        for (const auto& t : config.types)
            if (t.weight > 0.0 && consistent(t.exam, s)) {
                post.push_back(&t);
                mass += t.weight;
            }
        std::vector<std::vector<MdpOutcome>> row(kMiniActionCount);
        for (int p = 0; p < 2; ++p) {
            std::map<int, double> by_value;
            for (const auto* t : post) by_value[t->exam.findings[static_cast<std::size_t>(p)]] += t->weight / mass;
            for (const auto& [value, prob] : by_value) {
                MiniState next = s;
                next.counts[static_cast<std::size_t>(p)] += 1;
                next.values[static_cast<std::size_t>(p)] = value;
                MdpOutcome o;
                o.probability = prob;
                o.reward = config.step_penalty;
                if (next.total() >= config.acquisition_limit) {
                    o.terminal = true;
                    o.reward += config.limit_penalty;
                } else {
                    o.next_state = intern(next);
                }
                row[static_cast<std::size_t>(p)].push_back(o);
            }
        }
        for (int label = 0; label < 2; ++label) {
            double expected = 0.0;
            for (const auto* t : post)
                expected += t->weight / mass * (t->exam.label == label ? config.correct_reward : config.wrong_reward);
            row[static_cast<std::size_t>(2 + label)].push_back({-1, 1.0, expected, true});
        }
        table.push_back(std::move(row));
    }
    out.mdp.action_count = kMiniActionCount;
    out.mdp.outcomes = std::move(table);
    return out;
}

} // namespace auscultrl
