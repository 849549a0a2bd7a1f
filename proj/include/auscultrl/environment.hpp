#pragma once

// The auscultation decision process: a 12x9 state (8 features and a visit
// counter per point), 15 actions (auscultate one of 12 points or declare one
// of 3 labels), and the reward/termination rules.

#include <array>
#include <cmath>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "cohort.hpp"
#include "episode.hpp"
#include "errors.hpp"
#include "features.hpp"
#include "random.hpp"

namespace auscultrl {

inline constexpr int kStateColumns = static_cast<int>(kFeatureCount) + 1;
inline constexpr int kStateSize = kPointCount * kStateColumns; // 108
inline constexpr int kActionCount = kPointCount + kLabelCount; // 15

struct StateMatrix {
    std::array<std::array<double, kStateColumns>, kPointCount> rows{};

    // point is 1-based
    double count(int point) const { return rows.at(static_cast<std::size_t>(point - 1))[kFeatureCount]; }

    PhenomenaFeatures features(int point) const {
        PhenomenaFeatures f;
        const auto& r = rows.at(static_cast<std::size_t>(point - 1));
        for (std::size_t i = 0; i < kFeatureCount; ++i) f[i] = r[i];
        return f;
    }

    int total_auscultations() const {
        double s = 0.0;
        for (const auto& r : rows) s += r[kFeatureCount];
        return static_cast<int>(std::lround(s));
    }

    friend bool operator==(const StateMatrix&, const StateMatrix&) = default;
};

// Action indices 0..11 auscultate points 1..12; 12..14 declare labels 0..2.
class Action {
public:
    static Action auscultate(int point) {
        if (point < 1 || point > kPointCount) throw RangeError("action: point " + std::to_string(point) + " outside 1..12");
        return Action(point - 1);
    }
    static Action declare(int label) {
        if (label < 0 || label >= kLabelCount) throw RangeError("action: label " + std::to_string(label) + " outside {0,1,2}");
        return Action(kPointCount + label);
    }
    static Action from_index(int index) {
        if (index < 0 || index >= kActionCount) throw RangeError("action: index " + std::to_string(index) + " outside 0..14");
        return Action(index);
    }

    int index() const { return index_; }
    bool is_auscultate() const { return index_ < kPointCount; }
    bool is_declare() const { return !is_auscultate(); }
    int point() const { return index_ + 1; }           // valid when is_auscultate()
    int label() const { return index_ - kPointCount; } // valid when is_declare()

    std::string to_string() const {
        return is_auscultate() ? "auscultate(" + std::to_string(point()) + ")"
                               : "declare(" + std::to_string(label()) + ")";
    }

    friend bool operator==(const Action&, const Action&) = default;

private:
    explicit Action(int index) : index_(index) {}
    int index_;
};

// Reward for declaring `predicted` when the truth is `actual`.
inline double decision_reward(int actual, int predicted) {
    static constexpr double table[kLabelCount][kLabelCount] = {
        {2.0, 0.0, -1.0},
        {0.0, 2.0, -0.5},
        {-1.0, -0.5, 2.0},
    };
    if (actual < 0 || actual >= kLabelCount || predicted < 0 || predicted >= kLabelCount)
        throw RangeError("decision_reward: labels must lie in {0,1,2}");
    return table[actual][predicted];
}

struct EnvConfig {
    double step_penalty = -0.01;
    double limit_penalty = -10.0;
    int auscultation_limit = 12;
};

struct StepOutcome {
    StateMatrix next_state;
    double reward = 0.0;
    bool done = false;
    std::optional<int> declared_label;
    int auscultations = 0;
    bool limit_reached = false;
};

// Network input encoding: row-major, counter column divided by 12.
inline Eigen::VectorXd flatten_state(const StateMatrix& s) {
    Eigen::VectorXd v(kStateSize);
    for (int p = 0; p < kPointCount; ++p)
        for (int c = 0; c < kStateColumns; ++c) {
            double x = s.rows[static_cast<std::size_t>(p)][static_cast<std::size_t>(c)];
            v[p * kStateColumns + c] = c == static_cast<int>(kFeatureCount) ? x / kPointCount : x;
        }
    return v;
}

inline StateMatrix unflatten_state(const Eigen::VectorXd& v) {
    if (v.size() != kStateSize) throw StructureError("unflatten_state: expected 108 entries");
    StateMatrix s;
    for (int p = 0; p < kPointCount; ++p)
        for (int c = 0; c < kStateColumns; ++c) {
            double x = v[p * kStateColumns + c];
            s.rows[static_cast<std::size_t>(p)][static_cast<std::size_t>(c)] =
                c == static_cast<int>(kFeatureCount) ? std::round(x * kPointCount) : x;
        }
    return s;
}

// Overwrites the features of `point` and bumps its counter. Shared by the
// environment and by live sessions so both produce identical states.
inline void record_observation(StateMatrix& s, int point, const PhenomenaFeatures& f) {
    if (point < 1 || point > kPointCount) throw RangeError("record_observation: point outside 1..12");
    if (!f.in_unit_range()) throw RangeError("record_observation: features outside [0,1]");
    auto& row = s.rows[static_cast<std::size_t>(point - 1)];
    for (std::size_t i = 0; i < kFeatureCount; ++i) row[i] = f[i];
    row[kFeatureCount] += 1.0;
}

class AuscultationEnv {
public:
    using exam_type = Examination;

    explicit AuscultationEnv(EnvConfig config = {}) : config_(config) {}

    const StateMatrix& reset(const Examination& exam) {
        exam_ = &exam;
        state_ = StateMatrix{};
        auscultations_ = 0;
        done_ = false;
        return state_;
    }
    const StateMatrix& reset(const Examination& exam, Rng&) { return reset(exam); }

    StepOutcome step(Action action, Rng& rng) {
        check_running();
        if (action.is_declare()) return apply(action, PhenomenaFeatures{});
        return apply(action, observe_point(*exam_, action.point(), rng));
    }

    // Same transition as step(), but an auscultation records the supplied
    // observation instead of sampling one. Used to replay recorded sessions.
    StepOutcome apply(Action action, const PhenomenaFeatures& observed) {
        check_running();
        StepOutcome out;
        if (action.is_declare()) {
            out.reward = decision_reward(exam_->label, action.label());
            out.done = true;
            out.declared_label = action.label();
        } else {
            record_observation(state_, action.point(), observed);
            ++auscultations_;
            out.reward = config_.step_penalty;
            if (auscultations_ >= config_.auscultation_limit) {
                out.reward += config_.limit_penalty;
                out.done = true;
                out.limit_reached = true;
            }
        }
        done_ = out.done;
        out.next_state = state_;
        out.auscultations = auscultations_;
        return out;
    }

    // Learner-facing interface.
    static constexpr int observation_size() { return kStateSize; }
    static constexpr int action_count() { return kActionCount; }
    Eigen::VectorXd observation() const { return flatten_state(state_); }
    ActionMask legal_actions() const { return all_actions(kActionCount); }
    int acquisitions() const { return auscultations_; }

    EnvStep step_index(int action, Rng& rng) {
        auto o = step(Action::from_index(action), rng);
        EnvStep s;
        s.reward = o.reward;
        s.done = o.done;
        s.declared_label = o.declared_label;
        s.correct = o.declared_label && *o.declared_label == exam_->label;
        s.limit_reached = o.limit_reached;
        return s;
    }

    const StateMatrix& state() const { return state_; }
    bool done() const { return done_; }
    const EnvConfig& config() const { return config_; }
    const Examination* exam() const { return exam_; }

private:
    void check_running() const {
        if (exam_ == nullptr) throw StateError("step: environment was never reset");
        if (done_) throw StateError("step: episode already finished");
    }

    EnvConfig config_;
    const Examination* exam_ = nullptr;
    StateMatrix state_{};
    int auscultations_ = 0;
    bool done_ = false;
};

} // namespace auscultrl
