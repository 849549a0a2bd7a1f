#pragma once

// Live guided examinations: a registry of read-only models and a manager of
// per-examiner sessions. Each submission updates the session state exactly as
// the offline environment would and returns the model's next greedy advice.

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "json.hpp"

#include "dqn.hpp"
#include "environment.hpp"
#include "errors.hpp"
#include "metrics.hpp"
#include "qnet.hpp"
#include "random.hpp"
#include "raster.hpp"

namespace auscultrl {

struct ModelEntry {
    std::string id;
    QNetwork params;
    nlohmann::json metadata = nlohmann::json::object();
};

class ModelRegistry {
public:
    void add(std::string id, QNetwork params, nlohmann::json metadata = nlohmann::json::object()) {
        if (params.input_size() != kStateSize || params.output_size() != kActionCount)
            throw StructureError("model '" + id + "' must map 108 inputs to 15 outputs");
        std::unique_lock lock(mutex_);
        auto entry = std::make_shared<const ModelEntry>(ModelEntry{id, std::move(params), std::move(metadata)});
        models_[id] = std::move(entry);
    }

    std::shared_ptr<const ModelEntry> find(const std::string& id) const {
        std::shared_lock lock(mutex_);
        auto it = models_.find(id);
        if (it == models_.end()) throw NotFoundError("unknown model '" + id + "'");
        return it->second;
    }

    std::vector<std::shared_ptr<const ModelEntry>> list() const {
        std::shared_lock lock(mutex_);
        std::vector<std::shared_ptr<const ModelEntry>> out;
        for (const auto& [id, m] : models_) out.push_back(m);
        return out;
    }

private:
    mutable std::shared_mutex mutex_;
    std::map<std::string, std::shared_ptr<const ModelEntry>> models_;
};

struct Advice {
    enum class Kind { Auscultate, Declare };
    Kind kind = Kind::Auscultate;
    int point = 0; // when auscultating
    int label = 0; // when declaring
    bool alarm = false;
    std::vector<double> q_values;
};

// Greedy advice of `params` on `state`.
inline Advice advise(const QNetwork& params, const StateMatrix& state) {
    const Eigen::VectorXd q = forward(params, flatten_state(state));
    const Action a = Action::from_index(greedy_action(q, all_actions(kActionCount)));
    Advice adv;
    adv.q_values.assign(q.data(), q.data() + q.size());
    if (a.is_auscultate()) {
        adv.kind = Advice::Kind::Auscultate;
        adv.point = a.point();
    } else {
        adv.kind = Advice::Kind::Declare;
        adv.label = a.label();
        adv.alarm = merge_to_alarm(a.label());
    }
    return adv;
}

enum class SessionStatus { Active, Declared, LimitReached, Expired };

inline const char* to_string(SessionStatus s) {
    switch (s) {
    case SessionStatus::Active: return "active";
    case SessionStatus::Declared: return "declared";
    case SessionStatus::LimitReached: return "limit_reached";
    case SessionStatus::Expired: return "expired";
    }
    return "unknown";
}

struct HistoryEntry {
    enum class Kind { Observation, Declaration };
    Kind kind = Kind::Observation;
    int point = 0;
    PhenomenaFeatures features;
    std::optional<int> advised_point; // what the model had advised before this observation
    int label = 0;
    bool alarm = false;
};

struct Session {
    std::string id;
    std::string model_id;
    StateMatrix state;
    std::vector<HistoryEntry> history;
    SessionStatus status = SessionStatus::Active;
    std::optional<Advice> advice; // empty once the limit is reached
    int auscultations = 0;
    std::vector<std::string> warnings; // from the most recent call only
};

// Rebuilds the state an offline environment reaches after the session's
// recorded observations.
inline StateMatrix replay_history(const std::vector<HistoryEntry>& history) {
    Examination placeholder;
    AuscultationEnv env;
    env.reset(placeholder);
    for (const auto& h : history)
        if (h.kind == HistoryEntry::Kind::Observation) env.apply(Action::auscultate(h.point), h.features);
    return env.state();
}

class SessionManager {
public:
    using Clock = std::function<std::chrono::steady_clock::time_point()>;

    explicit SessionManager(std::shared_ptr<const ModelRegistry> models,
                            std::chrono::seconds idle_timeout = std::chrono::minutes(30), std::uint64_t id_seed = 0,
                            Clock clock = [] { return std::chrono::steady_clock::now(); })
        : models_(std::move(models)), idle_timeout_(idle_timeout), clock_(std::move(clock)), id_rng_(id_seed) {}

    Session create_session(const std::string& model_id) {
        auto model = models_->find(model_id);
        purge_idle();
        auto slot = std::make_shared<Slot>();
        slot->model = model;
        slot->session.model_id = model_id;
        slot->touched = clock_();
        {
            std::lock_guard lock(mutex_);
            slot->session.id = next_id();
            sessions_[slot->session.id] = slot;
        }
        std::lock_guard lock(slot->mutex);
        refresh_advice(*slot);
        return slot->session;
    }

    Session submit_observation(const std::string& session_id, int point, const PhenomenaFeatures& features) {
        auto slot = find(session_id);
        std::lock_guard lock(slot->mutex);
        check_expiry(*slot);
        auto& s = slot->session;
        if (s.status != SessionStatus::Active)
            throw StateError("session '" + session_id + "' is " + to_string(s.status));
        if (point < 1 || point > kPointCount) throw RangeError("point must lie in 1..12");
        if (!features.in_unit_range()) throw RangeError("features must lie in [0,1]");
        s.warnings.clear();
        HistoryEntry h;
        h.point = point;
        h.features = features;
        if (s.advice && s.advice->kind == Advice::Kind::Auscultate) {
            h.advised_point = s.advice->point;
            if (s.advice->point != point)
                s.warnings.push_back("point " + std::to_string(point) + " submitted, point " +
                                     std::to_string(s.advice->point) + " was advised");
        }
        record_observation(s.state, point, features);
        s.history.push_back(h);
        ++s.auscultations;
        slot->touched = clock_();
        if (s.auscultations >= kPointCount) {
            s.status = SessionStatus::LimitReached;
            s.advice.reset();
            return s;
        }
        refresh_advice(*slot);
        return s;
    }

    Session submit_raster(const std::string& session_id, int point, const ProbabilityRaster& raster,
                          const FeatureConfig& config = {}) {
        return submit_observation(session_id, point, extract_features(raster, config));
    }

    Session get_session(const std::string& session_id) {
        auto slot = find(session_id);
        std::lock_guard lock(slot->mutex);
        check_expiry(*slot);
        return slot->session;
    }

    void close_session(const std::string& session_id) {
        std::lock_guard lock(mutex_);
        if (sessions_.erase(session_id) == 0) throw NotFoundError("unknown session '" + session_id + "'");
    }

    // Drops sessions idle for longer than twice the timeout; expired sessions
    // stay visible (status "expired") for one more timeout period.
    std::size_t purge_idle() {
        std::lock_guard lock(mutex_);
        const auto now = clock_();
        std::size_t n = 0;
        for (auto it = sessions_.begin(); it != sessions_.end();) {
            if (now - it->second->touched > 2 * idle_timeout_) {
                it = sessions_.erase(it);
                ++n;
            } else {
                ++it;
            }
        }
        return n;
    }

    std::size_t size() const {
        std::lock_guard lock(mutex_);
        return sessions_.size();
    }

    const ModelRegistry& models() const { return *models_; }

private:
    struct Slot {
        std::mutex mutex;
        Session session;
        std::shared_ptr<const ModelEntry> model;
        std::chrono::steady_clock::time_point touched;
    };

    std::shared_ptr<Slot> find(const std::string& id) {
        std::lock_guard lock(mutex_);
        auto it = sessions_.find(id);
        if (it == sessions_.end()) throw NotFoundError("unknown session '" + id + "'");
        return it->second;
    }

    void check_expiry(Slot& slot) {
        if (clock_() - slot.touched > idle_timeout_) slot.session.status = SessionStatus::Expired;
    }

    // Caller holds slot.mutex.
    void refresh_advice(Slot& slot) {
        auto& s = slot.session;
        s.advice = advise(slot.model->params, s.state);
        if (s.advice->kind == Advice::Kind::Declare) {
            s.status = SessionStatus::Declared;
            HistoryEntry h;
            h.kind = HistoryEntry::Kind::Declaration;
            h.label = s.advice->label;
            h.alarm = s.advice->alarm;
            s.history.push_back(h);
        }
    }

    // Caller holds mutex_.
    std::string next_id() {
        for (;;) {
            char buf[24];
            std::snprintf(buf, sizeof buf, "s-%016llx", static_cast<unsigned long long>(id_rng_()));
            if (!sessions_.contains(buf)) return buf;
        }
    }

    std::shared_ptr<const ModelRegistry> models_;
    std::chrono::seconds idle_timeout_;
    Clock clock_;
    mutable std::mutex mutex_;
    Rng id_rng_;
    std::map<std::string, std::shared_ptr<Slot>> sessions_;
};

inline nlohmann::json advice_to_json(const std::optional<Advice>& a) {
    if (!a) return nullptr;
    nlohmann::json j;
    if (a->kind == Advice::Kind::Auscultate) {
        j["type"] = "auscultate";
        j["point"] = a->point;
    } else {
        j["type"] = "declare";
        j["label"] = a->label;
        j["alarm"] = a->alarm;
    }
    j["q_values"] = a->q_values;
    return j;
}

inline nlohmann::json session_to_json(const Session& s) {
    nlohmann::json state = nlohmann::json::array();
    for (const auto& row : s.state.rows) state.push_back(row);
    nlohmann::json history = nlohmann::json::array();
    for (const auto& h : s.history) {
        if (h.kind == HistoryEntry::Kind::Observation) {
            nlohmann::json e{{"type", "observation"}, {"point", h.point}, {"features", h.features.values}};
            e["advised_point"] = h.advised_point ? nlohmann::json(*h.advised_point) : nlohmann::json(nullptr);
            history.push_back(e);
        } else {
            history.push_back({{"type", "declaration"}, {"label", h.label}, {"alarm", h.alarm}});
        }
    }
    return {{"session_id", s.id},
            {"model_id", s.model_id},
            {"status", to_string(s.status)},
            {"auscultations", s.auscultations},
            {"state", state},
            {"history", history},
            {"advice", advice_to_json(s.advice)},
            {"warnings", s.warnings}};
}

} // namespace auscultrl
