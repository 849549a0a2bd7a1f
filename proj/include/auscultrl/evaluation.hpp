#pragma once

// Evaluation harness: greedy rollouts, alarm metrics, the exhaustive
// 12-point baseline, and repeated k-fold cross-validation.

#include <algorithm>
#include <climits>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "cohort.hpp"
#include "dqn.hpp"
#include "environment.hpp"
#include "metrics.hpp"
#include "random.hpp"

namespace auscultrl {

// Baseline environment: every point is auscultated once, in order 1..12, at
// reset; the learner then only chooses which label to declare.
class StaticSweepEnv {
public:
    using exam_type = Examination;

    StaticSweepEnv() : base_(EnvConfig{0.0, 0.0, INT_MAX}) {}

    void reset(const Examination& exam, Rng& rng) {
        base_.reset(exam);
        for (int p = 1; p <= kPointCount; ++p) base_.step(Action::auscultate(p), rng);
    }

    static constexpr int observation_size() { return kStateSize; }
    static constexpr int action_count() { return kActionCount; }
    Eigen::VectorXd observation() const { return base_.observation(); }
    static constexpr ActionMask legal_actions() { return all_actions(kActionCount) & ~all_actions(kPointCount); }
    int acquisitions() const { return base_.acquisitions(); }

    EnvStep step_index(int action, Rng& rng) {
        if (!is_legal(legal_actions(), action)) throw PreconditionError("static baseline only accepts declarations");
        return base_.step_index(action, rng);
    }

    const StateMatrix& state() const { return base_.state(); }

private:
    AuscultationEnv base_;
};

enum class AgentKind { Interactive, Static };

struct EvalConfig {
    std::uint64_t seed = 0;
    EnvConfig env{};
    AgentKind agent = AgentKind::Interactive;
};

// Outcome of one greedy examination.
struct Rollout {
    std::string exam_id;
    int label = 0;
    std::optional<int> declared_label;
    bool predicted_alarm = false;
    bool limit_reached = false;
    int auscultations = 0;
    double total_reward = 0.0;
    std::vector<int> actions;
};

// Greedy (epsilon 0) rollouts; examination i uses its own noise stream
// derived from (seed, i), so results do not depend on evaluation order.
inline std::vector<Rollout> greedy_rollouts(const QNetwork& params, std::span<const Examination> exams,
                                            const EvalConfig& config) {
    std::vector<Rollout> out;
    out.reserve(exams.size());
    AuscultationEnv interactive(config.env);
    StaticSweepEnv sweep;
    for (std::size_t i = 0; i < exams.size(); ++i) {
        Rng rng(derive_seed(config.seed, {static_cast<std::uint64_t>(i)}));
        const EpisodeResult r = config.agent == AgentKind::Interactive
                                    ? run_episode(params, interactive, exams[i], 0.0, rng)
                                    : run_episode(params, sweep, exams[i], 0.0, rng);
        Rollout ro;
        ro.exam_id = exams[i].id;
        ro.label = exams[i].label;
        ro.declared_label = r.declared_label;
        ro.limit_reached = r.limit_reached;
        ro.auscultations = r.acquisitions;
        ro.total_reward = r.total_reward;
        ro.actions = r.actions;
        // A limit-hit episode counts as a wrong prediction.
        ro.predicted_alarm = r.declared_label ? merge_to_alarm(*r.declared_label) : !merge_to_alarm(ro.label);
        out.push_back(std::move(ro));
    }
    return out;
}

struct FoldRow {
    int repeat = 0;
    int fold = 0;
    std::size_t test_size = 0;
    double bac = 0.0;
    double f1_alarm = 0.0;
    double f1_not_alarm = 0.0;
    double mean_aps = 0.0;
};

struct EvalReport {
    double bac = 0.0;
    double f1_alarm = 0.0;
    double f1_not_alarm = 0.0;
    double mean_aps = 0.0;
    // Standard deviations across folds (zero for a single evaluation).
    double bac_std = 0.0;
    double f1_alarm_std = 0.0;
    double f1_not_alarm_std = 0.0;
    double mean_aps_std = 0.0;
    ConfusionCounts counts;
    std::size_t examinations = 0;
    std::size_t limit_hits = 0;
    bool degenerate = false;
    std::vector<FoldRow> folds;
};

inline EvalReport report_from_rollouts(std::span<const Rollout> rollouts) {
    EvalReport rep;
    double aps = 0.0;
    for (const auto& r : rollouts) {
        rep.counts.add(merge_to_alarm(r.label), r.predicted_alarm);
        aps += r.auscultations;
        if (r.limit_reached) ++rep.limit_hits;
    }
    rep.examinations = rollouts.size();
    const Score b = balanced_accuracy(rep.counts);
    const Score fa = f1(rep.counts, AlarmClass::Alarm);
    const Score fn = f1(rep.counts, AlarmClass::NotAlarm);
    rep.bac = b.value;
    rep.f1_alarm = fa.value;
    rep.f1_not_alarm = fn.value;
    rep.degenerate = b.degenerate || fa.degenerate || fn.degenerate;
    rep.mean_aps = rollouts.empty() ? 0.0 : aps / static_cast<double>(rollouts.size());
    return rep;
}

inline EvalReport evaluate_interactive(const QNetwork& params, std::span<const Examination> exams,
                                       EvalConfig config = {}) {
    config.agent = AgentKind::Interactive;
    const auto r = greedy_rollouts(params, exams, config);
    return report_from_rollouts(r);
}

inline EvalReport evaluate_static_model(const QNetwork& params, std::span<const Examination> exams,
                                        EvalConfig config = {}) {
    config.agent = AgentKind::Static;
    const auto r = greedy_rollouts(params, exams, config);
    return report_from_rollouts(r);
}

struct AgentTrainConfig {
    TrainConfig train{};
    EnvConfig env{};
    int validation_interval = 0; // 0: fifty checkpoints per run
    std::uint64_t validation_seed = 0;
};

// Trains either agent; when a validation set is supplied, the parameters with
// the best validation BAC are returned, fewer auscultations breaking ties.
inline TrainResult train_agent(AgentKind kind, std::span<const Examination> train_set,
                               std::span<const Examination> validation_set, const AgentTrainConfig& config) {
    TrainHooks hooks;
    if (!validation_set.empty()) {
        hooks.validation_interval =
            config.validation_interval > 0 ? config.validation_interval : std::max(1, config.train.episodes / 50);
        EvalConfig ec{config.validation_seed, config.env, kind};
        hooks.validate = [validation_set, ec](const QNetwork& p) {
            const auto rep = report_from_rollouts(greedy_rollouts(p, validation_set, ec));
            return ValidationScore{rep.bac, -rep.mean_aps};
        };
    }
    if (kind == AgentKind::Interactive) return train(AuscultationEnv(config.env), train_set, config.train, hooks);
    return train(StaticSweepEnv(), train_set, config.train, hooks);
}

// Trains the exhaustive-auscultation baseline and evaluates it on `test_set`.
inline EvalReport evaluate_static(std::span<const Examination> train_set, std::span<const Examination> validation_set,
                                  std::span<const Examination> test_set, const AgentTrainConfig& config,
                                  std::uint64_t eval_seed) {
    const auto trained = train_agent(AgentKind::Static, train_set, validation_set, config);
    return evaluate_static_model(trained.params, test_set, EvalConfig{eval_seed, config.env, AgentKind::Static});
}

struct FoldSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
};

// One repeat of k-fold partitioning: a shuffled permutation cut into `folds`
// contiguous test blocks; the rest of each fold is split train/validation in
// the ratio 365:91.
inline std::vector<FoldSplit> make_folds(std::size_t n, int folds, Rng& rng) {
    if (folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
    if (n < static_cast<std::size_t>(folds)) throw ConfigError("cross-validation: fewer examinations than folds");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<FoldSplit> out;
    for (int f = 0; f < folds; ++f) {
        const std::size_t lo = n * static_cast<std::size_t>(f) / static_cast<std::size_t>(folds);
        const std::size_t hi = n * static_cast<std::size_t>(f + 1) / static_cast<std::size_t>(folds);
        FoldSplit s;
        std::vector<std::size_t> rest;
        for (std::size_t i = 0; i < n; ++i) (i >= lo && i < hi ? s.test : rest).push_back(perm[i]);
        const auto n_val = static_cast<std::size_t>(std::lround(static_cast<double>(rest.size()) * 91.0 / 456.0));
        s.validation.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(n_val));
        s.train.assign(rest.begin() + static_cast<std::ptrdiff_t>(n_val), rest.end());
        out.push_back(std::move(s));
    }
    return out;
}

inline std::vector<Examination> gather(std::span<const Examination> exams, const std::vector<std::size_t>& idx) {
    std::vector<Examination> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(exams[i]);
    return out;
}

// Mean and sample standard deviation over the per-fold rows.
inline EvalReport aggregate_folds(std::vector<FoldRow> rows, const std::vector<EvalReport>& reports) {
    EvalReport agg;
    const auto n = static_cast<double>(rows.size());
    auto stats = [&](auto field, double& mean, double& sd) {
        mean = 0.0;
        for (const auto& r : rows) mean += r.*field;
        mean /= n;
        double ss = 0.0;
        for (const auto& r : rows) ss += (r.*field - mean) * (r.*field - mean);
        sd = rows.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    };
    if (!rows.empty()) {
        stats(&FoldRow::bac, agg.bac, agg.bac_std);
        stats(&FoldRow::f1_alarm, agg.f1_alarm, agg.f1_alarm_std);
        stats(&FoldRow::f1_not_alarm, agg.f1_not_alarm, agg.f1_not_alarm_std);
        stats(&FoldRow::mean_aps, agg.mean_aps, agg.mean_aps_std);
    }
    for (const auto& r : reports) {
        agg.counts.tp += r.counts.tp;
        agg.counts.fp += r.counts.fp;
        agg.counts.tn += r.counts.tn;
        agg.counts.fn += r.counts.fn;
        agg.examinations += r.examinations;
        agg.limit_hits += r.limit_hits;
        agg.degenerate = agg.degenerate || r.degenerate;
    }
    agg.folds = std::move(rows);
    return agg;
}

inline FoldRow fold_row(int repeat, int fold, const EvalReport& r) {
    return {repeat, fold, r.examinations, r.bac, r.f1_alarm, r.f1_not_alarm, r.mean_aps};
}

struct CvConfig {
    int folds = 5;
    int repeats = 30;
    std::uint64_t seed = 0;
    AgentKind agent = AgentKind::Interactive;
    AgentTrainConfig training{};
};

// Repeated k-fold cross-validation: a fresh agent is trained on every fold.
inline EvalReport cross_validate(std::span<const Examination> cohort, const CvConfig& config) {
    if (config.repeats < 1) throw ConfigError("cross-validation needs at least 1 repeat");
    std::vector<FoldRow> rows;
    std::vector<EvalReport> reports;
    for (int rep = 0; rep < config.repeats; ++rep) {
        Rng split_rng(derive_seed(config.seed, {static_cast<std::uint64_t>(rep)}));
        const auto splits = make_folds(cohort.size(), config.folds, split_rng);
        for (int f = 0; f < config.folds; ++f) {
            const auto& s = splits[static_cast<std::size_t>(f)];
            const auto train_set = gather(cohort, s.train);
            const auto val_set = gather(cohort, s.validation);
            const auto test_set = gather(cohort, s.test);
            AgentTrainConfig tc = config.training;
            const auto r64 = static_cast<std::uint64_t>(rep), f64 = static_cast<std::uint64_t>(f);
            tc.train.seed = derive_seed(config.seed, {r64, f64, 1});
            tc.validation_seed = derive_seed(config.seed, {r64, f64, 2});
            const auto trained = train_agent(config.agent, train_set, val_set, tc);
            const EvalReport r =
                report_from_rollouts(greedy_rollouts(trained.params, test_set,
                                                     EvalConfig{derive_seed(config.seed, {r64, f64, 3}), tc.env, config.agent}));
            rows.push_back(fold_row(rep, f, r));
            reports.push_back(r);
        }
    }
    return aggregate_folds(std::move(rows), reports);
}

// Same fold structure, but a fixed, already trained model is scored on every
// test fold (no training).
inline EvalReport cross_validate_model(const QNetwork& params, std::span<const Examination> cohort, int folds,
                                       int repeats, std::uint64_t seed, AgentKind agent = AgentKind::Interactive,
                                       EnvConfig env = {}) {
    if (repeats < 1) throw ConfigError("cross-validation needs at least 1 repeat");
    std::vector<FoldRow> rows;
    std::vector<EvalReport> reports;
    for (int rep = 0; rep < repeats; ++rep) {
        Rng split_rng(derive_seed(seed, {static_cast<std::uint64_t>(rep)}));
        const auto splits = make_folds(cohort.size(), folds, split_rng);
        for (int f = 0; f < folds; ++f) {
            const auto test_set = gather(cohort, splits[static_cast<std::size_t>(f)].test);
            const EvalReport r = report_from_rollouts(greedy_rollouts(
                params, test_set,
                EvalConfig{derive_seed(seed, {static_cast<std::uint64_t>(rep), static_cast<std::uint64_t>(f), 3}), env, agent}));
            rows.push_back(fold_row(rep, f, r));
            reports.push_back(r);
        }
    }
    return aggregate_folds(std::move(rows), reports);
}

inline nlohmann::json report_to_json(const EvalReport& r) {
    nlohmann::json folds = nlohmann::json::array();
    for (const auto& f : r.folds)
        folds.push_back({{"repeat", f.repeat},
                         {"fold", f.fold},
                         {"test_size", f.test_size},
                         {"bac", f.bac},
                         {"f1_alarm", f.f1_alarm},
                         {"f1_not_alarm", f.f1_not_alarm},
                         {"mean_aps", f.mean_aps}});
    return {{"bac", r.bac},
            {"f1_alarm", r.f1_alarm},
            {"f1_not_alarm", r.f1_not_alarm},
            {"mean_aps", r.mean_aps},
            {"bac_std", r.bac_std},
            {"f1_alarm_std", r.f1_alarm_std},
            {"f1_not_alarm_std", r.f1_not_alarm_std},
            {"mean_aps_std", r.mean_aps_std},
            {"confusion", {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"tn", r.counts.tn}, {"fn", r.counts.fn}}},
            {"examinations", r.examinations},
            {"limit_hits", r.limit_hits},
            {"degenerate", r.degenerate},
            {"folds", folds}};
}

inline void write_fold_table(const EvalReport& r, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write fold table " + path.string());
    out.precision(17);
    out << "repeat,fold,test_size,bac,f1_alarm,f1_not_alarm,mean_aps\n";
    for (const auto& f : r.folds)
        out << f.repeat << ',' << f.fold << ',' << f.test_size << ',' << f.bac << ',' << f.f1_alarm << ','
            << f.f1_not_alarm << ',' << f.mean_aps << '\n';
}

// Auscultation counts per point (index 0 = point 1) over a set of rollouts.
inline std::array<std::int64_t, kPointCount> point_histogram(std::span<const Rollout> rollouts) {
    std::array<std::int64_t, kPointCount> h{};
    for (const auto& r : rollouts)
        for (int a : r.actions)
            if (a < kPointCount) ++h[static_cast<std::size_t>(a)];
    return h;
}

} // namespace auscultrl
