#pragma once

// Synthetic examination cohort: a ground-truth label plus 12 latent per-point
// feature profiles, noisy per-point observation, and optional raster rendering
// for exercising the full extraction pipeline.

#include <algorithm>
#include <cctype>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "errors.hpp"
#include "features.hpp"
#include "random.hpp"
#include "raster.hpp"

namespace auscultrl {

inline constexpr int kPointCount = 12;
inline constexpr int kLabelCount = 3;

struct Examination {
    std::string id;
    int label = 0; // 0 no changes, 1 innocent changes, 2 significant changes (alarm)
    std::array<PhenomenaFeatures, kPointCount> profiles{};
    double noise_sigma = 0.0;

    // point is 1-based
    const PhenomenaFeatures& profile(int point) const { return profiles.at(static_cast<std::size_t>(point - 1)); }

    friend bool operator==(const Examination&, const Examination&) = default;
};

struct RealRange {
    double lo = 0.0;
    double hi = 0.0;
};

struct IntRange {
    int lo = 0;
    int hi = 0;
};

struct CohortConfig {
    // Class balance of 200 / 85 / 285 examinations.
    std::array<double, kLabelCount> label_priors{200.0 / 570.0, 85.0 / 570.0, 285.0 / 570.0};
    std::array<IntRange, kLabelCount> pathological_points{{{0, 0}, {1, 1}, {2, 6}}};
    // Max-probability latent range of the affected points, per label. Label 0 has
    // no affected points; its range is unused.
    std::array<RealRange, kLabelCount> intensity{{{0.0, 0.1}, {0.2, 0.5}, {0.6, 1.0}}};
    // Relative-duration latent for a phenomenon whose max-probability reaches
    // duration_threshold; below it the duration latent is zero.
    RealRange duration{0.3, 1.0};
    double duration_threshold = 0.5;
    // All unaffected latents are drawn below this ceiling.
    double benign_ceiling = 0.1;
    // Affected points prefer these points.
    std::vector<int> favored_points{2, 4, 9, 11, 12};
    double favored_mass = 0.85;
    // Chance that an affected phenomenon shows up in a given breath phase.
    double phase_presence = 0.75;
    double noise_sigma = 0.05;
    std::uint64_t seed = 0;

    void validate() const {
        double sum = 0.0;
        for (double p : label_priors) {
            if (!(p >= 0.0)) throw ConfigError("cohort: label priors must be nonnegative");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("cohort: label priors must sum to 1");
        auto in_unit = [](RealRange r) { return r.lo >= 0.0 && r.hi <= 1.0 && r.lo <= r.hi; };
        for (int l = 0; l < kLabelCount; ++l) {
            if (!in_unit(intensity[l])) throw ConfigError("cohort: intensity ranges must lie in [0,1]");
            const auto pp = pathological_points[l];
            if (pp.lo < 0 || pp.hi > kPointCount || pp.lo > pp.hi)
                throw ConfigError("cohort: pathological point counts must lie in [0,12]");
        }
        if (pathological_points[0].hi != 0) throw ConfigError("cohort: label 0 cannot have affected points");
        if (!in_unit(duration)) throw ConfigError("cohort: duration range must lie in [0,1]");
        if (!(benign_ceiling > 0.0 && benign_ceiling <= 1.0)) throw ConfigError("cohort: benign ceiling must lie in (0,1]");
        if (!(favored_mass >= 0.0 && favored_mass <= 1.0)) throw ConfigError("cohort: favored mass must lie in [0,1]");
        if (!(phase_presence > 0.0 && phase_presence <= 1.0)) throw ConfigError("cohort: phase presence must lie in (0,1]");
        for (int p : favored_points)
            if (p < 1 || p > kPointCount) throw ConfigError("cohort: favored point out of range");
        if (!(noise_sigma >= 0.0)) throw ConfigError("cohort: noise sigma must be >= 0");
    }
};

namespace detail {

inline void fill_benign(PhenomenaFeatures& f, Rng& rng, double ceiling) {
    for (Phenomenon p : {Phenomenon::Wheeze, Phenomenon::Crackle})
        for (BreathPhase ph : {BreathPhase::Inspiration, BreathPhase::Expiration}) {
            f.at(p, ph, EventStatistic::MaxProbability) = uniform(rng, 0.0, ceiling);
            f.at(p, ph, EventStatistic::RelativeDuration) = 0.0;
        }
}

// Marks one or both phenomena of a point as affected with the given intensity range.
inline void fill_affected(PhenomenaFeatures& f, Rng& rng, const CohortConfig& cfg, RealRange intensity) {
    const int which = uniform_int(rng, 0, 2); // wheeze, crackle, both
    for (Phenomenon p : {Phenomenon::Wheeze, Phenomenon::Crackle}) {
        const bool chosen = which == 2 || which == static_cast<int>(p);
        if (!chosen) continue;
        std::array<bool, 2> present{};
        do {
            present[0] = uniform(rng, 0.0, 1.0) < cfg.phase_presence;
            present[1] = uniform(rng, 0.0, 1.0) < cfg.phase_presence;
        } while (!present[0] && !present[1]);
        for (BreathPhase ph : {BreathPhase::Inspiration, BreathPhase::Expiration}) {
            if (!present[static_cast<std::size_t>(ph)]) continue;
            const double m = intensity.hi > intensity.lo ? uniform(rng, intensity.lo, intensity.hi) : intensity.lo;
            f.at(p, ph, EventStatistic::MaxProbability) = m;
            f.at(p, ph, EventStatistic::RelativeDuration) =
                m >= cfg.duration_threshold ? uniform(rng, cfg.duration.lo, cfg.duration.hi) : 0.0;
        }
    }
}

// Draws `count` distinct 1-based points; each draw picks the favored group with
// probability favored_mass (falling back to the other group when one is exhausted).
inline std::vector<int> pick_points(Rng& rng, const CohortConfig& cfg, int count) {
    std::vector<int> favored, other;
    for (int p = 1; p <= kPointCount; ++p) {
        if (std::find(cfg.favored_points.begin(), cfg.favored_points.end(), p) != cfg.favored_points.end())
            favored.push_back(p);
        else
            other.push_back(p);
    }
    std::vector<int> picked;
    for (int i = 0; i < count; ++i) {
        bool from_favored = uniform(rng, 0.0, 1.0) < cfg.favored_mass;
        if (favored.empty()) from_favored = false;
        if (other.empty()) from_favored = true;
        auto& pool = from_favored ? favored : other;
        const int k = uniform_int(rng, 0, static_cast<int>(pool.size()) - 1);
        picked.push_back(pool[static_cast<std::size_t>(k)]);
        pool.erase(pool.begin() + k);
    }
    return picked;
}

} // namespace detail

inline Examination sample_examination(Rng& rng, const CohortConfig& config, std::string id = {}) {
    config.validate();
    Examination exam;
    exam.id = std::move(id);
    exam.noise_sigma = config.noise_sigma;
    std::discrete_distribution<int> label_dist(config.label_priors.begin(), config.label_priors.end());
    exam.label = label_dist(rng);
    for (auto& f : exam.profiles) detail::fill_benign(f, rng, config.benign_ceiling);
    const auto range = config.pathological_points[exam.label];
    const int count = uniform_int(rng, range.lo, range.hi);
    for (int point : detail::pick_points(rng, config, count)) {
        auto& f = exam.profiles[static_cast<std::size_t>(point - 1)];
        detail::fill_affected(f, rng, config, config.intensity[exam.label]);
    }
    return exam;
}

inline std::vector<Examination> generate_cohort(std::size_t n, const CohortConfig& config) {
    config.validate();
    Rng rng(config.seed);
    std::vector<Examination> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "exam-%04zu", i + 1);
        out.push_back(sample_examination(rng, config, id));
    }
    return out;
}

// One auscultation of a point: the latent profile plus clipped Gaussian noise.
inline PhenomenaFeatures observe_point(const Examination& exam, int point, Rng& rng) {
    if (point < 1 || point > kPointCount)
        throw RangeError("observe_point: point " + std::to_string(point) + " outside 1..12");
    PhenomenaFeatures f = exam.profile(point);
    if (exam.noise_sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, exam.noise_sigma);
        for (double& v : f.values) v = std::clamp(v + noise(rng), 0.0, 1.0);
    }
    return f;
}

struct RenderConfig {
    int breaths = 8;
    IntRange event_frames{16, 24};
    IntRange gap_frames{3, 6};
    double frame_duration = 0.02;
    double threshold = 0.5; // must match the extractor's thresholds
};

// Synthesizes a probability raster whose extracted features reproduce the
// observed profile of `point`: each event's pathology max equals the profile
// max, and the pathology covers round(duration * length) frames.
inline ProbabilityRaster render_raster(const Examination& exam, int point, Rng& rng,
                                       const RenderConfig& cfg = {}) {
    const PhenomenaFeatures target = observe_point(exam, point, rng);
    ProbabilityRaster r;
    r.frame_duration = cfg.frame_duration;
    const double thr = cfg.threshold;

    auto push_gap = [&](int len) {
        for (int t = 0; t < len; ++t) {
            r.row(RasterClass::Inspiration).push_back(uniform(rng, 0.0, 0.3));
            r.row(RasterClass::Expiration).push_back(uniform(rng, 0.0, 0.3));
            r.row(RasterClass::Wheeze).push_back(uniform(rng, 0.0, 0.1));
            r.row(RasterClass::Crackle).push_back(uniform(rng, 0.0, 0.1));
            r.row(RasterClass::Noise).push_back(uniform(rng, 0.0, 0.2));
        }
    };

    auto push_event = [&](BreathPhase phase, int len) {
        const bool insp = phase == BreathPhase::Inspiration;
        for (int t = 0; t < len; ++t) {
            r.row(RasterClass::Inspiration).push_back(insp ? uniform(rng, 0.6, 1.0) : uniform(rng, 0.0, 0.3));
            r.row(RasterClass::Expiration).push_back(insp ? uniform(rng, 0.0, 0.3) : uniform(rng, 0.6, 1.0));
            r.row(RasterClass::Noise).push_back(uniform(rng, 0.0, 0.2));
        }
        for (Phenomenon p : {Phenomenon::Wheeze, Phenomenon::Crackle}) {
            auto& row = r.row(p == Phenomenon::Wheeze ? RasterClass::Wheeze : RasterClass::Crackle);
            const double m = target.at(p, phase, EventStatistic::MaxProbability);
            const double d = target.at(p, phase, EventStatistic::RelativeDuration);
            std::vector<double> seg(static_cast<std::size_t>(len), 0.0);
            if (m >= thr) {
                const int k = std::clamp(static_cast<int>(std::lround(d * len)), 1, len);
                const int offset = uniform_int(rng, 0, len - k);
                const double below = std::nextafter(thr, 0.0);
                for (int t = 0; t < len; ++t) seg[static_cast<std::size_t>(t)] = uniform(rng, 0.0, below);
                for (int t = offset; t < offset + k; ++t) seg[static_cast<std::size_t>(t)] = uniform(rng, thr, m);
                seg[static_cast<std::size_t>(offset + uniform_int(rng, 0, k - 1))] = m;
            } else if (m > 0.0) {
                for (int t = 0; t < len; ++t) seg[static_cast<std::size_t>(t)] = uniform(rng, 0.0, m);
                seg[static_cast<std::size_t>(uniform_int(rng, 0, len - 1))] = m;
            }
            row.insert(row.end(), seg.begin(), seg.end());
        }
    };

    for (int b = 0; b < cfg.breaths; ++b) {
        push_gap(uniform_int(rng, cfg.gap_frames.lo, cfg.gap_frames.hi));
        push_event(BreathPhase::Inspiration, uniform_int(rng, cfg.event_frames.lo, cfg.event_frames.hi));
        push_gap(uniform_int(rng, cfg.gap_frames.lo, cfg.gap_frames.hi));
        push_event(BreathPhase::Expiration, uniform_int(rng, cfg.event_frames.lo, cfg.event_frames.hi));
    }
    push_gap(cfg.gap_frames.lo);
    return r;
}

// Cohort document: {"examinations": [{"id", "label", "profiles": 12x8, "noise_sigma"}]}.
inline nlohmann::json cohort_to_json(const std::vector<Examination>& exams) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : exams) {
        nlohmann::json profiles = nlohmann::json::array();
        for (const auto& p : e.profiles) profiles.push_back(p.values);
        arr.push_back({{"id", e.id}, {"label", e.label}, {"profiles", profiles}, {"noise_sigma", e.noise_sigma}});
    }
    return {{"examinations", arr}};
}

inline std::vector<Examination> cohort_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("examinations") || !j["examinations"].is_array())
        throw FormatError("cohort: expected an object with an 'examinations' array");
    std::vector<Examination> out;
    for (const auto& rec : j["examinations"]) {
        Examination e;
        try {
            e.id = rec.at("id").get<std::string>();
            e.label = rec.at("label").get<int>();
            e.noise_sigma = rec.at("noise_sigma").get<double>();
            const auto& profiles = rec.at("profiles");
            if (!profiles.is_array()) throw FormatError("cohort: profiles must be an array");
            if (profiles.size() != kPointCount)
                throw StructureError("cohort: examination '" + e.id + "' has " + std::to_string(profiles.size()) +
                                     " profiles, expected 12");
            for (std::size_t i = 0; i < kPointCount; ++i) {
                auto v = profiles[i].get<std::vector<double>>();
                if (v.size() != kFeatureCount)
                    throw StructureError("cohort: examination '" + e.id + "' profile " + std::to_string(i + 1) +
                                         " has " + std::to_string(v.size()) + " features, expected 8");
                std::copy(v.begin(), v.end(), e.profiles[i].values.begin());
            }
        } catch (const nlohmann::json::exception& ex) {
            throw FormatError(std::string("cohort: ") + ex.what());
        }
        if (e.label < 0 || e.label >= kLabelCount)
            throw RangeError("cohort: examination '" + e.id + "' label " + std::to_string(e.label) + " outside {0,1,2}");
        if (!(e.noise_sigma >= 0.0)) throw RangeError("cohort: negative noise_sigma in '" + e.id + "'");
        for (const auto& p : e.profiles)
            if (!p.in_unit_range()) throw RangeError("cohort: profile value outside [0,1] in '" + e.id + "'");
        out.push_back(std::move(e));
    }
    return out;
}

inline std::vector<Examination> load_cohort(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cohort: cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); })) return {};
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("cohort: ") + e.what());
    }
    return cohort_from_json(j);
}

inline void save_cohort(const std::vector<Examination>& exams, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cohort: cannot write " + path.string());
    out << cohort_to_json(exams).dump() << '\n';
}

} // namespace auscultrl
