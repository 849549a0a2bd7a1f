#pragma once

// Post-processing of a per-point probability raster (5 class rows over time)
// into the 8 wheeze/crackle features consumed by the agent.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "errors.hpp"
#include "features.hpp"

namespace auscultrl {

enum class RasterClass : std::size_t {
    Inspiration = 0,
    Expiration = 1,
    Wheeze = 2,
    Crackle = 3,
    Noise = 4,
};

inline constexpr std::size_t kRasterClassCount = 5;

struct ProbabilityRaster {
    std::array<std::vector<double>, kRasterClassCount> rows;
    double frame_duration = 0.01; // seconds, metadata only

    std::size_t frame_count() const { return rows[0].size(); }

    std::vector<double>& row(RasterClass c) { return rows[static_cast<std::size_t>(c)]; }
    const std::vector<double>& row(RasterClass c) const { return rows[static_cast<std::size_t>(c)]; }

    static ProbabilityRaster zeros(std::size_t frames, double frame_duration = 0.01) {
        ProbabilityRaster r;
        for (auto& row : r.rows) row.assign(frames, 0.0);
        r.frame_duration = frame_duration;
        return r;
    }

    // Throws StructureError on ragged/empty rows, RangeError on values outside [0,1].
    void validate() const {
        const std::size_t n = rows[0].size();
        if (n == 0) throw StructureError("raster: frame_count must be positive");
        for (std::size_t c = 0; c < kRasterClassCount; ++c) {
            if (rows[c].size() != n)
                throw StructureError("raster: row " + std::to_string(c) + " has " +
                                     std::to_string(rows[c].size()) + " frames, expected " +
                                     std::to_string(n));
        }
        if (!(frame_duration > 0.0)) throw RangeError("raster: frame_duration_s must be > 0");
        for (std::size_t c = 0; c < kRasterClassCount; ++c) {
            for (std::size_t t = 0; t < n; ++t) {
                double v = rows[c][t];
                if (!(v >= 0.0 && v <= 1.0))
                    throw RangeError("raster: row " + std::to_string(c) + " frame " +
                                     std::to_string(t) + " value " + std::to_string(v) +
                                     " outside [0,1]");
            }
        }
    }
};

// Inclusive frame range of one breathing event.
struct EventInterval {
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t length() const { return end - start + 1; }
    friend bool operator==(const EventInterval&, const EventInterval&) = default;
};

struct FeatureConfig {
    double event_threshold = 0.5;     // inspiration/expiration activation
    double pathology_threshold = 0.5; // wheeze/crackle "present" level

    void validate() const {
        auto ok = [](double t) { return t > 0.0 && t < 1.0; };
        if (!ok(event_threshold) || !ok(pathology_threshold))
            throw ConfigError("feature thresholds must lie in (0,1)");
    }
};

// Maximal runs of frames with row[t] >= threshold, sorted by start.
inline std::vector<EventInterval> segment_events(std::span<const double> row, double threshold) {
    if (row.empty()) throw PreconditionError("segment_events: empty row");
    std::vector<EventInterval> out;
    std::size_t t = 0;
    while (t < row.size()) {
        if (row[t] < threshold) {
            ++t;
            continue;
        }
        std::size_t start = t;
        while (t + 1 < row.size() && row[t + 1] >= threshold) ++t;
        out.push_back({start, t});
        ++t;
    }
    return out;
}

struct EventStats {
    double max_prob = 0.0;
    double relative_duration = 0.0;
};

inline EventStats event_stats(std::span<const double> pathology_row, EventInterval interval,
                              double threshold) {
    if (interval.end < interval.start || interval.end >= pathology_row.size())
        throw PreconditionError("event_stats: interval outside row");
    auto span = pathology_row.subspan(interval.start, interval.length());
    EventStats s;
    s.max_prob = *std::max_element(span.begin(), span.end());
    auto covered = std::count_if(span.begin(), span.end(), [&](double v) { return v >= threshold; });
    s.relative_duration = static_cast<double>(covered) / static_cast<double>(interval.length());
    return s;
}

// Averages per-event statistics (unweighted) over all inspirations and, separately,
// all expirations. A phase with no detected events yields zeros for its features.
// The noise row is ignored.
inline PhenomenaFeatures extract_features(const ProbabilityRaster& raster,
                                          const FeatureConfig& config = {}) {
    raster.validate();
    config.validate();
    PhenomenaFeatures f;
    for (BreathPhase phase : {BreathPhase::Inspiration, BreathPhase::Expiration}) {
        const auto& phase_row = raster.row(phase == BreathPhase::Inspiration ? RasterClass::Inspiration
                                                                             : RasterClass::Expiration);
        const auto events = segment_events(phase_row, config.event_threshold);
        if (events.empty()) continue;
        for (Phenomenon p : {Phenomenon::Wheeze, Phenomenon::Crackle}) {
            const auto& prow = raster.row(p == Phenomenon::Wheeze ? RasterClass::Wheeze : RasterClass::Crackle);
            double max_sum = 0.0, dur_sum = 0.0;
            for (const auto& ev : events) {
                auto s = event_stats(prow, ev, config.pathology_threshold);
                max_sum += s.max_prob;
                dur_sum += s.relative_duration;
            }
            const double n = static_cast<double>(events.size());
            f.at(p, phase, EventStatistic::MaxProbability) = max_sum / n;
            f.at(p, phase, EventStatistic::RelativeDuration) = dur_sum / n;
        }
    }
    return f;
}

// Raster document: {"frame_count": N, "frame_duration_s": s, "rows": [[...] x5]}.
inline nlohmann::json raster_to_json(const ProbabilityRaster& raster) {
    nlohmann::json j;
    j["frame_count"] = raster.frame_count();
    j["frame_duration_s"] = raster.frame_duration;
    j["rows"] = nlohmann::json::array();
    for (const auto& row : raster.rows) j["rows"].push_back(row);
    return j;
}

inline ProbabilityRaster raster_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw FormatError("raster: document must be an object");
    ProbabilityRaster r;
    std::size_t frame_count = 0;
    try {
        frame_count = j.at("frame_count").get<std::size_t>();
        r.frame_duration = j.at("frame_duration_s").get<double>();
        const auto& rows = j.at("rows");
        if (!rows.is_array()) throw FormatError("raster: rows must be an array");
        if (rows.size() != kRasterClassCount)
            throw StructureError("raster: expected 5 rows, found " + std::to_string(rows.size()));
        for (std::size_t c = 0; c < kRasterClassCount; ++c)
            r.rows[c] = rows[c].get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("raster: ") + e.what());
    }
    for (std::size_t c = 0; c < kRasterClassCount; ++c) {
        if (r.rows[c].size() != frame_count)
            throw StructureError("raster: row " + std::to_string(c) + " length " +
                                 std::to_string(r.rows[c].size()) + " != frame_count " +
                                 std::to_string(frame_count));
    }
    r.validate();
    return r;
}

inline ProbabilityRaster parse_raster(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("raster: ") + e.what());
    }
    return raster_from_json(j);
}

inline ProbabilityRaster load_raster(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("raster: cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_raster(ss.str());
}

inline void save_raster(const ProbabilityRaster& raster, const std::filesystem::path& path) {
    raster.validate();
    std::ofstream out(path);
    if (!out) throw Error("raster: cannot write " + path.string());
    out << raster_to_json(raster).dump() << '\n';
}

} // namespace auscultrl
