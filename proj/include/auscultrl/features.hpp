#pragma once

#include <array>
#include <cstddef>

namespace auscultrl {

inline constexpr std::size_t kFeatureCount = 8;

enum class Phenomenon { Wheeze = 0, Crackle = 1 };
enum class BreathPhase { Inspiration = 0, Expiration = 1 };
enum class EventStatistic { MaxProbability = 0, RelativeDuration = 1 };

// Position of one statistic in the 8-element vector. Layout per phenomenon:
// max(insp), max(exp), duration(insp), duration(exp); wheezes first, then crackles.
constexpr std::size_t feature_index(Phenomenon p, BreathPhase phase, EventStatistic s) {
    return 4 * static_cast<std::size_t>(p) + 2 * static_cast<std::size_t>(s) +
           static_cast<std::size_t>(phase);
}

// Aggregated wheeze/crackle statistics for one auscultation point. Every
// value lies in [0, 1].
struct PhenomenaFeatures {
    std::array<double, kFeatureCount> values{};

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }

    double& at(Phenomenon p, BreathPhase phase, EventStatistic s) {
        return values[feature_index(p, phase, s)];
    }
    double at(Phenomenon p, BreathPhase phase, EventStatistic s) const {
        return values[feature_index(p, phase, s)];
    }

    bool in_unit_range() const {
        for (double v : values)
            if (!(v >= 0.0 && v <= 1.0)) return false;
        return true;
    }

    friend bool operator==(const PhenomenaFeatures&, const PhenomenaFeatures&) = default;
};

} // namespace auscultrl
