#pragma once

// Binary alarm metrics. Labels 0 and 1 merge into "not alarm", label 2 is "alarm".

#include <cstdint>
#include <string>

#include "errors.hpp"

namespace auscultrl {

inline bool merge_to_alarm(int label) {
    if (label < 0 || label > 2) throw RangeError("merge_to_alarm: label " + std::to_string(label) + " outside {0,1,2}");
    return label == 2;
}

// Alarm is the positive class.
struct ConfusionCounts {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t tn = 0;
    std::int64_t fn = 0;

    std::int64_t total() const { return tp + fp + tn + fn; }

    void add(bool actual_alarm, bool predicted_alarm) {
        if (actual_alarm) (predicted_alarm ? tp : fn) += 1;
        else (predicted_alarm ? fp : tn) += 1;
    }

    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

// A metric value; `degenerate` is set when some ratio had a zero denominator
// and was scored as 0.
struct Score {
    double value = 0.0;
    bool degenerate = false;
};

inline Score balanced_accuracy(const ConfusionCounts& c) {
    Score s;
    double sens = 0.0, spec = 0.0;
    if (c.tp + c.fn > 0) sens = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    else s.degenerate = true;
    if (c.tn + c.fp > 0) spec = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
    else s.degenerate = true;
    s.value = 0.5 * (sens + spec);
    return s;
}

enum class AlarmClass { Alarm, NotAlarm };

inline Score f1(const ConfusionCounts& c, AlarmClass positive) {
    const bool alarm = positive == AlarmClass::Alarm;
    const auto tp = alarm ? c.tp : c.tn;
    const auto fp = alarm ? c.fp : c.fn;
    const auto fn = alarm ? c.fn : c.fp;
    Score s;
    if (tp + fp == 0 || tp + fn == 0) {
        s.degenerate = true;
        return s;
    }
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (precision + recall == 0.0) {
        s.degenerate = true;
        return s;
    }
    s.value = 2.0 * precision * recall / (precision + recall);
    return s;
}

} // namespace auscultrl
