#pragma once

#include <bit>
#include <cstdint>
#include <optional>

namespace auscultrl {

// Bit i set <=> action index i is legal. Action spaces here have at most 32 actions.
using ActionMask = std::uint32_t;

constexpr ActionMask all_actions(int count) {
    return count >= 32 ? ~ActionMask{0} : (ActionMask{1} << count) - 1;
}

constexpr bool is_legal(ActionMask mask, int action) { return ((mask >> action) & 1u) != 0; }

constexpr int legal_count(ActionMask mask) { return std::popcount(mask); }

// Result of one environment transition as seen by a learner.
struct EnvStep {
    double reward = 0.0;
    bool done = false;
    std::optional<int> declared_label;
    bool correct = false;       // declared label equals the ground truth
    bool limit_reached = false; // episode ended by the acquisition limit
};

} // namespace auscultrl
