#pragma once

// Tabular MDPs and value iteration on them.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "errors.hpp"

namespace auscultrl {

struct MdpOutcome {
    int next_state = -1; // ignored when terminal
    double probability = 0.0;
    double reward = 0.0;
    bool terminal = false;
};

// outcomes[s][a] lists the stochastic results of action a in state s; an empty
// list marks the action as unavailable. A state without available actions is
// absorbing with value 0.
struct TabularMdp {
    int action_count = 0;
    std::vector<std::vector<std::vector<MdpOutcome>>> outcomes;

    int state_count() const { return static_cast<int>(outcomes.size()); }
    bool available(int s, int a) const { return !outcomes[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)].empty(); }

    void validate() const {
        for (const auto& row : outcomes) {
            if (static_cast<int>(row.size()) != action_count) throw StructureError("mdp: ragged action table");
            for (const auto& outs : row) {
                if (outs.empty()) continue;
                double p = 0.0;
                for (const auto& o : outs) {
                    if (!(o.probability >= 0.0)) throw RangeError("mdp: negative probability");
                    if (!o.terminal && (o.next_state < 0 || o.next_state >= state_count()))
                        throw RangeError("mdp: successor out of range");
                    p += o.probability;
                }
                if (std::abs(p - 1.0) > 1e-9) throw RangeError("mdp: outcome probabilities must sum to 1");
            }
        }
    }
};

struct ValueIterationResult {
    std::vector<double> values;
    std::vector<int> policy; // -1 for absorbing states
    std::vector<std::vector<double>> q; // -inf for unavailable actions
    int iterations = 0;
};

inline double action_value(const TabularMdp& mdp, const std::vector<double>& v, int s, int a, double gamma) {
    double q = 0.0;
    for (const auto& o : mdp.outcomes[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)])
        q += o.probability * (o.reward + (o.terminal ? 0.0 : gamma * v[static_cast<std::size_t>(o.next_state)]));
    return q;
}

// Bellman optimality backups until the largest value change drops below `tolerance`.
inline ValueIterationResult value_iteration(const TabularMdp& mdp, double gamma, double tolerance,
                                            int max_iterations = 100000) {
    mdp.validate();
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("value_iteration: gamma must lie in [0,1)");
    if (!(tolerance > 0.0)) throw ConfigError("value_iteration: tolerance must be positive");
    const auto n = static_cast<std::size_t>(mdp.state_count());
    ValueIterationResult r;
    r.values.assign(n, 0.0);
    const double ninf = -std::numeric_limits<double>::infinity();
    for (r.iterations = 1; r.iterations <= max_iterations; ++r.iterations) {
        std::vector<double> next(n, 0.0);
        double delta = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            double best = ninf;
            for (int a = 0; a < mdp.action_count; ++a)
                if (mdp.available(static_cast<int>(s), a))
                    best = std::max(best, action_value(mdp, r.values, static_cast<int>(s), a, gamma));
            next[s] = best == ninf ? 0.0 : best;
            delta = std::max(delta, std::abs(next[s] - r.values[s]));
        }
        r.values = std::move(next);
        if (delta < tolerance) break;
    }
    r.q.assign(n, std::vector<double>(static_cast<std::size_t>(mdp.action_count), ninf));
    r.policy.assign(n, -1);
    for (std::size_t s = 0; s < n; ++s) {
        for (int a = 0; a < mdp.action_count; ++a) {
            if (!mdp.available(static_cast<int>(s), a)) continue;
            r.q[s][static_cast<std::size_t>(a)] = action_value(mdp, r.values, static_cast<int>(s), a, gamma);
            if (r.policy[s] < 0 || r.q[s][static_cast<std::size_t>(a)] > r.q[s][static_cast<std::size_t>(r.policy[s])])
                r.policy[s] = a;
        }
    }
    return r;
}

} // namespace auscultrl
