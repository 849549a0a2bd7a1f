#pragma once

// Independent reference implementations used as test oracles. They are
// deliberately naive and share no code with the library paths they check.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <vector>

#include "auscultrl/auscultrl.hpp"

namespace oracle {

using namespace auscultrl;

// Frame-by-frame feature extraction: every frame is tagged with the id of the
// breathing event it belongs to, then per-event maxima and coverage counts are
// accumulated in one pass.
inline std::array<double, 8> features(const ProbabilityRaster& r, double event_thr, double path_thr) {
    std::array<double, 8> out{};
    const std::size_t n = r.rows[0].size();
    for (int phase = 0; phase < 2; ++phase) {
        const auto& breath = r.rows[static_cast<std::size_t>(phase)];
        std::vector<int> tag(n, -1);
        int events = 0;
        for (std::size_t t = 0; t < n; ++t) {
            if (!(breath[t] >= event_thr)) continue;
            const bool continues = t > 0 && tag[t - 1] >= 0;
            tag[t] = continues ? tag[t - 1] : events++;
        }
        if (events == 0) continue;
        for (int ph = 0; ph < 2; ++ph) {
            const auto& p = r.rows[static_cast<std::size_t>(2 + ph)];
            std::vector<double> mx(static_cast<std::size_t>(events), -1.0);
            std::vector<int> len(static_cast<std::size_t>(events), 0), hit(static_cast<std::size_t>(events), 0);
            for (std::size_t t = 0; t < n; ++t) {
                if (tag[t] < 0) continue;
                auto e = static_cast<std::size_t>(tag[t]);
                mx[e] = std::max(mx[e], p[t]);
                len[e] += 1;
                if (p[t] >= path_thr) hit[e] += 1;
            }
            double smax = 0, sdur = 0;
            for (std::size_t e = 0; e < mx.size(); ++e) {
                smax += mx[e];
                sdur += static_cast<double>(hit[e]) / len[e];
            }
            // layout: phenomenon-major, then statistic, then phase
            out[static_cast<std::size_t>(4 * ph + 0 + phase)] = smax / events;
            out[static_cast<std::size_t>(4 * ph + 2 + phase)] = sdur / events;
        }
    }
    return out;
}

// Random raster with a mix of smooth values and exact-threshold hits.
inline ProbabilityRaster random_raster(Rng& rng, std::size_t frames, double thr = 0.5) {
    ProbabilityRaster r;
    for (auto& row : r.rows) {
        row.resize(frames);
        const int style = uniform_int(rng, 0, 3);
        for (auto& v : row) {
            switch (style) {
            case 0: v = uniform(rng, 0.0, 1.0); break;
            case 1: v = uniform(rng, 0.0, 1.0) < 0.5 ? 0.0 : 1.0; break;
            case 2: v = uniform(rng, 0.0, 1.0) < 0.3 ? thr : uniform(rng, 0.0, 1.0); break;
            default: v = 0.0; break;
            }
        }
    }
    return r;
}

// Brute-force list metrics: sensitivity and specificity from filtered lists.
struct ListMetrics {
    double bac = 0, f1_alarm = 0, f1_not_alarm = 0;
};

inline ListMetrics list_metrics(const std::vector<int>& actual, const std::vector<int>& predicted) {
    auto f1_for = [&](bool positive_alarm) {
        double tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < actual.size(); ++i) {
            const bool a = (actual[i] == 2) == positive_alarm;
            const bool p = (predicted[i] == 2) == positive_alarm;
            tp += a && p;
            fp += !a && p;
            fn += a && !p;
        }
        if (tp == 0) return 0.0;
        return 2 * tp / (2 * tp + fp + fn);
    };
    std::vector<int> pos_pred, neg_pred;
    for (std::size_t i = 0; i < actual.size(); ++i) (actual[i] == 2 ? pos_pred : neg_pred).push_back(predicted[i]);
    auto share = [](const std::vector<int>& v, bool alarm) {
        if (v.empty()) return 0.0;
        return static_cast<double>(std::count_if(v.begin(), v.end(), [&](int p) { return (p == 2) == alarm; })) /
               static_cast<double>(v.size());
    };
    return {0.5 * (share(pos_pred, true) + share(neg_pred, false)), f1_for(true), f1_for(false)};
}

// Expectimax over observation histories of the miniature problem. The state is
// the multiset of examination types still consistent with what was seen.
struct Expectimax {
    MiniEnvConfig cfg;
    double gamma;

    std::vector<double> q(const MiniState& s) const {
        std::vector<std::pair<MiniExam, double>> post;
        double mass = 0;
        for (const auto& t : cfg.types) {
            bool ok = t.weight > 0;
            for (int i = 0; i < 2; ++i)
                if (s.values[static_cast<std::size_t>(i)] >= 0 &&
                    s.values[static_cast<std::size_t>(i)] != t.exam.findings[static_cast<std::size_t>(i)])
                    ok = false;
            if (ok) {
                post.push_back({t.exam, t.weight});
                mass += t.weight;
            }
        }
        std::vector<double> out(4, 0.0);
        for (int label = 0; label < 2; ++label)
            for (const auto& [e, w] : post)
                out[static_cast<std::size_t>(2 + label)] += w / mass * (e.label == label ? cfg.correct_reward : cfg.wrong_reward);
        for (int p = 0; p < 2; ++p) {
            double v = 0;
            for (const auto& [e, w] : post) {
                MiniState n = s;
                n.counts[static_cast<std::size_t>(p)]++;
                n.values[static_cast<std::size_t>(p)] = e.findings[static_cast<std::size_t>(p)];
                double r = cfg.step_penalty;
                if (n.total() >= cfg.acquisition_limit) r += cfg.limit_penalty;
                else r += gamma * value(n);
                v += w / mass * r;
            }
            out[static_cast<std::size_t>(p)] = v;
        }
        return out;
    }

    double value(const MiniState& s) const {
        const auto v = q(s);
        return *std::max_element(v.begin(), v.end());
    }
};

// Plain-loop forward pass and half-squared TD error.
inline std::vector<double> forward(const QNetwork& net, std::vector<double> x) {
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        const auto& l = net.layers[k];
        std::vector<double> y(static_cast<std::size_t>(l.weights.rows()));
        for (Eigen::Index i = 0; i < l.weights.rows(); ++i) {
            double acc = l.bias[i];
            for (Eigen::Index j = 0; j < l.weights.cols(); ++j) acc += l.weights(i, j) * x[static_cast<std::size_t>(j)];
            y[static_cast<std::size_t>(i)] = k + 1 < net.layers.size() ? std::max(0.0, acc) : acc;
        }
        x = std::move(y);
    }
    return x;
}

inline double loss(const QNetwork& net, const QBatch& batch) {
    double sum = 0;
    for (Eigen::Index j = 0; j < batch.states.cols(); ++j) {
        std::vector<double> x(batch.states.col(j).data(), batch.states.col(j).data() + batch.states.rows());
        const double d = forward(net, x)[static_cast<std::size_t>(batch.actions[static_cast<std::size_t>(j)])] - batch.targets[j];
        sum += 0.5 * d * d;
    }
    return sum / static_cast<double>(batch.states.cols());
}

// Central finite differences of the loss with respect to every parameter.
inline QNetwork numeric_gradients(QNetwork net, const QBatch& batch, double h) {
    QNetwork g = QNetwork::zeros(net.sizes());
    auto probe = [&](double& x, double& out) {
        const double keep = x;
        x = keep + h;
        const double up = loss(net, batch);
        x = keep - h;
        const double down = loss(net, batch);
        x = keep;
        out = (up - down) / (2 * h);
    };
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        auto& w = net.layers[k].weights;
        for (Eigen::Index i = 0; i < w.size(); ++i) probe(w.data()[i], g.layers[k].weights.data()[i]);
        auto& b = net.layers[k].bias;
        for (Eigen::Index i = 0; i < b.size(); ++i) probe(b.data()[i], g.layers[k].bias.data()[i]);
    }
    return g;
}

// Largest relative error between two gradient sets; `floor` keeps near-zero
// partials from dominating.
inline double max_relative_error(const QNetwork& a, const QNetwork& b, double floor = 1e-7) {
    double worst = 0;
    for (std::size_t k = 0; k < a.layers.size(); ++k) {
        auto cmp = [&](const double* x, const double* y, Eigen::Index n) {
            for (Eigen::Index i = 0; i < n; ++i) {
                const double den = std::max({std::abs(x[i]), std::abs(y[i]), floor});
                worst = std::max(worst, std::abs(x[i] - y[i]) / den);
            }
        };
        cmp(a.layers[k].weights.data(), b.layers[k].weights.data(), a.layers[k].weights.size());
        cmp(a.layers[k].bias.data(), b.layers[k].bias.data(), a.layers[k].bias.size());
    }
    return worst;
}

inline QBatch random_batch(Rng& rng, int inputs, int outputs, int size) {
    QBatch b;
    b.states = Eigen::MatrixXd(inputs, size);
    for (Eigen::Index i = 0; i < b.states.size(); ++i) b.states.data()[i] = uniform(rng, -1.0, 1.0);
    b.actions.resize(static_cast<std::size_t>(size));
    for (auto& a : b.actions) a = uniform_int(rng, 0, outputs - 1);
    b.targets = Eigen::VectorXd(size);
    for (Eigen::Index i = 0; i < size; ++i) b.targets[i] = uniform(rng, -2.0, 2.0);
    return b;
}

} // namespace oracle
