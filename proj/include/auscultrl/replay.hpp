#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "episode.hpp"
#include "errors.hpp"
#include "random.hpp"

namespace auscultrl {

struct Transition {
    Eigen::VectorXd state;
    int action = 0;
    double reward = 0.0;
    Eigen::VectorXd next_state; // ignored when done
    bool done = false;
    ActionMask next_legal = ~ActionMask{0};
};

// Bounded FIFO ring of transitions; the oldest entry is evicted first.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity == 0) throw ConfigError("replay buffer capacity must be positive");
        data_.reserve(capacity < 4096 ? capacity : 4096);
    }

    void push(Transition t) {
        if (data_.size() < capacity_) {
            data_.push_back(std::move(t));
        } else {
            data_[head_] = std::move(t);
            head_ = (head_ + 1) % capacity_;
        }
    }

    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return data_.empty(); }

    // i = 0 is the oldest stored transition.
    const Transition& operator[](std::size_t i) const { return data_[(head_ + i) % data_.size()]; }
    const Transition& back() const { return (*this)[size() - 1]; }

    // Uniform sampling with replacement.
    std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const {
        if (data_.empty()) throw PreconditionError("cannot sample from an empty replay buffer");
        std::uniform_int_distribution<std::size_t> dist(0, data_.size() - 1);
        std::vector<std::size_t> idx(n);
        for (auto& i : idx) i = dist(rng);
        return idx;
    }

private:
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::vector<Transition> data_;
};

} // namespace auscultrl
