#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "fluc/nn/model.hpp"
#include "fluc/rng.hpp"

namespace fluc::rl {

struct Experience {
    std::vector<double> prev_state;
    std::vector<double> next_state;
    int action = 0;
    double reward = 0;
};

// Bounded FIFO; minibatches are drawn uniformly without replacement.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

    void add(Experience e) {
        if (buf_.size() == capacity_) buf_.pop_front();
        buf_.push_back(std::move(e));
    }
    std::size_t size() const { return buf_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Experience& at(std::size_t i) const { return buf_[i]; }

    std::vector<const Experience*> sample(std::size_t k, Rng& rng) const {
        std::vector<const Experience*> out;
        for (auto i : rng.sample_indices(buf_.size(), k)) out.push_back(&buf_[i]);
        return out;
    }

private:
    std::size_t capacity_;
    std::deque<Experience> buf_;
};

struct AgentParams {
    double learning_rate = 0.001;
    double discount = 0.5;
    double epsilon = 0.05;
    int batch_size = 64;
    int buffer_capacity = 200;
    bool full_gradient = false; // let the bootstrapped max term carry gradient
};

// Window indicators reported at each federation boundary.
struct WindowIndicators {
    double mean_reward = 0;  // sum over window / fed_interval
    double data_size = 0;    // experiences in window / T_total
    double achievement = 0;  // eligible TTIs / fed_interval
};

// Per-UE intelligence: a local Q-network, an optional frozen expert whose
// Q-values are summed with the local ones, a replay buffer and the window
// counters federation weighs by.
class UeAgent {
public:
    UeAgent(nn::MlpModel local, AgentParams params, Rng explore_rng, Rng batch_rng);

    int select_action_local(std::span<const double> state);
    int select_action_transfer(std::span<const double> state);

    void record(Experience e);                        // buffer + window data count
    void observe_tti(double reward, bool eligible);   // window reward/eligibility

    // One SGD step on a sampled minibatch; no-op (returns false) while the
    // buffer holds fewer than batch_size experiences.
    bool train_local();
    bool train_transfer();

    WindowIndicators window_indicators(long fed_interval, long t_total); // resets counters

    const nn::MlpModel& local_model() const { return local_; }
    nn::MlpModel& local_model() { return local_; }
    const nn::MlpModel& expert_model() const { return expert_.value(); }
    bool has_expert() const { return expert_.has_value(); }
    void set_expert(nn::MlpModel m) { expert_ = std::move(m); }
    void set_local(nn::MlpModel m) { local_ = std::move(m); }

    const ReplayBuffer& buffer() const { return buffer_; }
    const AgentParams& params() const { return params_; }

    // when set, action-selection forwards feed the PoZ counters
    void set_record_poz(bool on) { record_poz_ = on; }

    void set_transfer_lr_scale(double s) { transfer_lr_scale_ = s; }

private:
    int greedy(const std::vector<double>& q) const;
    int epsilon_greedy(std::span<const double> state, bool use_expert);

    nn::MlpModel local_;
    std::optional<nn::MlpModel> expert_;
    AgentParams params_;
    ReplayBuffer buffer_;
    Rng explore_rng_;
    Rng batch_rng_;
    bool record_poz_ = false;
    double transfer_lr_scale_ = 1.0;

    double window_reward_sum_ = 0;
    long window_eligible_ = 0;
    long window_experiences_ = 0;
};

} // namespace fluc::rl
