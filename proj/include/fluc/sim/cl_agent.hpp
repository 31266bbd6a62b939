#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "fluc/nn/model.hpp"
#include "fluc/rng.hpp"

namespace fluc::sim {

// Mixed-radix codec between a joint action index and per-slot actions.
// Usable while n_actions^slots fits in 64 bits; the CL agent itself stores
// per-slot actions and only uses the codec for compact logging and tests.
std::uint64_t encode_joint_action(const std::vector<int>& actions, int n_actions);
std::vector<int> decode_joint_action(std::uint64_t index, int n_actions, int slots);

struct CellExperience {
    std::vector<double> prev_state;
    std::vector<double> next_state;
    std::vector<int> actions;           // per slot, -1 for empty slots
    std::vector<std::uint8_t> active;   // slot occupied in prev_state
    std::vector<std::uint8_t> next_active;
    double reward = 0;                  // cell reward (mean or sum of per-UE rewards)
};

struct CentralParams {
    double learning_rate = 0.001;
    double discount = 0.5;
    double epsilon = 0.05;
    int batch_size = 64;
    int buffer_capacity = 200;
};

// Cell-centric DQN over a fixed slot layout. One network maps the
// concatenated per-slot states (plus a validity flag per slot) to
// slots x n_actions Q-values; the joint action is decoded slot-wise, and the
// factored joint Q-value is the mean of the chosen slot Q-values.
class CentralAgent {
public:
    CentralAgent(int slots, int per_ue_state, int n_actions, std::vector<int> hidden,
                 CentralParams params, Rng init_rng, Rng explore_rng, Rng batch_rng);

    int slots() const { return slots_; }
    int state_size() const { return slots_ * (per_ue_state_ + 1); }
    int n_actions() const { return n_actions_; }

    // epsilon-greedy per occupied slot; empty slots get -1
    std::vector<int> select_actions(const std::vector<double>& cell_state,
                                    const std::vector<std::uint8_t>& active);

    void record(CellExperience e);
    bool train(); // no-op below batch_size

    const nn::MlpModel& model() const { return model_; }
    nn::MlpModel& model() { return model_; }
    std::size_t buffer_size() const { return buf_.size(); }

private:
    double joint_q(const std::vector<double>& q, const std::vector<int>& actions,
                   const std::vector<std::uint8_t>& active, int* n_active) const;
    double best_joint_q(const std::vector<double>& q,
                        const std::vector<std::uint8_t>& active) const;

    int slots_, per_ue_state_, n_actions_;
    CentralParams params_;
    nn::MlpModel model_;
    std::deque<CellExperience> buf_;
    Rng explore_rng_;
    Rng batch_rng_;
};

} // namespace fluc::sim
