#include "fluc/rl/agent.hpp"

#include <algorithm>
#include <stdexcept>

namespace fluc::rl {

UeAgent::UeAgent(nn::MlpModel local, AgentParams params, Rng explore_rng, Rng batch_rng)
    : local_(std::move(local)),
      params_(params),
      buffer_(static_cast<std::size_t>(params.buffer_capacity)),
      explore_rng_(explore_rng),
      batch_rng_(batch_rng) {}

int UeAgent::greedy(const std::vector<double>& q) const {
    // ties break toward the lowest BS index
    int best = 0;
    for (std::size_t a = 1; a < q.size(); ++a)
        if (q[a] > q[best]) best = static_cast<int>(a);
    return best;
}

int UeAgent::epsilon_greedy(std::span<const double> state, bool use_expert) {
    const double u = explore_rng_.uniform01();
    if (u < params_.epsilon)
        return static_cast<int>(explore_rng_.uniform_int(local_.output_size()));
    std::vector<double> q = local_.forward(state, record_poz_);
    if (use_expert) {
        const std::vector<double> qe = expert_->forward(state);
        for (std::size_t a = 0; a < q.size(); ++a) q[a] += qe[a];
    }
    return greedy(q);
}

int UeAgent::select_action_local(std::span<const double> state) {
    return epsilon_greedy(state, false);
}

int UeAgent::select_action_transfer(std::span<const double> state) {
    if (!expert_) throw std::runtime_error("select_action_transfer: no expert model");
    return epsilon_greedy(state, true);
}

void UeAgent::record(Experience e) {
    buffer_.add(std::move(e));
    ++window_experiences_;
}

void UeAgent::observe_tti(double reward, bool eligible) {
    window_reward_sum_ += reward;
    if (eligible) ++window_eligible_;
}

bool UeAgent::train_local() {
    if (buffer_.size() < static_cast<std::size_t>(params_.batch_size)) return false;
    const auto batch = buffer_.sample(params_.batch_size, batch_rng_);

    nn::GradientTape tape = local_.make_zero_tape();
    std::vector<double> q, qn, out_grad(local_.output_size());
    for (const Experience* e : batch) {
        local_.forward_into(e->prev_state, q);
        local_.forward_into(e->next_state, qn);
        const int a_next = greedy(qn);
        const double target = e->reward + params_.discount * qn[a_next];
        const double err = q[e->action] - target;

        std::fill(out_grad.begin(), out_grad.end(), 0.0);
        out_grad[e->action] = err;
        local_.backward_accumulate(e->prev_state, out_grad, tape);
        if (params_.full_gradient) {
            std::fill(out_grad.begin(), out_grad.end(), 0.0);
            out_grad[a_next] = -params_.discount * err;
            local_.backward_accumulate(e->next_state, out_grad, tape);
        }
    }
    local_.sgd_step(tape, params_.learning_rate);
    return true;
}

bool UeAgent::train_transfer() {
    if (!expert_) throw std::runtime_error("train_transfer: no expert model");
    if (buffer_.size() < static_cast<std::size_t>(params_.batch_size)) return false;
    const auto batch = buffer_.sample(params_.batch_size, batch_rng_);

    nn::GradientTape tape = local_.make_zero_tape();
    std::vector<double> ql, qe, qln, qen, out_grad(local_.output_size());
    for (const Experience* e : batch) {
        local_.forward_into(e->prev_state, ql);
        expert_->forward_into(e->prev_state, qe);
        local_.forward_into(e->next_state, qln);
        expert_->forward_into(e->next_state, qen);

        // max over the summed next-state Q-values
        int a_next = 0;
        double best = qln[0] + qen[0];
        for (std::size_t a = 1; a < qln.size(); ++a) {
            const double v = qln[a] + qen[a];
            if (v > best) {
                best = v;
                a_next = static_cast<int>(a);
            }
        }
        // expert terms are constants; only the local net is updated
        const double err =
            ql[e->action] + qe[e->action] - 2.0 * e->reward - params_.discount * best;

        std::fill(out_grad.begin(), out_grad.end(), 0.0);
        out_grad[e->action] = err;
        local_.backward_accumulate(e->prev_state, out_grad, tape);
        if (params_.full_gradient) {
            std::fill(out_grad.begin(), out_grad.end(), 0.0);
            out_grad[a_next] = -params_.discount * err;
            local_.backward_accumulate(e->next_state, out_grad, tape);
        }
    }
    // the transfer loss lives on a doubled value scale; halving the step keeps
    // the parameter displacement comparable to plain local training
    local_.sgd_step(tape, params_.learning_rate * transfer_lr_scale_);
    return true;
}

WindowIndicators UeAgent::window_indicators(long fed_interval, long t_total) {
    WindowIndicators w;
    if (fed_interval > 0) {
        w.mean_reward = window_reward_sum_ / static_cast<double>(fed_interval);
        w.achievement = static_cast<double>(window_eligible_) / static_cast<double>(fed_interval);
    }
    if (t_total > 0)
        w.data_size = static_cast<double>(window_experiences_) / static_cast<double>(t_total);
    window_reward_sum_ = 0;
    window_eligible_ = 0;
    window_experiences_ = 0;
    return w;
}

} // namespace fluc::rl
