#include "fluc/sim/cl_agent.hpp"

#include <algorithm>
#include <stdexcept>

namespace fluc::sim {

std::uint64_t encode_joint_action(const std::vector<int>& actions, int n_actions) {
    std::uint64_t idx = 0;
    for (std::size_t s = actions.size(); s-- > 0;) {
        const int a = actions[s] < 0 ? 0 : actions[s];
        if (a >= n_actions) throw std::invalid_argument("encode_joint_action: action out of range");
        idx = idx * static_cast<std::uint64_t>(n_actions) + static_cast<std::uint64_t>(a);
    }
    return idx;
}

std::vector<int> decode_joint_action(std::uint64_t index, int n_actions, int slots) {
    std::vector<int> actions(slots);
    for (int s = 0; s < slots; ++s) {
        actions[s] = static_cast<int>(index % static_cast<std::uint64_t>(n_actions));
        index /= static_cast<std::uint64_t>(n_actions);
    }
    return actions;
}

CentralAgent::CentralAgent(int slots, int per_ue_state, int n_actions, std::vector<int> hidden,
                           CentralParams params, Rng init_rng, Rng explore_rng, Rng batch_rng)
    : slots_(slots),
      per_ue_state_(per_ue_state),
      n_actions_(n_actions),
      params_(params),
      explore_rng_(explore_rng),
      batch_rng_(batch_rng) {
    std::vector<int> sizes;
    sizes.push_back(state_size());
    for (int h : hidden) sizes.push_back(h);
    sizes.push_back(slots_ * n_actions_);
    model_ = nn::MlpModel(sizes, init_rng.next_u64());
}

std::vector<int> CentralAgent::select_actions(const std::vector<double>& cell_state,
                                              const std::vector<std::uint8_t>& active) {
    const std::vector<double> q = model_.forward(cell_state);
    std::vector<int> actions(slots_, -1);
    for (int s = 0; s < slots_; ++s) {
        if (!active[s]) continue;
        if (explore_rng_.uniform01() < params_.epsilon) {
            actions[s] = static_cast<int>(explore_rng_.uniform_int(n_actions_));
            continue;
        }
        int best = 0;
        const double* qs = &q[static_cast<std::size_t>(s) * n_actions_];
        for (int a = 1; a < n_actions_; ++a)
            if (qs[a] > qs[best]) best = a;
        actions[s] = best;
    }
    return actions;
}

void CentralAgent::record(CellExperience e) {
    if (buf_.size() == static_cast<std::size_t>(params_.buffer_capacity)) buf_.pop_front();
    buf_.push_back(std::move(e));
}

double CentralAgent::joint_q(const std::vector<double>& q, const std::vector<int>& actions,
                             const std::vector<std::uint8_t>& active, int* n_active) const {
    double sum = 0;
    int n = 0;
    for (int s = 0; s < slots_; ++s) {
        if (!active[s] || actions[s] < 0) continue;
        sum += q[static_cast<std::size_t>(s) * n_actions_ + actions[s]];
        ++n;
    }
    if (n_active) *n_active = n;
    return n > 0 ? sum / n : 0.0;
}

double CentralAgent::best_joint_q(const std::vector<double>& q,
                                  const std::vector<std::uint8_t>& active) const {
    double sum = 0;
    int n = 0;
    for (int s = 0; s < slots_; ++s) {
        if (!active[s]) continue;
        const double* qs = &q[static_cast<std::size_t>(s) * n_actions_];
        double best = qs[0];
        for (int a = 1; a < n_actions_; ++a) best = std::max(best, qs[a]);
        sum += best;
        ++n;
    }
    return n > 0 ? sum / n : 0.0;
}

bool CentralAgent::train() {
    if (buf_.size() < static_cast<std::size_t>(params_.batch_size)) return false;
    const auto idx = batch_rng_.sample_indices(buf_.size(), params_.batch_size);

    nn::GradientTape tape = model_.make_zero_tape();
    std::vector<double> q, qn, out_grad(model_.output_size());
    bool any = false;
    for (auto i : idx) {
        const CellExperience& e = buf_[i];
        model_.forward_into(e.prev_state, q);
        model_.forward_into(e.next_state, qn);
        int n_active = 0;
        const double q_sa = joint_q(q, e.actions, e.active, &n_active);
        if (n_active == 0) continue;
        const double target = e.reward + params_.discount * best_joint_q(qn, e.next_active);
        const double err = q_sa - target;

        std::fill(out_grad.begin(), out_grad.end(), 0.0);
        for (int s = 0; s < slots_; ++s) {
            if (!e.active[s] || e.actions[s] < 0) continue;
            out_grad[static_cast<std::size_t>(s) * n_actions_ + e.actions[s]] = err / n_active;
        }
        model_.backward_accumulate(e.prev_state, out_grad, tape);
        any = true;
    }
    if (!any) return false;
    model_.sgd_step(tape, params_.learning_rate);
    return true;
}

} // namespace fluc::sim
