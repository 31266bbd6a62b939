#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>

#include "fluc/rl/agent.hpp"

using namespace fluc;
using rl::AgentParams;
using rl::Experience;
using rl::UeAgent;

namespace {

UeAgent make_agent(std::vector<int> sizes, AgentParams p, std::uint64_t seed) {
    return UeAgent(nn::MlpModel(std::move(sizes), seed), p, Rng(seed, "explore"),
                   Rng(seed, "batch"));
}

std::vector<double> one_hot(int i, int n) {
    std::vector<double> v(n, 0.0);
    v[i] = 1.0;
    return v;
}

// 2-state, 2-action deterministic chain: action a jumps to state a,
// reward 1 for landing in state 1. Value iteration oracle.
std::array<std::array<double, 2>, 2> chain_value_iteration(double gamma) {
    std::array<std::array<double, 2>, 2> q{{{0, 0}, {0, 0}}};
    for (int it = 0; it < 200; ++it) {
        auto next = q;
        for (int s = 0; s < 2; ++s)
            for (int a = 0; a < 2; ++a)
                next[s][a] = (a == 1 ? 1.0 : 0.0) + gamma * std::max(q[a][0], q[a][1]);
        q = next;
    }
    return q;
}

} // namespace

TEST_CASE("replay buffer: bounded FIFO, minibatch without replacement") {
    rl::ReplayBuffer buf(5);
    for (int i = 0; i < 9; ++i) buf.add({{double(i)}, {double(i)}, 0, double(i)});
    CHECK(buf.size() == 5);
    CHECK(buf.at(0).reward == 4.0); // oldest four evicted
    Rng rng(3);
    const auto batch = buf.sample(5, rng);
    std::set<const rl::Experience*> uniq(batch.begin(), batch.end());
    CHECK(uniq.size() == 5);
}

TEST_CASE("select_action_local: epsilon 0 is the exact argmax, ties to lowest index") {
    AgentParams p;
    p.epsilon = 0.0;
    UeAgent agent = make_agent({3, 4, 4, 3}, p, 17);
    const std::vector<double> s{0.2, -0.4, 0.9};
    const auto q = agent.local_model().forward(s);
    int best = 0;
    for (int a = 1; a < 3; ++a)
        if (q[a] > q[best]) best = a;
    CHECK(agent.select_action_local(s) == best);

    UeAgent flat = make_agent({3, 4, 4, 3}, p, 18);
    flat.set_local(nn::MlpModel::zeros({3, 4, 4, 3})); // all Q equal
    CHECK(flat.select_action_local(s) == 0);
}

TEST_CASE("select_action_local: epsilon 1 explores uniformly (multinomial, 3 sigma)") {
    AgentParams p;
    p.epsilon = 1.0;
    UeAgent agent = make_agent({2, 4, 4, 4}, p, 23);
    const std::vector<double> s{0.5, 0.5};
    std::array<int, 4> counts{};
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) ++counts[agent.select_action_local(s)];
    const double expect = draws / 4.0;
    const double sigma = std::sqrt(draws * 0.25 * 0.75);
    for (int a = 0; a < 4; ++a) CHECK(std::abs(counts[a] - expect) <= 3 * sigma);
}

TEST_CASE("select_action_transfer: zero expert matches local decisions") {
    AgentParams p;
    p.epsilon = 0.05;
    UeAgent a = make_agent({3, 4, 4, 3}, p, 29);
    UeAgent b = make_agent({3, 4, 4, 3}, p, 29); // same seeds -> same rng streams
    b.set_expert(nn::MlpModel::zeros({3, 4, 4, 3}));
    Rng state_rng(7);
    for (int i = 0; i < 300; ++i) {
        std::vector<double> s{state_rng.uniform01(), state_rng.uniform01(),
                              state_rng.uniform01()};
        CHECK(a.select_action_local(s) == b.select_action_transfer(s));
    }
}

TEST_CASE("select_action_transfer: zero local follows the expert argmax") {
    AgentParams p;
    p.epsilon = 0.0;
    UeAgent agent = make_agent({3, 4, 4, 3}, p, 31);
    agent.set_local(nn::MlpModel::zeros({3, 4, 4, 3}));
    nn::MlpModel expert({3, 4, 4, 3}, 777);
    agent.set_expert(expert);
    const std::vector<double> s{0.9, 0.1, -0.3};
    const auto qe = expert.forward(s);
    int best = 0;
    for (int a = 1; a < 3; ++a)
        if (qe[a] > qe[best]) best = a;
    CHECK(agent.select_action_transfer(s) == best);
}

TEST_CASE("select_action_transfer: the summed Q decides") {
    // local prefers action 1, expert prefers action 2, the sum prefers 2
    AgentParams p;
    p.epsilon = 0.0;
    UeAgent agent = make_agent({2, 2, 2, 3}, p, 5);
    nn::MlpModel local = nn::MlpModel::zeros({2, 2, 2, 3});
    nn::MlpModel expert = nn::MlpModel::zeros({2, 2, 2, 3});
    local.bias_at(2, 0) = 0.0;
    local.bias_at(2, 1) = 1.0;
    local.bias_at(2, 2) = 0.9;
    expert.bias_at(2, 0) = 0.0;
    expert.bias_at(2, 1) = 0.2;
    expert.bias_at(2, 2) = 1.5;
    agent.set_local(local);
    agent.set_expert(expert);
    CHECK(agent.select_action_transfer(std::vector<double>{0.0, 0.0}) == 2);
}

TEST_CASE("train_local: gamma 0 regresses Q(s,a) to the immediate reward") {
    AgentParams p;
    p.discount = 0.0;
    p.learning_rate = 0.002;
    p.batch_size = 8;
    p.buffer_capacity = 8;
    UeAgent agent = make_agent({2, 8, 8, 2}, p, 41);
    const auto s = one_hot(0, 2);
    const double r = 0.6;
    for (int i = 0; i < 8; ++i) agent.record({s, s, 1, r});
    for (int step = 0; step < 3000; ++step) agent.train_local();
    CHECK(agent.local_model().forward(s)[1] == doctest::Approx(r).epsilon(1e-3));
}

TEST_CASE("train_local: insufficient buffer is a no-op") {
    AgentParams p;
    UeAgent agent = make_agent({2, 4, 4, 2}, p, 43);
    const auto before = agent.local_model();
    agent.record({one_hot(0, 2), one_hot(1, 2), 0, 0.5});
    CHECK_FALSE(agent.train_local());
    CHECK(agent.local_model().params_equal(before));
}

TEST_CASE("train_local: two-state chain converges to the value-iteration fixed point") {
    AgentParams p;
    p.discount = 0.5;
    p.learning_rate = 0.001;
    p.batch_size = 64;
    p.buffer_capacity = 200;
    UeAgent agent = make_agent({2, 12, 12, 2}, p, 47);
    Rng env_rng(53);
    int s = 0;
    for (int step = 0; step < 8000; ++step) {
        const int a = static_cast<int>(env_rng.uniform_int(2));
        const int next = a;
        const double r = a == 1 ? 1.0 : 0.0;
        agent.record({one_hot(s, 2), one_hot(next, 2), a, r});
        agent.train_local();
        s = next;
    }
    const auto oracle = chain_value_iteration(0.5);
    for (int st = 0; st < 2; ++st) {
        const auto q = agent.local_model().forward(one_hot(st, 2));
        for (int a = 0; a < 2; ++a)
            CHECK(std::abs(q[a] - oracle[st][a]) < 0.05);
    }
}

TEST_CASE("train_transfer: zero expert equals train_local with doubled rewards") {
    AgentParams p;
    p.discount = 0.5;
    p.learning_rate = 0.01;
    p.batch_size = 16;
    p.buffer_capacity = 32;
    UeAgent transfer = make_agent({2, 6, 6, 2}, p, 61);
    UeAgent local = make_agent({2, 6, 6, 2}, p, 61); // identical init and rng streams
    transfer.set_expert(nn::MlpModel::zeros({2, 6, 6, 2}));
    Rng env_rng(67);
    for (int i = 0; i < 32; ++i) {
        const int s = static_cast<int>(env_rng.uniform_int(2));
        const int a = static_cast<int>(env_rng.uniform_int(2));
        const double r = env_rng.uniform01();
        transfer.record({one_hot(s, 2), one_hot(a, 2), a, r});
        local.record({one_hot(s, 2), one_hot(a, 2), a, 2.0 * r});
    }
    for (int step = 0; step < 50; ++step) {
        CHECK(transfer.train_transfer());
        CHECK(local.train_local());
    }
    // identical up to floating-point association of the error terms
    CHECK(transfer.local_model().max_abs_param_diff(local.local_model()) < 1e-12);
}

TEST_CASE("train_transfer: converged local+expert reaches twice the reward (gamma 0)") {
    AgentParams p;
    p.discount = 0.0;
    p.learning_rate = 0.002;
    p.batch_size = 8;
    p.buffer_capacity = 8;
    UeAgent agent = make_agent({1, 6, 6, 1}, p, 71);
    agent.set_expert(nn::MlpModel({1, 6, 6, 1}, 72));
    const std::vector<double> s{1.0};
    const double r = 0.8;
    for (int i = 0; i < 8; ++i) agent.record({s, s, 0, r});
    for (int step = 0; step < 4000; ++step) agent.train_transfer();
    const double sum =
        agent.local_model().forward(s)[0] + agent.expert_model().forward(s)[0];
    CHECK(sum == doctest::Approx(2.0 * r).epsilon(0.01));
}

TEST_CASE("train_transfer: the expert stays bitwise frozen") {
    AgentParams p;
    p.batch_size = 8;
    p.buffer_capacity = 16;
    UeAgent agent = make_agent({2, 5, 5, 2}, p, 73);
    agent.set_expert(nn::MlpModel({2, 5, 5, 2}, 74));
    const nn::MlpModel frozen = agent.expert_model();
    Rng env_rng(75);
    for (int i = 0; i < 16; ++i)
        agent.record({one_hot(0, 2), one_hot(1, 2),
                      static_cast<int>(env_rng.uniform_int(2)), env_rng.uniform01()});
    for (int step = 0; step < 200; ++step) agent.train_transfer();
    CHECK(agent.expert_model().params_equal(frozen));
}

TEST_CASE("semi-gradient: the training tape matches finite differences of the frozen-target loss") {
    // J(theta) = 0.5 * (Q(s,a;theta) - y)^2 with y held fixed
    nn::MlpModel m({3, 5, 5, 2}, 91);
    Rng rng(93);
    std::vector<double> s{0.3, -0.6, 0.8};
    const int a = 1;
    const double y = 0.7;
    const double q = m.forward(s)[a];
    std::vector<double> out_grad(2, 0.0);
    out_grad[a] = q - y;
    const nn::GradientTape tape = m.backward(s, out_grad);

    auto loss_at = [&](nn::MlpModel probe) {
        const double qq = probe.forward(s)[a];
        return 0.5 * (qq - y) * (qq - y);
    };
    const double step = 1e-5;
    const auto& sizes = m.layer_sizes();
    for (int layer = 0; layer < 3; ++layer) {
        for (int from = 0; from < sizes[layer]; ++from) {
            for (int to = 0; to < sizes[layer + 1]; ++to) {
                nn::MlpModel up = m, dn = m;
                up.weight(layer, from, to) += step;
                dn.weight(layer, from, to) -= step;
                const double fd = (loss_at(up) - loss_at(dn)) / (2 * step);
                const double an =
                    tape.weight_grads[layer][static_cast<std::size_t>(from) * sizes[layer + 1] +
                                             to];
                CHECK(std::abs(fd - an) <= 1e-5 * std::max({1.0, std::abs(fd), std::abs(an)}));
            }
        }
    }
    (void)rng;
}

TEST_CASE("window indicators: means, counts and reset semantics") {
    AgentParams p;
    UeAgent agent = make_agent({2, 4, 4, 2}, p, 81);
    agent.observe_tti(0.2, true);
    agent.observe_tti(0.4, true);
    agent.observe_tti(0.6, true);
    agent.record({one_hot(0, 2), one_hot(1, 2), 0, 0.2});
    agent.record({one_hot(1, 2), one_hot(0, 2), 1, 0.4});
    const auto w = agent.window_indicators(3, 1000);
    CHECK(w.mean_reward == doctest::Approx(0.4));
    CHECK(w.achievement == doctest::Approx(1.0));
    CHECK(w.data_size == doctest::Approx(2.0 / 1000.0));

    // counters reset at the boundary
    agent.observe_tti(1.0, false);
    const auto w2 = agent.window_indicators(3, 1000);
    CHECK(w2.mean_reward == doctest::Approx(1.0 / 3.0));
    CHECK(w2.achievement == 0.0);
    CHECK(w2.data_size == 0.0);
}

TEST_CASE("window indicators: no eligible TTIs means zero achievement") {
    AgentParams p;
    UeAgent agent = make_agent({2, 4, 4, 2}, p, 83);
    for (int i = 0; i < 5; ++i) agent.observe_tti(0.9, false);
    CHECK(agent.window_indicators(5, 100).achievement == 0.0);
}
