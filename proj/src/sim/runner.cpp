#include "fluc/sim/runner.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>

#include "fluc/ran/world.hpp"
#include "fluc/rl/agent.hpp"
#include "fluc/sim/cl_agent.hpp"

namespace fluc::sim {

namespace fs = std::filesystem;

AlgorithmMode mode_from_string(const std::string& s) {
    if (s == "ktfluc") return AlgorithmMode::KtFluc;
    if (s == "fl") return AlgorithmMode::Fl;
    if (s == "fli") return AlgorithmMode::Fli;
    if (s == "dil") return AlgorithmMode::Dil;
    if (s == "cl") return AlgorithmMode::Cl;
    throw std::invalid_argument("unknown algorithm: " + s);
}

std::string mode_name(AlgorithmMode m) {
    switch (m) {
        case AlgorithmMode::KtFluc: return "ktfluc";
        case AlgorithmMode::Fl: return "fl";
        case AlgorithmMode::Fli: return "fli";
        case AlgorithmMode::Dil: return "dil";
        case AlgorithmMode::Cl: return "cl";
    }
    return "?";
}

namespace {

class Runner {
public:
    Runner(const RunConfig& cfg, const RunOptions& opts)
        : cfg_(cfg),
          opts_(opts),
          mode_(opts.compress ? AlgorithmMode::Dil : mode_from_string(cfg.algorithm)),
          world_(cfg, cfg.effective_cl_slots()),
          coord_({cfg.eta1, cfg.eta2, cfg.indicator_count}),
          controller_({cfg.split_interval, cfg.n_required, cfg.split_delta, cfg.plateau_tol,
                       cfg.strict_decline}) {
        if (!opts_.load_model_path.empty())
            init_override_ = nn::MlpModel::load_file(opts_.load_model_path);

        if (mode_ == AlgorithmMode::Cl) {
            CentralParams p{cfg_.learning_rate, cfg_.discount, cfg_.epsilon, cfg_.batch_size,
                            cfg_.buffer_capacity};
            Rng init(cfg_.seed, "cl_init");
            central_ = std::make_unique<CentralAgent>(
                cfg_.effective_cl_slots(), world_.state_size(), world_.bs_count(),
                cfg_.cl_hidden_sizes, p, init, Rng(cfg_.seed, "cl_explore"),
                Rng(cfg_.seed, "cl_batch"));
            slot_ue_.assign(central_->slots(), -1);
        }

        for (const auto& [id, ue] : world_.ues()) on_arrival(id, /*initial=*/true);
    }

    RunResult run() {
        RunResult result;
        long t = 0;
        for (; t < cfg_.total_ttis; ++t) {
            if (has_federation() && t > 0 && t % cfg_.fed_interval == 0) federate(t);

            std::map<int, int> actions = select_actions();
            auto out = world_.step(actions, t);

            for (const auto& res : out.results) {
                TtiRow row;
                row.tti = t;
                row.ue_id = res.ue_id;
                row.traffic_type = res.type == ran::TrafficType::Gbr ? 1 : 0;
                row.attached_bs = res.attached_bs;
                row.reward = res.reward;
                row.delay_ms = res.delay_ms;
                row.throughput_bps = res.throughput_bps;
                row.queue_len = res.queue_len;
                row.eligible = res.eligible ? 1 : 0;
                result.rows.push_back(row);
            }

            if (mode_ == AlgorithmMode::Cl)
                update_central(out);
            else
                update_agents(actions, out);

            if (opts_.compress) {
                accumulate_compress(out);
                if (controller_.at_boundary(t + 1) && designated_agent() != nullptr) {
                    controller_.on_window_boundary(designated_agent()->local_model(), t + 1);
                    if (controller_.phase() == compress::Phase::Done) {
                        ++t;
                        break; // schedule complete, stop the pre-simulation
                    }
                }
            }

            for (int id : out.departures) on_departure(id);
            for (int id : out.arrivals) on_arrival(id, /*initial=*/false);
        }

        result.summary = summarize(result.rows, cfg_);
        result.audit = world_.audit();
        result.mean_active_ues = world_.mean_active_ues();
        result.fed_log = coord_.log();
        result.compression = controller_.events();
        result.compress_end_tti = t;
        result.newcomer_random_inits = newcomer_random_inits_;
        if (opts_.compress) {
            result.effectiveness_curve = compress::effectiveness(result.compression);
            const nn::MlpModel* m =
                designated_agent() ? &designated_agent()->local_model() : nullptr;
            if (!m && designated_pool_) m = &designated_pool_->local_model();
            if (m) {
                result.compress_n1 = m->layer_sizes()[1];
                result.compress_n2 = m->layer_sizes()[2];
            }
        }
        write_outputs(result);
        return result;
    }

private:
    bool has_federation() const {
        return !opts_.compress &&
               (mode_ == AlgorithmMode::KtFluc || mode_ == AlgorithmMode::Fl ||
                mode_ == AlgorithmMode::Fli);
    }

    fed::Group group_of(int ue_id) const {
        return world_.ues().at(ue_id).type == ran::TrafficType::Gbr ? fed::Group::Gbr
                                                                    : fed::Group::NonGbr;
    }

    std::vector<int> model_sizes(const std::vector<int>& hidden) const {
        std::vector<int> sizes;
        sizes.push_back(world_.state_size());
        for (int h : hidden) sizes.push_back(h);
        sizes.push_back(world_.bs_count());
        return sizes;
    }

    nn::MlpModel fresh_model(int ue_id, const std::vector<int>& hidden) const {
        if (init_override_) return *init_override_;
        return nn::MlpModel(model_sizes(hidden), substream_seed(cfg_.seed, "init", ue_id));
    }

    // the t=0 cohort shares one broadcast initialization (newcomers draw
    // their own when no global model exists yet)
    nn::MlpModel cohort_model(const std::vector<int>& hidden) const {
        if (init_override_) return *init_override_;
        return nn::MlpModel(model_sizes(hidden), substream_seed(cfg_.seed, "init_cohort"));
    }

    rl::UeAgent make_agent(int ue_id, const std::vector<int>& hidden) const {
        rl::AgentParams p;
        p.learning_rate = cfg_.learning_rate;
        p.discount = cfg_.discount;
        p.epsilon = cfg_.epsilon;
        p.batch_size = cfg_.batch_size;
        p.buffer_capacity = cfg_.buffer_capacity;
        p.full_gradient = cfg_.full_gradient;
        rl::UeAgent agent(fresh_model(ue_id, hidden), p,
                          Rng(cfg_.seed, "explore", static_cast<std::uint64_t>(ue_id)),
                          Rng(cfg_.seed, "batch", static_cast<std::uint64_t>(ue_id)));
        agent.set_transfer_lr_scale(cfg_.transfer_lr_scale);
        return agent;
    }

    void attach_expert_at_spawn(rl::UeAgent& agent) const {
        if (cfg_.expert_init == "zero")
            agent.set_expert(nn::MlpModel::zeros(agent.local_model().layer_sizes()));
        else
            agent.set_expert(agent.local_model());
    }

    rl::UeAgent* designated_agent() {
        if (designated_ue_ < 0) return nullptr;
        auto it = agents_.find(designated_ue_);
        return it == agents_.end() ? nullptr : &it->second;
    }

    void on_arrival(int ue_id, bool initial) {
        if (mode_ == AlgorithmMode::Cl) {
            for (std::size_t s = 0; s < slot_ue_.size(); ++s) {
                if (slot_ue_[s] < 0) {
                    slot_ue_[s] = ue_id;
                    ue_slot_[ue_id] = static_cast<int>(s);
                    break;
                }
            }
            prev_state_[ue_id] = world_.observe_state(ue_id);
            return;
        }

        if (opts_.compress && designated_ue_ < 0 && designated_pool_) {
            // hand the grow/prune model to the next arrival so the schedule
            // survives UE departures
            agents_.emplace(ue_id, std::move(*designated_pool_));
            designated_pool_.reset();
            designated_ue_ = ue_id;
            prev_state_[ue_id] = world_.observe_state(ue_id);
            return;
        }

        const bool newcomer = !initial;
        rl::UeAgent agent = make_agent(ue_id, cfg_.hidden_sizes);
        if (initial) agent.set_local(cohort_model(cfg_.hidden_sizes));
        switch (mode_) {
            case AlgorithmMode::Dil:
                break;
            case AlgorithmMode::Fl:
                break;
            case AlgorithmMode::Fli:
                if (newcomer && cfg_.newcomer_init == "global") {
                    if (!coord_.init_newcomer(group_of(ue_id), agent, agent.local_model(), false))
                        ++newcomer_random_inits_;
                }
                break;
            case AlgorithmMode::KtFluc:
                if (newcomer && cfg_.newcomer_init == "global") {
                    if (!coord_.init_newcomer(group_of(ue_id), agent, agent.local_model(), true)) {
                        attach_expert_at_spawn(agent); // global still empty
                        ++newcomer_random_inits_;
                    }
                } else {
                    attach_expert_at_spawn(agent);
                }
                break;
            case AlgorithmMode::Cl:
                break;
        }
        if (opts_.compress && designated_ue_ < 0 && !designated_pool_ &&
            world_.ues().at(ue_id).type == ran::TrafficType::NonGbr) {
            // the first non-GBR UE becomes the designated grow/prune target:
            // its throughput reward actually responds to policy quality, and
            // it is pinned in place so windows stay comparable across sizes
            std::vector<int> start_hidden{2, 2};
            agent = make_agent(ue_id, start_hidden);
            agent.set_record_poz(true);
            designated_ue_ = ue_id;
            world_.set_immortal(ue_id);
        }
        agents_.emplace(ue_id, std::move(agent));
        prev_state_[ue_id] = world_.observe_state(ue_id);
    }

    void on_departure(int ue_id) {
        if (mode_ == AlgorithmMode::Cl) {
            auto it = ue_slot_.find(ue_id);
            if (it != ue_slot_.end()) {
                slot_ue_[it->second] = -1;
                ue_slot_.erase(it);
            }
            prev_state_.erase(ue_id);
            return;
        }
        auto it = agents_.find(ue_id);
        if (it != agents_.end()) {
            if (opts_.compress && ue_id == designated_ue_) {
                designated_pool_ = std::move(it->second);
                designated_ue_ = -1;
            }
            agents_.erase(it);
        }
        prev_state_.erase(ue_id);
    }

    std::map<int, int> select_actions() {
        std::map<int, int> actions;
        if (mode_ == AlgorithmMode::Cl) {
            build_cell_state(cell_state_, cell_active_);
            if (have_pending_) {
                // the successor state includes this TTI's slot churn, so the
                // pending experience completes here, right before selection
                CellExperience e;
                e.prev_state = pending_prev_state_;
                e.next_state = cell_state_;
                e.actions = pending_actions_;
                e.active = pending_active_;
                e.next_active = cell_active_;
                e.reward = pending_reward_;
                central_->record(std::move(e));
                central_->train();
                have_pending_ = false;
            }
            const std::vector<int> per_slot = central_->select_actions(cell_state_, cell_active_);
            for (std::size_t s = 0; s < slot_ue_.size(); ++s)
                if (slot_ue_[s] >= 0 && per_slot[s] >= 0) actions[slot_ue_[s]] = per_slot[s];
            pending_prev_state_ = cell_state_;
            pending_active_ = cell_active_;
            pending_actions_ = per_slot;
            return actions;
        }
        for (auto& [id, agent] : agents_) {
            const auto& st = prev_state_.at(id);
            actions[id] = mode_ == AlgorithmMode::KtFluc ? agent.select_action_transfer(st)
                                                         : agent.select_action_local(st);
        }
        return actions;
    }

    void update_agents(const std::map<int, int>& actions, const ran::StepOutput& out) {
        for (const auto& res : out.results) {
            auto it = agents_.find(res.ue_id);
            if (it == agents_.end()) continue;
            rl::UeAgent& agent = it->second;
            agent.observe_tti(res.reward, res.eligible);
            rl::Experience e;
            e.prev_state = prev_state_.at(res.ue_id);
            e.next_state = res.state;
            e.action = actions.at(res.ue_id);
            e.reward = res.reward * cfg_.reward_scale;
            agent.record(std::move(e));
            if (mode_ == AlgorithmMode::KtFluc)
                agent.train_transfer();
            else
                agent.train_local();
            prev_state_[res.ue_id] = res.state;
        }
    }

    void update_central(const ran::StepOutput& out) {
        double reward_sum = 0;
        for (const auto& res : out.results) reward_sum += res.reward;
        const int n = static_cast<int>(out.results.size());
        const double cell_reward =
            n == 0 ? 0.0 : (cfg_.cl_reward == "sum" ? reward_sum : reward_sum / n);
        pending_reward_ = cell_reward * cfg_.reward_scale;
        have_pending_ = n > 0;
    }

    void build_cell_state(std::vector<double>& state, std::vector<std::uint8_t>& active) {
        const int per_ue = world_.state_size();
        const int slots = central_->slots();
        state.assign(static_cast<std::size_t>(slots) * (per_ue + 1), 0.0);
        active.assign(slots, 0);
        for (int s = 0; s < slots; ++s) {
            const int ue = slot_ue_[s];
            if (ue < 0 || !world_.active(ue)) continue;
            const std::vector<double> st = world_.observe_state(ue);
            std::copy(st.begin(), st.end(), state.begin() + static_cast<std::size_t>(s) * (per_ue + 1));
            state[static_cast<std::size_t>(s) * (per_ue + 1) + per_ue] = 1.0;
            active[s] = 1;
        }
    }

    void federate(long tti) {
        const long round = tti / cfg_.fed_interval;
        for (fed::Group g : {fed::Group::Gbr, fed::Group::NonGbr}) {
            std::vector<int> ids;
            std::vector<const nn::MlpModel*> locals;
            std::vector<rl::WindowIndicators> inds;
            for (auto& [id, agent] : agents_) {
                if (group_of(id) != g) continue;
                ids.push_back(id);
                locals.push_back(&agent.local_model());
                inds.push_back(agent.window_indicators(cfg_.fed_interval, cfg_.total_ttis));
            }
            if (ids.empty()) continue;

            std::vector<fed::NormalizedIndicators> norm;
            const std::vector<double> w =
                fed::attention_weights(inds, cfg_.indicator_count, &norm);
            for (std::size_t i = 0; i < ids.size(); ++i)
                coord_.log().push_back(
                    {round, g, ids[i], norm[i].rbar, norm[i].psi, norm[i].phi, w[i]});

            coord_.aggregate(g, locals, w);

            for (std::size_t i = 0; i < ids.size(); ++i) {
                rl::UeAgent& agent = agents_.at(ids[i]);
                if (mode_ == AlgorithmMode::KtFluc)
                    coord_.push_back_expert(g, agent);
                else
                    coord_.push_back_local(g, agent);
            }

            if (opts_.save_fed_rounds && !opts_.out_dir.empty() && coord_.global_initialized(g)) {
                fed_round_snapshots_.emplace_back(
                    "fed_round_" + std::to_string(round) + "_" + fed::group_name(g) + ".model",
                    coord_.global(g));
            }
        }
    }

    void accumulate_compress(const ran::StepOutput& out) {
        if (cfg_.compress_reward_scope == "system") {
            if (!out.results.empty()) {
                double sum = 0;
                for (const auto& r : out.results) sum += r.reward;
                controller_.accumulate(sum / static_cast<double>(out.results.size()));
            }
            return;
        }
        for (const auto& r : out.results)
            if (r.ue_id == designated_ue_) controller_.accumulate(r.reward);
    }

    void write_outputs(const RunResult& result) {
        if (opts_.out_dir.empty() && opts_.save_model_prefix.empty()) return;

        if (!opts_.out_dir.empty()) {
            fs::create_directories(opts_.out_dir);
            const fs::path dir(opts_.out_dir);
            cfg_.save_file((dir / "config.json").string());
            {
                std::ofstream os(dir / "per_tti.csv");
                write_tti_csv(os, result.rows);
            }
            {
                std::ofstream os(dir / "summary.json");
                os << summary_to_json(result.summary, result.audit, cfg_);
            }
            if (has_federation()) {
                std::ofstream os(dir / "federation.csv");
                fed::write_fed_csv(os, result.fed_log);
            }
            if (opts_.compress) {
                std::ofstream os(dir / "compression.csv");
                compress::write_compression_csv(os, result.compression);
                std::ofstream ej(dir / "effectiveness.json");
                ej << compress::effectiveness_to_json(result.effectiveness_curve,
                                                      result.compress_n1, result.compress_n2);
            }
            for (const auto& [name, model] : fed_round_snapshots_)
                model.save_file((dir / name).string());
        }

        if (!opts_.save_model_prefix.empty()) {
            const std::string& pre = opts_.save_model_prefix;
            if (mode_ == AlgorithmMode::Cl) {
                central_->model().save_file(pre + ".cl.model");
            } else if (opts_.compress) {
                const nn::MlpModel* m =
                    designated_agent() ? &designated_agent()->local_model() : nullptr;
                if (!m && designated_pool_) m = &designated_pool_->local_model();
                if (m) m->save_file(pre + ".designated.model");
            } else {
                for (fed::Group g : {fed::Group::Gbr, fed::Group::NonGbr})
                    if (coord_.global_initialized(g))
                        coord_.global(g).save_file(pre + "." + fed::group_name(g) + ".model");
            }
        }
    }

    RunConfig cfg_;
    RunOptions opts_;
    AlgorithmMode mode_;
    ran::RanWorld world_;
    fed::Coordinator coord_;
    compress::Controller controller_;

    std::map<int, rl::UeAgent> agents_;
    std::map<int, std::vector<double>> prev_state_;
    std::optional<nn::MlpModel> init_override_;

    // CL bookkeeping
    std::unique_ptr<CentralAgent> central_;
    std::vector<int> slot_ue_;
    std::map<int, int> ue_slot_;
    std::vector<double> cell_state_, pending_prev_state_;
    std::vector<std::uint8_t> cell_active_, pending_active_;
    std::vector<int> pending_actions_;
    double pending_reward_ = 0;
    bool have_pending_ = false;

    long newcomer_random_inits_ = 0;

    // compression bookkeeping
    int designated_ue_ = -1;
    std::optional<rl::UeAgent> designated_pool_;

    std::vector<std::pair<std::string, nn::MlpModel>> fed_round_snapshots_;
};

} // namespace

RunResult run_experiment(const RunConfig& cfg, const RunOptions& opts) {
    cfg.validate();
    Runner runner(cfg, opts);
    try {
        return runner.run();
    } catch (...) {
        // a failed run must not leave partial output behind
        if (!opts.out_dir.empty()) {
            std::error_code ec;
            for (const char* f : {"per_tti.csv", "summary.json", "federation.csv",
                                  "compression.csv", "effectiveness.json", "config.json"})
                fs::remove(fs::path(opts.out_dir) / f, ec);
        }
        throw;
    }
}

} // namespace fluc::sim
