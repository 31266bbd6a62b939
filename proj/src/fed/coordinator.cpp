#include "fluc/fed/coordinator.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "fluc/metrics.hpp"

namespace fluc::fed {

std::vector<double> attention_weights(const std::vector<rl::WindowIndicators>& indicators,
                                      int n_k,
                                      std::vector<NormalizedIndicators>* normalized) {
    const std::size_t m = indicators.size();
    if (m == 0) throw std::invalid_argument("attention_weights: empty group");

    double max_r = 0, max_p = 0, max_f = 0;
    for (const auto& ind : indicators) {
        max_r = std::max(max_r, ind.mean_reward);
        max_p = std::max(max_p, ind.data_size);
        max_f = std::max(max_f, ind.achievement);
    }
    auto norm = [](double v, double mx) { return mx > 0 ? v / mx : 0.0; };

    std::vector<double> score(m);
    if (normalized) normalized->resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double r = norm(indicators[i].mean_reward, max_r);
        const double p = norm(indicators[i].data_size, max_p);
        const double f = norm(indicators[i].achievement, max_f);
        if (normalized) (*normalized)[i] = {r, p, f};
        score[i] = (r + p + f) / static_cast<double>(n_k);
    }

    double max_s = score[0];
    for (double s : score) max_s = std::max(max_s, s);
    std::vector<double> w(m);
    double z = 0;
    for (std::size_t i = 0; i < m; ++i) {
        w[i] = std::exp(score[i] - max_s);
        z += w[i];
    }
    for (auto& v : w) v /= z;
    return w;
}

bool Coordinator::aggregate(Group g, const std::vector<const nn::MlpModel*>& locals,
                            const std::vector<double>& weights) {
    if (locals.empty()) return false; // empty group keeps its global
    if (locals.size() != weights.size())
        throw std::invalid_argument("aggregate: weight count does not match model count");

    for (const auto* l : locals) {
        if (!l->same_shape(*locals.front())) {
            ++aggregation_errors_;
            return false;
        }
    }
    if (global_[idx(g)] && !global_[idx(g)]->same_shape(*locals.front())) {
        ++aggregation_errors_;
        return false;
    }

    nn::MlpModel weighted = nn::MlpModel::zeros(locals.front()->layer_sizes());
    for (std::size_t i = 0; i < locals.size(); ++i) weighted.axpy(weights[i], *locals[i]);

    if (!global_[idx(g)]) {
        global_[idx(g)] = std::move(weighted);
    } else {
        auto& gm = *global_[idx(g)];
        gm.scale_params(1.0 - params_.eta1);
        gm.axpy(params_.eta1, weighted);
    }
    return true;
}

void Coordinator::push_back_local(Group g, rl::UeAgent& agent) const {
    if (!global_[idx(g)]) return;
    agent.local_model().blend_toward(*global_[idx(g)], params_.eta2);
}

void Coordinator::push_back_expert(Group g, rl::UeAgent& agent) const {
    if (!global_[idx(g)]) return;
    agent.set_expert(*global_[idx(g)]);
}

bool Coordinator::init_newcomer(Group g, rl::UeAgent& agent, const nn::MlpModel& fallback,
                                bool with_expert) const {
    if (global_[idx(g)]) {
        agent.set_local(*global_[idx(g)]);
        if (with_expert) agent.set_expert(*global_[idx(g)]);
        return true;
    }
    agent.set_local(fallback);
    if (with_expert) agent.set_expert(fallback);
    return false;
}

const char* kFedCsvHeader = "round,group,ue_id,rbar_norm,psi_norm,phi_norm,weight";

void write_fed_csv(std::ostream& os, const std::vector<FedLogRow>& rows) {
    os << kFedCsvHeader << "\n";
    for (const auto& r : rows) {
        os << r.round << ',' << group_name(r.group) << ',' << r.ue_id << ','
           << format_double(r.rbar_norm) << ',' << format_double(r.psi_norm) << ','
           << format_double(r.phi_norm) << ',' << format_double(r.weight) << "\n";
    }
}

} // namespace fluc::fed
