#include "fluc/compress/controller.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "fluc/metrics.hpp"

namespace fluc::compress {

bool Controller::window_improved(double p_t) const {
    if (params_.strict_decline) return !(p_t < prev_window_);
    return p_t > prev_window_ + params_.plateau_tol;
}

Phase Controller::on_window_boundary(nn::MlpModel& model, long tti) {
    if (phase_ == Phase::Done) return phase_;
    if (window_count_ == 0) return phase_; // void window: no reward observed
    const double p_t = window_sum_ / window_count_;
    window_sum_ = 0;
    window_count_ = 0;

    if (phase_ == Phase::Growing) {
        if (window_improved(p_t))
            non_improve_ = 0;
        else
            ++non_improve_;
        if (non_improve_ >= params_.n_required) {
            phase_ = Phase::Pruning;
            prune(model, tti, p_t);
        } else {
            grow(model, tti, p_t);
            prev_window_ = p_t;
        }
    } else {
        prune(model, tti, p_t);
    }
    model.reset_poz();
    return phase_;
}

void Controller::grow(nn::MlpModel& model, long tti, double p_t) {
    // split the strongest-competitiveness (lowest PoZ) neuron of each hidden layer
    for (int layer = 1; layer <= model.layer_count() - 2; ++layer) {
        const int width = model.layer_sizes()[layer];
        int best = -1;
        double best_poz = 2.0;
        for (int j = 0; j < width; ++j) {
            if (model.poz_samples(layer, j) == 0) continue;
            const double p = model.poz(layer, j);
            if (p < best_poz) {
                best_poz = p;
                best = j;
            }
        }
        if (best < 0) continue; // nothing observed this window
        CompressionEvent ev;
        ev.event_tti = tti;
        ev.phase = Phase::Growing;
        ev.layer = layer;
        ev.neuron = best;
        ev.poz = best_poz;
        ev.n1 = model.layer_sizes()[1];
        ev.n2 = model.layer_sizes()[2];
        ev.window_reward = p_t;
        events_.push_back(ev);
        model.split_neuron(layer, best, params_.delta);
    }
}

void Controller::prune(nn::MlpModel& model, long tti, double p_t) {
    // weakest neuron (highest PoZ) across both hidden layers, floors respected
    int best_layer = -1, best_neuron = -1;
    double best_poz = -1.0;
    for (int layer = 1; layer <= model.layer_count() - 2; ++layer) {
        if (model.layer_sizes()[layer] <= 2) continue;
        const int width = model.layer_sizes()[layer];
        for (int j = 0; j < width; ++j) {
            if (model.poz_samples(layer, j) == 0) continue;
            const double p = model.poz(layer, j);
            if (p > best_poz) {
                best_poz = p;
                best_layer = layer;
                best_neuron = j;
            }
        }
    }
    if (best_layer < 0) {
        bool at_floor = true;
        for (int layer = 1; layer <= model.layer_count() - 2; ++layer)
            if (model.layer_sizes()[layer] > 2) at_floor = false;
        if (at_floor) {
            // terminal measurement so the floor size appears in the history
            CompressionEvent ev;
            ev.event_tti = tti;
            ev.phase = Phase::Pruning;
            ev.layer = -1;
            ev.neuron = -1;
            ev.poz = 0;
            ev.n1 = model.layer_sizes()[1];
            ev.n2 = model.layer_sizes()[2];
            ev.window_reward = p_t;
            events_.push_back(ev);
            phase_ = Phase::Done;
        }
        return; // either finished or no PoZ samples this window
    }

    CompressionEvent ev;
    ev.event_tti = tti;
    ev.phase = Phase::Pruning;
    ev.layer = best_layer;
    ev.neuron = best_neuron;
    ev.poz = best_poz;
    ev.n1 = model.layer_sizes()[1];
    ev.n2 = model.layer_sizes()[2];
    ev.window_reward = p_t;
    events_.push_back(ev);
    model.prune_neuron(best_layer, best_neuron);
    // once the floor is reached the next boundary records the terminal
    // measurement and completes the schedule
}

std::vector<EffectivenessPoint> effectiveness(const std::vector<CompressionEvent>& events) {
    std::vector<EffectivenessPoint> curve;
    double max_reward = 0;
    int peak = 0;
    for (const auto& ev : events) {
        if (ev.phase != Phase::Pruning) continue;
        EffectivenessPoint p;
        p.total_neurons = ev.n1 + ev.n2;
        p.mean_reward = ev.window_reward;
        curve.push_back(p);
        max_reward = std::max(max_reward, ev.window_reward);
        peak = std::max(peak, p.total_neurons);
    }
    for (auto& p : curve) {
        p.effectiveness = max_reward > 0 ? p.mean_reward / max_reward : 0.0;
        p.compression_rate =
            p.total_neurons > 0 ? static_cast<double>(peak) / p.total_neurons : 0.0;
    }
    return curve;
}

int effectiveness_threshold(const std::vector<EffectivenessPoint>& curve) {
    if (curve.empty()) return 0;
    auto sorted = curve;
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.total_neurons > b.total_neurons; });
    int threshold = sorted.front().total_neurons;
    for (const auto& p : sorted) {
        if (p.effectiveness >= 0.9)
            threshold = p.total_neurons;
        else
            break;
    }
    return threshold;
}

const char* kCompressionCsvHeader = "event_tti,phase,layer,neuron,poz,n1,n2,window_reward";

void write_compression_csv(std::ostream& os, const std::vector<CompressionEvent>& events) {
    os << kCompressionCsvHeader << "\n";
    for (const auto& e : events) {
        os << e.event_tti << ',' << phase_name(e.phase) << ',' << e.layer << ',' << e.neuron
           << ',' << format_double(e.poz) << ',' << e.n1 << ',' << e.n2 << ','
           << format_double(e.window_reward) << "\n";
    }
}

std::string effectiveness_to_json(const std::vector<EffectivenessPoint>& curve,
                                  int chosen_n1, int chosen_n2) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json pts = nlohmann::ordered_json::array();
    int peak = 0;
    for (const auto& p : curve) {
        pts.push_back({{"total_neurons", p.total_neurons},
                       {"mean_reward", p.mean_reward},
                       {"effectiveness", p.effectiveness},
                       {"compression_rate", p.compression_rate}});
        peak = std::max(peak, p.total_neurons);
    }
    j["points"] = pts;
    const int threshold = effectiveness_threshold(curve);
    j["threshold_total_neurons"] = threshold;
    j["peak_total_neurons"] = peak;
    j["compression_rate_at_threshold"] =
        threshold > 0 ? static_cast<double>(peak) / threshold : 0.0;
    j["chosen_n1"] = chosen_n1;
    j["chosen_n2"] = chosen_n2;
    return j.dump(2) + "\n";
}

} // namespace fluc::compress
