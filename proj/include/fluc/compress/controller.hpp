#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fluc/nn/model.hpp"

namespace fluc::compress {

enum class Phase { Growing, Pruning, Done };

inline const char* phase_name(Phase p) {
    switch (p) {
        case Phase::Growing: return "growing";
        case Phase::Pruning: return "pruning";
        default: return "done";
    }
}

// One grow/prune event. n1/n2 and window_reward describe the model during the
// window that ended at event_tti, i.e. before this event's mutation.
struct CompressionEvent {
    long event_tti = 0;
    Phase phase = Phase::Growing;
    int layer = 0;
    int neuron = 0;
    double poz = 0;
    int n1 = 0;
    int n2 = 0;
    double window_reward = 0;
};

struct EffectivenessPoint {
    int total_neurons = 0;
    double mean_reward = 0;
    double effectiveness = 0;     // mean reward / max mean reward over the history
    double compression_rate = 0;  // peak total neurons / total neurons
};

struct ControllerParams {
    long split_interval = 300;
    int n_required = 3;
    double delta = 0.5;
    double plateau_tol = 1e-6;
    bool strict_decline = false; // literal P_T < P_{T-1} trigger
};

// Drives Algorithm-style growing then pruning on one model. The caller feeds
// per-TTI rewards and calls on_window_boundary every split_interval TTIs;
// the controller splits the min-PoZ neuron of each hidden layer while the
// window reward keeps improving, then prunes the max-PoZ neuron per window
// down to the two-neuron floor.
class Controller {
public:
    explicit Controller(ControllerParams p) : params_(p) {}

    Phase phase() const { return phase_; }
    int non_improve_count() const { return non_improve_; }
    const std::vector<CompressionEvent>& events() const { return events_; }

    void accumulate(double reward) {
        window_sum_ += reward;
        ++window_count_;
    }

    bool at_boundary(long tti) const {
        return tti > 0 && params_.split_interval > 0 && tti % params_.split_interval == 0;
    }

    // Processes one completed window; mutates the model. Returns the phase
    // after the event.
    Phase on_window_boundary(nn::MlpModel& model, long tti);

private:
    bool window_improved(double p_t) const;
    void grow(nn::MlpModel& model, long tti, double p_t);
    void prune(nn::MlpModel& model, long tti, double p_t);

    ControllerParams params_;
    Phase phase_ = Phase::Growing;
    double prev_window_ = -1e300; // P_{T-1}, starts at -inf so window 1 improves
    int non_improve_ = 0;
    double window_sum_ = 0;
    long window_count_ = 0;
    std::vector<CompressionEvent> events_;
};

// Effectiveness curve from the pruning-phase history (pure function).
std::vector<EffectivenessPoint> effectiveness(const std::vector<CompressionEvent>& events);

// Smallest size such that every size at or above it has effectiveness >= 0.9;
// returns 0 when the history is empty.
int effectiveness_threshold(const std::vector<EffectivenessPoint>& curve);

extern const char* kCompressionCsvHeader;
void write_compression_csv(std::ostream& os, const std::vector<CompressionEvent>& events);
std::string effectiveness_to_json(const std::vector<EffectivenessPoint>& curve,
                                  int chosen_n1, int chosen_n2);

} // namespace fluc::compress
