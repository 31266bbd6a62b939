#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fluc {

enum class Rat { Lte, Nr };

struct BsClassConfig {
    Rat rat = Rat::Lte;
    double carrier_ghz = 0.8;
    double tx_power_w = 40.0;
    double bandwidth_mhz = 10.0;
    int rb_count = 50;

    bool operator==(const BsClassConfig&) const = default;
};

struct TrafficClassConfig {
    double proportion = 0.4;
    int qci = 2;
    double file_kib = 50.0;      // KiB so the CBR packet count divides evenly
    int packet_bytes = 1600;
    int interarrival_ttis = 3;

    bool operator==(const TrafficClassConfig&) const = default;
};

// Full scenario + learning configuration. Defaults are the paper-scale
// values; the desk presets in configs/ shrink the radio plane so the
// learning effects are measurable in minutes.
struct RunConfig {
    std::uint64_t seed = 1;
    long total_ttis = 20000;
    double avg_ue_count = 25.0;
    std::string algorithm = "ktfluc"; // ktfluc | fl | fli | dil | cl

    // radio plane
    int sbs_count = 4;
    BsClassConfig mbs{Rat::Lte, 0.8, 40.0, 10.0, 50};
    BsClassConfig sbs{Rat::Nr, 3.5, 20.0, 20.0, 100};
    double rb_bandwidth_hz = 180e3; // 12 subcarriers x 15 kHz
    double antenna_gain_db = 15.0;
    double shadowing_sigma_db = 8.0;
    double noise_dbm_per_hz = -174.0;
    double pathloss_ref_db = 128.1;  // 128.1 + 37.6 log10(d_km)
    double pathloss_slope_db = 37.6;
    double area_m = 700.0;           // UE positions uniform in area_m x area_m
    double sbs_ring_m = 250.0;       // SBS corners at (+-ring, +-ring)
    bool co_channel_sbs = true;      // false: reuse-planned SBS carriers, no SBS-SBS interference

    // traffic
    TrafficClassConfig gbr{0.4, 2, 50.0, 1600, 3};
    TrafficClassConfig non_gbr{0.6, 6, 250.0, 3200, 3};

    // reward and QoS eligibility
    double d_max_ms = 100.0;
    double b_max_bps = 20e6;
    double gbr_eligible_delay_ms = 50.0;
    double non_gbr_eligible_bps = 2e6;

    // DQN
    double learning_rate = 0.001;
    double discount = 0.5;
    double epsilon = 0.05;
    int buffer_capacity = 200;
    int batch_size = 64;
    std::vector<int> hidden_sizes{32, 64};
    bool full_gradient = false;        // let the bootstrapped target carry gradient
    double transfer_lr_scale = 1.0;    // step scale for the doubled-scale transfer loss
    double reward_scale = 1.0;         // training-side reward scaling (fidelity experiments)
    std::string expert_init = "local"; // local | zero
    std::string newcomer_init = "global"; // global | random (fidelity experiments)

    // federation
    long fed_interval = 30;
    double eta1 = 0.9;
    double eta2 = 0.9;
    int indicator_count = 3; // softmax divisor n_k

    // grow/prune compression
    long split_interval = 300;
    int n_required = 3;
    double split_delta = 0.5;
    double plateau_tol = 1e-6;
    bool strict_decline = false;              // literal P_T < P_{T-1} trigger
    std::string compress_reward_scope = "designated"; // designated | system

    // cell-centric baseline
    int cl_slots = 0;                  // 0 = 3 * avg_ue_count
    std::string cl_reward = "mean";    // mean | sum
    std::vector<int> cl_hidden_sizes{32, 64};

    // state normalization
    double rssi_min_dbm = -120.0;
    double rssi_max_dbm = -30.0;
    double queue_norm_packets = 50.0;

    long trajectory_window_ttis = 500;

    bool operator==(const RunConfig&) const = default;

    int bs_count() const { return 1 + sbs_count; }
    int state_size() const { return 2 * bs_count() + 2; }
    int action_count() const { return bs_count(); }
    int effective_cl_slots() const {
        return cl_slots > 0 ? cl_slots : static_cast<int>(3 * avg_ue_count);
    }

    // throws std::invalid_argument with a diagnostic on the first bad field
    void validate() const;

    std::string to_json_string() const;
    static RunConfig from_json_string(const std::string& text);
    void save_file(const std::string& path) const;
    static RunConfig load_file(const std::string& path);
};

} // namespace fluc
