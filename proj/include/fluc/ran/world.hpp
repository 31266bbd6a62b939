#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <vector>

#include "fluc/config.hpp"
#include "fluc/metrics.hpp"
#include "fluc/rng.hpp"

namespace fluc::ran {

enum class TrafficType { NonGbr = 0, Gbr = 1 };

struct Position {
    double x = 0, y = 0;
};

double distance_m(Position a, Position b);

struct Packet {
    std::int64_t size_bits = 0;
    std::int64_t remaining_bits = 0;
    long enqueue_tti = 0;
    double dequeue_time_ms = -1.0; // first bit on the link; < 0 while waiting
};

struct BaseStation {
    int id = 0;
    Rat rat = Rat::Lte;
    Position pos;
    double carrier_ghz = 0;
    double tx_power_w = 0;
    double bandwidth_mhz = 0;
    int rb_count = 0;
    int interference_group = 0; // BSs in the same group collide on equal RB indices

    double rb_power_w() const { return tx_power_w / rb_count; }

    std::vector<int> rb_alloc;  // rb index -> ue id, -1 free; rebuilt per TTI
    long rr_cursor[2] = {0, 0}; // round-robin rotation, [GBR, non-GBR]
};

struct UserEquipment {
    int id = 0;
    Position pos;
    TrafficType type = TrafficType::NonGbr;
    long arrival_tti = 0;
    int attached_bs = 0;
    std::int64_t file_bits_pending = 0; // not yet packetized
    std::int64_t file_bits_total = 0;
    bool immortal = false; // file regenerates; the UE never departs
    std::deque<Packet> queue;           // downlink queue at the serving BS
    std::int64_t queued_bits = 0;
    std::vector<double> shadowing_db;   // one draw per BS, fixed for the UE's lifetime
    double last_delay_ms = 0;           // d_m
    double last_tput_bps = 0;           // b_m
    std::int64_t packet_bits = 0;
    long interarrival_ttis = 3;
};

struct UeStepResult {
    int ue_id = 0;
    TrafficType type = TrafficType::NonGbr;
    int attached_bs = 0;
    double reward = 0;
    double delay_ms = 0;
    double throughput_bps = 0;
    int queue_len = 0;
    bool eligible = false;
    int rbs_granted = 0;
    std::vector<double> state;
};

struct StepOutput {
    std::vector<UeStepResult> results; // ordered by ue id
    std::vector<int> arrivals;         // active from the next TTI
    std::vector<int> departures;       // file completed this TTI
};

// Downlink world: 1 LTE macro BS plus NR small BSs, CBR traffic, SINR-driven
// link capacity, strict-priority round-robin RB scheduling, packet queues
// with exact bit conservation, Poisson UE arrivals and file-completion
// departures. Advances one TTI (1 ms) per step() call.
class RanWorld {
public:
    // max_active > 0 caps the concurrent population (used by the CL baseline);
    // spawn_initial=false starts empty for hand-built unit scenarios.
    explicit RanWorld(const RunConfig& cfg, int max_active = 0, bool spawn_initial = true);

    int bs_count() const { return static_cast<int>(bss_.size()); }
    int state_size() const { return 2 * bs_count() + 2; }
    const std::vector<BaseStation>& base_stations() const { return bss_; }
    const std::map<int, UserEquipment>& ues() const { return ues_; }
    bool active(int ue_id) const { return ues_.count(ue_id) > 0; }

    StepOutput step(const std::map<int, int>& actions, long tti);

    std::vector<double> observe_state(int ue_id) const;

    // linear-scale power gain: antenna gain - pathloss - shadowing
    double channel_gain(int bs, int ue) const;
    double channel_gain_db(int bs, int ue) const;
    double rssi_dbm(int bs, int ue) const;

    // linear SINR of the serving link on one RB, with co-carrier interference
    // computed from the current TTI's allocation
    double sinr(int bs, int rb, int ue) const;
    double link_capacity_bps(int bs, int ue) const;

    const ConstraintAudit& audit() const { return audit_; }
    double mean_active_ues() const;

    // deterministic spawn for unit scenarios (draws shadowing from the
    // traffic stream like a normal arrival)
    int spawn_ue(Position pos, TrafficType type, int attach_bs);

    // pins a UE for the compression pre-simulation: its CBR flow regenerates
    // when the file completes, so it never departs
    void set_immortal(int ue_id) { ues_.at(ue_id).immortal = true; }

    double noise_w_per_hz() const { return noise_w_per_hz_; }
    double arrival_rate_per_tti() const { return lambda_per_tti_; }

private:
    void build_topology();
    int spawn_random_ue();
    void generate_packets(UserEquipment& ue, long tti);
    void schedule_bs(BaseStation& bs, long tti);
    std::int64_t estimate_rb_bits(const BaseStation& bs, const UserEquipment& ue) const;
    void run_audits(long tti);

    RunConfig cfg_;
    std::vector<BaseStation> bss_;
    std::map<int, UserEquipment> ues_;
    int next_ue_id_ = 0;
    int max_active_ = 0;
    std::deque<int> deferred_; // spawned but waiting for a free slot (CL cap)
    std::map<int, UserEquipment> holding_;
    Rng traffic_rng_;
    Rng pos_rng_;
    double lambda_per_tti_ = 0;
    double noise_w_per_hz_ = 0;
    ConstraintAudit audit_;
    long ue_tti_accum_ = 0;
    long stepped_ttis_ = 0;
};

} // namespace fluc::ran
