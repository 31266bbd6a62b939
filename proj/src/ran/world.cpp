#include "fluc/ran/world.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fluc::ran {

namespace {
constexpr double kTtiMs = 1.0;

double dbm_to_w(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

std::int64_t file_bits(const TrafficClassConfig& t) {
    return static_cast<std::int64_t>(t.file_kib * 1024.0) * 8;
}
} // namespace

double distance_m(Position a, Position b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

RanWorld::RanWorld(const RunConfig& cfg, int max_active, bool spawn_initial)
    : cfg_(cfg),
      max_active_(max_active),
      traffic_rng_(cfg.seed, "traffic"),
      pos_rng_(cfg.seed, "ue_pos") {
    cfg_.validate();
    build_topology();
    noise_w_per_hz_ = dbm_to_w(cfg_.noise_dbm_per_hz);

    // Arrival rate calibrated so the population hovers around avg_ue_count:
    // a UE's nominal lifetime is its CBR generation span.
    auto span = [](const TrafficClassConfig& t) {
        const double packets =
            std::ceil(static_cast<double>(file_bits(t)) / (t.packet_bytes * 8.0));
        return packets * t.interarrival_ttis;
    };
    const double mean_lifetime =
        cfg_.gbr.proportion * span(cfg_.gbr) + cfg_.non_gbr.proportion * span(cfg_.non_gbr);
    lambda_per_tti_ = mean_lifetime > 0 ? cfg_.avg_ue_count / mean_lifetime : 0.0;

    if (spawn_initial) {
        const int initial = static_cast<int>(std::lround(cfg_.avg_ue_count));
        for (int i = 0; i < initial; ++i) {
            if (max_active_ > 0 && static_cast<int>(ues_.size()) >= max_active_) break;
            spawn_random_ue();
        }
    }
}

void RanWorld::build_topology() {
    bss_.clear();
    BaseStation mbs;
    mbs.id = 0;
    mbs.rat = cfg_.mbs.rat;
    mbs.pos = {0.0, 0.0};
    mbs.carrier_ghz = cfg_.mbs.carrier_ghz;
    mbs.tx_power_w = cfg_.mbs.tx_power_w;
    mbs.bandwidth_mhz = cfg_.mbs.bandwidth_mhz;
    mbs.rb_count = cfg_.mbs.rb_count;
    mbs.interference_group = 0;
    mbs.rb_alloc.assign(mbs.rb_count, -1);
    bss_.push_back(mbs);

    const double r = cfg_.sbs_ring_m;
    const Position corners[4] = {{r, r}, {-r, r}, {-r, -r}, {r, -r}};
    for (int i = 0; i < cfg_.sbs_count; ++i) {
        BaseStation b;
        b.id = i + 1;
        b.rat = cfg_.sbs.rat;
        if (i < 4) {
            b.pos = corners[i];
        } else {
            const double ang = 2.0 * M_PI * i / cfg_.sbs_count;
            b.pos = {r * std::sqrt(2.0) * std::cos(ang), r * std::sqrt(2.0) * std::sin(ang)};
        }
        b.carrier_ghz = cfg_.sbs.carrier_ghz;
        b.tx_power_w = cfg_.sbs.tx_power_w;
        b.bandwidth_mhz = cfg_.sbs.bandwidth_mhz;
        b.rb_count = cfg_.sbs.rb_count;
        b.interference_group = cfg_.co_channel_sbs ? 1 : 1 + i;
        b.rb_alloc.assign(b.rb_count, -1);
        bss_.push_back(b);
    }
}

int RanWorld::spawn_ue(Position pos, TrafficType type, int attach_bs) {
    UserEquipment ue;
    ue.id = next_ue_id_++;
    ue.pos = pos;
    ue.type = type;
    ue.arrival_tti = 0;
    ue.shadowing_db.resize(bss_.size());
    for (auto& s : ue.shadowing_db) s = traffic_rng_.normal(0.0, cfg_.shadowing_sigma_db);
    const auto& t = type == TrafficType::Gbr ? cfg_.gbr : cfg_.non_gbr;
    ue.file_bits_pending = file_bits(t);
    ue.file_bits_total = ue.file_bits_pending;
    ue.packet_bits = static_cast<std::int64_t>(t.packet_bytes) * 8;
    ue.interarrival_ttis = t.interarrival_ttis;
    ue.attached_bs = attach_bs;
    const int id = ue.id;
    ues_.emplace(id, std::move(ue));
    return id;
}

int RanWorld::spawn_random_ue() {
    const bool gbr = traffic_rng_.bernoulli(cfg_.gbr.proportion);
    const double half = cfg_.area_m / 2.0;
    Position pos{pos_rng_.uniform(-half, half), pos_rng_.uniform(-half, half)};
    // uniform initial attachment; the agent steers from its first TTI
    const int attach = static_cast<int>(traffic_rng_.uniform_int(bs_count()));
    return spawn_ue(pos, gbr ? TrafficType::Gbr : TrafficType::NonGbr, attach);
}

double RanWorld::channel_gain_db(int bs, int ue) const {
    const auto& b = bss_.at(bs);
    const auto& u = ues_.at(ue);
    const double d = std::max(distance_m(b.pos, u.pos), 1.0); // clamp below 1 m
    const double pl = cfg_.pathloss_ref_db + cfg_.pathloss_slope_db * std::log10(d / 1000.0);
    return cfg_.antenna_gain_db - pl - u.shadowing_db[bs];
}

double RanWorld::channel_gain(int bs, int ue) const {
    return db_to_linear(channel_gain_db(bs, ue));
}

double RanWorld::rssi_dbm(int bs, int ue) const {
    const auto& b = bss_.at(bs);
    return 10.0 * std::log10(b.tx_power_w * 1000.0) + channel_gain_db(bs, ue);
}

double RanWorld::sinr(int bs, int rb, int ue) const {
    const auto& serving = bss_.at(bs);
    const double signal_w = channel_gain(bs, ue) * serving.rb_power_w();
    double interference_w = 0.0;
    for (const auto& other : bss_) {
        if (other.id == bs) continue;
        if (other.interference_group != serving.interference_group) continue; // different carrier
        if (rb >= other.rb_count || other.rb_alloc[rb] < 0) continue;
        interference_w += channel_gain(other.id, ue) * other.rb_power_w();
    }
    const double noise_w = cfg_.rb_bandwidth_hz * noise_w_per_hz_;
    return signal_w / (interference_w + noise_w);
}

double RanWorld::link_capacity_bps(int bs, int ue) const {
    const auto& b = bss_.at(bs);
    double cap = 0.0;
    for (int r = 0; r < b.rb_count; ++r) {
        if (b.rb_alloc[r] != ue) continue;
        cap += cfg_.rb_bandwidth_hz * std::log2(1.0 + sinr(bs, r, ue));
    }
    return cap;
}

std::int64_t RanWorld::estimate_rb_bits(const BaseStation& bs, const UserEquipment& ue) const {
    // interference-free estimate; the scheduler does not know the other
    // cells' allocations yet
    const double snr =
        channel_gain(bs.id, ue.id) * bs.rb_power_w() / (cfg_.rb_bandwidth_hz * noise_w_per_hz_);
    const double bits = cfg_.rb_bandwidth_hz * std::log2(1.0 + snr) * (kTtiMs / 1000.0);
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(bits));
}

void RanWorld::schedule_bs(BaseStation& bs, long /*tti*/) {
    std::fill(bs.rb_alloc.begin(), bs.rb_alloc.end(), -1);

    // co-channel cells start their allocation at staggered RB offsets, so
    // collisions appear only once the combined load needs them
    int co_total = 0, co_index = 0;
    for (const auto& other : bss_) {
        if (other.interference_group != bs.interference_group) continue;
        if (other.id < bs.id) ++co_index;
        ++co_total;
    }
    const int start_rb = co_total > 1 ? static_cast<int>(
        (static_cast<long>(co_index) * bs.rb_count) / co_total) : 0;
    int granted_rbs = 0;
    auto rb_at = [&](int k) { return (start_rb + k) % bs.rb_count; };

    // GBR first, then non-GBR; inside a class the needs are served
    // round-robin one RB at a time with a rotating start
    for (int cls = 0; cls < 2; ++cls) {
        const TrafficType want = cls == 0 ? TrafficType::Gbr : TrafficType::NonGbr;
        std::vector<const UserEquipment*> members;
        for (const auto& [id, ue] : ues_) {
            if (ue.attached_bs == bs.id && ue.type == want && ue.queued_bits > 0)
                members.push_back(&ue);
        }
        if (members.empty()) continue;
        const std::size_t start =
            static_cast<std::size_t>(bs.rr_cursor[cls] % static_cast<long>(members.size()));
        std::rotate(members.begin(), members.begin() + start, members.end());
        bs.rr_cursor[cls] += 1;

        std::vector<std::int64_t> want_rbs(members.size());
        for (std::size_t i = 0; i < members.size(); ++i) {
            const std::int64_t per_rb = estimate_rb_bits(bs, *members[i]);
            want_rbs[i] = (members[i]->queued_bits + per_rb - 1) / per_rb;
        }
        std::vector<std::int64_t> got(members.size(), 0);
        bool any = true;
        while (any && granted_rbs < bs.rb_count) {
            any = false;
            for (std::size_t i = 0; i < members.size() && granted_rbs < bs.rb_count; ++i) {
                if (got[i] >= want_rbs[i]) continue;
                bs.rb_alloc[rb_at(granted_rbs++)] = members[i]->id;
                ++got[i];
                any = true;
            }
        }
    }
}

void RanWorld::generate_packets(UserEquipment& ue, long tti) {
    if (ue.immortal && ue.file_bits_pending <= 0) ue.file_bits_pending = ue.file_bits_total;
    if (ue.file_bits_pending <= 0) return;
    if ((tti - ue.arrival_tti) % ue.interarrival_ttis != 0) return;
    Packet p;
    p.size_bits = std::min(ue.packet_bits, ue.file_bits_pending);
    p.remaining_bits = p.size_bits;
    p.enqueue_tti = tti;
    ue.file_bits_pending -= p.size_bits;
    ue.queued_bits += p.size_bits;
    audit_.generated_bits += p.size_bits;
    ue.queue.push_back(p);
}

StepOutput RanWorld::step(const std::map<int, int>& actions, long tti) {
    StepOutput out;

    // 1) attachment changes take effect now; the queue rides with the UE
    for (const auto& [ue_id, bs] : actions) {
        auto it = ues_.find(ue_id);
        if (it == ues_.end()) {
            ++audit_.ignored_actions;
            continue;
        }
        if (bs < 0 || bs >= bs_count())
            throw std::invalid_argument("step: action names a base station that does not exist");
        it->second.attached_bs = bs;
    }

    // 2) CBR packet arrivals
    for (auto& [id, ue] : ues_) generate_packets(ue, tti);

    // 3) per-BS RB scheduling
    for (auto& bs : bss_) schedule_bs(bs, tti);

    // 4+5) capacity and queue drain
    for (auto& [id, ue] : ues_) {
        int rbs = 0;
        const auto& bs = bss_[ue.attached_bs];
        for (int r = 0; r < bs.rb_count; ++r)
            if (bs.rb_alloc[r] == id) ++rbs;

        const double cap_bps = rbs > 0 ? link_capacity_bps(ue.attached_bs, id) : 0.0;
        const auto budget =
            static_cast<std::int64_t>(std::floor(cap_bps * (kTtiMs / 1000.0)));
        std::int64_t left = budget;
        std::int64_t sent = 0;
        const double rate = static_cast<double>(budget); // bits per ms
        while (left > 0 && !ue.queue.empty()) {
            Packet& p = ue.queue.front();
            const std::int64_t chunk = std::min(p.remaining_bits, left);
            if (p.dequeue_time_ms < 0.0)
                p.dequeue_time_ms = tti + static_cast<double>(sent) / rate;
            p.remaining_bits -= chunk;
            left -= chunk;
            sent += chunk;
            ue.queued_bits -= chunk;
            audit_.delivered_bits += chunk;
            if (p.remaining_bits == 0) {
                const double delivery_ms = tti + static_cast<double>(sent) / rate;
                const double d_que = p.dequeue_time_ms - p.enqueue_tti;
                const double d_tx = delivery_ms - p.dequeue_time_ms;
                const double d_total = d_que + d_tx;
                if (std::abs(d_total - (delivery_ms - p.enqueue_tti)) > 1e-9)
                    ++audit_.delay_decomposition_violations;
                ue.last_delay_ms = d_total;
                ++audit_.delivered_packets;
                ue.queue.pop_front();
            }
        }
        ue.last_tput_bps = static_cast<double>(sent) * 1000.0;

        UeStepResult res;
        res.ue_id = id;
        res.type = ue.type;
        res.attached_bs = ue.attached_bs;
        res.delay_ms = ue.last_delay_ms;
        res.throughput_bps = ue.last_tput_bps;
        res.queue_len = static_cast<int>(ue.queue.size());
        res.rbs_granted = rbs;
        if (ue.type == TrafficType::Gbr) {
            res.reward = 1.0 - ue.last_delay_ms / cfg_.d_max_ms;
            res.eligible = ue.last_delay_ms <= cfg_.gbr_eligible_delay_ms;
        } else {
            res.reward = ue.last_tput_bps / cfg_.b_max_bps;
            res.eligible = ue.last_tput_bps >= cfg_.non_gbr_eligible_bps;
        }
        out.results.push_back(std::move(res));
    }

    ue_tti_accum_ += static_cast<long>(out.results.size());
    ++stepped_ttis_;

    run_audits(tti);

    // 6) states observed after the TTI settles
    for (auto& res : out.results) res.state = observe_state(res.ue_id);

    // 7) departures: whole file delivered
    for (const auto& [id, ue] : ues_)
        if (!ue.immortal && ue.file_bits_pending == 0 && ue.queue.empty())
            out.departures.push_back(id);
    for (int id : out.departures) ues_.erase(id);

    // 8) arrivals become active next TTI; the CL slot cap defers, never drops.
    // Held-back UEs re-enter first so admission stays FIFO.
    while (!deferred_.empty() &&
           (max_active_ == 0 || static_cast<int>(ues_.size()) < max_active_)) {
        const int id = deferred_.front();
        deferred_.pop_front();
        auto node = holding_.extract(id);
        node.mapped().arrival_tti = tti + 1;
        ues_.insert(std::move(node));
        out.arrivals.push_back(id);
    }
    const int n_new = traffic_rng_.poisson(lambda_per_tti_);
    for (int k = 0; k < n_new; ++k) {
        const int id = spawn_random_ue();
        ues_.at(id).arrival_tti = tti + 1;
        const bool full = max_active_ > 0 && static_cast<int>(ues_.size()) > max_active_;
        if (full || !deferred_.empty()) {
            deferred_.push_back(id);
            ++audit_.deferred_arrivals;
            holding_.emplace(id, std::move(ues_.at(id)));
            ues_.erase(id);
        } else {
            out.arrivals.push_back(id);
        }
    }

    return out;
}

void RanWorld::run_audits(long tti) {
    (void)tti;
    // each RB carries at most one UE and only UEs attached to that BS
    for (const auto& bs : bss_) {
        for (int r = 0; r < bs.rb_count; ++r) {
            const int ue = bs.rb_alloc[r];
            if (ue < 0) continue;
            auto it = ues_.find(ue);
            if (it == ues_.end() || it->second.attached_bs != bs.id) ++audit_.rb_conflicts;
        }
    }
    for (const auto& [id, ue] : ues_)
        if (ue.attached_bs < 0 || ue.attached_bs >= bs_count()) ++audit_.attach_violations;

    std::int64_t queued = 0;
    for (const auto& [id, ue] : ues_) queued += ue.queued_bits;
    audit_.queued_bits = queued;
    if (audit_.generated_bits != audit_.delivered_bits + queued)
        ++audit_.conservation_violations;
}

std::vector<double> RanWorld::observe_state(int ue_id) const {
    const auto& ue = ues_.at(ue_id);
    std::vector<double> s;
    s.reserve(state_size());
    for (int n = 0; n < bs_count(); ++n) {
        const double v =
            (rssi_dbm(n, ue_id) - cfg_.rssi_min_dbm) / (cfg_.rssi_max_dbm - cfg_.rssi_min_dbm);
        s.push_back(std::clamp(v, 0.0, 1.0));
    }
    s.push_back(std::min(static_cast<double>(ue.queue.size()) / cfg_.queue_norm_packets, 2.0));
    s.push_back(std::min(ue.last_delay_ms / cfg_.d_max_ms, 2.0));
    for (int n = 0; n < bs_count(); ++n) s.push_back(ue.attached_bs == n ? 1.0 : 0.0);
    return s;
}

double RanWorld::mean_active_ues() const {
    return stepped_ttis_ > 0 ? static_cast<double>(ue_tti_accum_) / stepped_ttis_ : 0.0;
}

} // namespace fluc::ran
