#include "fluc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace fluc {

using ordered_json = nlohmann::ordered_json;

const char* kTtiCsvHeader =
    "tti,ue_id,traffic_type,attached_bs,reward,delay_ms,throughput_bps,queue_len,eligible";

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

RunSummary summarize(const std::vector<TtiRow>& rows, const RunConfig& cfg) {
    RunSummary s;
    s.row_count = static_cast<long>(rows.size());

    const long t_total = cfg.total_ttis;
    const long final_quarter_start = (t_total * 3) / 4;

    double reward_sum = 0, fq_reward_sum = 0;
    long fq_count = 0;
    double gbr_delay_sum = 0;
    long gbr_delivery_rows = 0, gbr_violation_rows = 0;
    double nongbr_tput_sum = 0;
    long nongbr_rows = 0;
    long nongbr_backlogged = 0, nongbr_blocked = 0;

    // (tti, bs) pairs in which at least one GBR UE moved bits
    std::set<std::pair<long, int>> gbr_served;
    for (const auto& r : rows)
        if (r.traffic_type == 1 && r.throughput_bps > 0) gbr_served.insert({r.tti, r.attached_bs});

    struct UeSpan {
        long first = -1, last = -1;
        double first_window_reward_sum = 0;
        long first_window_count = 0;
    };
    std::map<int, UeSpan> spans;

    const long traj_w = cfg.trajectory_window_ttis;
    const std::size_t traj_buckets =
        t_total > 0 ? static_cast<std::size_t>((t_total + traj_w - 1) / traj_w) : 0;
    std::vector<double> traj_sum(traj_buckets, 0.0);
    std::vector<long> traj_n(traj_buckets, 0);

    for (const auto& r : rows) {
        reward_sum += r.reward;
        if (r.tti >= final_quarter_start) {
            fq_reward_sum += r.reward;
            ++fq_count;
        }
        if (r.traffic_type == 1) {
            if (r.throughput_bps > 0) {
                gbr_delay_sum += r.delay_ms;
                ++gbr_delivery_rows;
                if (r.delay_ms > cfg.gbr_eligible_delay_ms) ++gbr_violation_rows;
            }
        } else {
            nongbr_tput_sum += r.throughput_bps;
            ++nongbr_rows;
            if (r.queue_len > 0) {
                ++nongbr_backlogged;
                if (r.throughput_bps == 0 && gbr_served.count({r.tti, r.attached_bs}))
                    ++nongbr_blocked;
            }
        }
        auto& sp = spans[r.ue_id];
        if (sp.first < 0) sp.first = r.tti;
        sp.last = r.tti;
        if (traj_buckets > 0) {
            const auto b = static_cast<std::size_t>(r.tti / traj_w);
            if (b < traj_buckets) {
                traj_sum[b] += r.reward;
                ++traj_n[b];
            }
        }
    }

    // a UE's first window is its first fed_interval TTIs alive
    for (const auto& r : rows) {
        auto& sp = spans[r.ue_id];
        if (sp.first > cfg.fed_interval && r.tti < sp.first + cfg.fed_interval) {
            sp.first_window_reward_sum += r.reward;
            ++sp.first_window_count;
        }
    }

    s.mean_reward = rows.empty() ? 0 : reward_sum / static_cast<double>(rows.size());
    s.final_quarter_mean_reward = fq_count > 0 ? fq_reward_sum / fq_count : 0;
    s.mean_gbr_delay_ms = gbr_delivery_rows > 0 ? gbr_delay_sum / gbr_delivery_rows : 0;
    s.mean_nongbr_throughput_bps = nongbr_rows > 0 ? nongbr_tput_sum / nongbr_rows : 0;
    s.blocking_rate = nongbr_backlogged > 0
                          ? static_cast<double>(nongbr_blocked) / nongbr_backlogged
                          : 0;
    s.qos_violation_rate = gbr_delivery_rows > 0
                               ? static_cast<double>(gbr_violation_rows) / gbr_delivery_rows
                               : 0;

    double cycle_sum = 0;
    long departed = 0;
    double newcomer_sum = 0;
    long newcomers = 0;
    for (const auto& [ue, sp] : spans) {
        (void)ue;
        if (sp.last < t_total - 1) { // departed before the run ended
            cycle_sum += static_cast<double>(sp.last + 1 - sp.first);
            ++departed;
        }
        if (sp.first > cfg.fed_interval && sp.first_window_count > 0) {
            newcomer_sum += sp.first_window_reward_sum / sp.first_window_count;
            ++newcomers;
        }
    }
    s.mean_transmission_cycle_ttis = departed > 0 ? cycle_sum / departed : 0;
    s.newcomer_first_window_mean_reward = newcomers > 0 ? newcomer_sum / newcomers : 0;
    s.newcomer_count = newcomers;
    s.mean_active_ues = t_total > 0 ? static_cast<double>(rows.size()) / t_total : 0;

    s.reward_trajectory.resize(traj_buckets);
    for (std::size_t b = 0; b < traj_buckets; ++b)
        s.reward_trajectory[b] = traj_n[b] > 0 ? traj_sum[b] / traj_n[b] : 0;
    return s;
}

const std::vector<std::string>& summary_metric_names() {
    static const std::vector<std::string> names = {
        "mean_reward",
        "final_quarter_mean_reward",
        "mean_gbr_delay_ms",
        "mean_nongbr_throughput_bps",
        "blocking_rate",
        "qos_violation_rate",
        "mean_transmission_cycle_ttis",
        "mean_active_ues",
        "newcomer_first_window_mean_reward",
    };
    return names;
}

double summary_metric(const RunSummary& s, const std::string& name) {
    if (name == "mean_reward") return s.mean_reward;
    if (name == "final_quarter_mean_reward") return s.final_quarter_mean_reward;
    if (name == "mean_gbr_delay_ms") return s.mean_gbr_delay_ms;
    if (name == "mean_nongbr_throughput_bps") return s.mean_nongbr_throughput_bps;
    if (name == "blocking_rate") return s.blocking_rate;
    if (name == "qos_violation_rate") return s.qos_violation_rate;
    if (name == "mean_transmission_cycle_ttis") return s.mean_transmission_cycle_ttis;
    if (name == "mean_active_ues") return s.mean_active_ues;
    if (name == "newcomer_first_window_mean_reward") return s.newcomer_first_window_mean_reward;
    throw std::invalid_argument("unknown summary metric: " + name);
}

bool metric_lower_is_better(const std::string& name) {
    return name == "mean_gbr_delay_ms" || name == "blocking_rate" ||
           name == "qos_violation_rate" || name == "mean_transmission_cycle_ttis";
}

void write_tti_csv(std::ostream& os, const std::vector<TtiRow>& rows) {
    os << kTtiCsvHeader << "\n";
    for (const auto& r : rows) {
        os << r.tti << ',' << r.ue_id << ',' << r.traffic_type << ',' << r.attached_bs << ','
           << format_double(r.reward) << ',' << format_double(r.delay_ms) << ','
           << format_double(r.throughput_bps) << ',' << r.queue_len << ',' << r.eligible << "\n";
    }
}

std::vector<TtiRow> read_tti_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kTtiCsvHeader)
        throw std::runtime_error("per-TTI CSV: missing or unexpected header");
    std::vector<TtiRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        TtiRow r;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        ss >> r.tti >> r.ue_id >> r.traffic_type >> r.attached_bs >> r.reward >> r.delay_ms >>
            r.throughput_bps >> r.queue_len >> r.eligible;
        if (!ss) throw std::runtime_error("per-TTI CSV: malformed row: " + line);
        rows.push_back(r);
    }
    return rows;
}

std::string summary_to_json(const RunSummary& s, const ConstraintAudit& audit,
                            const RunConfig& cfg) {
    ordered_json j;
    j["algorithm"] = cfg.algorithm;
    j["seed"] = cfg.seed;
    j["total_ttis"] = cfg.total_ttis;
    j["avg_ue_count"] = cfg.avg_ue_count;
    ordered_json m;
    m["mean_reward"] = s.mean_reward;
    m["final_quarter_mean_reward"] = s.final_quarter_mean_reward;
    m["mean_gbr_delay_ms"] = s.mean_gbr_delay_ms;
    m["mean_nongbr_throughput_bps"] = s.mean_nongbr_throughput_bps;
    m["blocking_rate"] = s.blocking_rate;
    m["qos_violation_rate"] = s.qos_violation_rate;
    m["mean_transmission_cycle_ttis"] = s.mean_transmission_cycle_ttis;
    m["mean_active_ues"] = s.mean_active_ues;
    m["newcomer_first_window_mean_reward"] = s.newcomer_first_window_mean_reward;
    m["newcomer_count"] = s.newcomer_count;
    m["row_count"] = s.row_count;
    m["reward_trajectory"] = s.reward_trajectory;
    j["metrics"] = m;
    ordered_json a;
    a["rb_conflicts"] = audit.rb_conflicts;
    a["attach_violations"] = audit.attach_violations;
    a["conservation_violations"] = audit.conservation_violations;
    a["delay_decomposition_violations"] = audit.delay_decomposition_violations;
    a["ignored_actions"] = audit.ignored_actions;
    a["deferred_arrivals"] = audit.deferred_arrivals;
    a["generated_bits"] = audit.generated_bits;
    a["delivered_bits"] = audit.delivered_bits;
    a["queued_bits"] = audit.queued_bits;
    a["delivered_packets"] = audit.delivered_packets;
    j["constraint_audit"] = a;
    return j.dump(2) + "\n";
}

void parse_summary_json(const std::string& text, RunSummary& s, ConstraintAudit& audit) {
    const auto j = ordered_json::parse(text);
    const auto& m = j.at("metrics");
    s.mean_reward = m.at("mean_reward").get<double>();
    s.final_quarter_mean_reward = m.at("final_quarter_mean_reward").get<double>();
    s.mean_gbr_delay_ms = m.at("mean_gbr_delay_ms").get<double>();
    s.mean_nongbr_throughput_bps = m.at("mean_nongbr_throughput_bps").get<double>();
    s.blocking_rate = m.at("blocking_rate").get<double>();
    s.qos_violation_rate = m.at("qos_violation_rate").get<double>();
    s.mean_transmission_cycle_ttis = m.at("mean_transmission_cycle_ttis").get<double>();
    s.mean_active_ues = m.at("mean_active_ues").get<double>();
    s.newcomer_first_window_mean_reward =
        m.at("newcomer_first_window_mean_reward").get<double>();
    s.newcomer_count = m.at("newcomer_count").get<long>();
    s.row_count = m.at("row_count").get<long>();
    s.reward_trajectory = m.at("reward_trajectory").get<std::vector<double>>();
    const auto& a = j.at("constraint_audit");
    audit.rb_conflicts = a.at("rb_conflicts").get<long>();
    audit.attach_violations = a.at("attach_violations").get<long>();
    audit.conservation_violations = a.at("conservation_violations").get<long>();
    audit.delay_decomposition_violations = a.at("delay_decomposition_violations").get<long>();
    audit.ignored_actions = a.at("ignored_actions").get<long>();
    audit.deferred_arrivals = a.at("deferred_arrivals").get<long>();
    audit.generated_bits = a.at("generated_bits").get<long long>();
    audit.delivered_bits = a.at("delivered_bits").get<long long>();
    audit.queued_bits = a.at("queued_bits").get<long long>();
    audit.delivered_packets = a.at("delivered_packets").get<long>();
}

} // namespace fluc
