#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fluc/config.hpp"

namespace fluc {

// One per-TTI measurement row, the unit of the metrics CSV.
struct TtiRow {
    long tti = 0;
    int ue_id = 0;
    int traffic_type = 0; // 1 = GBR, 0 = non-GBR
    int attached_bs = 0;
    double reward = 0;
    double delay_ms = 0;      // total delay of the last delivered packet
    double throughput_bps = 0;
    int queue_len = 0;        // packets still queued at end of TTI
    int eligible = 0;

    bool operator==(const TtiRow&) const = default;
};

// Environment bookkeeping that is not derivable from the rows.
struct ConstraintAudit {
    long rb_conflicts = 0;             // constraint: one UE per RB per TTI
    long attach_violations = 0;        // constraint: exactly one BS per UE
    long conservation_violations = 0;  // generated = delivered + queued, in bits
    long delay_decomposition_violations = 0;
    long ignored_actions = 0;          // actions addressed to departed UEs
    long deferred_arrivals = 0;        // arrivals held back by the slot cap (CL)
    long long generated_bits = 0;
    long long delivered_bits = 0;
    long long queued_bits = 0;
    long delivered_packets = 0;
};

// Per-run summary; every metric is a pure function of (rows, config) so the
// audit tool can recompute it from the CSV.
struct RunSummary {
    double mean_reward = 0;
    double final_quarter_mean_reward = 0;
    double mean_gbr_delay_ms = 0;
    double mean_nongbr_throughput_bps = 0;
    double blocking_rate = 0;
    double qos_violation_rate = 0;
    double mean_transmission_cycle_ttis = 0;
    double mean_active_ues = 0;
    double newcomer_first_window_mean_reward = 0;
    long newcomer_count = 0;
    long row_count = 0;
    std::vector<double> reward_trajectory;
};

RunSummary summarize(const std::vector<TtiRow>& rows, const RunConfig& cfg);

// metric accessor by name, for sweeps and comparisons
double summary_metric(const RunSummary& s, const std::string& name);
bool metric_lower_is_better(const std::string& name);
const std::vector<std::string>& summary_metric_names();

extern const char* kTtiCsvHeader;

void write_tti_csv(std::ostream& os, const std::vector<TtiRow>& rows);
std::vector<TtiRow> read_tti_csv(std::istream& is);

std::string summary_to_json(const RunSummary& s, const ConstraintAudit& audit,
                            const RunConfig& cfg);
void parse_summary_json(const std::string& text, RunSummary& s, ConstraintAudit& audit);

// %.17g, the round-trip-exact formatting used by every emitted file
std::string format_double(double v);

} // namespace fluc
