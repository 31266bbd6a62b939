#include "fluc/sim/audit.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "fluc/config.hpp"
#include "fluc/metrics.hpp"

namespace fluc::sim {

namespace {

bool close(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1.0});
    return std::abs(a - b) <= 1e-9 * scale;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p);
    if (!is) throw std::runtime_error("audit: cannot open " + p.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

} // namespace

AuditReport audit_run_dir(const std::string& run_dir) {
    namespace fs = std::filesystem;
    AuditReport rep;
    std::ostringstream detail;

    const fs::path dir(run_dir);
    const RunConfig cfg = RunConfig::load_file((dir / "config.json").string());

    std::ifstream csv(dir / "per_tti.csv");
    if (!csv) throw std::runtime_error("audit: cannot open per_tti.csv in " + run_dir);
    const auto rows = read_tti_csv(csv);

    RunSummary recorded;
    ConstraintAudit audit;
    parse_summary_json(slurp(dir / "summary.json"), recorded, audit);

    const RunSummary recomputed = summarize(rows, cfg);

    auto check = [&](const char* name, double got, double want) {
        if (!close(got, want)) {
            ++rep.metric_mismatches;
            detail << "  mismatch " << name << ": summary=" << format_double(want)
                   << " recomputed=" << format_double(got) << "\n";
        }
    };
    check("mean_reward", recomputed.mean_reward, recorded.mean_reward);
    check("final_quarter_mean_reward", recomputed.final_quarter_mean_reward,
          recorded.final_quarter_mean_reward);
    check("mean_gbr_delay_ms", recomputed.mean_gbr_delay_ms, recorded.mean_gbr_delay_ms);
    check("mean_nongbr_throughput_bps", recomputed.mean_nongbr_throughput_bps,
          recorded.mean_nongbr_throughput_bps);
    check("blocking_rate", recomputed.blocking_rate, recorded.blocking_rate);
    check("qos_violation_rate", recomputed.qos_violation_rate, recorded.qos_violation_rate);
    check("mean_transmission_cycle_ttis", recomputed.mean_transmission_cycle_ttis,
          recorded.mean_transmission_cycle_ttis);
    check("mean_active_ues", recomputed.mean_active_ues, recorded.mean_active_ues);
    check("newcomer_first_window_mean_reward", recomputed.newcomer_first_window_mean_reward,
          recorded.newcomer_first_window_mean_reward);
    if (recomputed.newcomer_count != recorded.newcomer_count ||
        recomputed.row_count != recorded.row_count) {
        ++rep.metric_mismatches;
        detail << "  mismatch in row/newcomer counts\n";
    }
    if (recomputed.reward_trajectory.size() != recorded.reward_trajectory.size()) {
        ++rep.metric_mismatches;
        detail << "  mismatch in reward_trajectory length\n";
    } else {
        for (std::size_t i = 0; i < recorded.reward_trajectory.size(); ++i) {
            if (!close(recomputed.reward_trajectory[i], recorded.reward_trajectory[i])) {
                ++rep.metric_mismatches;
                detail << "  mismatch in reward_trajectory[" << i << "]\n";
                break;
            }
        }
    }

    rep.constraint_violations = audit.rb_conflicts + audit.attach_violations +
                                audit.conservation_violations +
                                audit.delay_decomposition_violations;
    if (rep.constraint_violations > 0)
        detail << "  constraint audit counters nonzero (rb=" << audit.rb_conflicts
               << " attach=" << audit.attach_violations
               << " conservation=" << audit.conservation_violations
               << " delay=" << audit.delay_decomposition_violations << ")\n";

    rep.ok = rep.metric_mismatches == 0 && rep.constraint_violations == 0;
    rep.detail = detail.str();
    return rep;
}

void print_audit_report(std::ostream& os, const AuditReport& rep) {
    os << (rep.ok ? "AUDIT PASS" : "AUDIT FAIL") << ": " << rep.metric_mismatches
       << " metric mismatch(es), " << rep.constraint_violations
       << " constraint violation(s)\n";
    if (!rep.detail.empty()) os << rep.detail;
}

} // namespace fluc::sim
