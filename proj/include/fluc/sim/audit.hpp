#pragma once

#include <iosfwd>
#include <string>

namespace fluc::sim {

struct AuditReport {
    bool ok = false;
    long metric_mismatches = 0;
    long constraint_violations = 0;
    std::string detail;
};

// Recomputes every summary metric from a run directory's per_tti.csv and
// compares it against summary.json, then checks the recorded constraint
// audit counters are zero. Mirrors exactly what the run itself computed.
AuditReport audit_run_dir(const std::string& run_dir);

void print_audit_report(std::ostream& os, const AuditReport& report);

} // namespace fluc::sim
