#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fluc/config.hpp"
#include "fluc/metrics.hpp"

namespace fluc::sim {

struct SweepCell {
    std::string algorithm;
    double avg_ue_count = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<RunSummary> per_seed;

    double metric_mean(const std::string& name) const;
    double metric_std(const std::string& name) const; // sample std, 0 for n < 2
};

struct SweepTable {
    std::vector<SweepCell> cells;
    const SweepCell* find(const std::string& algorithm, double avg_ue_count) const;
};

// Runs every (algorithm, avg_ue_count, seed) combination; run directories are
// created under out_dir when it is set. jobs > 1 runs independent runs in a
// small worker pool; results are ordered deterministically either way.
SweepTable sweep(const RunConfig& base, const std::vector<std::string>& algorithms,
                 const std::vector<double>& ue_counts, const std::vector<std::uint64_t>& seeds,
                 const std::string& out_dir = "", int jobs = 1);

void write_sweep_csv(std::ostream& os, const SweepTable& table);

// Relative improvement of test over baseline for one metric at one load
// point: (baseline - test)/baseline when lower is better, else
// (test - baseline)/baseline.
double compare(const SweepTable& table, const std::string& baseline_mode,
               const std::string& test_mode, const std::string& metric, double avg_ue_count);

} // namespace fluc::sim
