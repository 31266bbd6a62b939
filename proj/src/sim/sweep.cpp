#include "fluc/sim/sweep.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "fluc/sim/runner.hpp"

namespace fluc::sim {

double SweepCell::metric_mean(const std::string& name) const {
    if (per_seed.empty()) return 0;
    double s = 0;
    for (const auto& r : per_seed) s += summary_metric(r, name);
    return s / static_cast<double>(per_seed.size());
}

double SweepCell::metric_std(const std::string& name) const {
    if (per_seed.size() < 2) return 0;
    const double m = metric_mean(name);
    double s = 0;
    for (const auto& r : per_seed) {
        const double d = summary_metric(r, name) - m;
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(per_seed.size() - 1));
}

const SweepCell* SweepTable::find(const std::string& algorithm, double avg_ue_count) const {
    for (const auto& c : cells)
        if (c.algorithm == algorithm && c.avg_ue_count == avg_ue_count) return &c;
    return nullptr;
}

SweepTable sweep(const RunConfig& base, const std::vector<std::string>& algorithms,
                 const std::vector<double>& ue_counts, const std::vector<std::uint64_t>& seeds,
                 const std::string& out_dir, int jobs) {
    if (seeds.empty()) throw std::invalid_argument("sweep: needs at least one seed");

    struct Job {
        RunConfig cfg;
        std::string dir;
        std::size_t cell;
        std::size_t slot;
    };
    SweepTable table;
    std::vector<Job> work;
    for (const auto& algo : algorithms) {
        for (double m : ue_counts) {
            SweepCell cell;
            cell.algorithm = algo;
            cell.avg_ue_count = m;
            cell.seeds = seeds;
            cell.per_seed.resize(seeds.size());
            const std::size_t cell_idx = table.cells.size();
            table.cells.push_back(std::move(cell));
            for (std::size_t si = 0; si < seeds.size(); ++si) {
                Job j;
                j.cfg = base;
                j.cfg.algorithm = algo;
                j.cfg.avg_ue_count = m;
                j.cfg.seed = seeds[si];
                j.cfg.validate();
                if (!out_dir.empty()) {
                    std::ostringstream name;
                    name << algo << "_m" << m << "_s" << seeds[si];
                    j.dir = (std::filesystem::path(out_dir) / name.str()).string();
                }
                j.cell = cell_idx;
                j.slot = si;
                work.push_back(std::move(j));
            }
        }
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= work.size()) return;
            RunOptions opts;
            opts.out_dir = work[i].dir;
            const RunResult r = run_experiment(work[i].cfg, opts);
            table.cells[work[i].cell].per_seed[work[i].slot] = r.summary;
        }
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return table;
}

void write_sweep_csv(std::ostream& os, const SweepTable& table) {
    os << "algorithm,avg_ue_count,n_seeds";
    for (const auto& name : summary_metric_names()) os << ',' << name << "_mean," << name << "_std";
    os << "\n";
    for (const auto& c : table.cells) {
        os << c.algorithm << ',' << format_double(c.avg_ue_count) << ',' << c.per_seed.size();
        for (const auto& name : summary_metric_names())
            os << ',' << format_double(c.metric_mean(name)) << ','
               << format_double(c.metric_std(name));
        os << "\n";
    }
}

double compare(const SweepTable& table, const std::string& baseline_mode,
               const std::string& test_mode, const std::string& metric, double avg_ue_count) {
    const SweepCell* base = table.find(baseline_mode, avg_ue_count);
    const SweepCell* test = table.find(test_mode, avg_ue_count);
    if (!base || !test)
        throw std::invalid_argument("compare: missing sweep cell for " +
                                    (base ? test_mode : baseline_mode));
    const double b = base->metric_mean(metric);
    const double t = test->metric_mean(metric);
    if (b == 0) return 0;
    return metric_lower_is_better(metric) ? (b - t) / b : (t - b) / b;
}

} // namespace fluc::sim
