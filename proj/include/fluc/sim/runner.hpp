#pragma once

#include <string>
#include <vector>

#include "fluc/compress/controller.hpp"
#include "fluc/config.hpp"
#include "fluc/fed/coordinator.hpp"
#include "fluc/metrics.hpp"

namespace fluc::sim {

enum class AlgorithmMode { KtFluc, Fl, Fli, Dil, Cl };

AlgorithmMode mode_from_string(const std::string& s);
std::string mode_name(AlgorithmMode m);

struct RunOptions {
    std::string out_dir;           // empty: keep everything in memory
    std::string save_model_prefix; // empty: no model snapshots
    std::string load_model_path;   // snapshot used instead of random init
    bool save_fed_rounds = false;
    bool compress = false;         // grow/prune pre-simulation on one UE
};

struct RunResult {
    std::vector<TtiRow> rows;
    RunSummary summary;
    ConstraintAudit audit;
    double mean_active_ues = 0;
    std::vector<fed::FedLogRow> fed_log;
    std::vector<compress::CompressionEvent> compression;
    std::vector<compress::EffectivenessPoint> effectiveness_curve;
    int compress_n1 = 0;
    int compress_n2 = 0;
    long compress_end_tti = 0;
    long newcomer_random_inits = 0; // newcomers that arrived before a global existed
};

// Executes one full experiment, deterministic per config+seed. Output files
// (per_tti.csv, summary.json, federation.csv, compression artifacts, model
// snapshots) are written only when out_dir is set, and only after the run
// completed, so a failed run leaves no partial output.
RunResult run_experiment(const RunConfig& cfg, const RunOptions& opts = {});

} // namespace fluc::sim
