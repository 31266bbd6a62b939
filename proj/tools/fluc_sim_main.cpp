#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fluc/config.hpp"
#include "fluc/metrics.hpp"
#include "fluc/sim/audit.hpp"
#include "fluc/sim/runner.hpp"
#include "fluc/sim/sweep.hpp"

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    // "1..5" or "1,2,3"
    std::vector<std::uint64_t> seeds;
    const auto dots = text.find("..");
    if (dots != std::string::npos) {
        const std::uint64_t lo = std::stoull(text.substr(0, dots));
        const std::uint64_t hi = std::stoull(text.substr(dots + 2));
        for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
        return seeds;
    }
    std::string cur;
    for (char c : text + ",") {
        if (c == ',') {
            if (!cur.empty()) seeds.push_back(std::stoull(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    return seeds;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::string cur;
    for (char c : text + ",") {
        if (c == ',') {
            if (!cur.empty()) out.push_back(std::stod(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    return out;
}

std::vector<std::string> parse_string_list(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text + ",") {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    return out;
}

fluc::RunConfig load_config_or_default(const std::string& path) {
    if (path.empty()) return fluc::RunConfig{};
    return fluc::RunConfig::load_file(path);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fluc-sim: dual-RAT traffic-steering simulator with federated DQN agents"};
    app.require_subcommand(1);

    // run
    std::string run_config, run_algorithm, run_out, run_save_model, run_load_model;
    std::uint64_t run_seed = 0;
    long run_ttis = -1;
    double run_ues = -1;
    bool run_save_fed = false;
    bool run_seed_set = false;
    auto* run_cmd = app.add_subcommand("run", "execute one experiment");
    run_cmd->add_option("--config", run_config, "scenario config JSON");
    run_cmd->add_option("--algorithm", run_algorithm, "ktfluc|fl|fli|dil|cl");
    run_cmd->add_option("--seed", run_seed, "root seed")->each([&](const std::string&) {
        run_seed_set = true;
    });
    run_cmd->add_option("--ttis", run_ttis, "total TTIs");
    run_cmd->add_option("--ues", run_ues, "average UE count");
    run_cmd->add_option("--out", run_out, "output directory")->required();
    run_cmd->add_option("--save-model", run_save_model, "model snapshot path prefix");
    run_cmd->add_option("--load-model", run_load_model, "initialize models from a snapshot");
    run_cmd->add_flag("--save-fed-rounds", run_save_fed, "save per-round global models");

    // sweep
    std::string sw_config, sw_out, sw_ues = "25,35,45,55,65", sw_seeds = "1..5", sw_algos;
    int sw_jobs = 2;
    auto* sweep_cmd = app.add_subcommand("sweep", "multi-seed sweep over UE counts");
    sweep_cmd->add_option("--config", sw_config, "scenario config JSON");
    sweep_cmd->add_option("--ues", sw_ues, "comma list of average UE counts");
    sweep_cmd->add_option("--seeds", sw_seeds, "seed list: 1..5 or 1,2,3");
    sweep_cmd->add_option("--algorithms", sw_algos, "comma list; default = config algorithm");
    sweep_cmd->add_option("--jobs", sw_jobs, "parallel runs");
    sweep_cmd->add_option("--out", sw_out, "output directory")->required();

    // compress
    std::string cp_config, cp_out, cp_save_model;
    std::uint64_t cp_seed = 0;
    bool cp_seed_set = false;
    long cp_ttis = -1;
    auto* compress_cmd = app.add_subcommand("compress", "grow/prune pre-simulation on one UE");
    compress_cmd->add_option("--config", cp_config, "scenario config JSON");
    compress_cmd->add_option("--seed", cp_seed, "root seed")->each([&](const std::string&) {
        cp_seed_set = true;
    });
    compress_cmd->add_option("--ttis", cp_ttis, "TTI budget for the pre-simulation");
    double cp_ues = -1;
    compress_cmd->add_option("--ues", cp_ues, "average UE count");
    compress_cmd->add_option("--save-model", cp_save_model, "model snapshot path prefix");
    compress_cmd->add_option("--out", cp_out, "output directory")->required();

    // audit
    std::string audit_dir;
    auto* audit_cmd = app.add_subcommand("audit", "recompute a run's summary from its CSV");
    audit_cmd->add_option("--run", audit_dir, "run directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            fluc::RunConfig cfg = load_config_or_default(run_config);
            if (!run_algorithm.empty()) cfg.algorithm = run_algorithm;
            if (run_seed_set) cfg.seed = run_seed;
            if (run_ttis >= 0) cfg.total_ttis = run_ttis;
            if (run_ues >= 0) cfg.avg_ue_count = run_ues;
            cfg.validate();
            fluc::sim::RunOptions opts;
            opts.out_dir = run_out;
            opts.save_model_prefix = run_save_model;
            opts.load_model_path = run_load_model;
            opts.save_fed_rounds = run_save_fed;
            const auto result = fluc::sim::run_experiment(cfg, opts);
            std::cout << "run complete: " << result.rows.size() << " rows, mean reward "
                      << result.summary.mean_reward << ", outputs in " << run_out << "\n";
        } else if (*sweep_cmd) {
            fluc::RunConfig cfg = load_config_or_default(sw_config);
            const auto seeds = parse_seed_list(sw_seeds);
            const auto ues = parse_double_list(sw_ues);
            const auto algos =
                sw_algos.empty() ? std::vector<std::string>{cfg.algorithm}
                                 : parse_string_list(sw_algos);
            const auto table = fluc::sim::sweep(cfg, algos, ues, seeds, sw_out, sw_jobs);
            std::filesystem::create_directories(sw_out);
            const auto csv_path = std::filesystem::path(sw_out) / "sweep.csv";
            std::ofstream os(csv_path);
            fluc::sim::write_sweep_csv(os, table);
            std::cout << "sweep complete: " << table.cells.size() << " cells, table in "
                      << csv_path.string() << "\n";
        } else if (*compress_cmd) {
            fluc::RunConfig cfg = load_config_or_default(cp_config);
            if (cp_seed_set) cfg.seed = cp_seed;
            if (cp_ttis >= 0) cfg.total_ttis = cp_ttis;
            if (cp_ues >= 0) cfg.avg_ue_count = cp_ues;
            cfg.validate();
            fluc::sim::RunOptions opts;
            opts.out_dir = cp_out;
            opts.save_model_prefix = cp_save_model;
            opts.compress = true;
            const auto result = fluc::sim::run_experiment(cfg, opts);
            std::cout << "compression complete at TTI " << result.compress_end_tti << ": final ("
                      << result.compress_n1 << ", " << result.compress_n2 << "), "
                      << result.compression.size() << " events, outputs in " << cp_out << "\n";
        } else if (*audit_cmd) {
            const auto rep = fluc::sim::audit_run_dir(audit_dir);
            fluc::sim::print_audit_report(std::cout, rep);
            return rep.ok ? 0 : 1;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
