#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fluc/metrics.hpp"
#include "fluc/sim/audit.hpp"
#include "fluc/sim/runner.hpp"
#include "fluc/sim/sweep.hpp"

using namespace fluc;
namespace fs = std::filesystem;

namespace {

RunConfig tiny_config() {
    RunConfig cfg;
    cfg.seed = 9;
    cfg.total_ttis = 250;
    cfg.avg_ue_count = 4;
    cfg.sbs_count = 2;
    cfg.co_channel_sbs = false;
    cfg.mbs.rb_count = 7;
    cfg.sbs.rb_count = 7;
    cfg.hidden_sizes = {6, 8};
    cfg.algorithm = "dil";
    return cfg;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("config: parse -> serialize -> parse is the identity") {
    RunConfig cfg = tiny_config();
    cfg.epsilon = 0.123;
    cfg.expert_init = "zero";
    cfg.cl_slots = 17;
    const std::string text = cfg.to_json_string();
    const RunConfig back = RunConfig::from_json_string(text);
    CHECK(back == cfg);
    CHECK(back.to_json_string() == text);
}

TEST_CASE("config: diagnostics for malformed input") {
    CHECK_THROWS_AS(RunConfig::from_json_string("{"), std::invalid_argument);
    CHECK_THROWS_AS(RunConfig::from_json_string("{}"), std::invalid_argument);
    RunConfig bad = tiny_config();
    bad.algorithm = "sorcery";
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = tiny_config();
    bad.gbr.proportion = 0.7; // proportions no longer sum to 1
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("per-TTI CSV: write/read round-trip preserves every row") {
    const auto res = sim::run_experiment(tiny_config());
    std::stringstream ss;
    write_tti_csv(ss, res.rows);
    const auto back = read_tti_csv(ss);
    CHECK(back == res.rows);
}

TEST_CASE("run_experiment: same config and seed give bytewise-identical outputs") {
    TempDir a("fluc_det_a"), b("fluc_det_b");
    sim::RunOptions oa, ob;
    oa.out_dir = a.path.string();
    ob.out_dir = b.path.string();
    RunConfig cfg = tiny_config();
    cfg.algorithm = "ktfluc";
    sim::run_experiment(cfg, oa);
    sim::run_experiment(cfg, ob);
    CHECK(slurp(a.path / "per_tti.csv") == slurp(b.path / "per_tti.csv"));
    CHECK(slurp(a.path / "summary.json") == slurp(b.path / "summary.json"));
    CHECK(slurp(a.path / "federation.csv") == slurp(b.path / "federation.csv"));
    CHECK(!slurp(a.path / "per_tti.csv").empty());
}

TEST_CASE("run_experiment: zero TTIs emit a valid header-only CSV") {
    TempDir dir("fluc_zero");
    RunConfig cfg = tiny_config();
    cfg.total_ttis = 0;
    sim::RunOptions opts;
    opts.out_dir = dir.path.string();
    const auto res = sim::run_experiment(cfg, opts);
    CHECK(res.rows.empty());
    CHECK(slurp(dir.path / "per_tti.csv") == std::string(kTtiCsvHeader) + "\n");
    CHECK(res.summary.row_count == 0);
}

TEST_CASE("run_experiment: federation log rows appear per round and group") {
    RunConfig cfg = tiny_config();
    cfg.algorithm = "fl";
    cfg.total_ttis = 100;
    cfg.fed_interval = 30;
    const auto res = sim::run_experiment(cfg);
    REQUIRE(!res.fed_log.empty());
    double sum = 0;
    const long round = res.fed_log.front().round;
    const auto group = res.fed_log.front().group;
    for (const auto& row : res.fed_log)
        if (row.round == round && row.group == group) sum += row.weight;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("model snapshots: saved globals reload and seed a new run") {
    TempDir dir("fluc_models");
    RunConfig cfg = tiny_config();
    cfg.algorithm = "fl";
    cfg.total_ttis = 120;
    sim::RunOptions opts;
    opts.out_dir = dir.path.string();
    opts.save_model_prefix = (dir.path / "snap").string();
    sim::run_experiment(cfg, opts);
    const auto gbr_path = (dir.path / "snap").string() + ".gbr.model";
    REQUIRE(fs::exists(gbr_path));
    const nn::MlpModel m = nn::MlpModel::load_file(gbr_path);
    CHECK(m.layer_sizes().front() == cfg.state_size());

    sim::RunOptions load_opts;
    load_opts.load_model_path = gbr_path;
    const auto res = sim::run_experiment(cfg, load_opts); // must run end to end
    CHECK(res.rows.size() > 0);
}

TEST_CASE("audit: a finished run passes recomputation, tampering fails it") {
    TempDir dir("fluc_audit");
    RunConfig cfg = tiny_config();
    sim::RunOptions opts;
    opts.out_dir = dir.path.string();
    sim::run_experiment(cfg, opts);
    const auto rep = sim::audit_run_dir(dir.path.string());
    CHECK(rep.ok);
    CHECK(rep.metric_mismatches == 0);

    // flip one reward cell and the audit must notice
    auto text = slurp(dir.path / "per_tti.csv");
    const auto pos = text.find("\n0,");
    REQUIRE(pos != std::string::npos);
    text.replace(pos + 1, 1, "5"); // move a row to a different TTI
    std::ofstream(dir.path / "per_tti.csv") << text;
    const auto rep2 = sim::audit_run_dir(dir.path.string());
    CHECK_FALSE(rep2.ok);
}

TEST_CASE("sweep: one cell equals a lone run; repeated seeds have zero std") {
    RunConfig cfg = tiny_config();
    const auto lone = sim::run_experiment(cfg);
    const auto table = sim::sweep(cfg, {"dil"}, {4.0}, {9, 9}, "", 1);
    REQUIRE(table.cells.size() == 1);
    const auto& cell = table.cells.front();
    CHECK(cell.metric_mean("mean_reward") == doctest::Approx(lone.summary.mean_reward));
    CHECK(cell.metric_std("mean_reward") == 0.0);
}

TEST_CASE("sweep: 2 algorithms x 2 loads x 3 seeds give 4 cells of 3 samples") {
    RunConfig cfg = tiny_config();
    cfg.total_ttis = 60;
    const auto table = sim::sweep(cfg, {"dil", "fl"}, {3.0, 5.0}, {1, 2, 3}, "", 2);
    REQUIRE(table.cells.size() == 4);
    for (const auto& c : table.cells) CHECK(c.per_seed.size() == 3);
    std::stringstream ss;
    sim::write_sweep_csv(ss, table);
    std::string line;
    int lines = 0;
    while (std::getline(ss, line)) ++lines;
    CHECK(lines == 5); // header + 4 cells
}

TEST_CASE("compare: delta orientation per metric kind") {
    RunConfig cfg = tiny_config();
    cfg.total_ttis = 40;
    auto table = sim::sweep(cfg, {"dil", "fl"}, {3.0}, {1}, "", 1);
    // overwrite with hand values; compare() only reads the summaries
    table.cells[0].per_seed[0].mean_gbr_delay_ms = 100.0;
    table.cells[1].per_seed[0].mean_gbr_delay_ms = 35.0;
    table.cells[0].per_seed[0].mean_nongbr_throughput_bps = 1.0;
    table.cells[1].per_seed[0].mean_nongbr_throughput_bps = 1.52;
    CHECK(sim::compare(table, "dil", "fl", "mean_gbr_delay_ms", 3.0) ==
          doctest::Approx(0.65));
    CHECK(sim::compare(table, "dil", "fl", "mean_nongbr_throughput_bps", 3.0) ==
          doctest::Approx(0.52));
    CHECK(sim::compare(table, "dil", "dil", "mean_gbr_delay_ms", 3.0) == 0.0);
    CHECK_THROWS(sim::compare(table, "dil", "cl", "mean_gbr_delay_ms", 3.0));
}

TEST_CASE("population tracks the configured average under nominal service") {
    RunConfig cfg = tiny_config();
    cfg.avg_ue_count = 6;
    cfg.total_ttis = 10000;
    cfg.seed = 7;
    cfg.hidden_sizes = {8, 12};
    const auto res = sim::run_experiment(cfg);
    CHECK(std::abs(res.mean_active_ues - 6.0) / 6.0 <= 0.10);
}

TEST_CASE("summary metrics equal an independent recomputation from rows") {
    RunConfig cfg = tiny_config();
    cfg.algorithm = "fli";
    const auto res = sim::run_experiment(cfg);
    const RunSummary again = summarize(res.rows, cfg);
    CHECK(again.mean_reward == res.summary.mean_reward);
    CHECK(again.mean_gbr_delay_ms == res.summary.mean_gbr_delay_ms);
    CHECK(again.blocking_rate == res.summary.blocking_rate);
    CHECK(again.mean_transmission_cycle_ttis == res.summary.mean_transmission_cycle_ttis);
    CHECK(again.reward_trajectory == res.summary.reward_trajectory);
}
