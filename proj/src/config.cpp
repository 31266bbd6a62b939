#include "fluc/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace fluc {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string rat_name(Rat r) { return r == Rat::Lte ? "lte" : "nr"; }

Rat rat_from(const std::string& s) {
    if (s == "lte") return Rat::Lte;
    if (s == "nr") return Rat::Nr;
    throw std::invalid_argument("config: unknown rat '" + s + "'");
}

ordered_json bs_to_json(const BsClassConfig& b) {
    return {{"rat", rat_name(b.rat)},
            {"carrier_ghz", b.carrier_ghz},
            {"tx_power_w", b.tx_power_w},
            {"bandwidth_mhz", b.bandwidth_mhz},
            {"rb_count", b.rb_count}};
}

BsClassConfig bs_from_json(const ordered_json& j) {
    BsClassConfig b;
    b.rat = rat_from(j.at("rat").get<std::string>());
    b.carrier_ghz = j.at("carrier_ghz").get<double>();
    b.tx_power_w = j.at("tx_power_w").get<double>();
    b.bandwidth_mhz = j.at("bandwidth_mhz").get<double>();
    b.rb_count = j.at("rb_count").get<int>();
    return b;
}

ordered_json traffic_to_json(const TrafficClassConfig& t) {
    return {{"proportion", t.proportion},
            {"qci", t.qci},
            {"file_kib", t.file_kib},
            {"packet_bytes", t.packet_bytes},
            {"interarrival_ttis", t.interarrival_ttis}};
}

TrafficClassConfig traffic_from_json(const ordered_json& j) {
    TrafficClassConfig t;
    t.proportion = j.at("proportion").get<double>();
    t.qci = j.at("qci").get<int>();
    t.file_kib = j.at("file_kib").get<double>();
    t.packet_bytes = j.at("packet_bytes").get<int>();
    t.interarrival_ttis = j.at("interarrival_ttis").get<int>();
    return t;
}

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("config: ") + what);
}

} // namespace

void RunConfig::validate() const {
    require(total_ttis >= 0, "total_ttis must be >= 0");
    require(avg_ue_count >= 0, "avg_ue_count must be >= 0");
    require(algorithm == "ktfluc" || algorithm == "fl" || algorithm == "fli" ||
                algorithm == "dil" || algorithm == "cl",
            "algorithm must be one of ktfluc|fl|fli|dil|cl");
    require(sbs_count >= 0 && sbs_count <= 16, "sbs_count must be in [0, 16]");
    require(mbs.rb_count > 0 && sbs.rb_count > 0, "rb_count must be positive");
    require(mbs.tx_power_w > 0 && sbs.tx_power_w > 0, "tx power must be positive");
    require(rb_bandwidth_hz > 0, "rb_bandwidth_hz must be positive");
    require(gbr.proportion >= 0 && non_gbr.proportion >= 0 &&
                std::abs(gbr.proportion + non_gbr.proportion - 1.0) < 1e-9,
            "traffic proportions must sum to 1");
    require(gbr.packet_bytes > 0 && non_gbr.packet_bytes > 0, "packet sizes must be positive");
    require(gbr.file_kib > 0 && non_gbr.file_kib > 0, "file sizes must be positive");
    require(gbr.interarrival_ttis > 0 && non_gbr.interarrival_ttis > 0,
            "packet inter-arrival must be positive");
    require(d_max_ms > 0 && b_max_bps > 0, "reward normalizers must be positive");
    require(learning_rate > 0, "learning_rate must be positive");
    require(discount >= 0 && discount < 1, "discount must be in [0, 1)");
    require(epsilon >= 0 && epsilon <= 1, "epsilon must be in [0, 1]");
    require(buffer_capacity > 0 && batch_size > 0, "buffer and batch must be positive");
    require(batch_size <= buffer_capacity, "batch_size must not exceed buffer_capacity");
    require(hidden_sizes.size() == 2 && hidden_sizes[0] >= 2 && hidden_sizes[1] >= 2,
            "hidden_sizes must be two values >= 2");
    require(cl_hidden_sizes.size() == 2 && cl_hidden_sizes[0] >= 2 && cl_hidden_sizes[1] >= 2,
            "cl_hidden_sizes must be two values >= 2");
    require(fed_interval > 0, "fed_interval must be positive");
    require(eta1 > 0 && eta1 <= 1 && eta2 > 0 && eta2 <= 1, "eta1/eta2 must be in (0, 1]");
    require(indicator_count > 0, "indicator_count must be positive");
    require(split_interval > 0, "split_interval must be positive");
    require(n_required >= 1, "n_required must be >= 1");
    require(split_delta > 0 && split_delta < 1, "split_delta must be in (0, 1)");
    require(expert_init == "local" || expert_init == "zero", "expert_init must be local|zero");
    require(newcomer_init == "global" || newcomer_init == "random",
            "newcomer_init must be global|random");
    require(compress_reward_scope == "designated" || compress_reward_scope == "system",
            "compress_reward_scope must be designated|system");
    require(cl_reward == "mean" || cl_reward == "sum", "cl_reward must be mean|sum");
    require(rssi_max_dbm > rssi_min_dbm, "rssi normalization bounds inverted");
    require(queue_norm_packets > 0, "queue_norm_packets must be positive");
    require(trajectory_window_ttis > 0, "trajectory_window_ttis must be positive");
    require(reward_scale > 0, "reward_scale must be positive");
    require(transfer_lr_scale > 0, "transfer_lr_scale must be positive");
}

std::string RunConfig::to_json_string() const {
    ordered_json j;
    j["seed"] = seed;
    j["total_ttis"] = total_ttis;
    j["avg_ue_count"] = avg_ue_count;
    j["algorithm"] = algorithm;
    j["radio"] = {{"sbs_count", sbs_count},
                  {"mbs", bs_to_json(mbs)},
                  {"sbs", bs_to_json(sbs)},
                  {"rb_bandwidth_hz", rb_bandwidth_hz},
                  {"antenna_gain_db", antenna_gain_db},
                  {"shadowing_sigma_db", shadowing_sigma_db},
                  {"noise_dbm_per_hz", noise_dbm_per_hz},
                  {"pathloss_ref_db", pathloss_ref_db},
                  {"pathloss_slope_db", pathloss_slope_db},
                  {"area_m", area_m},
                  {"sbs_ring_m", sbs_ring_m},
                  {"co_channel_sbs", co_channel_sbs}};
    j["traffic"] = {{"gbr", traffic_to_json(gbr)}, {"non_gbr", traffic_to_json(non_gbr)}};
    j["reward"] = {{"d_max_ms", d_max_ms},
                   {"b_max_bps", b_max_bps},
                   {"gbr_eligible_delay_ms", gbr_eligible_delay_ms},
                   {"non_gbr_eligible_bps", non_gbr_eligible_bps}};
    j["dqn"] = {{"learning_rate", learning_rate},
                {"discount", discount},
                {"epsilon", epsilon},
                {"buffer_capacity", buffer_capacity},
                {"batch_size", batch_size},
                {"hidden_sizes", hidden_sizes},
                {"full_gradient", full_gradient},
                {"transfer_lr_scale", transfer_lr_scale},
                {"reward_scale", reward_scale},
                {"expert_init", expert_init},
                {"newcomer_init", newcomer_init}};
    j["fed"] = {{"fed_interval", fed_interval},
                {"eta1", eta1},
                {"eta2", eta2},
                {"indicator_count", indicator_count}};
    j["compress"] = {{"split_interval", split_interval},
                     {"n_required", n_required},
                     {"split_delta", split_delta},
                     {"plateau_tol", plateau_tol},
                     {"strict_decline", strict_decline},
                     {"reward_scope", compress_reward_scope}};
    j["cl"] = {{"slots", cl_slots}, {"reward", cl_reward}, {"hidden_sizes", cl_hidden_sizes}};
    j["state_norm"] = {{"rssi_min_dbm", rssi_min_dbm},
                       {"rssi_max_dbm", rssi_max_dbm},
                       {"queue_norm_packets", queue_norm_packets}};
    j["trajectory_window_ttis"] = trajectory_window_ttis;
    return j.dump(2) + "\n";
}

RunConfig RunConfig::from_json_string(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw std::invalid_argument(std::string("config: not valid JSON: ") + e.what());
    }
    RunConfig c;
    try {
        c.seed = j.at("seed").get<std::uint64_t>();
        c.total_ttis = j.at("total_ttis").get<long>();
        c.avg_ue_count = j.at("avg_ue_count").get<double>();
        c.algorithm = j.at("algorithm").get<std::string>();
        const auto& r = j.at("radio");
        c.sbs_count = r.at("sbs_count").get<int>();
        c.mbs = bs_from_json(r.at("mbs"));
        c.sbs = bs_from_json(r.at("sbs"));
        c.rb_bandwidth_hz = r.at("rb_bandwidth_hz").get<double>();
        c.antenna_gain_db = r.at("antenna_gain_db").get<double>();
        c.shadowing_sigma_db = r.at("shadowing_sigma_db").get<double>();
        c.noise_dbm_per_hz = r.at("noise_dbm_per_hz").get<double>();
        c.pathloss_ref_db = r.at("pathloss_ref_db").get<double>();
        c.pathloss_slope_db = r.at("pathloss_slope_db").get<double>();
        c.area_m = r.at("area_m").get<double>();
        c.sbs_ring_m = r.at("sbs_ring_m").get<double>();
        c.co_channel_sbs = r.at("co_channel_sbs").get<bool>();
        c.gbr = traffic_from_json(j.at("traffic").at("gbr"));
        c.non_gbr = traffic_from_json(j.at("traffic").at("non_gbr"));
        const auto& rw = j.at("reward");
        c.d_max_ms = rw.at("d_max_ms").get<double>();
        c.b_max_bps = rw.at("b_max_bps").get<double>();
        c.gbr_eligible_delay_ms = rw.at("gbr_eligible_delay_ms").get<double>();
        c.non_gbr_eligible_bps = rw.at("non_gbr_eligible_bps").get<double>();
        const auto& d = j.at("dqn");
        c.learning_rate = d.at("learning_rate").get<double>();
        c.discount = d.at("discount").get<double>();
        c.epsilon = d.at("epsilon").get<double>();
        c.buffer_capacity = d.at("buffer_capacity").get<int>();
        c.batch_size = d.at("batch_size").get<int>();
        c.hidden_sizes = d.at("hidden_sizes").get<std::vector<int>>();
        c.full_gradient = d.at("full_gradient").get<bool>();
        c.transfer_lr_scale = d.at("transfer_lr_scale").get<double>();
        c.reward_scale = d.at("reward_scale").get<double>();
        c.expert_init = d.at("expert_init").get<std::string>();
        c.newcomer_init = d.at("newcomer_init").get<std::string>();
        const auto& f = j.at("fed");
        c.fed_interval = f.at("fed_interval").get<long>();
        c.eta1 = f.at("eta1").get<double>();
        c.eta2 = f.at("eta2").get<double>();
        c.indicator_count = f.at("indicator_count").get<int>();
        const auto& cp = j.at("compress");
        c.split_interval = cp.at("split_interval").get<long>();
        c.n_required = cp.at("n_required").get<int>();
        c.split_delta = cp.at("split_delta").get<double>();
        c.plateau_tol = cp.at("plateau_tol").get<double>();
        c.strict_decline = cp.at("strict_decline").get<bool>();
        c.compress_reward_scope = cp.at("reward_scope").get<std::string>();
        const auto& cl = j.at("cl");
        c.cl_slots = cl.at("slots").get<int>();
        c.cl_reward = cl.at("reward").get<std::string>();
        c.cl_hidden_sizes = cl.at("hidden_sizes").get<std::vector<int>>();
        const auto& sn = j.at("state_norm");
        c.rssi_min_dbm = sn.at("rssi_min_dbm").get<double>();
        c.rssi_max_dbm = sn.at("rssi_max_dbm").get<double>();
        c.queue_norm_packets = sn.at("queue_norm_packets").get<double>();
        c.trajectory_window_ttis = j.at("trajectory_window_ttis").get<long>();
    } catch (const ordered_json::exception& e) {
        throw std::invalid_argument(std::string("config: missing or mistyped field: ") + e.what());
    }
    c.validate();
    return c;
}

void RunConfig::save_file(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << to_json_string();
}

RunConfig RunConfig::load_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("config: cannot open " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return from_json_string(ss.str());
}

} // namespace fluc
