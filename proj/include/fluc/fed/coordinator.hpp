#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fluc/nn/model.hpp"
#include "fluc/rl/agent.hpp"

namespace fluc::fed {

enum class Group { Gbr = 0, NonGbr = 1 };

inline const char* group_name(Group g) { return g == Group::Gbr ? "gbr" : "nongbr"; }

struct FedLogRow {
    long round = 0;
    Group group = Group::Gbr;
    int ue_id = 0;
    double rbar_norm = 0;
    double psi_norm = 0;
    double phi_norm = 0;
    double weight = 0;
};

struct NormalizedIndicators {
    double rbar = 0, psi = 0, phi = 0;
};

// Max-normalizes each indicator within the group, scores (R' + Psi' + Phi')/n_k
// and softmaxes the scores. An indicator whose group maximum is not positive
// contributes zero for every UE. Weights sum to 1.
std::vector<double> attention_weights(const std::vector<rl::WindowIndicators>& indicators,
                                      int n_k,
                                      std::vector<NormalizedIndicators>* normalized = nullptr);

struct CoordinatorParams {
    double eta1 = 0.9;
    double eta2 = 0.9;
    int indicator_count = 3;
};

// RAN-controller side of federation: one global model per traffic group,
// attention-weighted aggregation, push-back to locals or experts, and
// newcomer initialization.
class Coordinator {
public:
    explicit Coordinator(CoordinatorParams p) : params_(p) {}

    bool global_initialized(Group g) const { return global_[idx(g)].has_value(); }
    const nn::MlpModel& global(Group g) const { return global_[idx(g)].value(); }

    // theta_g <- (1 - eta1) * theta_g + eta1 * sum_m w_m * theta_m.
    // The first round seeds theta_g with the weighted sum alone. Locals whose
    // shape differs from the group shape abort the round for the group.
    // Returns true if the group aggregated.
    bool aggregate(Group g, const std::vector<const nn::MlpModel*>& locals,
                   const std::vector<double>& weights);

    // Eq.-14 blend used by the FL and FLI modes.
    void push_back_local(Group g, rl::UeAgent& agent) const;
    // Expert replacement used by KT-FLUC; the local model is untouched.
    void push_back_expert(Group g, rl::UeAgent& agent) const;

    // Copies the group global into local and expert. Falls back to the given
    // model when the global is still uninitialized; returns false in that case.
    bool init_newcomer(Group g, rl::UeAgent& agent, const nn::MlpModel& fallback,
                       bool with_expert) const;

    std::vector<FedLogRow>& log() { return log_; }
    const std::vector<FedLogRow>& log() const { return log_; }

    long aggregation_errors() const { return aggregation_errors_; }

private:
    static std::size_t idx(Group g) { return static_cast<std::size_t>(g); }

    CoordinatorParams params_;
    std::optional<nn::MlpModel> global_[2];
    std::vector<FedLogRow> log_;
    long aggregation_errors_ = 0;
};

extern const char* kFedCsvHeader;
void write_fed_csv(std::ostream& os, const std::vector<FedLogRow>& rows);

} // namespace fluc::fed
