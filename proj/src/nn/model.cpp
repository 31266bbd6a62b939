#include "fluc/nn/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fluc/rng.hpp"

namespace fluc::nn {

void GradientTape::add(const GradientTape& other) {
    if (weight_grads.empty()) {
        *this = other;
        return;
    }
    for (std::size_t i = 0; i < weight_grads.size(); ++i) {
        for (std::size_t k = 0; k < weight_grads[i].size(); ++k)
            weight_grads[i][k] += other.weight_grads[i][k];
        for (std::size_t k = 0; k < bias_grads[i].size(); ++k)
            bias_grads[i][k] += other.bias_grads[i][k];
    }
}

void GradientTape::scale(double s) {
    for (auto& w : weight_grads)
        for (auto& v : w) v *= s;
    for (auto& b : bias_grads)
        for (auto& v : b) v *= s;
}

MlpModel::MlpModel(std::vector<int> layer_sizes, std::uint64_t init_seed) {
    if (layer_sizes.size() < 2)
        throw std::invalid_argument("MlpModel needs at least input and output layers");
    for (int n : layer_sizes)
        if (n < 1) throw std::invalid_argument("MlpModel layer sizes must be positive");
    sizes_ = std::move(layer_sizes);

    Rng rng(init_seed);
    const std::size_t layers = sizes_.size() - 1;
    weights_.resize(layers);
    biases_.resize(layers);
    for (std::size_t i = 0; i < layers; ++i) {
        const int fan_in = sizes_[i];
        const int fan_out = sizes_[i + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        weights_[i].resize(static_cast<std::size_t>(fan_in) * fan_out);
        for (auto& w : weights_[i]) w = rng.uniform(-bound, bound);
        biases_[i].assign(fan_out, 0.0);
    }
    zero_count_.resize(sizes_.size() >= 3 ? sizes_.size() - 2 : 0);
    total_count_.resize(zero_count_.size());
    for (std::size_t h = 0; h < zero_count_.size(); ++h) {
        zero_count_[h].assign(sizes_[h + 1], 0);
        total_count_[h].assign(sizes_[h + 1], 0);
    }
}

MlpModel MlpModel::zeros(std::vector<int> layer_sizes) {
    MlpModel m(std::move(layer_sizes), 0);
    for (auto& w : m.weights_)
        for (auto& v : w) v = 0.0;
    return m;
}

void MlpModel::forward_raw(std::span<const double> input,
                           std::vector<std::vector<double>>& pre,
                           std::vector<std::vector<double>>& act) const {
    if (static_cast<int>(input.size()) != input_size())
        throw std::invalid_argument("forward: input length does not match input layer");
    const std::size_t layers = weights_.size();
    pre.resize(layers);
    act.resize(layers + 1);
    act[0].assign(input.begin(), input.end());
    for (std::size_t i = 0; i < layers; ++i) {
        const int fan_in = sizes_[i];
        const int fan_out = sizes_[i + 1];
        pre[i].assign(biases_[i].begin(), biases_[i].end());
        double* __restrict z = pre[i].data();
        const double* __restrict in = act[i].data();
        const double* w = weights_[i].data();
        for (int l = 0; l < fan_in; ++l) {
            const double x = in[l];
            if (x == 0.0) continue;
            const double* __restrict row = w + static_cast<std::size_t>(l) * fan_out;
            for (int j = 0; j < fan_out; ++j) z[j] += x * row[j];
        }
        act[i + 1].resize(fan_out);
        double* __restrict a = act[i + 1].data();
        const bool is_output = (i + 1 == layers);
        for (int j = 0; j < fan_out; ++j) a[j] = is_output ? z[j] : (z[j] > 0.0 ? z[j] : 0.0);
    }
}

namespace {
// per-thread scratch so the training hot path does not allocate
thread_local std::vector<std::vector<double>> t_pre, t_act;
thread_local std::vector<double> t_delta, t_prev;
} // namespace

std::vector<double> MlpModel::forward(std::span<const double> input) const {
    forward_raw(input, t_pre, t_act);
    return t_act.back();
}

void MlpModel::forward_into(std::span<const double> input, std::vector<double>& out) const {
    forward_raw(input, t_pre, t_act);
    out = t_act.back();
}

std::vector<double> MlpModel::forward(std::span<const double> input, bool record_zero_stats) {
    forward_raw(input, t_pre, t_act);
    if (record_zero_stats) {
        for (std::size_t h = 0; h < zero_count_.size(); ++h) {
            const auto& a = t_act[h + 1];
            for (std::size_t j = 0; j < a.size(); ++j) {
                ++total_count_[h][j];
                if (a[j] == 0.0) ++zero_count_[h][j];
            }
        }
    }
    return t_act.back();
}

GradientTape MlpModel::make_zero_tape() const {
    GradientTape tape;
    tape.weight_grads.resize(weights_.size());
    tape.bias_grads.resize(biases_.size());
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        tape.weight_grads[i].assign(weights_[i].size(), 0.0);
        tape.bias_grads[i].assign(biases_[i].size(), 0.0);
    }
    return tape;
}

void MlpModel::backward_accumulate(std::span<const double> input,
                                   std::span<const double> output_grad,
                                   GradientTape& acc) const {
    if (static_cast<int>(output_grad.size()) != output_size())
        throw std::invalid_argument("backward: output_grad length does not match output layer");
    if (acc.weight_grads.size() != weights_.size())
        throw std::invalid_argument("backward: tape shape does not match model");
    forward_raw(input, t_pre, t_act);

    const std::size_t layers = weights_.size();
    t_delta.assign(output_grad.begin(), output_grad.end());
    for (std::size_t ii = layers; ii-- > 0;) {
        const int fan_in = sizes_[ii];
        const int fan_out = sizes_[ii + 1];
        const double* __restrict delta = t_delta.data();
        double* gw = acc.weight_grads[ii].data();
        double* __restrict gb = acc.bias_grads[ii].data();
        const double* __restrict in = t_act[ii].data();
        for (int j = 0; j < fan_out; ++j) gb[j] += delta[j];
        for (int l = 0; l < fan_in; ++l) {
            const double x = in[l];
            if (x == 0.0) continue;
            double* __restrict row = gw + static_cast<std::size_t>(l) * fan_out;
            for (int j = 0; j < fan_out; ++j) row[j] += x * delta[j];
        }
        if (ii == 0) break;
        // propagate through weights then the ReLU of layer ii
        t_prev.assign(fan_in, 0.0);
        double* __restrict prev = t_prev.data();
        const double* w = weights_[ii].data();
        const double* __restrict z_prev = t_pre[ii - 1].data();
        for (int l = 0; l < fan_in; ++l) {
            if (z_prev[l] <= 0.0) continue; // dead neuron blocks gradient
            const double* __restrict row = w + static_cast<std::size_t>(l) * fan_out;
            double s = 0.0;
            for (int j = 0; j < fan_out; ++j) s += row[j] * delta[j];
            prev[l] = s;
        }
        std::swap(t_delta, t_prev);
    }
}

GradientTape MlpModel::backward(std::span<const double> input,
                                std::span<const double> output_grad) const {
    GradientTape tape = make_zero_tape();
    backward_accumulate(input, output_grad, tape);
    return tape;
}

void MlpModel::sgd_step(const GradientTape& tape, double learning_rate) {
    if (tape.weight_grads.size() != weights_.size())
        throw std::invalid_argument("sgd_step: tape shape does not match model");
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        if (tape.weight_grads[i].size() != weights_[i].size())
            throw std::invalid_argument("sgd_step: tape shape does not match model");
        for (std::size_t k = 0; k < weights_[i].size(); ++k)
            weights_[i][k] -= learning_rate * tape.weight_grads[i][k];
        for (std::size_t k = 0; k < biases_[i].size(); ++k)
            biases_[i][k] -= learning_rate * tape.bias_grads[i][k];
    }
}

void MlpModel::check_layer_neuron(int layer, int neuron) const {
    if (layer < 1 || layer > layer_count() - 2)
        throw std::invalid_argument("layer index is not a hidden layer");
    if (neuron < 0 || neuron >= sizes_[layer])
        throw std::invalid_argument("neuron index out of range");
}

double MlpModel::poz(int layer, int neuron) const {
    check_layer_neuron(layer, neuron);
    const std::uint64_t total = total_count_[layer - 1][neuron];
    if (total == 0)
        throw std::runtime_error("poz: empty accumulation window");
    return static_cast<double>(zero_count_[layer - 1][neuron]) / static_cast<double>(total);
}

std::uint64_t MlpModel::poz_samples(int layer, int neuron) const {
    check_layer_neuron(layer, neuron);
    return total_count_[layer - 1][neuron];
}

void MlpModel::reset_poz() {
    for (auto& v : zero_count_) std::fill(v.begin(), v.end(), 0);
    for (auto& v : total_count_) std::fill(v.begin(), v.end(), 0);
}

void MlpModel::split_neuron(int layer, int neuron, double delta) {
    check_layer_neuron(layer, neuron);
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("split_neuron: delta must be in (0, 1)");

    const int h = layer;
    const int fan_in = sizes_[h - 1];
    const int width = sizes_[h];
    const int fan_out = sizes_[h + 1];

    // incoming matrix grows a column: child j keeps delta*w, child j+1 gets (1-delta)*w
    std::vector<double> in_new(static_cast<std::size_t>(fan_in) * (width + 1));
    const auto& in_old = weights_[h - 1];
    for (int l = 0; l < fan_in; ++l) {
        for (int j = 0; j <= width; ++j) {
            double v;
            if (j < neuron) v = in_old[static_cast<std::size_t>(l) * width + j];
            else if (j == neuron) v = delta * in_old[static_cast<std::size_t>(l) * width + neuron];
            else if (j == neuron + 1) v = (1.0 - delta) * in_old[static_cast<std::size_t>(l) * width + neuron];
            else v = in_old[static_cast<std::size_t>(l) * width + (j - 1)];
            in_new[static_cast<std::size_t>(l) * (width + 1) + j] = v;
        }
    }
    weights_[h - 1] = std::move(in_new);
    biases_[h - 1].insert(biases_[h - 1].begin() + neuron + 1, biases_[h - 1][neuron]);

    // outgoing matrix grows a row: both children copy the parent's row
    std::vector<double> out_new(static_cast<std::size_t>(width + 1) * fan_out);
    const auto& out_old = weights_[h];
    for (int j = 0; j <= width; ++j) {
        const int src = (j <= neuron) ? j : j - 1;
        for (int k = 0; k < fan_out; ++k)
            out_new[static_cast<std::size_t>(j) * fan_out + k] =
                out_old[static_cast<std::size_t>(src) * fan_out + k];
    }
    weights_[h] = std::move(out_new);

    zero_count_[h - 1][neuron] = 0;
    total_count_[h - 1][neuron] = 0;
    zero_count_[h - 1].insert(zero_count_[h - 1].begin() + neuron + 1, 0);
    total_count_[h - 1].insert(total_count_[h - 1].begin() + neuron + 1, 0);

    ++sizes_[h];
}

void MlpModel::prune_neuron(int layer, int neuron) {
    check_layer_neuron(layer, neuron);
    const int h = layer;
    const int width = sizes_[h];
    if (width - 1 < 2)
        throw std::runtime_error("prune_neuron: refusing to prune below the two-neuron floor");

    const int fan_in = sizes_[h - 1];
    const int fan_out = sizes_[h + 1];

    std::vector<double> in_new(static_cast<std::size_t>(fan_in) * (width - 1));
    const auto& in_old = weights_[h - 1];
    for (int l = 0; l < fan_in; ++l) {
        int out_j = 0;
        for (int j = 0; j < width; ++j) {
            if (j == neuron) continue;
            in_new[static_cast<std::size_t>(l) * (width - 1) + out_j++] =
                in_old[static_cast<std::size_t>(l) * width + j];
        }
    }
    weights_[h - 1] = std::move(in_new);
    biases_[h - 1].erase(biases_[h - 1].begin() + neuron);

    std::vector<double> out_new(static_cast<std::size_t>(width - 1) * fan_out);
    const auto& out_old = weights_[h];
    int out_j = 0;
    for (int j = 0; j < width; ++j) {
        if (j == neuron) continue;
        for (int k = 0; k < fan_out; ++k)
            out_new[static_cast<std::size_t>(out_j) * fan_out + k] =
                out_old[static_cast<std::size_t>(j) * fan_out + k];
        ++out_j;
    }
    weights_[h] = std::move(out_new);

    zero_count_[h - 1].erase(zero_count_[h - 1].begin() + neuron);
    total_count_[h - 1].erase(total_count_[h - 1].begin() + neuron);

    --sizes_[h];
}

void MlpModel::scale_params(double s) {
    for (auto& w : weights_)
        for (auto& v : w) v *= s;
    for (auto& b : biases_)
        for (auto& v : b) v *= s;
}

void MlpModel::axpy(double a, const MlpModel& x) {
    if (!same_shape(x))
        throw std::invalid_argument("axpy: model shapes differ");
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        for (std::size_t k = 0; k < weights_[i].size(); ++k)
            weights_[i][k] += a * x.weights_[i][k];
        for (std::size_t k = 0; k < biases_[i].size(); ++k)
            biases_[i][k] += a * x.biases_[i][k];
    }
}

void MlpModel::blend_toward(const MlpModel& target, double eta) {
    if (!same_shape(target))
        throw std::invalid_argument("blend_toward: model shapes differ");
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        for (std::size_t k = 0; k < weights_[i].size(); ++k)
            weights_[i][k] = (1.0 - eta) * weights_[i][k] + eta * target.weights_[i][k];
        for (std::size_t k = 0; k < biases_[i].size(); ++k)
            biases_[i][k] = (1.0 - eta) * biases_[i][k] + eta * target.biases_[i][k];
    }
}

bool MlpModel::params_equal(const MlpModel& other) const {
    return sizes_ == other.sizes_ && weights_ == other.weights_ && biases_ == other.biases_;
}

double MlpModel::max_abs_param_diff(const MlpModel& other) const {
    if (!same_shape(other)) throw std::invalid_argument("max_abs_param_diff: shapes differ");
    double m = 0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        for (std::size_t k = 0; k < weights_[i].size(); ++k)
            m = std::max(m, std::abs(weights_[i][k] - other.weights_[i][k]));
        for (std::size_t k = 0; k < biases_[i].size(); ++k)
            m = std::max(m, std::abs(biases_[i][k] - other.biases_[i][k]));
    }
    return m;
}

double MlpModel::weight(int layer, int from, int to) const {
    return weights_[layer][static_cast<std::size_t>(from) * sizes_[layer + 1] + to];
}
double& MlpModel::weight(int layer, int from, int to) {
    return weights_[layer][static_cast<std::size_t>(from) * sizes_[layer + 1] + to];
}
double MlpModel::bias_at(int layer, int neuron) const { return biases_[layer][neuron]; }
double& MlpModel::bias_at(int layer, int neuron) { return biases_[layer][neuron]; }

namespace {
void print_double(std::ostream& os, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
}
} // namespace

void MlpModel::save(std::ostream& os) const {
    os << "FLUCMODEL 1\n" << sizes_.size() << "\n";
    for (std::size_t i = 0; i < sizes_.size(); ++i)
        os << sizes_[i] << (i + 1 == sizes_.size() ? "\n" : " ");
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        os << "w " << i << "\n";
        for (std::size_t k = 0; k < weights_[i].size(); ++k) {
            print_double(os, weights_[i][k]);
            os << (((k + 1) % static_cast<std::size_t>(sizes_[i + 1])) == 0 ? "\n" : " ");
        }
        os << "b " << i << "\n";
        for (std::size_t k = 0; k < biases_[i].size(); ++k) {
            print_double(os, biases_[i][k]);
            os << (k + 1 == biases_[i].size() ? "\n" : " ");
        }
    }
}

MlpModel MlpModel::load(std::istream& is) {
    std::string magic;
    int version = 0;
    is >> magic >> version;
    if (magic != "FLUCMODEL" || version != 1)
        throw std::runtime_error("model snapshot: unrecognized header");
    std::size_t n = 0;
    is >> n;
    if (n < 2 || n > 64) throw std::runtime_error("model snapshot: bad layer count");
    std::vector<int> sizes(n);
    for (auto& s : sizes) is >> s;
    MlpModel m = MlpModel::zeros(sizes);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        std::string tag;
        std::size_t idx;
        is >> tag >> idx;
        if (tag != "w" || idx != i) throw std::runtime_error("model snapshot: bad weight block");
        for (auto& v : m.weights_[i]) is >> v;
        is >> tag >> idx;
        if (tag != "b" || idx != i) throw std::runtime_error("model snapshot: bad bias block");
        for (auto& v : m.biases_[i]) is >> v;
    }
    if (!is) throw std::runtime_error("model snapshot: truncated file");
    return m;
}

void MlpModel::save_file(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    save(os);
}

MlpModel MlpModel::load_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    return load(is);
}

} // namespace fluc::nn
