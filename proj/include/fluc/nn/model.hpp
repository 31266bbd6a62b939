#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace fluc::nn {

// Per-parameter gradients with the same layout as MlpModel.
struct GradientTape {
    std::vector<std::vector<double>> weight_grads; // [layer][fan_in * fan_out], row-major
    std::vector<std::vector<double>> bias_grads;   // [layer][fan_out]

    void add(const GradientTape& other);
    void scale(double s);
};

// Feed-forward network with ReLU hidden layers and a linear output layer.
// weights_[i] connects layer i to layer i+1, shape sizes[i] x sizes[i+1],
// row-major with row l = source neuron and column j = destination neuron.
// Hidden neurons carry zero-activation counters so the fraction of zero
// post-ReLU outputs over a window can be read back per neuron.
class MlpModel {
public:
    MlpModel() = default;

    // Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero.
    MlpModel(std::vector<int> layer_sizes, std::uint64_t init_seed);

    static MlpModel zeros(std::vector<int> layer_sizes);

    const std::vector<int>& layer_sizes() const { return sizes_; }
    int input_size() const { return sizes_.front(); }
    int output_size() const { return sizes_.back(); }
    int layer_count() const { return static_cast<int>(sizes_.size()); }
    bool empty() const { return sizes_.empty(); }

    std::vector<double> forward(std::span<const double> input, bool record_zero_stats);
    std::vector<double> forward(std::span<const double> input) const;
    void forward_into(std::span<const double> input, std::vector<double>& out) const;

    // Gradient of J = dot(output_grad, output(input)) w.r.t. every parameter,
    // with output_grad held constant. ReLU subgradient at 0 is 0.
    GradientTape backward(std::span<const double> input,
                          std::span<const double> output_grad) const;

    // allocation-free variant for training loops: adds into acc
    void backward_accumulate(std::span<const double> input,
                             std::span<const double> output_grad, GradientTape& acc) const;
    GradientTape make_zero_tape() const;

    // One descent step: theta <- theta - learning_rate * tape.
    void sgd_step(const GradientTape& tape, double learning_rate);

    // Fraction of zero post-ReLU activations for a hidden neuron over the
    // current window. `layer` indexes layer_sizes (hidden layers are
    // 1 .. layer_count()-2). Throws if the window is empty.
    double poz(int layer, int neuron) const;
    std::uint64_t poz_samples(int layer, int neuron) const;
    void reset_poz();

    // Splits a hidden neuron in two: children take delta*w and (1-delta)*w of
    // the incoming weights, both copy the outgoing row, and both copy the
    // parent bias unscaled. delta must lie in the open interval (0, 1).
    void split_neuron(int layer, int neuron, double delta);

    // Removes a hidden neuron; refused if the layer would drop below 2.
    void prune_neuron(int layer, int neuron);

    // Parameter-space ops used by federation.
    void scale_params(double s);
    void axpy(double a, const MlpModel& x);          // this += a * x
    void blend_toward(const MlpModel& target, double eta); // this = (1-eta)*this + eta*target

    bool same_shape(const MlpModel& other) const { return sizes_ == other.sizes_; }
    bool params_equal(const MlpModel& other) const;
    double max_abs_param_diff(const MlpModel& other) const;

    double weight(int layer, int from, int to) const;
    double& weight(int layer, int from, int to);
    double bias_at(int layer, int neuron) const;
    double& bias_at(int layer, int neuron);

    // Versioned text snapshot: layer sizes, then row-major weights and biases
    // per layer, printed with full round-trip precision.
    void save(std::ostream& os) const;
    static MlpModel load(std::istream& is);
    void save_file(const std::string& path) const;
    static MlpModel load_file(const std::string& path);

private:
    void check_layer_neuron(int layer, int neuron) const;
    void forward_raw(std::span<const double> input,
                     std::vector<std::vector<double>>& pre,
                     std::vector<std::vector<double>>& act) const;

    std::vector<int> sizes_;
    std::vector<std::vector<double>> weights_;
    std::vector<std::vector<double>> biases_;
    std::vector<std::vector<std::uint64_t>> zero_count_;  // per hidden layer
    std::vector<std::vector<std::uint64_t>> total_count_;
};

} // namespace fluc::nn
