#pragma once

#include <cstddef>
#include <span>

#include "lane/task_runtime.hpp"
#include "lane/tensor.hpp"

namespace lane {

struct LearningRate {
    float eta;

    explicit LearningRate(float e) : eta(e) {
        if (!(eta > 0.0f)) {
            throw ConfigError("LearningRate: eta must be positive");
        }
    }
};

namespace detail {

// Per-index bodies shared by the host operations and the task-runtime kernels,
// so both paths compute bit-identical results. Index (o, i) writes only
// gradients[i][o] and delta_weights[i][o], plus deltas[o] and delta_biases[o]
// on the i == 0 lane.

inline void softmax_backward_tuple(std::size_t o, std::size_t i, std::size_t cols_out,
                                   float eta, std::span<float> deltas,
                                   std::span<const float> inputs, std::span<float> gradients,
                                   std::span<float> delta_weights, std::span<float> delta_biases,
                                   std::span<const float> outputs, std::span<const float> target) {
    const float delta = outputs[o] - target[o];
    const float grad = delta * inputs[i];
    gradients[i * cols_out + o] = grad;
    delta_weights[i * cols_out + o] = -eta * grad;
    if (i == 0) {
        deltas[o] = delta;
        delta_biases[o] = -eta * delta;
    }
}

inline void fc_backward_tuple(std::size_t o, std::size_t i, std::size_t cols_out,
                              std::size_t next_cols_out, float eta, std::span<float> deltas,
                              std::span<const float> inputs, std::span<float> gradients,
                              std::span<float> delta_weights, std::span<float> delta_biases,
                              std::span<const float> outputs, std::span<const float> next_weights,
                              std::span<const float> next_deltas) {
    float weighted = 0.0f;
    for (std::size_t k = 0; k < next_cols_out; ++k) {
        weighted += next_deltas[k] * next_weights[o * next_cols_out + k];
    }
    const float delta = (1.0f - outputs[o] * outputs[o]) * weighted;
    const float grad = delta * inputs[i];
    gradients[i * cols_out + o] = grad;
    delta_weights[i * cols_out + o] = -eta * grad;
    if (i == 0) {
        deltas[o] = delta;
        delta_biases[o] = -eta * delta;
    }
}

} // namespace detail

// State shared by both layer types: weights are cols_input x cols_out,
// per-neuron buffers are cols_out long. delta_weights and delta_biases already
// carry the -eta factor and are added to the parameters by apply_updates().
struct LayerState {
    LayerState(std::size_t cols_input, std::size_t cols_out);

    std::size_t cols_input() const { return weights.rows; }
    std::size_t cols_out() const { return weights.cols; }

    // weights += delta_weights; biases += delta_biases. Additive: calling it
    // twice after one backward shifts the parameters twice.
    void apply_updates();

    DenseMatrix weights;       // cols_input x cols_out
    DenseMatrix gradients;     // cols_input x cols_out
    DenseMatrix delta_weights; // cols_input x cols_out
    DenseVector biases;        // cols_out
    DenseVector inputs;        // cols_input, cached by forward
    DenseVector netin;         // cols_out
    DenseVector outputs;       // cols_out
    DenseVector deltas;        // cols_out
    DenseVector delta_biases;  // cols_out

protected:
    // netin[j] = sum_i input[i]*weights(i,j) + biases[j], i ascending;
    // caches the input.
    void compute_netin(const DenseVector& input);
};

struct FullyConnectedLayer : LayerState {
    using LayerState::LayerState;

    // outputs = tanh(netin)
    const DenseVector& forward(const DenseVector& input);

    // deltas[j] = (1 - outputs[j]^2) * sum_k next_deltas[k]*next_weights(j,k),
    // then gradients / delta_weights / delta_biases from those deltas.
    void backward(const DenseMatrix& next_weights, const DenseVector& next_deltas,
                  LearningRate eta);
};

struct SoftmaxOutputLayer : LayerState {
    using LayerState::LayerState;

    // outputs = softmax(netin), stabilized by max subtraction.
    const DenseVector& forward(const DenseVector& input);

    // Softmax + one-hot cross-entropy composite: deltas = outputs - target.
    void backward(const DenseVector& target, LearningRate eta);
};

// Task-runtime kernels for the two backward operations. Argument order:
//   softmax: (deltas, inputs, gradients, delta_weights, delta_biases, outputs, target)
//   fc:      (deltas, inputs, gradients, delta_weights, delta_biases, outputs,
//             next_weights, next_deltas)
// Iteration space is 2D: dim0 = cols_out (o), dim1 = cols_input (i).
Kernel make_softmax_backward_kernel(std::size_t cols_input, std::size_t cols_out, float eta);
Kernel make_fc_backward_kernel(std::size_t cols_input, std::size_t cols_out,
                               std::size_t next_cols_out, float eta);

} // namespace lane
