#include "lane/layers.hpp"

#include <cmath>

namespace lane {

LayerState::LayerState(std::size_t cols_input, std::size_t cols_out)
    : weights(cols_input, cols_out, 0.0f),
      gradients(cols_input, cols_out, 0.0f),
      delta_weights(cols_input, cols_out, 0.0f),
      biases(cols_out, 0.0f),
      inputs(cols_input, 0.0f),
      netin(cols_out, 0.0f),
      outputs(cols_out, 0.0f),
      deltas(cols_out, 0.0f),
      delta_biases(cols_out, 0.0f) {}

void LayerState::apply_updates() {
    for (std::size_t n = 0; n < weights.data.size(); ++n) {
        weights.data[n] += delta_weights.data[n];
    }
    for (std::size_t j = 0; j < biases.len(); ++j) {
        biases[j] += delta_biases[j];
    }
}

void LayerState::compute_netin(const DenseVector& input) {
    if (input.len() != cols_input()) {
        throw ShapeError("forward: input length " + std::to_string(input.len()) +
                         " != cols_input " + std::to_string(cols_input()));
    }
    inputs = input;
    const std::size_t out = cols_out();
    for (std::size_t j = 0; j < out; ++j) {
        float sum = 0.0f;
        for (std::size_t i = 0; i < input.len(); ++i) {
            sum += input[i] * weights(i, j);
        }
        netin[j] = sum + biases[j];
    }
}

const DenseVector& FullyConnectedLayer::forward(const DenseVector& input) {
    compute_netin(input);
    for (std::size_t j = 0; j < cols_out(); ++j) {
        outputs[j] = std::tanh(netin[j]);
    }
    return outputs;
}

void FullyConnectedLayer::backward(const DenseMatrix& next_weights,
                                   const DenseVector& next_deltas, LearningRate eta) {
    if (next_weights.rows != cols_out()) {
        throw ShapeError("fc backward: next_weights.rows != cols_out");
    }
    if (next_deltas.len() != next_weights.cols) {
        throw ShapeError("fc backward: next_deltas length != next_weights.cols");
    }
    const std::size_t out = cols_out();
    const std::size_t in = cols_input();
    for (std::size_t o = 0; o < out; ++o) {
        for (std::size_t i = 0; i < in; ++i) {
            detail::fc_backward_tuple(o, i, out, next_weights.cols, eta.eta, deltas.data,
                                      inputs.data, gradients.data, delta_weights.data,
                                      delta_biases.data, outputs.data, next_weights.data,
                                      next_deltas.data);
        }
    }
}

const DenseVector& SoftmaxOutputLayer::forward(const DenseVector& input) {
    compute_netin(input);
    const std::size_t out = cols_out();
    float max_logit = netin[0];
    for (std::size_t j = 1; j < out; ++j) {
        max_logit = std::max(max_logit, netin[j]);
    }
    float sum = 0.0f;
    for (std::size_t j = 0; j < out; ++j) {
        outputs[j] = std::exp(netin[j] - max_logit);
        sum += outputs[j];
    }
    for (std::size_t j = 0; j < out; ++j) {
        outputs[j] /= sum;
    }
    return outputs;
}

void SoftmaxOutputLayer::backward(const DenseVector& target, LearningRate eta) {
    if (target.len() != cols_out()) {
        throw ShapeError("softmax backward: target length != cols_out");
    }
    const std::size_t out = cols_out();
    const std::size_t in = cols_input();
    for (std::size_t o = 0; o < out; ++o) {
        for (std::size_t i = 0; i < in; ++i) {
            detail::softmax_backward_tuple(o, i, out, eta.eta, deltas.data, inputs.data,
                                           gradients.data, delta_weights.data,
                                           delta_biases.data, outputs.data, target.data);
        }
    }
}

Kernel make_softmax_backward_kernel(std::size_t cols_input, std::size_t cols_out, float eta) {
    Kernel k;
    k.name = "softmax_backward";
    k.arity = 7;
    k.space = IterationSpace{cols_out, cols_input};
    k.body = [cols_out, eta](std::size_t o, std::size_t i, const KernelArgs& args) {
        detail::softmax_backward_tuple(o, i, cols_out, eta, args[0], args[1], args[2], args[3],
                                       args[4], args[5], args[6]);
    };
    return k;
}

Kernel make_fc_backward_kernel(std::size_t cols_input, std::size_t cols_out,
                               std::size_t next_cols_out, float eta) {
    Kernel k;
    k.name = "fc_backward";
    k.arity = 8;
    k.space = IterationSpace{cols_out, cols_input};
    k.body = [cols_out, next_cols_out, eta](std::size_t o, std::size_t i, const KernelArgs& args) {
        detail::fc_backward_tuple(o, i, cols_out, next_cols_out, eta, args[0], args[1], args[2],
                                  args[3], args[4], args[5], args[6], args[7]);
    };
    return k;
}

} // namespace lane
