#pragma once

#include <cstdint>
#include <vector>

#include "lane/dataset.hpp"
#include "lane/layers.hpp"
#include "lane/task_runtime.hpp"

namespace lane {

// Hidden Tanh layers chained into a softmax output layer. Zero hidden layers
// is allowed (softmax directly on the input features).
class FeedForwardNetwork {
public:
    FeedForwardNetwork(std::size_t input_width, const std::vector<std::size_t>& hidden_sizes,
                       std::size_t classes);

    std::size_t input_width() const { return input_width_; }
    std::size_t class_count() const { return output.cols_out(); }

    // Forward through every layer; returns the output layer's probabilities.
    const DenseVector& forward(const DenseVector& input);

    std::vector<FullyConnectedLayer> hidden;
    SoftmaxOutputLayer output;

private:
    std::size_t input_width_;
};

// Chained layers with weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)]
// drawn from rng in layer order, biases zero.
FeedForwardNetwork build_network(std::size_t input_width,
                                 const std::vector<std::size_t>& hidden_sizes,
                                 std::size_t classes, SeededRng& rng);

// -sum target[o] * ln(max(predicted[o], 1e-12)); finite for all inputs.
float cross_entropy(const DenseVector& predicted, const DenseVector& target);

struct TrainerConfig {
    LearningRate eta{0.01f};
    float max_error = 0.0f;      // stop when an epoch's mean loss falls to or below this
    std::size_t max_epochs = 1;
    std::uint64_t seed = 0;      // drives the per-epoch shuffle
};

struct EpochStats {
    std::size_t epoch = 0;  // 1-based for training epochs
    float mean_loss = 0.0f;
    float accuracy = 0.0f;  // argmax match fraction, ties to the lowest class
};

// One reusable TaskSchedule per layer, bound to a device. The output schedule
// streams the per-sample target through a staging buffer; each hidden schedule
// streams the next layer's weights and deltas. The plan must not outlive the
// network or the device.
class BackwardPlan {
public:
    BackwardPlan(FeedForwardNetwork& net, LearningRate eta, Device& device);

    // Backward from the output layer down to the first hidden layer, then
    // applies the accumulated updates to every layer. Returns per-layer
    // timings, output layer first.
    std::vector<PhaseTiming> run(const DenseVector& target);

    TaskSchedule& output_schedule() { return output_schedule_; }
    TaskSchedule& hidden_schedule(std::size_t l) { return hidden_schedules_[l]; }

private:
    FeedForwardNetwork& net_;
    DenseVector target_staging_;
    TaskSchedule output_schedule_;
    std::vector<TaskSchedule> hidden_schedules_; // index matches net.hidden
};

// Per epoch: seed-deterministic shuffle, then per sample forward, loss
// accumulation, backward via the device-bound schedules, and weight updates.
// Stops at the first epoch whose mean loss is <= cfg.max_error, otherwise
// after cfg.max_epochs.
std::vector<EpochStats> train(FeedForwardNetwork& net, const DataSet& train_set,
                              const TrainerConfig& cfg, Device& device);

// Mean loss and argmax accuracy over the test set; the network's training
// state (deltas, gradients) is clobbered by the forward passes only.
EpochStats evaluate(FeedForwardNetwork& net, const DataSet& test_set);

} // namespace lane
