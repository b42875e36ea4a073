#include "lane/network.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "lane/error.hpp"

namespace lane {

namespace {

std::size_t argmax(const DenseVector& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.len(); ++i) {
        if (v[i] > v[best]) {
            best = i;
        }
    }
    return best;
}

} // namespace

FeedForwardNetwork::FeedForwardNetwork(std::size_t input_width,
                                       const std::vector<std::size_t>& hidden_sizes,
                                       std::size_t classes)
    : output(hidden_sizes.empty() ? input_width : hidden_sizes.back(), classes),
      input_width_(input_width) {
    if (input_width == 0) {
        throw ConfigError("network: input_width must be >= 1");
    }
    if (classes < 2) {
        throw ConfigError("network: need at least 2 classes");
    }
    std::size_t in = input_width;
    hidden.reserve(hidden_sizes.size());
    for (std::size_t size : hidden_sizes) {
        if (size == 0) {
            throw ConfigError("network: hidden layer size must be >= 1");
        }
        hidden.emplace_back(in, size);
        in = size;
    }
}

const DenseVector& FeedForwardNetwork::forward(const DenseVector& input) {
    const DenseVector* x = &input;
    for (auto& layer : hidden) {
        x = &layer.forward(*x);
    }
    return output.forward(*x);
}

FeedForwardNetwork build_network(std::size_t input_width,
                                 const std::vector<std::size_t>& hidden_sizes,
                                 std::size_t classes, SeededRng& rng) {
    FeedForwardNetwork net(input_width, hidden_sizes, classes);
    for (auto& layer : net.hidden) {
        const float bound = 1.0f / std::sqrt(static_cast<float>(layer.cols_input()));
        random_fill(layer.weights, rng, -bound, bound);
    }
    const float bound = 1.0f / std::sqrt(static_cast<float>(net.output.cols_input()));
    random_fill(net.output.weights, rng, -bound, bound);
    return net;
}

float cross_entropy(const DenseVector& predicted, const DenseVector& target) {
    if (predicted.len() != target.len()) {
        throw ShapeError("cross_entropy: length mismatch");
    }
    float loss = 0.0f;
    for (std::size_t o = 0; o < predicted.len(); ++o) {
        if (target[o] != 0.0f) {
            loss -= target[o] * std::log(std::max(predicted[o], 1e-12f));
        }
    }
    return loss;
}

BackwardPlan::BackwardPlan(FeedForwardNetwork& net, LearningRate eta, Device& device)
    : net_(net),
      target_staging_(net.class_count()),
      output_schedule_("softmax_output_backward") {
    // The per-sample arrays stream in both directions; the kernels overwrite
    // them fully but the schedule keeps host and device copies in step every
    // execute, which is where the transfer cost of this workload lives.
    SoftmaxOutputLayer& out = net_.output;
    output_schedule_
        .stream_in({&out.deltas.data, &out.gradients.data, &out.delta_weights.data,
                    &out.delta_biases.data, &out.outputs.data, &out.inputs.data,
                    &target_staging_.data})
        .task(make_softmax_backward_kernel(out.cols_input(), out.cols_out(), eta.eta),
              {&out.deltas.data, &out.inputs.data, &out.gradients.data, &out.delta_weights.data,
               &out.delta_biases.data, &out.outputs.data, &target_staging_.data})
        .stream_out({&out.deltas.data, &out.gradients.data, &out.delta_weights.data,
                     &out.delta_biases.data})
        .migrate(device);

    hidden_schedules_.reserve(net_.hidden.size());
    for (std::size_t l = 0; l < net_.hidden.size(); ++l) {
        FullyConnectedLayer& layer = net_.hidden[l];
        LayerState& next = (l + 1 < net_.hidden.size())
                               ? static_cast<LayerState&>(net_.hidden[l + 1])
                               : static_cast<LayerState&>(net_.output);
        TaskSchedule ts("fully_connected_backward_" + std::to_string(l));
        ts.stream_in({&layer.deltas.data, &layer.gradients.data, &layer.delta_weights.data,
                      &layer.delta_biases.data, &layer.outputs.data, &layer.inputs.data,
                      &next.weights.data, &next.deltas.data})
            .task(make_fc_backward_kernel(layer.cols_input(), layer.cols_out(), next.cols_out(),
                                          eta.eta),
                  {&layer.deltas.data, &layer.inputs.data, &layer.gradients.data,
                   &layer.delta_weights.data, &layer.delta_biases.data, &layer.outputs.data,
                   &next.weights.data, &next.deltas.data})
            .stream_out({&layer.deltas.data, &layer.gradients.data, &layer.delta_weights.data,
                         &layer.delta_biases.data})
            .migrate(device);
        hidden_schedules_.push_back(std::move(ts));
    }
}

std::vector<PhaseTiming> BackwardPlan::run(const DenseVector& target) {
    if (target.len() != target_staging_.len()) {
        throw ShapeError("backward: target length != class count");
    }
    target_staging_ = target;
    std::vector<PhaseTiming> timings;
    timings.reserve(1 + hidden_schedules_.size());
    timings.push_back(output_schedule_.execute());
    for (std::size_t l = hidden_schedules_.size(); l-- > 0;) {
        timings.push_back(hidden_schedules_[l].execute());
    }
    for (auto& layer : net_.hidden) {
        layer.apply_updates();
    }
    net_.output.apply_updates();
    return timings;
}

std::vector<EpochStats> train(FeedForwardNetwork& net, const DataSet& train_set,
                              const TrainerConfig& cfg, Device& device) {
    if (train_set.items.empty()) {
        throw TrainingError("train: empty training set");
    }
    if (train_set.feature_width != net.input_width()) {
        throw ShapeError("train: dataset feature width != network input width");
    }
    if (train_set.class_count != net.class_count()) {
        throw ShapeError("train: dataset class count != network class count");
    }

    BackwardPlan plan(net, cfg.eta, device);
    SeededRng shuffle_rng(cfg.seed);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<EpochStats> stats;
    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[shuffle_rng.below(i)]);
        }
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t idx : order) {
            const Sample& s = train_set.items[idx];
            const DenseVector& predicted = net.forward(s.features);
            loss_sum += static_cast<double>(cross_entropy(predicted, s.label));
            correct += argmax(predicted) == argmax(s.label) ? 1 : 0;
            plan.run(s.label);
        }
        EpochStats es;
        es.epoch = epoch;
        es.mean_loss = static_cast<float>(loss_sum / static_cast<double>(train_set.size()));
        es.accuracy =
            static_cast<float>(correct) / static_cast<float>(train_set.size());
        stats.push_back(es);
        if (es.mean_loss <= cfg.max_error) {
            break;
        }
    }
    return stats;
}

EpochStats evaluate(FeedForwardNetwork& net, const DataSet& test_set) {
    if (test_set.items.empty()) {
        throw TrainingError("evaluate: empty test set");
    }
    if (test_set.feature_width != net.input_width() ||
        test_set.class_count != net.class_count()) {
        throw ShapeError("evaluate: dataset shape does not match network");
    }
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (const Sample& s : test_set.items) {
        const DenseVector& predicted = net.forward(s.features);
        loss_sum += static_cast<double>(cross_entropy(predicted, s.label));
        correct += argmax(predicted) == argmax(s.label) ? 1 : 0;
    }
    EpochStats es;
    es.epoch = 0;
    es.mean_loss = static_cast<float>(loss_sum / static_cast<double>(test_set.size()));
    es.accuracy = static_cast<float>(correct) / static_cast<float>(test_set.size());
    return es;
}

} // namespace lane
