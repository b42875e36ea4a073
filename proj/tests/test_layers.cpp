#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lane/layers.hpp"
#include "lane/task_runtime.hpp"

using lane::DenseMatrix;
using lane::DenseVector;
using lane::Device;
using lane::FullyConnectedLayer;
using lane::LearningRate;
using lane::SeededRng;
using lane::SoftmaxOutputLayer;
using lane::TaskSchedule;

namespace {

DenseVector vec(std::initializer_list<float> xs) {
    DenseVector v(xs.size());
    std::size_t i = 0;
    for (float x : xs) {
        v[i++] = x;
    }
    return v;
}

// Cross entropy of a softmax layer's forward output against a one-hot target,
// used as the scalar loss for finite differences.
float softmax_ce(SoftmaxOutputLayer& layer, const DenseVector& input, const DenseVector& target) {
    const DenseVector& p = layer.forward(input);
    float loss = 0.0f;
    for (std::size_t o = 0; o < p.len(); ++o) {
        if (target[o] != 0.0f) {
            loss -= std::log(std::max(p[o], 1e-12f));
        }
    }
    return loss;
}

} // namespace

TEST_CASE("fc forward: zero weights give tanh(0)") {
    FullyConnectedLayer layer(3, 4);
    const DenseVector& out = layer.forward(vec({0.3f, -0.7f, 1.0f}));
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(out[j] == 0.0f);
    }
}

TEST_CASE("fc forward: scalar case matches std::tanh") {
    FullyConnectedLayer layer(1, 1);
    layer.weights(0, 0) = 1.0f;
    const DenseVector& out = layer.forward(vec({0.5f}));
    CHECK(out[0] == std::tanh(0.5f));
    CHECK(out[0] == doctest::Approx(0.462117f).epsilon(1e-5));
}

TEST_CASE("fc forward: one-hot columns select inputs") {
    FullyConnectedLayer layer(3, 3);
    layer.weights(0, 1) = 1.0f; // output 1 reads input 0
    layer.weights(1, 2) = 1.0f; // output 2 reads input 1
    layer.weights(2, 0) = 1.0f; // output 0 reads input 2
    const DenseVector& out = layer.forward(vec({0.2f, -0.4f, 0.9f}));
    CHECK(out[0] == std::tanh(0.9f));
    CHECK(out[1] == std::tanh(0.2f));
    CHECK(out[2] == std::tanh(-0.4f));

    CHECK_THROWS_AS(layer.forward(vec({1.0f})), lane::ShapeError);
}

TEST_CASE("softmax forward: symmetry, closed form, shift invariance") {
    SoftmaxOutputLayer layer(2, 4);
    // Zero weights: all logits equal the (zero) biases.
    const DenseVector& out = layer.forward(vec({1.0f, -1.0f}));
    for (std::size_t o = 0; o < 4; ++o) {
        CHECK(out[o] == doctest::Approx(0.25f).epsilon(1e-6));
    }

    SoftmaxOutputLayer two(1, 2);
    two.weights(0, 0) = 0.0f;
    two.weights(0, 1) = std::log(2.0f);
    const DenseVector& p = two.forward(vec({1.0f}));
    CHECK(p[0] == doctest::Approx(1.0f / 3.0f).epsilon(1e-6));
    CHECK(p[1] == doctest::Approx(2.0f / 3.0f).epsilon(1e-6));

    // Shifting every logit by +1000 must not change the outputs. Logits are
    // multiples of 0.5 so the shifted values are exact in float; without the
    // max-subtraction stabilizer exp(1000) would overflow.
    SoftmaxOutputLayer base(1, 2);
    base.weights(0, 0) = 0.0f;
    base.weights(0, 1) = 0.5f;
    const DenseVector r = base.forward(vec({1.0f}));
    SoftmaxOutputLayer shifted(1, 2);
    shifted.weights(0, 0) = 0.0f;
    shifted.weights(0, 1) = 0.5f;
    shifted.biases[0] = 1000.0f;
    shifted.biases[1] = 1000.0f;
    const DenseVector& q = shifted.forward(vec({1.0f}));
    CHECK(std::fabs(q[0] - r[0]) <= 1e-6f);
    CHECK(std::fabs(q[1] - r[1]) <= 1e-6f);
}

TEST_CASE("softmax outputs are a probability vector on random layers") {
    SeededRng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t in = 1 + rng.below(6);
        const std::size_t out = 2 + rng.below(5);
        SoftmaxOutputLayer layer(in, out);
        lane::random_fill(layer.weights, rng, -2.0f, 2.0f);
        DenseVector x(in);
        lane::random_fill(x, rng, -1.0f, 1.0f);
        const DenseVector& p = layer.forward(x);
        float sum = 0.0f;
        for (std::size_t o = 0; o < out; ++o) {
            CHECK(p[o] >= 0.0f);
            CHECK(p[o] <= 1.0f);
            sum += p[o];
        }
        CHECK(std::fabs(sum - 1.0f) <= 1e-6f);
    }
}

TEST_CASE("softmax backward hand example") {
    // outputs (0.7, 0.3), target (1, 0), inputs (2.0), eta 0.1
    SoftmaxOutputLayer layer(1, 2);
    layer.outputs = vec({0.7f, 0.3f});
    layer.inputs = vec({2.0f});
    layer.backward(vec({1.0f, 0.0f}), LearningRate(0.1f));

    CHECK(layer.deltas[0] == doctest::Approx(-0.3f).epsilon(1e-6));
    CHECK(layer.deltas[1] == doctest::Approx(0.3f).epsilon(1e-6));
    CHECK(layer.gradients(0, 0) == doctest::Approx(-0.6f).epsilon(1e-6));
    CHECK(layer.gradients(0, 1) == doctest::Approx(0.6f).epsilon(1e-6));
    CHECK(layer.delta_weights(0, 0) == doctest::Approx(0.06f).epsilon(1e-6));
    CHECK(layer.delta_weights(0, 1) == doctest::Approx(-0.06f).epsilon(1e-6));
    CHECK(layer.delta_biases[0] == doctest::Approx(0.03f).epsilon(1e-6));
    CHECK(layer.delta_biases[1] == doctest::Approx(-0.03f).epsilon(1e-6));

    CHECK_THROWS_AS(layer.backward(vec({1.0f}), LearningRate(0.1f)), lane::ShapeError);
}

TEST_CASE("softmax backward: perfect prediction gives zero signal") {
    SoftmaxOutputLayer layer(2, 3);
    layer.outputs = vec({0.0f, 1.0f, 0.0f});
    layer.inputs = vec({0.4f, -0.2f});
    layer.backward(vec({0.0f, 1.0f, 0.0f}), LearningRate(0.5f));
    for (float v : layer.deltas.data) {
        CHECK(v == 0.0f);
    }
    for (float v : layer.gradients.data) {
        CHECK(v == 0.0f);
    }
    for (float v : layer.delta_weights.data) {
        CHECK(v == 0.0f);
    }
    for (float v : layer.delta_biases.data) {
        CHECK(v == 0.0f);
    }
}

TEST_CASE("softmax deltas match finite differences of the loss in the logits") {
    // Independent oracle: cross entropy of the softmax as a function of the
    // logit vector, evaluated in double so the h=1e-3 central difference is
    // noise-free at the 1e-4 tolerance.
    auto ce_of_logits = [](const std::vector<double>& z, const DenseVector& target) {
        double mx = z[0];
        for (double v : z) {
            mx = std::max(mx, v);
        }
        double denom = 0.0;
        for (double v : z) {
            denom += std::exp(v - mx);
        }
        double loss = 0.0;
        for (std::size_t o = 0; o < z.size(); ++o) {
            if (target[o] != 0.0f) {
                loss -= std::log(std::exp(z[o] - mx) / denom);
            }
        }
        return loss;
    };

    SeededRng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        SoftmaxOutputLayer layer(3, 5);
        lane::random_fill(layer.weights, rng, -1.0f, 1.0f);
        DenseVector x(3);
        lane::random_fill(x, rng, -1.0f, 1.0f);
        DenseVector target(5, 0.0f);
        target[rng.below(5)] = 1.0f;

        layer.forward(x);
        layer.backward(target, LearningRate(0.01f));

        std::vector<double> logits(layer.netin.data.begin(), layer.netin.data.end());
        const double h = 1e-3;
        for (std::size_t o = 0; o < 5; ++o) {
            std::vector<double> up = logits, down = logits;
            up[o] += h;
            down[o] -= h;
            const double fd = (ce_of_logits(up, target) - ce_of_logits(down, target)) / (2.0 * h);
            CHECK(std::fabs(static_cast<double>(layer.deltas[o]) - fd) <= 1e-4);
        }
    }
}

TEST_CASE("fc backward hand example") {
    // One hidden neuron with output 0.5; next layer: one neuron, delta 0.2,
    // weight 3.0 -> delta = (1 - 0.25) * 0.6 = 0.45.
    FullyConnectedLayer layer(1, 1);
    layer.outputs = vec({0.5f});
    layer.inputs = vec({1.0f});
    DenseMatrix next_weights(1, 1);
    next_weights(0, 0) = 3.0f;
    layer.backward(next_weights, vec({0.2f}), LearningRate(0.1f));
    CHECK(layer.deltas[0] == doctest::Approx(0.45f).epsilon(1e-6));

    DenseMatrix wrong(2, 1, 0.0f);
    CHECK_THROWS_AS(layer.backward(wrong, vec({0.2f}), LearningRate(0.1f)), lane::ShapeError);
}

TEST_CASE("fc backward: zero next deltas give zero signal") {
    FullyConnectedLayer layer(2, 3);
    SeededRng rng(5);
    lane::random_fill(layer.weights, rng, -1.0f, 1.0f);
    layer.forward(vec({0.5f, -0.5f}));
    DenseMatrix next_weights(3, 2);
    lane::random_fill(next_weights, rng, -1.0f, 1.0f);
    layer.backward(next_weights, vec({0.0f, 0.0f}), LearningRate(0.1f));
    for (float v : layer.deltas.data) {
        CHECK(v == 0.0f);
    }
    for (float v : layer.gradients.data) {
        CHECK(v == 0.0f);
    }
}

TEST_CASE("apply_updates adds the accumulated deltas") {
    FullyConnectedLayer layer(1, 1);
    layer.weights(0, 0) = 1.0f;
    layer.delta_weights(0, 0) = -0.06f;
    layer.delta_biases[0] = 0.5f;
    layer.apply_updates();
    CHECK(layer.weights(0, 0) == 0.94f);
    CHECK(layer.biases[0] == 0.5f);

    // Additive: a second apply without a new backward shifts again.
    layer.apply_updates();
    CHECK(layer.weights(0, 0) == doctest::Approx(0.88f));

    FullyConnectedLayer untouched(2, 2);
    untouched.weights(0, 0) = 0.25f;
    DenseMatrix before = untouched.weights;
    untouched.apply_updates(); // delta_weights all zero
    CHECK(untouched.weights.data == before.data);
}

TEST_CASE("backward kernels have disjoint write sets") {
    lane::Kernel sm = lane::make_softmax_backward_kernel(3, 4, 0.1f);
    // args: deltas(4), inputs(3), gradients(12), delta_weights(12),
    // delta_biases(4), outputs(4), target(4)
    CHECK(lane::kernel_has_disjoint_writes(sm, {4, 3, 12, 12, 4, 4, 4}, 64));

    lane::Kernel fc = lane::make_fc_backward_kernel(3, 4, 2, 0.1f);
    CHECK(lane::kernel_has_disjoint_writes(fc, {4, 3, 12, 12, 4, 4, 8, 2}, 64));
}

TEST_CASE("schedule path equals host path bitwise on both devices") {
    SeededRng rng(41);
    for (auto kind : {Device::Kind::SerialHost, Device::Kind::ParallelHost}) {
        SoftmaxOutputLayer host_layer(30, 20);
        lane::random_fill(host_layer.weights, rng, -1.0f, 1.0f);
        DenseVector x(30);
        lane::random_fill(x, rng, -1.0f, 1.0f);
        DenseVector target(20, 0.0f);
        target[rng.below(20)] = 1.0f;

        SoftmaxOutputLayer dev_layer = host_layer;
        host_layer.forward(x);
        dev_layer.forward(x);

        host_layer.backward(target, LearningRate(0.05f));

        Device device(kind, 4);
        TaskSchedule ts("softmax_backward_schedule");
        ts.stream_in({&dev_layer.outputs.data, &dev_layer.inputs.data, &target.data})
            .task(lane::make_softmax_backward_kernel(30, 20, 0.05f),
                  {&dev_layer.deltas.data, &dev_layer.inputs.data, &dev_layer.gradients.data,
                   &dev_layer.delta_weights.data, &dev_layer.delta_biases.data,
                   &dev_layer.outputs.data, &target.data})
            .stream_out({&dev_layer.deltas.data, &dev_layer.gradients.data,
                         &dev_layer.delta_weights.data, &dev_layer.delta_biases.data})
            .migrate(device);
        ts.execute();

        CHECK(dev_layer.deltas.data == host_layer.deltas.data);
        CHECK(dev_layer.gradients.data == host_layer.gradients.data);
        CHECK(dev_layer.delta_weights.data == host_layer.delta_weights.data);
        CHECK(dev_layer.delta_biases.data == host_layer.delta_biases.data);
    }
}

TEST_CASE("one small SGD step reduces the sample's cross entropy") {
    SeededRng rng(61);
    for (int trial = 0; trial < 10; ++trial) {
        SoftmaxOutputLayer layer(4, 3);
        lane::random_fill(layer.weights, rng, -1.0f, 1.0f);
        DenseVector x(4);
        lane::random_fill(x, rng, -1.0f, 1.0f);
        DenseVector target(3, 0.0f);
        target[rng.below(3)] = 1.0f;

        const float before = softmax_ce(layer, x, target);
        layer.backward(target, LearningRate(1e-3f));
        layer.apply_updates();
        const float after = softmax_ce(layer, x, target);
        CHECK(after < before);
    }
}

TEST_CASE("learning rate must be positive") {
    CHECK_THROWS_AS(LearningRate(0.0f), lane::ConfigError);
    CHECK_THROWS_AS(LearningRate(-0.1f), lane::ConfigError);
}
