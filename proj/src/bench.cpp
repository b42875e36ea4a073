#include "lane/bench.hpp"

#include <cstdio>
#include <cstring>
#include <sstream>

#include "lane/dataset.hpp"
#include "lane/network.hpp"

namespace lane {

namespace {

struct KernelSamples {
    std::vector<double> copy_in, kernel, copy_out, total;
};

struct MeasureResult {
    KernelSamples softmax;
    KernelSamples fc;
    std::uint64_t weights_hash = 0;
};

double mean_of(const std::vector<double>& xs) {
    double sum = 0.0;
    for (double x : xs) {
        sum += x;
    }
    return sum / static_cast<double>(xs.size());
}

std::uint64_t hash_network(const FeedForwardNetwork& net) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& layer : net.hidden) {
        h = fnv1a64(layer.weights.data.data(), layer.weights.data.size() * sizeof(float), h);
        h = fnv1a64(layer.biases.data.data(), layer.biases.data.size() * sizeof(float), h);
    }
    h = fnv1a64(net.output.weights.data.data(), net.output.weights.data.size() * sizeof(float), h);
    h = fnv1a64(net.output.biases.data.data(), net.output.biases.data.size() * sizeof(float), h);
    return h;
}

FeedForwardNetwork fresh_network(const BenchConfig& cfg) {
    SeededRng rng(cfg.seed);
    return build_network(cfg.features, {cfg.fc_neurons}, cfg.classes, rng);
}

void record(KernelSamples& ks, const PhaseTiming& t) {
    ks.copy_in.push_back(t.copy_in_ms);
    ks.kernel.push_back(t.kernel_ms);
    ks.copy_out.push_back(t.copy_out_ms);
    ks.total.push_back(t.total_ms());
}

MeasureResult measure(const BenchConfig& cfg, const DataSet& ds, Device::Kind kind) {
    FeedForwardNetwork net = fresh_network(cfg);
    Device device(kind, cfg.workers);
    BackwardPlan plan(net, LearningRate(cfg.eta), device);

    MeasureResult result;
    const std::size_t total_iters = cfg.warmup_iters + cfg.timed_iters;
    for (std::size_t it = 0; it < total_iters; ++it) {
        const Sample& s = ds.items[it % ds.items.size()];
        net.forward(s.features);
        std::vector<PhaseTiming> timings = plan.run(s.label);
        if (it >= cfg.warmup_iters) {
            record(result.softmax, timings[0]);
            record(result.fc, timings[1]);
        }
    }
    result.weights_hash = hash_network(net);
    return result;
}

bool buffers_equal(const std::vector<float>& a, const std::vector<float>& b) {
    if (a.size() != b.size()) {
        return false;
    }
    return std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

bool layers_equal(const LayerState& a, const LayerState& b) {
    return buffers_equal(a.deltas.data, b.deltas.data) &&
           buffers_equal(a.gradients.data, b.gradients.data) &&
           buffers_equal(a.delta_weights.data, b.delta_weights.data) &&
           buffers_equal(a.delta_biases.data, b.delta_biases.data) &&
           buffers_equal(a.weights.data, b.weights.data) &&
           buffers_equal(a.biases.data, b.biases.data);
}

// One backward step per device on identical fresh networks; results must be
// bitwise identical before any timing happens.
void backend_self_test(const BenchConfig& cfg, const DataSet& ds) {
    FeedForwardNetwork net_serial = fresh_network(cfg);
    FeedForwardNetwork net_parallel = fresh_network(cfg);
    Device serial(Device::Kind::SerialHost);
    Device parallel(Device::Kind::ParallelHost, cfg.workers);
    BackwardPlan plan_serial(net_serial, LearningRate(cfg.eta), serial);
    BackwardPlan plan_parallel(net_parallel, LearningRate(cfg.eta), parallel);

    const Sample& s = ds.items.front();
    net_serial.forward(s.features);
    plan_serial.run(s.label);
    net_parallel.forward(s.features);
    plan_parallel.run(s.label);

    bool ok = layers_equal(net_serial.output, net_parallel.output);
    for (std::size_t l = 0; ok && l < net_serial.hidden.size(); ++l) {
        ok = layers_equal(net_serial.hidden[l], net_parallel.hidden[l]);
    }
    if (!ok) {
        throw Error("benchmark self-test: serial and parallel backward results differ");
    }
}

BenchRow make_row(const std::string& kernel, const std::string& device,
                  const KernelSamples& ks, double serial_mean) {
    BenchRow row;
    row.kernel = kernel;
    row.device = device;
    row.mean_ms = mean_of(ks.total);
    row.copy_in_ms = mean_of(ks.copy_in);
    row.kernel_ms = mean_of(ks.kernel);
    row.copy_out_ms = mean_of(ks.copy_out);
    row.speedup = serial_mean > 0.0 ? serial_mean / row.mean_ms : 1.0;
    row.samples_ms = ks.total;
    return row;
}

} // namespace

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

BenchReport run_benchmark(const BenchConfig& cfg) {
    if (cfg.timed_iters == 0) {
        throw ConfigError("benchmark: timed_iters must be >= 1");
    }
    if (cfg.features == 0 || cfg.fc_neurons == 0 || cfg.classes < 2) {
        throw ConfigError("benchmark: invalid network topology");
    }
    if (!(cfg.eta > 0.0f)) {
        throw ConfigError("benchmark: eta must be positive");
    }

    DataSet ds = load_dataset(cfg.dataset_path, cfg.features, cfg.classes);
    if (cfg.enlarge_factor > 1) {
        SeededRng data_rng = SeededRng(cfg.seed).split();
        ds = enlarge(ds, cfg.enlarge_factor, 0.01f, data_rng);
    }
    if (ds.items.empty()) {
        throw ConfigError("benchmark: dataset has no samples");
    }

    const bool want_parallel = cfg.device == Device::Kind::ParallelHost;
    if (want_parallel) {
        backend_self_test(cfg, ds);
    }

    MeasureResult serial = measure(cfg, ds, Device::Kind::SerialHost);
    const double sm_serial_mean = mean_of(serial.softmax.total);
    const double fc_serial_mean = mean_of(serial.fc.total);

    BenchReport report;
    report.rows.push_back(make_row("softmax_backward", "serial", serial.softmax, sm_serial_mean));
    if (want_parallel) {
        MeasureResult parallel = measure(cfg, ds, Device::Kind::ParallelHost);
        report.rows.push_back(
            make_row("softmax_backward", "parallel", parallel.softmax, sm_serial_mean));
        report.rows.push_back(make_row("fc_backward", "serial", serial.fc, fc_serial_mean));
        report.rows.push_back(make_row("fc_backward", "parallel", parallel.fc, fc_serial_mean));
        report.final_weights_hash = parallel.weights_hash;
    } else {
        report.rows.push_back(make_row("fc_backward", "serial", serial.fc, fc_serial_mean));
        report.final_weights_hash = serial.weights_hash;
    }
    return report;
}

std::string emit_report(const BenchReport& report, BenchConfig::Format format) {
    std::ostringstream out;
    char buf[160];
    if (format == BenchConfig::Format::Csv) {
        out << "kernel,device,mean_ms,copy_in_ms,kernel_ms,copy_out_ms,speedup\n";
        for (const BenchRow& r : report.rows) {
            std::snprintf(buf, sizeof(buf), "%s,%s,%.3f,%.3f,%.3f,%.3f,%.3f\n", r.kernel.c_str(),
                          r.device.c_str(), r.mean_ms, r.copy_in_ms, r.kernel_ms, r.copy_out_ms,
                          r.speedup);
            out << buf;
        }
        return out.str();
    }
    out << "| kernel | device | mean_ms | copy_in_ms | kernel_ms | copy_out_ms | speedup |\n";
    out << "|---|---|---|---|---|---|---|\n";
    for (const BenchRow& r : report.rows) {
        std::snprintf(buf, sizeof(buf), "| %s | %s | %.3f | %.3f | %.3f | %.3f | %.3f |\n",
                      r.kernel.c_str(), r.device.c_str(), r.mean_ms, r.copy_in_ms, r.kernel_ms,
                      r.copy_out_ms, r.speedup);
        out << buf;
    }
    return out.str();
}

} // namespace lane
