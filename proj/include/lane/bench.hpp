#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lane/task_runtime.hpp"

namespace lane {

// Measurement protocol: unmeasured warm-up executions, then timed iterations
// reported as arithmetic means. Every iteration processes one sample end to
// end (host forward, both backward schedules, weight updates); the timed
// region of each kernel is its full execute (copy-in + kernel + copy-out).
struct BenchConfig {
    std::filesystem::path dataset_path;
    std::size_t features = 4;
    std::size_t classes = 3;
    std::size_t fc_neurons = 8;
    float eta = 0.01f;
    std::size_t warmup_iters = 10000;
    std::size_t timed_iters = 10;
    std::size_t enlarge_factor = 1;
    Device::Kind device = Device::Kind::SerialHost;
    unsigned workers = 0; // 0 -> machine logical core count
    std::uint64_t seed = 42;

    enum class Format { Csv, Md };
    Format output_format = Format::Csv;
};

struct BenchRow {
    std::string kernel; // "softmax_backward" | "fc_backward"
    std::string device; // "serial" | "parallel"
    double mean_ms = 0.0;
    double copy_in_ms = 0.0;
    double kernel_ms = 0.0;
    double copy_out_ms = 0.0;
    double speedup = 1.0; // serial mean / this device's mean
    std::vector<double> samples_ms; // per-iteration totals behind mean_ms
};

struct BenchReport {
    std::vector<BenchRow> rows;
    // FNV-1a over the configured device's weights and biases after the timed
    // run; two runs with the same seed must produce the same value.
    std::uint64_t final_weights_hash = 0;
};

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed = 0xcbf29ce484222325ULL);

// Loads (and optionally enlarges) the dataset, builds the features ->
// fc_neurons -> classes network, then measures the serial baseline and, when
// cfg.device is parallel, the parallel device as well. A parallel run first
// verifies serial/parallel backward results match bitwise on one sample.
BenchReport run_benchmark(const BenchConfig& cfg);

// Csv: header "kernel,device,mean_ms,copy_in_ms,kernel_ms,copy_out_ms,speedup"
// plus one row per entry, floats with 3 decimals. Md: the same columns as a
// table.
std::string emit_report(const BenchReport& report, BenchConfig::Format format);

} // namespace lane
