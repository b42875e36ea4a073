#include "lane/task_runtime.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <string>
#include <unordered_set>

#include "lane/tensor.hpp"

namespace lane {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Contiguous near-equal chunks of [0, extent): the first (extent % chunks)
// chunks get one extra row.
std::pair<std::size_t, std::size_t> chunk_range(std::size_t extent,
                                                std::size_t chunks,
                                                std::size_t c) {
    const std::size_t base = extent / chunks;
    const std::size_t rem = extent % chunks;
    const std::size_t lo = c * base + std::min(c, rem);
    const std::size_t hi = lo + base + (c < rem ? 1 : 0);
    return {lo, hi};
}

} // namespace

namespace detail {

WorkerPool::WorkerPool(unsigned workers) {
    threads_.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        threads_.emplace_back([this, w] { worker_loop(w); });
    }
}

WorkerPool::~WorkerPool() {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        stop_ = true;
    }
    start_cv_.notify_all();
    for (auto& t : threads_) {
        t.join();
    }
}

void WorkerPool::run(std::size_t chunk_count, const std::function<void(std::size_t)>& fn) {
    if (chunk_count == 0) {
        return;
    }
    std::unique_lock<std::mutex> lock(mutex_);
    job_ = &fn;
    job_chunks_ = chunk_count;
    remaining_ = chunk_count;
    ++generation_;
    start_cv_.notify_all();
    done_cv_.wait(lock, [this] { return remaining_ == 0; });
    job_ = nullptr;
}

void WorkerPool::worker_loop(unsigned index) {
    std::uint64_t seen = 0;
    for (;;) {
        const std::function<void(std::size_t)>* job = nullptr;
        {
            std::unique_lock<std::mutex> lock(mutex_);
            start_cv_.wait(lock, [&] { return stop_ || generation_ != seen; });
            if (stop_) {
                return;
            }
            seen = generation_;
            if (index >= job_chunks_) {
                continue;
            }
            job = job_;
        }
        (*job)(index);
        {
            std::lock_guard<std::mutex> lock(mutex_);
            if (--remaining_ == 0) {
                done_cv_.notify_all();
            }
        }
    }
}

} // namespace detail

Device::Device(Kind kind, unsigned workers) : kind_(kind) {
    if (kind_ == Kind::SerialHost) {
        workers_ = 1;
        return;
    }
    if (workers == 0) {
        workers = std::max(1u, std::thread::hardware_concurrency());
    }
    workers_ = workers;
    pool_ = std::make_unique<detail::WorkerPool>(workers_);
}

Device& default_serial_device() {
    static Device dev(Device::Kind::SerialHost);
    return dev;
}

Device::Kind device_kind_from_env(Device::Kind fallback) {
    const char* v = std::getenv("LANE_DEVICE");
    if (v == nullptr || *v == '\0') {
        return fallback;
    }
    const std::string s(v);
    if (s == "serial") {
        return Device::Kind::SerialHost;
    }
    if (s == "parallel") {
        return Device::Kind::ParallelHost;
    }
    throw ConfigError("LANE_DEVICE must be 'serial' or 'parallel', got '" + s + "'");
}

unsigned workers_from_env(unsigned fallback) {
    const char* v = std::getenv("LANE_WORKERS");
    if (v == nullptr || *v == '\0') {
        return fallback;
    }
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (end == v || *end != '\0' || n <= 0) {
        throw ConfigError("LANE_WORKERS must be a positive integer, got '" + std::string(v) + "'");
    }
    return static_cast<unsigned>(n);
}

TaskSchedule& TaskSchedule::stream_in(std::initializer_list<HostBuffer*> buffers) {
    return stream_in(std::vector<HostBuffer*>(buffers));
}

TaskSchedule& TaskSchedule::stream_in(const std::vector<HostBuffer*>& buffers) {
    for (HostBuffer* b : buffers) {
        if (std::find(stream_in_.begin(), stream_in_.end(), b) == stream_in_.end()) {
            stream_in_.push_back(b);
        }
    }
    return *this;
}

TaskSchedule& TaskSchedule::stream_out(std::initializer_list<HostBuffer*> buffers) {
    return stream_out(std::vector<HostBuffer*>(buffers));
}

TaskSchedule& TaskSchedule::stream_out(const std::vector<HostBuffer*>& buffers) {
    for (HostBuffer* b : buffers) {
        if (std::find(stream_out_.begin(), stream_out_.end(), b) == stream_out_.end()) {
            stream_out_.push_back(b);
        }
    }
    return *this;
}

TaskSchedule& TaskSchedule::task(Kernel k, std::vector<HostBuffer*> args) {
    if (args.size() != k.arity) {
        throw ScheduleError("task '" + k.name + "': expected " + std::to_string(k.arity) +
                            " arguments, got " + std::to_string(args.size()));
    }
    for (HostBuffer* b : args) {
        if (b == nullptr) {
            throw ScheduleError("task '" + k.name + "': null argument buffer");
        }
    }
    tasks_.push_back(BoundTask{std::move(k), std::move(args), false});
    return *this;
}

TaskSchedule& TaskSchedule::migrate(Device& d) {
    if (device_ == &d) {
        return *this;
    }
    for (auto& t : tasks_) {
        for (HostBuffer* b : t.args) {
            d.arena_.erase(b);
        }
    }
    device_ = &d;
    return *this;
}

void TaskSchedule::validate() const {
    auto is_argument = [this](const HostBuffer* b) {
        for (const auto& t : tasks_) {
            if (std::find(t.args.begin(), t.args.end(), b) != t.args.end()) {
                return true;
            }
        }
        return false;
    };
    for (const HostBuffer* b : stream_in_) {
        if (!is_argument(b)) {
            throw ScheduleError("schedule '" + name_ + "': stream_in buffer is not a task argument");
        }
    }
    for (const HostBuffer* b : stream_out_) {
        if (!is_argument(b)) {
            throw ScheduleError("schedule '" + name_ + "': stream_out buffer is not a task argument");
        }
    }
}

void TaskSchedule::run_task(Device& dev, BoundTask& t, const KernelArgs& args) {
    const IterationSpace& space = t.kernel.space;
    const std::size_t extent = space.dim0 * space.dim1;
    const std::size_t chunks = std::min<std::size_t>(dev.worker_count(), space.dim0);

    if (dev.kind_ == Device::Kind::ParallelHost && dev.pool_ && chunks >= 2 &&
        extent >= Device::kInlineThreshold) {
        dev.pool_->run(chunks, [&](std::size_t c) {
            auto [lo, hi] = chunk_range(space.dim0, chunks, c);
            for (std::size_t i = lo; i < hi; ++i) {
                for (std::size_t j = 0; j < space.dim1; ++j) {
                    t.kernel.body(i, j, args);
                }
            }
        });
        return;
    }
    for (std::size_t i = 0; i < space.dim0; ++i) {
        for (std::size_t j = 0; j < space.dim1; ++j) {
            t.kernel.body(i, j, args);
        }
    }
}

PhaseTiming TaskSchedule::execute() {
    validate();
    Device& dev = device_ != nullptr ? *device_ : default_serial_device();
    if (device_ == nullptr) {
        device_ = &dev;
    }
    std::lock_guard<std::mutex> device_lock(dev.exec_mutex_);

#ifndef NDEBUG
    for (auto& t : tasks_) {
        if (t.write_set_checked) {
            continue;
        }
        std::size_t total = 0;
        std::vector<std::size_t> sizes;
        sizes.reserve(t.args.size());
        for (const HostBuffer* b : t.args) {
            sizes.push_back(b->size());
            total += b->size();
        }
        if (total <= (1u << 16) && !kernel_has_disjoint_writes(t.kernel, sizes)) {
            throw ScheduleError("task '" + t.kernel.name + "': overlapping writes detected");
        }
        t.write_set_checked = true;
    }
#endif

    PhaseTiming timing;
    timing.task_kernel_ms.reserve(tasks_.size());

    // Copy-in: streamed buffers always, other arguments only when absent, then
    // each task's arguments are resolved to device-side bindings.
    auto t0 = Clock::now();
    for (HostBuffer* b : stream_in_) {
        dev.arena_[b] = *b;
    }
    std::vector<KernelArgs> bound_args(tasks_.size());
    for (std::size_t n = 0; n < tasks_.size(); ++n) {
        KernelArgs& args = bound_args[n];
        args.reserve(tasks_[n].args.size());
        for (HostBuffer* b : tasks_[n].args) {
            auto it = dev.arena_.find(b);
            if (it == dev.arena_.end()) {
                it = dev.arena_.emplace(b, *b).first;
            }
            args.emplace_back(it->second);
        }
    }
    timing.copy_in_ms = ms_since(t0);

    for (std::size_t n = 0; n < tasks_.size(); ++n) {
        auto tk = Clock::now();
        run_task(dev, tasks_[n], bound_args[n]);
        timing.task_kernel_ms.push_back(ms_since(tk));
        timing.kernel_ms += timing.task_kernel_ms.back();
    }

    auto t2 = Clock::now();
    for (HostBuffer* b : stream_out_) {
        *b = dev.arena_.at(b);
    }
    timing.copy_out_ms = ms_since(t2);
    return timing;
}

float parallel_reduce(const ReduceKernel& k, std::size_t extent, Device& device) {
    if (extent == 0) {
        return static_cast<float>(k.identity);
    }
    std::lock_guard<std::mutex> device_lock(device.exec_mutex_);
    const std::size_t chunks = std::min<std::size_t>(device.worker_count(), extent);
    if (device.kind() != Device::Kind::ParallelHost || !device.pool_ || chunks < 2 ||
        extent < Device::kInlineThreshold) {
        double acc = k.identity;
        for (std::size_t i = 0; i < extent; ++i) {
            acc = k.combine(acc, static_cast<double>(k.element(i)));
        }
        return static_cast<float>(acc);
    }
    std::vector<double> partials(chunks, k.identity);
    device.pool_->run(chunks, [&](std::size_t c) {
        auto [lo, hi] = chunk_range(extent, chunks, c);
        double acc = k.identity;
        for (std::size_t i = lo; i < hi; ++i) {
            acc = k.combine(acc, static_cast<double>(k.element(i)));
        }
        partials[c] = acc;
    });
    double acc = k.identity;
    for (double p : partials) {
        acc = k.combine(acc, p);
    }
    return static_cast<float>(acc);
}

void run_kernel_on_host(const Kernel& k, const std::vector<HostBuffer*>& args) {
    if (args.size() != k.arity) {
        throw ScheduleError("host run of '" + k.name + "': expected " + std::to_string(k.arity) +
                            " arguments, got " + std::to_string(args.size()));
    }
    KernelArgs spans;
    spans.reserve(args.size());
    for (HostBuffer* b : args) {
        spans.emplace_back(*b);
    }
    for (std::size_t i = 0; i < k.space.dim0; ++i) {
        for (std::size_t j = 0; j < k.space.dim1; ++j) {
            k.body(i, j, spans);
        }
    }
}

bool kernel_has_disjoint_writes(const Kernel& k,
                                const std::vector<std::size_t>& arg_sizes,
                                std::size_t max_tuples) {
    const std::size_t total_tuples = k.space.dim0 * k.space.dim1;
    std::vector<std::pair<std::size_t, std::size_t>> tuples;
    if (total_tuples <= max_tuples) {
        tuples.reserve(total_tuples);
        for (std::size_t i = 0; i < k.space.dim0; ++i) {
            for (std::size_t j = 0; j < k.space.dim1; ++j) {
                tuples.emplace_back(i, j);
            }
        }
    } else {
        // Corners plus a deterministic sample.
        tuples = {{0, 0},
                  {0, k.space.dim1 - 1},
                  {k.space.dim0 - 1, 0},
                  {k.space.dim0 - 1, k.space.dim1 - 1}};
        SeededRng rng(0x57A7E5ULL);
        while (tuples.size() < max_tuples) {
            tuples.emplace_back(rng.below(k.space.dim0), rng.below(k.space.dim1));
        }
        std::sort(tuples.begin(), tuples.end());
        tuples.erase(std::unique(tuples.begin(), tuples.end()), tuples.end());
    }

    constexpr float fill_a = 0.25f;
    constexpr float fill_b = 0.75f;
    std::vector<std::vector<float>> scratch_a, scratch_b;
    for (std::size_t n : arg_sizes) {
        scratch_a.emplace_back(n, fill_a);
        scratch_b.emplace_back(n, fill_b);
    }

    // Element keys as arg_index * size + element, offset per argument.
    std::vector<std::size_t> arg_offset(arg_sizes.size(), 0);
    for (std::size_t a = 1; a < arg_sizes.size(); ++a) {
        arg_offset[a] = arg_offset[a - 1] + arg_sizes[a - 1];
    }

    std::unordered_set<std::size_t> written;
    for (auto [i, j] : tuples) {
        for (std::size_t a = 0; a < arg_sizes.size(); ++a) {
            std::fill(scratch_a[a].begin(), scratch_a[a].end(), fill_a);
            std::fill(scratch_b[a].begin(), scratch_b[a].end(), fill_b);
        }
        KernelArgs args_a, args_b;
        for (auto& s : scratch_a) {
            args_a.emplace_back(s);
        }
        for (auto& s : scratch_b) {
            args_b.emplace_back(s);
        }
        k.body(i, j, args_a);
        k.body(i, j, args_b);
        for (std::size_t a = 0; a < arg_sizes.size(); ++a) {
            for (std::size_t e = 0; e < arg_sizes[a]; ++e) {
                if (scratch_a[a][e] != fill_a || scratch_b[a][e] != fill_b) {
                    if (!written.insert(arg_offset[a] + e).second) {
                        return false;
                    }
                }
            }
        }
    }
    return true;
}

Kernel make_matmul_kernel(std::size_t rows, std::size_t inner, std::size_t cols) {
    Kernel k;
    k.name = "mxm";
    k.arity = 3;
    k.space = IterationSpace{rows, cols};
    k.body = [inner, cols](std::size_t i, std::size_t j, const KernelArgs& args) {
        const std::span<float>& a = args[0];
        const std::span<float>& b = args[1];
        float sum = 0.0f;
        for (std::size_t kk = 0; kk < inner; ++kk) {
            sum += a[i * inner + kk] * b[kk * cols + j];
        }
        args[2][i * cols + j] = sum;
    };
    return k;
}

} // namespace lane
