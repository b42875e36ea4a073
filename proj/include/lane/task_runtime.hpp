#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "lane/error.hpp"

namespace lane {

// A host buffer is identified by the std::vector object that owns its storage.
// Schedules hold these pointers; the buffers must outlive the schedule.
using HostBuffer = std::vector<float>;

// 1D kernels leave dim1 at 1. The runtime iterates dim0 (outer) x dim1 (inner).
struct IterationSpace {
    std::size_t dim0 = 1;
    std::size_t dim1 = 1;
};

using KernelArgs = std::vector<std::span<float>>;

// Per-index body. Contract: the body is pure (output depends only on the
// indices and the argument contents at entry) and distinct index tuples write
// disjoint output elements. The runtime does not detect violations at runtime;
// debug builds sample write sets on the first execute of each task.
using KernelBody = std::function<void(std::size_t, std::size_t, const KernelArgs&)>;

struct Kernel {
    std::string name;
    std::size_t arity = 0;
    IterationSpace space;
    KernelBody body;
};

// A reduction folds element(i) over [0, extent) with an associative and
// commutative combine. Accumulation is carried in double so that chunked and
// serial folds agree far inside the documented 1e-3 tolerance.
struct ReduceKernel {
    std::function<float(std::size_t)> element;
    std::function<double(double, double)> combine;
    double identity = 0.0;
};

struct PhaseTiming {
    double copy_in_ms = 0.0;
    double kernel_ms = 0.0;
    double copy_out_ms = 0.0;
    std::vector<double> task_kernel_ms; // one entry per task, in task order

    double total_ms() const { return copy_in_ms + kernel_ms + copy_out_ms; }
};

namespace detail {

class WorkerPool {
public:
    explicit WorkerPool(unsigned workers);
    ~WorkerPool();

    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    unsigned size() const { return static_cast<unsigned>(threads_.size()); }

    // Runs fn(chunk) for chunk in [0, chunk_count) on the pool, blocking until
    // every chunk finished. chunk_count must be <= size().
    void run(std::size_t chunk_count, const std::function<void(std::size_t)>& fn);

private:
    void worker_loop(unsigned index);

    std::vector<std::thread> threads_;
    std::mutex mutex_;
    std::condition_variable start_cv_;
    std::condition_variable done_cv_;
    const std::function<void(std::size_t)>* job_ = nullptr;
    std::size_t job_chunks_ = 0;
    std::size_t remaining_ = 0;
    std::uint64_t generation_ = 0;
    bool stop_ = false;
};

} // namespace detail

// An execution backend with a private buffer arena. Data moves between host
// buffers and the arena only through the explicit copy phases of execute(),
// which is what makes transfer cost observable and timeable.
class Device {
public:
    enum class Kind { SerialHost, ParallelHost };

    // workers == 0 picks the machine's logical core count; serial devices
    // always run with one worker.
    explicit Device(Kind kind, unsigned workers = 0);

    Device(const Device&) = delete;
    Device& operator=(const Device&) = delete;

    Kind kind() const { return kind_; }
    unsigned worker_count() const { return workers_; }

    // Iteration spaces smaller than this run inline on the calling thread even
    // on parallel devices; pool dispatch would dwarf the work itself.
    static constexpr std::size_t kInlineThreshold = 512;

private:
    friend class TaskSchedule;
    friend float parallel_reduce(const ReduceKernel&, std::size_t, Device&);

    Kind kind_;
    unsigned workers_;
    std::unordered_map<const HostBuffer*, std::vector<float>> arena_;
    std::unique_ptr<detail::WorkerPool> pool_;
    // A device executes one schedule at a time; schedules with disjoint
    // buffers may share it from different threads. Acquired before the phase
    // timers start so queueing never shows up as copy or kernel time.
    std::mutex exec_mutex_;
};

// Fallback device for schedules executed before any migrate() call.
Device& default_serial_device();

// LANE_DEVICE in {serial, parallel} and LANE_WORKERS (positive integer) select
// the backend; unset variables yield the given fallbacks. Invalid values throw
// ConfigError.
Device::Kind device_kind_from_env(Device::Kind fallback);
unsigned workers_from_env(unsigned fallback);

// Named group of kernels executed together on one device, with declared
// stream-in/stream-out buffer sets copied on every execute.
class TaskSchedule {
public:
    explicit TaskSchedule(std::string name) : name_(std::move(name)) {}

    // Marks buffers for host->device copy at the start of every execute.
    TaskSchedule& stream_in(std::initializer_list<HostBuffer*> buffers);
    TaskSchedule& stream_in(const std::vector<HostBuffer*>& buffers);

    // Appends a task. args.size() must equal k.arity.
    TaskSchedule& task(Kernel k, std::vector<HostBuffer*> args);

    // Marks buffers for device->host copy after the last task of every execute.
    TaskSchedule& stream_out(std::initializer_list<HostBuffer*> buffers);
    TaskSchedule& stream_out(const std::vector<HostBuffer*>& buffers);

    // Rebinds to d. Moving to a different device evicts this schedule's
    // buffers from d's arena, so the next execute copies every argument.
    // Rebinding the already-bound device keeps the arena warm.
    TaskSchedule& migrate(Device& d);

    // Phases in order: copy-in (stream_in always, other arguments only when
    // absent from the arena, plus per-task argument binding), tasks in
    // declared order on arena buffers, copy-out (stream_out). Host buffers
    // outside stream_out are untouched.
    PhaseTiming execute();

    const std::string& name() const { return name_; }
    std::size_t task_count() const { return tasks_.size(); }
    Device* bound_device() const { return device_; }

private:
    struct BoundTask {
        Kernel kernel;
        std::vector<HostBuffer*> args;
        bool write_set_checked = false;
    };

    void validate() const;
    void run_task(Device& dev, BoundTask& t, const KernelArgs& args);

    std::string name_;
    std::vector<BoundTask> tasks_;
    std::vector<HostBuffer*> stream_in_;
    std::vector<HostBuffer*> stream_out_;
    Device* device_ = nullptr;
};

// result = fold of element over [0, extent) with combine; the parallel device
// folds contiguous chunks and combines the per-worker partials once at the end.
float parallel_reduce(const ReduceKernel& k, std::size_t extent, Device& device);

// Runs a kernel directly over host buffers in ascending row-major index order.
// This is the host-side oracle the copy-semantics tests compare against, and
// the layer backward operations use it for their host path.
void run_kernel_on_host(const Kernel& k, const std::vector<HostBuffer*>& args);

// Write-set sampling: runs the body on sentinel-filled scratch copies of the
// arguments for up to max_tuples index tuples and checks that no two tuples
// wrote the same element. A heuristic (a body could write a value equal to the
// sentinel), but it catches real overlap in practice. Debug builds run this on
// the first execute of each small task.
bool kernel_has_disjoint_writes(const Kernel& k,
                                const std::vector<std::size_t>& arg_sizes,
                                std::size_t max_tuples = 64);

// Reference matrix-multiply kernel: args (a, b, c) flat row-major, iteration
// space rows x cols, inner k-sum ascending.
Kernel make_matmul_kernel(std::size_t rows, std::size_t inner, std::size_t cols);

} // namespace lane
