#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lane/error.hpp"

namespace lane {

// Deterministic splittable 64-bit generator (SplitMix64). One fixed generator
// project-wide so every backend and every run draws the same streams.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : seed_(seed), state_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1) with 24-bit resolution; exact in float.
    float next_float() {
        return static_cast<float>(next_u64() >> 40) * 0x1p-24f;
    }

    // Uniform in [lo, hi). Throws ConfigError when lo >= hi.
    float uniform(float lo, float hi);

    // Uniform integer in [0, n). n must be positive.
    std::size_t below(std::size_t n);

    // Derives an independent child stream.
    SeededRng split() { return SeededRng(next_u64() ^ 0x9E3779B97F4A7C15ULL); }

private:
    std::uint64_t seed_;
    std::uint64_t state_;
};

// Row-major single-precision matrix. Element (i,j) lives at data[i*cols + j].
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> data;

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c, float fill = 0.0f);

    float operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    float& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
};

struct DenseVector {
    std::vector<float> data;

    DenseVector() = default;
    explicit DenseVector(std::size_t n, float fill = 0.0f) : data(n, fill) {}

    std::size_t len() const { return data.size(); }
    float operator[](std::size_t i) const { return data[i]; }
    float& operator[](std::size_t i) { return data[i]; }
};

// Reference product: result[i][j] = sum over k of a(i,k)*b(k,j), k ascending.
// The ascending inner order is a contract; backend-equivalence tests rely on it.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

// Fills in row-major order, one draw per element, each in [lo, hi).
void random_fill(DenseMatrix& m, SeededRng& rng, float lo, float hi);
void random_fill(DenseVector& v, SeededRng& rng, float lo, float hi);

} // namespace lane
