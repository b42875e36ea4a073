#include "lane/tensor.hpp"

#include <cmath>

namespace lane {

float SeededRng::uniform(float lo, float hi) {
    if (!(lo < hi)) {
        throw ConfigError("uniform: lo must be < hi");
    }
    float v = lo + next_float() * (hi - lo);
    // next_float() < 1, but the scale can round up to hi when hi-lo is a
    // power of two; keep the interval half-open.
    return v < hi ? v : std::nextafter(hi, lo);
}

std::size_t SeededRng::below(std::size_t n) {
    if (n == 0) {
        throw ConfigError("below: n must be positive");
    }
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

DenseMatrix::DenseMatrix(std::size_t r, std::size_t c, float fill)
    : rows(r), cols(c), data(r * c, fill) {
    if (r == 0 || c == 0) {
        throw ConfigError("DenseMatrix: dimensions must be >= 1");
    }
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols != b.rows) {
        throw ShapeError("matmul: a.cols != b.rows");
    }
    DenseMatrix c(a.rows, b.cols, 0.0f);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = 0; j < b.cols; ++j) {
            float sum = 0.0f;
            for (std::size_t k = 0; k < a.cols; ++k) {
                sum += a(i, k) * b(k, j);
            }
            c(i, j) = sum;
        }
    }
    return c;
}

void random_fill(DenseMatrix& m, SeededRng& rng, float lo, float hi) {
    if (!(lo < hi)) {
        throw ConfigError("random_fill: lo must be < hi");
    }
    for (float& x : m.data) {
        x = rng.uniform(lo, hi);
    }
}

void random_fill(DenseVector& v, SeededRng& rng, float lo, float hi) {
    if (!(lo < hi)) {
        throw ConfigError("random_fill: lo must be < hi");
    }
    for (float& x : v.data) {
        x = rng.uniform(lo, hi);
    }
}

} // namespace lane
