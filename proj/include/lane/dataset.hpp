#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "lane/tensor.hpp"

namespace lane {

struct Sample {
    DenseVector features;
    DenseVector label; // one-hot
};

struct DataSet {
    std::size_t feature_width = 0;
    std::size_t class_count = 0;
    std::vector<Sample> items;

    std::size_t size() const { return items.size(); }
};

// Comma-separated, one sample per line: feature_width decimal floats followed
// by class_count one-hot label fields. Empty lines are skipped. Malformed
// lines raise ParseError with the line number; labels that are not exactly
// one-hot raise ParseError as well.
DataSet load_dataset(const std::filesystem::path& path, std::size_t feature_width,
                     std::size_t class_count);

// Same format, floats at 9 significant digits so load(save(d)) == d.
void save_dataset(const DataSet& d, const std::filesystem::path& path);

// Seed-deterministic shuffle, then the first floor(train_fraction * n) items
// form the train set and the remainder the test set.
std::pair<DataSet, DataSet> split(const DataSet& d, double train_fraction, std::uint64_t seed);

// factor copies of every item, features perturbed uniformly in [-noise, noise)
// and clamped to [0,1]; labels copied unchanged. noise == 0 copies verbatim.
DataSet enlarge(const DataSet& d, std::size_t factor, float noise, SeededRng& rng);

} // namespace lane
