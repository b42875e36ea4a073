#include "lane/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include "lane/error.hpp"

namespace lane {

namespace {

float parse_field(const std::string& field, std::size_t line_no) {
    float value = 0.0f;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
        throw ParseError("line " + std::to_string(line_no) + ": bad numeric field '" + field + "'");
    }
    return value;
}

} // namespace

DataSet load_dataset(const std::filesystem::path& path, std::size_t feature_width,
                     std::size_t class_count) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open dataset file: " + path.string());
    }
    DataSet d;
    d.feature_width = feature_width;
    d.class_count = class_count;

    std::string line;
    std::size_t line_no = 0;
    const std::size_t want = feature_width + class_count;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) {
            fields.push_back(field);
        }
        if (fields.size() != want) {
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(want) + " fields, got " + std::to_string(fields.size()));
        }
        Sample s{DenseVector(feature_width), DenseVector(class_count)};
        for (std::size_t i = 0; i < feature_width; ++i) {
            s.features[i] = parse_field(fields[i], line_no);
        }
        std::size_t ones = 0;
        for (std::size_t c = 0; c < class_count; ++c) {
            const float v = parse_field(fields[feature_width + c], line_no);
            if (v != 0.0f && v != 1.0f) {
                throw ParseError("line " + std::to_string(line_no) + ": label field must be 0 or 1");
            }
            if (v == 1.0f) {
                ++ones;
            }
            s.label[c] = v;
        }
        if (ones != 1) {
            throw ParseError("line " + std::to_string(line_no) + ": label is not one-hot");
        }
        d.items.push_back(std::move(s));
    }
    return d;
}

void save_dataset(const DataSet& d, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write dataset file: " + path.string());
    }
    char buf[64];
    for (const Sample& s : d.items) {
        for (std::size_t i = 0; i < d.feature_width; ++i) {
            std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(s.features[i]));
            out << buf << ',';
        }
        for (std::size_t c = 0; c < d.class_count; ++c) {
            out << (s.label[c] == 1.0f ? '1' : '0');
            out << (c + 1 < d.class_count ? ',' : '\n');
        }
    }
}

std::pair<DataSet, DataSet> split(const DataSet& d, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("split: train_fraction must be in (0, 1)");
    }
    std::vector<std::size_t> order(d.size());
    std::iota(order.begin(), order.end(), 0);
    SeededRng rng(seed);
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng.below(i)]);
    }
    const auto train_count =
        static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(d.size())));

    DataSet train, test;
    train.feature_width = test.feature_width = d.feature_width;
    train.class_count = test.class_count = d.class_count;
    for (std::size_t n = 0; n < order.size(); ++n) {
        (n < train_count ? train : test).items.push_back(d.items[order[n]]);
    }
    return {std::move(train), std::move(test)};
}

DataSet enlarge(const DataSet& d, std::size_t factor, float noise, SeededRng& rng) {
    if (factor == 0) {
        throw ConfigError("enlarge: factor must be >= 1");
    }
    if (noise < 0.0f) {
        throw ConfigError("enlarge: noise must be non-negative");
    }
    DataSet out;
    out.feature_width = d.feature_width;
    out.class_count = d.class_count;
    out.items.reserve(d.size() * factor);
    for (const Sample& s : d.items) {
        for (std::size_t r = 0; r < factor; ++r) {
            Sample copy = s;
            if (noise > 0.0f) {
                for (float& x : copy.features.data) {
                    x = std::clamp(x + rng.uniform(-noise, noise), 0.0f, 1.0f);
                }
            }
            out.items.push_back(std::move(copy));
        }
    }
    return out;
}

} // namespace lane
