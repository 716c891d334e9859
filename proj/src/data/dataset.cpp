#include "hesplit/data/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "hesplit/error.h"

namespace hesplit::data {

namespace {

// Unbiased bounded draw; std distributions are implementation-defined.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t r;
    do {
        r = rng();
    } while (r >= limit);
    return r % bound;
}

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double normal(std::mt19937_64& rng) {
    // Box-Muller keeps the sequence independent of the standard library.
    const double u1 = 1.0 - unit(rng);
    const double u2 = unit(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double bump(double t, double center, double width, double height) {
    const double z = (t - center) / width;
    return height * std::exp(-0.5 * z * z);
}

// Class templates on t in [0,128) with the beat centred near 64.
double waveform(int cls, double t, double shift) {
    const double c = 64.0 + shift;
    switch (cls) {
        case 0:  // normal: P, narrow QRS, T
            return bump(t, c - 22, 4, 0.15) + bump(t, c, 2.5, 1.0) - bump(t, c + 4, 2, 0.2) +
                   bump(t, c + 26, 7, 0.3);
        case 1:  // left bundle branch block: broad notched R
            return bump(t, c - 3, 5, 0.8) + bump(t, c + 5, 5, 0.75) + bump(t, c + 30, 8, -0.35);
        case 2:  // right bundle branch block: rSR'
            return bump(t, c - 4, 2.5, 0.55) - bump(t, c + 1, 2, 0.35) + bump(t, c + 7, 3, 0.9) +
                   bump(t, c + 28, 7, 0.2);
        case 3:  // atrial premature: early beat, tall P close to QRS
            return bump(t, c - 30, 4, 0.45) + bump(t, c - 18, 2.5, 0.95) + bump(t, c + 6, 7, 0.3);
        default:  // ventricular premature: wide inverted complex
            return -bump(t, c, 7, 1.1) + bump(t, c + 16, 6, 0.45);
    }
}

}  // namespace

nn::Tensor Dataset::gather(const std::vector<std::size_t>& indices) const {
    nn::Tensor x({indices.size(), 1, kTimesteps});
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::size_t src = indices[i];
        if (src >= size()) throw ValueError("sample index " + std::to_string(src) + " out of range");
        std::copy_n(samples.data().begin() + static_cast<std::ptrdiff_t>(src * kTimesteps), kTimesteps,
                    x.data().begin() + static_cast<std::ptrdiff_t>(i * kTimesteps));
    }
    return x;
}

std::vector<int> Dataset::gather_labels(const std::vector<std::size_t>& indices) const {
    std::vector<int> y(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) y[i] = labels.at(indices[i]);
    return y;
}

Dataset Dataset::head(std::size_t count) const {
    count = std::min(count, size());
    std::vector<std::size_t> idx(count);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return Dataset{gather(idx), gather_labels(idx), split};
}

void Dataset::validate() const {
    if (labels.empty()) throw ValueError("dataset is empty");
    if (samples.shape() != nn::Shape{labels.size(), 1, kTimesteps}) {
        throw DimensionError("samples must be [count,1,128], got " + nn::shape_string(samples.shape()), "sample");
    }
    for (int y : labels) {
        if (y < 0 || y >= kClasses) throw ValueError("label " + std::to_string(y) + " out of range");
    }
    if (!samples.all_finite()) throw ValueError("dataset contains non-finite values");
}

float Dataset::min_value() const { return *std::min_element(samples.data().begin(), samples.data().end()); }
float Dataset::max_value() const { return *std::max_element(samples.data().begin(), samples.data().end()); }

Dataset load_csv(const std::string& path, Split split) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open dataset " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("missing header line in " + path, 0);

    std::vector<float> values;
    std::vector<int> labels;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const char* p = line.data();
        const char* end = line.data() + line.size();
        std::size_t col = 0;
        while (true) {
            while (p < end && *p == ' ') ++p;
            if (col < kTimesteps) {
                float v = 0;
                auto [next, ec] = std::from_chars(p, end, v);
                if (ec != std::errc() || !std::isfinite(v)) {
                    throw ParseError("bad value in column " + std::to_string(col) + " of " + path, row);
                }
                values.push_back(v);
                p = next;
            } else {
                // Labels may be written as integral floats ("2.0").
                double y = 0;
                auto [next, ec] = std::from_chars(p, end, y);
                if (ec != std::errc() || y != std::floor(y)) throw ParseError("bad label in " + path, row);
                if (y < 0 || y >= kClasses) throw ParseError("label " + std::to_string(y) + " out of range", row);
                labels.push_back(static_cast<int>(y));
                p = next;
            }
            ++col;
            while (p < end && *p == ' ') ++p;
            if (p == end) break;
            if (*p != ',') throw ParseError("expected ',' in " + path, row);
            ++p;
        }
        if (col != kTimesteps + 1) {
            throw ParseError("expected 129 columns, found " + std::to_string(col) + " in " + path, row);
        }
    }
    if (labels.empty()) throw ParseError("no data rows in " + path, row);
    Dataset ds{nn::Tensor({labels.size(), 1, kTimesteps}, std::move(values)), std::move(labels), split};
    return ds;
}

DataSplits load_mitbih(const std::string& dir) {
    return DataSplits{load_csv(dir + "/train.csv", Split::train), load_csv(dir + "/test.csv", Split::test)};
}

Dataset synth_ecg(std::size_t count, std::uint64_t seed) {
    if (count < static_cast<std::size_t>(kClasses)) throw ValueError("synth_ecg needs at least 5 samples");
    std::mt19937_64 rng(seed);
    std::vector<float> values(count * kTimesteps);
    std::vector<int> labels(count);
    for (std::size_t i = 0; i < count; ++i) labels[i] = static_cast<int>(i % kClasses);
    for (std::size_t i = count; i > 1; --i) std::swap(labels[i - 1], labels[bounded(rng, i)]);
    for (std::size_t i = 0; i < count; ++i) {
        const double amp = 0.8 + 0.4 * unit(rng);
        const double shift = 6.0 * unit(rng) - 3.0;
        const double baseline = 0.1 * normal(rng);
        for (std::size_t t = 0; t < kTimesteps; ++t) {
            const double v = amp * waveform(labels[i], static_cast<double>(t), shift) + baseline + 0.05 * normal(rng);
            values[i * kTimesteps + t] = static_cast<float>(v);
        }
    }
    return Dataset{nn::Tensor({count, 1, kTimesteps}, std::move(values)), std::move(labels), Split::train};
}

DataSplits load_data(const std::string& spec) {
    if (spec.rfind("synth:", 0) == 0) {
        const auto rest = spec.substr(6);
        const auto colon = rest.find(':');
        if (colon == std::string::npos) throw ValueError("expected synth:<count>:<seed>, got " + spec);
        std::size_t count = 0;
        std::uint64_t seed = 0;
        const auto c = std::from_chars(rest.data(), rest.data() + colon, count);
        const auto s = std::from_chars(rest.data() + colon + 1, rest.data() + rest.size(), seed);
        if (c.ec != std::errc() || s.ec != std::errc() || c.ptr != rest.data() + colon ||
            s.ptr != rest.data() + rest.size()) {
            throw ValueError("expected synth:<count>:<seed>, got " + spec);
        }
        DataSplits d{synth_ecg(count, seed), synth_ecg(count, seed ^ 0x7e57da7aULL)};
        d.test.split = Split::test;
        return d;
    }
    return load_mitbih(spec);
}

BatchPlan::BatchPlan(std::size_t count, std::size_t batch_size, std::uint64_t seed)
    : count_(count), batch_size_(batch_size), seed_(seed) {
    if (batch_size == 0) throw ValueError("batch size must be at least 1");
}

std::vector<std::size_t> BatchPlan::epoch_order(std::size_t epoch) const {
    std::vector<std::size_t> order(count_);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed_ * 0x9e3779b97f4a7c15ULL + epoch);
    for (std::size_t i = count_; i > 1; --i) std::swap(order[i - 1], order[bounded(rng, i)]);
    return order;
}

std::vector<std::size_t> BatchPlan::indices(std::size_t epoch, std::size_t b) const {
    if (b >= batches_per_epoch()) throw ValueError("batch index past the end of the epoch");
    if (cached_epoch_ != epoch) {
        cached_order_ = epoch_order(epoch);
        cached_epoch_ = epoch;
    }
    return std::vector<std::size_t>(cached_order_.begin() + static_cast<std::ptrdiff_t>(b * batch_size_),
                                    cached_order_.begin() + static_cast<std::ptrdiff_t>((b + 1) * batch_size_));
}

Batch make_batch(const Dataset& ds, std::vector<std::size_t> indices) {
    Batch b{ds.gather(indices), ds.gather_labels(indices), std::move(indices)};
    return b;
}

std::vector<std::vector<std::size_t>> eval_batches(std::size_t count, std::size_t batch_size) {
    if (batch_size == 0) throw ValueError("batch size must be at least 1");
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t start = 0; start < count; start += batch_size) {
        std::vector<std::size_t> idx;
        for (std::size_t i = start; i < std::min(count, start + batch_size); ++i) idx.push_back(i);
        out.push_back(std::move(idx));
    }
    return out;
}

}  // namespace hesplit::data
