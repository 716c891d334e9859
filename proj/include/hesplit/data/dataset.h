#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hesplit/nn/tensor.h"

namespace hesplit::data {

inline constexpr std::size_t kTimesteps = 128;
inline constexpr int kClasses = 5;
// N, L, R, A, V
inline constexpr const char* kClassNames[kClasses] = {"N", "L", "R", "A", "V"};

enum class Split { train, test };

struct Dataset {
    nn::Tensor samples;  // [count, 1, 128]
    std::vector<int> labels;
    Split split = Split::train;

    std::size_t size() const noexcept { return labels.size(); }
    // Copies of the rows at `indices`, as a batch tensor [k, 1, 128].
    nn::Tensor gather(const std::vector<std::size_t>& indices) const;
    std::vector<int> gather_labels(const std::vector<std::size_t>& indices) const;
    // First `count` samples.
    Dataset head(std::size_t count) const;
    void validate() const;
    float min_value() const;
    float max_value() const;
};

struct DataSplits {
    Dataset train;
    Dataset test;
};

// One CSV: a header line, then rows of 128 sample values followed by an
// integer label in [0, 5).
Dataset load_csv(const std::string& path, Split split);

// `dir`/train.csv and `dir`/test.csv.
DataSplits load_mitbih(const std::string& dir);

// Five separable pulse-shape classes with noise; labels are balanced
// (sample i has class i % 5 before shuffling).
Dataset synth_ecg(std::size_t count, std::uint64_t seed);

// "synth:<count>:<seed>" or a directory for load_mitbih.
DataSplits load_data(const std::string& spec);

struct Batch {
    nn::Tensor x;  // [n, 1, 128]
    std::vector<int> y;
    std::vector<std::size_t> indices;
};

// Deterministic per-epoch shuffle; the final partial batch is dropped, so an
// epoch has floor(count / n) batches.
class BatchPlan {
public:
    BatchPlan(std::size_t count, std::size_t batch_size, std::uint64_t seed);

    std::size_t batches_per_epoch() const noexcept { return count_ / batch_size_; }
    std::size_t batch_size() const noexcept { return batch_size_; }
    // Indices of batch `b` in epoch `epoch`.
    std::vector<std::size_t> indices(std::size_t epoch, std::size_t b) const;
    std::vector<std::size_t> epoch_order(std::size_t epoch) const;

private:
    std::size_t count_;
    std::size_t batch_size_;
    std::uint64_t seed_;
    mutable std::size_t cached_epoch_ = static_cast<std::size_t>(-1);
    mutable std::vector<std::size_t> cached_order_;
};

Batch make_batch(const Dataset& ds, std::vector<std::size_t> indices);

// Sequential unshuffled batches for evaluation; the tail batch may be short.
std::vector<std::vector<std::size_t>> eval_batches(std::size_t count, std::size_t batch_size);

}  // namespace hesplit::data
