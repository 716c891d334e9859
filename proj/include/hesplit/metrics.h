#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hesplit {

struct EpochMetrics {
    std::size_t epoch = 0;
    double mean_loss = 0.0;
    double seconds = 0.0;
    std::uint64_t bytes_out = 0;
    std::uint64_t bytes_in = 0;
    std::optional<double> accuracy;  // set on the final epoch only
};

struct TrainResult {
    std::vector<EpochMetrics> epochs;
    double test_accuracy = 0.0;
};

// Header: epoch,loss,seconds,bytes_out,bytes_in,accuracy
void write_metrics_csv(std::ostream& out, const std::vector<EpochMetrics>& rows);
std::vector<EpochMetrics> read_metrics_csv(std::istream& in);

// Fraction of positions where predictions match labels.
double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels);

}  // namespace hesplit
