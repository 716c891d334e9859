#include "hesplit/metrics.h"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "hesplit/error.h"

namespace hesplit {

namespace {
constexpr const char* kHeader = "epoch,loss,seconds,bytes_out,bytes_in,accuracy";

std::string exact(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
}  // namespace

void write_metrics_csv(std::ostream& out, const std::vector<EpochMetrics>& rows) {
    out << kHeader << '\n';
    for (const auto& m : rows) {
        out << m.epoch << ',' << exact(m.mean_loss) << ',' << exact(m.seconds) << ',' << m.bytes_out << ','
            << m.bytes_in << ',';
        if (m.accuracy) out << exact(*m.accuracy);
        out << '\n';
    }
}

std::vector<EpochMetrics> read_metrics_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kHeader) throw ParseError("unexpected metrics header", 0);
    std::vector<EpochMetrics> rows;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell[6];
        for (int i = 0; i < 6; ++i) {
            if (!std::getline(ss, cell[i], ',') && i < 5) throw ParseError("short metrics row", row);
        }
        try {
            EpochMetrics m;
            m.epoch = std::stoull(cell[0]);
            m.mean_loss = std::stod(cell[1]);
            m.seconds = std::stod(cell[2]);
            m.bytes_out = std::stoull(cell[3]);
            m.bytes_in = std::stoull(cell[4]);
            if (!cell[5].empty()) m.accuracy = std::stod(cell[5]);
            rows.push_back(m);
        } catch (const std::exception&) {
            throw ParseError("malformed metrics row", row);
        }
    }
    return rows;
}

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
    if (labels.empty()) throw ValueError("accuracy of an empty test set");
    if (predictions.size() != labels.size()) throw ValueError("prediction and label counts differ");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i];
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

}  // namespace hesplit
