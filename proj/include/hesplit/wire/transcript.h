#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <mutex>
#include <span>
#include <vector>

#include "hesplit/wire/message.h"

namespace hesplit::wire {

enum class Direction { sent, received };

const char* direction_name(Direction d);

struct TranscriptEntry {
    Direction direction = Direction::sent;
    Tag tag = Tag::bye;
    std::uint64_t bytes = 0;  // whole frame, header included
    double millis = 0.0;      // since the transcript was created
};

struct ByteTotals {
    std::uint64_t sent = 0;
    std::uint64_t received = 0;
};

// Sees every frame as it crosses the wire.
using FrameObserver = std::function<void(Direction, Tag, std::span<const std::uint8_t> frame)>;

class Transcript {
public:
    Transcript() : start_(std::chrono::steady_clock::now()) {}

    void record(Direction d, Tag tag, std::span<const std::uint8_t> frame);
    void set_observer(FrameObserver f);

    std::vector<TranscriptEntry> entries() const;
    std::size_t size() const;
    // Totals over entries [from, to).
    ByteTotals totals(std::size_t from = 0, std::size_t to = SIZE_MAX) const;

    // direction,tag,bytes,millis
    void write_csv(std::ostream& out) const;

private:
    mutable std::mutex mu_;
    std::chrono::steady_clock::time_point start_;
    std::vector<TranscriptEntry> entries_;
    FrameObserver observer_;
};

void write_transcript_csv(std::ostream& out, const std::vector<TranscriptEntry>& entries);
std::vector<TranscriptEntry> read_transcript_csv(std::istream& in);

ByteTotals sum_bytes(const std::vector<TranscriptEntry>& entries);

}  // namespace hesplit::wire
