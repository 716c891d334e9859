#include "hesplit/wire/transcript.h"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "hesplit/error.h"

namespace hesplit::wire {

const char* direction_name(Direction d) { return d == Direction::sent ? "sent" : "received"; }

void Transcript::record(Direction d, Tag tag, std::span<const std::uint8_t> frame) {
    std::lock_guard lock(mu_);
    const std::chrono::duration<double, std::milli> since = std::chrono::steady_clock::now() - start_;
    entries_.push_back({d, tag, frame.size(), since.count()});
    if (observer_) observer_(d, tag, frame);
}

void Transcript::set_observer(FrameObserver f) {
    std::lock_guard lock(mu_);
    observer_ = std::move(f);
}

std::vector<TranscriptEntry> Transcript::entries() const {
    std::lock_guard lock(mu_);
    return entries_;
}

std::size_t Transcript::size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

ByteTotals Transcript::totals(std::size_t from, std::size_t to) const {
    std::lock_guard lock(mu_);
    ByteTotals t;
    for (std::size_t i = from; i < std::min(to, entries_.size()); ++i) {
        (entries_[i].direction == Direction::sent ? t.sent : t.received) += entries_[i].bytes;
    }
    return t;
}

void Transcript::write_csv(std::ostream& out) const { write_transcript_csv(out, entries()); }

void write_transcript_csv(std::ostream& out, const std::vector<TranscriptEntry>& entries) {
    out << "direction,tag,bytes,millis\n";
    char ms[32];
    for (const auto& e : entries) {
        std::snprintf(ms, sizeof ms, "%.3f", e.millis);
        out << direction_name(e.direction) << ',' << tag_name(e.tag) << ',' << e.bytes << ',' << ms << '\n';
    }
}

std::vector<TranscriptEntry> read_transcript_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "direction,tag,bytes,millis") {
        throw ValueError("transcript CSV: unexpected header");
    }
    std::vector<TranscriptEntry> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string dir, tag, bytes, millis;
        if (!std::getline(row, dir, ',') || !std::getline(row, tag, ',') || !std::getline(row, bytes, ',') ||
            !std::getline(row, millis)) {
            throw ValueError("transcript CSV: short row '" + line + "'");
        }
        TranscriptEntry e;
        if (dir == "sent") {
            e.direction = Direction::sent;
        } else if (dir == "received") {
            e.direction = Direction::received;
        } else {
            throw ValueError("transcript CSV: bad direction '" + dir + "'");
        }
        bool found = false;
        for (int t = 1; t <= 12; ++t) {
            if (tag == tag_name(static_cast<Tag>(t))) {
                e.tag = static_cast<Tag>(t);
                found = true;
            }
        }
        if (!found) throw ValueError("transcript CSV: bad tag '" + tag + "'");
        e.bytes = std::stoull(bytes);
        e.millis = std::stod(millis);
        out.push_back(e);
    }
    return out;
}

ByteTotals sum_bytes(const std::vector<TranscriptEntry>& entries) {
    ByteTotals t;
    for (const auto& e : entries) (e.direction == Direction::sent ? t.sent : t.received) += e.bytes;
    return t;
}

}  // namespace hesplit::wire
