#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "hesplit/error.h"

namespace hesplit {

using Bytes = std::vector<std::uint8_t>;

// Little-endian append-only encoder.
class ByteWriter {
public:
    ByteWriter() = default;
    explicit ByteWriter(std::size_t reserve) { buf_.reserve(reserve); }

    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u32(std::uint32_t v) { put_le(v); }
    void u64(std::uint64_t v) { put_le(v); }
    void f32(float v) { put_le(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v)); }
    void raw(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
    void u64s(std::span<const std::uint64_t> v) {
        if constexpr (std::endian::native == std::endian::little) {
            const auto* p = reinterpret_cast<const std::uint8_t*>(v.data());
            buf_.insert(buf_.end(), p, p + v.size_bytes());
        } else {
            for (auto x : v) u64(x);
        }
    }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        buf_.insert(buf_.end(), s.begin(), s.end());
    }

    const Bytes& bytes() const& noexcept { return buf_; }
    Bytes take() && noexcept { return std::move(buf_); }
    std::size_t size() const noexcept { return buf_.size(); }

private:
    template <typename U>
    void put_le(U v) {
        for (std::size_t i = 0; i < sizeof(U); ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    Bytes buf_;
};

// Little-endian cursor over a byte span. Reading past the end raises
// ProtocolError naming what was being read.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t u8(const char* what = "u8") {
        need(1, what);
        return data_[pos_++];
    }
    std::uint32_t u32(const char* what = "u32") { return get_le<std::uint32_t>(what); }
    std::uint64_t u64(const char* what = "u64") { return get_le<std::uint64_t>(what); }
    float f32(const char* what = "f32") { return std::bit_cast<float>(get_le<std::uint32_t>(what)); }
    double f64(const char* what = "f64") { return std::bit_cast<double>(get_le<std::uint64_t>(what)); }
    std::span<const std::uint8_t> raw(std::size_t n, const char* what = "bytes") {
        need(n, what);
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    void u64s(std::span<std::uint64_t> out, const char* what = "u64 array") {
        need(out.size_bytes(), what);
        if constexpr (std::endian::native == std::endian::little) {
            std::memcpy(out.data(), data_.data() + pos_, out.size_bytes());
            pos_ += out.size_bytes();
        } else {
            for (auto& x : out) x = get_le<std::uint64_t>(what);
        }
    }
    std::string str(const char* what = "string") {
        const auto n = u32(what);
        auto s = raw(n, what);
        return std::string(s.begin(), s.end());
    }

    std::size_t remaining() const noexcept { return data_.size() - pos_; }
    std::size_t position() const noexcept { return pos_; }
    void expect_end(const char* what) const {
        if (remaining() != 0) {
            throw ProtocolError(std::string(what) + ": " + std::to_string(remaining()) + " trailing bytes");
        }
    }

private:
    void need(std::size_t n, const char* what) const {
        if (data_.size() - pos_ < n) {
            throw ProtocolError(std::string("truncated input while reading ") + what);
        }
    }

    template <typename U>
    U get_le(const char* what) {
        need(sizeof(U), what);
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(data_[pos_ + i]) << (8 * i);
        pos_ += sizeof(U);
        return v;
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

Bytes read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> data);

}  // namespace hesplit
