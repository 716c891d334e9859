#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "hesplit/bytes.h"
#include "hesplit/nn/tensor.h"

namespace hesplit::wire {

enum class Tag : std::uint8_t {
    hello = 1,
    sync = 2,
    ctx_pub = 3,
    act_plain = 4,
    act_enc = 5,
    out_plain = 6,
    out_enc = 7,
    grad_out = 8,
    grad_w = 9,
    grad_act = 10,
    epoch_end = 11,
    bye = 12,
};

// Upper-case wire name, e.g. "ACT_PLAIN".
const char* tag_name(Tag t);
// Raises ProtocolError for bytes that are not a tag.
Tag tag_from_byte(std::uint8_t b);

struct Message {
    Tag tag = Tag::bye;
    Bytes payload;

    friend bool operator==(const Message&, const Message&) = default;
};

// u64 little-endian payload length, one tag byte, payload.
inline constexpr std::size_t kFrameHeader = 9;
// Frames announcing more than this are rejected before allocation.
inline constexpr std::uint64_t kMaxPayload = std::uint64_t{1} << 32;

Bytes frame(const Message& m);
Bytes frame(Tag tag, std::span<const std::uint8_t> payload);
// Exactly one frame. Raises IncompleteFrameError when `bytes` stop short and
// ProtocolError for unknown tags or trailing bytes.
Message unframe(std::span<const std::uint8_t> bytes);
// Total size of the frame at the start of `bytes`, once its header is complete.
std::optional<std::size_t> frame_length(std::span<const std::uint8_t> bytes);

Bytes tensor_payload(const nn::Tensor& t);
nn::Tensor payload_tensor(std::span<const std::uint8_t> payload);
Bytes u32_payload(std::uint32_t v);
std::uint32_t payload_u32(std::span<const std::uint8_t> payload);

}  // namespace hesplit::wire
