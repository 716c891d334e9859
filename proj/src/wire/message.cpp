#include "hesplit/wire/message.h"

#include <cstdio>

#include "hesplit/error.h"
#include "hesplit/nn/tensor_io.h"

namespace hesplit::wire {

const char* tag_name(Tag t) {
    switch (t) {
        case Tag::hello: return "HELLO";
        case Tag::sync: return "SYNC";
        case Tag::ctx_pub: return "CTX_PUB";
        case Tag::act_plain: return "ACT_PLAIN";
        case Tag::act_enc: return "ACT_ENC";
        case Tag::out_plain: return "OUT_PLAIN";
        case Tag::out_enc: return "OUT_ENC";
        case Tag::grad_out: return "GRAD_OUT";
        case Tag::grad_w: return "GRAD_W";
        case Tag::grad_act: return "GRAD_ACT";
        case Tag::epoch_end: return "EPOCH_END";
        case Tag::bye: return "BYE";
    }
    return "?";
}

Tag tag_from_byte(std::uint8_t b) {
    if (b < static_cast<std::uint8_t>(Tag::hello) || b > static_cast<std::uint8_t>(Tag::bye)) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "unknown message tag 0x%02X", b);
        throw ProtocolError(buf);
    }
    return static_cast<Tag>(b);
}

Bytes frame(Tag tag, std::span<const std::uint8_t> payload) {
    ByteWriter w(kFrameHeader + payload.size());
    w.u64(payload.size());
    w.u8(static_cast<std::uint8_t>(tag));
    w.raw(payload);
    return std::move(w).take();
}

Bytes frame(const Message& m) { return frame(m.tag, m.payload); }

std::optional<std::size_t> frame_length(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kFrameHeader) return std::nullopt;
    ByteReader r(bytes);
    const auto len = r.u64();
    if (len > kMaxPayload) throw ProtocolError("frame announces " + std::to_string(len) + " payload bytes");
    return kFrameHeader + static_cast<std::size_t>(len);
}

Message unframe(std::span<const std::uint8_t> bytes) {
    const auto total = frame_length(bytes);
    if (!total) throw IncompleteFrameError("frame header needs 9 bytes, got " + std::to_string(bytes.size()));
    Message m;
    m.tag = tag_from_byte(bytes[8]);
    if (bytes.size() < *total) {
        throw IncompleteFrameError(std::string(tag_name(m.tag)) + " frame needs " + std::to_string(*total) +
                                   " bytes, got " + std::to_string(bytes.size()));
    }
    if (bytes.size() > *total) throw ProtocolError("trailing bytes after frame");
    m.payload.assign(bytes.begin() + kFrameHeader, bytes.end());
    return m;
}

Bytes tensor_payload(const nn::Tensor& t) {
    ByteWriter w(nn::encoded_tensor_size(t));
    nn::write_tensor(w, t);
    return std::move(w).take();
}

nn::Tensor payload_tensor(std::span<const std::uint8_t> payload) {
    ByteReader r(payload);
    auto t = nn::read_tensor(r);
    r.expect_end("tensor payload");
    return t;
}

Bytes u32_payload(std::uint32_t v) {
    ByteWriter w;
    w.u32(v);
    return std::move(w).take();
}

std::uint32_t payload_u32(std::span<const std::uint8_t> payload) {
    ByteReader r(payload);
    const auto v = r.u32("counter");
    r.expect_end("counter payload");
    return v;
}

}  // namespace hesplit::wire
