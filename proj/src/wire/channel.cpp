#include "hesplit/wire/channel.h"

#include "hesplit/error.h"

namespace hesplit::wire {

namespace {

constexpr char kHelloMagic[4] = {'H', 'S', 'P', 'L'};

Bytes hello_payload(Party self) {
    ByteWriter w;
    for (char c : kHelloMagic) w.u8(static_cast<std::uint8_t>(c));
    w.u32(kProtocolVersion);
    w.u8(self == Party::client ? 0 : 1);
    return std::move(w).take();
}

void check_hello(const Message& m, Party expected_peer) {
    try {
        ByteReader r(m.payload);
        for (char c : kHelloMagic) {
            if (r.u8("hello magic") != static_cast<std::uint8_t>(c)) throw HandshakeError("peer is not a split-training endpoint");
        }
        const auto version = r.u32("protocol version");
        if (version != kProtocolVersion) {
            throw HandshakeError("protocol version mismatch: peer speaks " + std::to_string(version) + ", we speak " +
                                 std::to_string(kProtocolVersion));
        }
        const auto role = r.u8("peer role");
        if (role != (expected_peer == Party::client ? 0 : 1)) throw HandshakeError("peer announced the wrong role");
        r.expect_end("hello");
    } catch (const HandshakeError&) {
        throw;
    } catch (const ProtocolError& e) {
        throw HandshakeError(std::string("malformed hello: ") + e.what());
    }
}

Bytes sync_payload(const TrainConfig& cfg) {
    ByteWriter w;
    write_config(w, cfg);
    return std::move(w).take();
}

TrainConfig parse_sync(const Message& m) {
    ByteReader r(m.payload);
    try {
        auto cfg = read_config(r);
        r.expect_end("sync");
        cfg.validate();
        return cfg;
    } catch (const ConfigError& e) {
        throw HandshakeError(std::string("peer sent an invalid config: ") + e.what());
    } catch (const ProtocolError& e) {
        throw HandshakeError(std::string("malformed sync: ") + e.what());
    }
}

}  // namespace

Channel::Channel(TransportPtr transport, Party self)
    : transport_(std::move(transport)), self_(self), peer_(self == Party::client ? Party::server : Party::client) {}

void Channel::send(Tag tag, std::span<const std::uint8_t> payload) {
    machine_.advance(tag, self_);
    const auto bytes = frame(tag, payload);
    try {
        transport_->write_all(bytes);
    } catch (const TransportError& e) {
        throw TransportError(std::string("sending ") + tag_name(tag) + " (" + std::to_string(bytes.size()) +
                                 " bytes): " + e.what(),
                             e.bytes_moved());
    }
    transcript_.record(Direction::sent, tag, bytes);
}

Message Channel::recv() {
    Bytes bytes(kFrameHeader);
    try {
        transport_->read_exact(bytes);
    } catch (const TransportError& e) {
        throw TransportError(std::string("receiving frame header: ") + e.what(), e.bytes_moved());
    }
    const std::size_t total = *frame_length(bytes);
    const Tag tag = tag_from_byte(bytes[8]);
    machine_.advance(tag, peer_);
    bytes.resize(total);
    try {
        transport_->read_exact(std::span(bytes).subspan(kFrameHeader));
    } catch (const TransportError& e) {
        throw TransportError(std::string("receiving ") + tag_name(tag) + " (" + std::to_string(total) + " bytes): " +
                                 e.what(),
                             kFrameHeader + e.bytes_moved());
    }
    transcript_.record(Direction::received, tag, bytes);
    Message m;
    m.tag = tag;
    m.payload.assign(bytes.begin() + kFrameHeader, bytes.end());
    return m;
}

Message Channel::expect(Tag tag) {
    auto m = recv();
    if (m.tag != tag) throw ProtocolError(std::string("expected ") + tag_name(tag) + ", got " + tag_name(m.tag));
    return m;
}

void Channel::close() { transport_->close(); }

std::string config_difference(const TrainConfig& a, const TrainConfig& b) {
    std::string out;
    auto note = [&](bool differs, const char* name) {
        if (!differs) return;
        if (!out.empty()) out += ", ";
        out += name;
    };
    note(a.mode != b.mode, "mode");
    note(a.eta != b.eta, "eta");
    note(a.batch_size != b.batch_size, "batch_size");
    note(a.batches_per_epoch != b.batches_per_epoch, "batches_per_epoch");
    note(a.epochs != b.epochs, "epochs");
    note(a.seed != b.seed, "seed");
    note(a.encrypted_eval != b.encrypted_eval, "eval");
    note(a.he != b.he, "he");
    return out;
}

TrainConfig client_handshake(Channel& ch, const TrainConfig& cfg) {
    cfg.validate();
    ch.send(Tag::hello, hello_payload(Party::client));
    check_hello(ch.expect(Tag::hello), Party::server);
    ch.machine().configure(cfg);
    ch.send(Tag::sync, sync_payload(cfg));
    const auto echoed = parse_sync(ch.expect(Tag::sync));
    if (echoed != cfg) throw HandshakeError("server config differs in: " + config_difference(cfg, echoed));
    return cfg;
}

TrainConfig server_handshake(Channel& ch, const TrainConfig& cfg) {
    check_hello(ch.expect(Tag::hello), Party::client);
    ch.send(Tag::hello, hello_payload(Party::server));
    const auto theirs = parse_sync(ch.expect(Tag::sync));
    TrainConfig ours = cfg;
    if (ours.batches_per_epoch == 0) ours.batches_per_epoch = theirs.batches_per_epoch;
    ch.machine().configure(ours);
    // Echo our view either way so the client sees the same mismatch.
    ch.send(Tag::sync, sync_payload(ours));
    if (ours != theirs) throw HandshakeError("client config differs in: " + config_difference(ours, theirs));
    return ours;
}

void send_public_context(Channel& ch, const ckks::PublicContext& pub) { ch.send(Tag::ctx_pub, pub.serialize()); }

ckks::PublicContext recv_public_context(Channel& ch, const TrainConfig& cfg) {
    const auto m = ch.expect(Tag::ctx_pub);
    auto pub = ckks::PublicContext::deserialize(m.payload);
    if (pub.params() != cfg.he) throw HandshakeError("public context parameters differ from the agreed config");
    return pub;
}

}  // namespace hesplit::wire
