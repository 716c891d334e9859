#pragma once

#include <memory>

#include "hesplit/ckks/context.h"
#include "hesplit/config.h"
#include "hesplit/wire/message.h"
#include "hesplit/wire/protocol.h"
#include "hesplit/wire/transcript.h"
#include "hesplit/wire/transport.h"

namespace hesplit::wire {

inline constexpr std::uint32_t kProtocolVersion = 1;

// One side of a connection. Every frame is checked against the protocol
// machine and logged in the transcript before it is written or handed out.
class Channel {
public:
    Channel(TransportPtr transport, Party self);

    void send(Tag tag, std::span<const std::uint8_t> payload);
    Message recv();
    // recv(), raising ProtocolError unless the tag matches.
    Message expect(Tag tag);
    void close();

    Party self() const noexcept { return self_; }
    ProtocolMachine& machine() noexcept { return machine_; }
    const ProtocolMachine& machine() const noexcept { return machine_; }
    Transcript& transcript() noexcept { return transcript_; }
    const Transcript& transcript() const noexcept { return transcript_; }

private:
    TransportPtr transport_;
    Party self_;
    Party peer_;
    ProtocolMachine machine_;
    Transcript transcript_;
};

// HELLO exchange plus SYNC echo-compare. Returns the agreed config; raises
// HandshakeError on a version or config mismatch.
TrainConfig client_handshake(Channel& ch, const TrainConfig& cfg);
// A server config with batches_per_epoch = 0 adopts the client's count.
TrainConfig server_handshake(Channel& ch, const TrainConfig& cfg);

void send_public_context(Channel& ch, const ckks::PublicContext& pub);
// Checks the context matches the agreed parameters.
ckks::PublicContext recv_public_context(Channel& ch, const TrainConfig& cfg);

// Names of fields on which two configs differ, comma separated.
std::string config_difference(const TrainConfig& a, const TrainConfig& b);

}  // namespace hesplit::wire
