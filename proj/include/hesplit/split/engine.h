#pragma once

#include <functional>
#include <optional>

#include "hesplit/config.h"
#include "hesplit/data/dataset.h"
#include "hesplit/metrics.h"
#include "hesplit/nn/model.h"
#include "hesplit/wire/channel.h"

namespace hesplit::split {

// Everything the client reports after a session. Per-epoch byte counts cover
// that epoch's frames; setup and evaluation are counted separately, and the
// three together equal the transcript totals.
struct ClientReport {
    TrainResult result;
    wire::ByteTotals setup;
    wire::ByteTotals evaluation;
    double eval_seconds = 0.0;
};

struct ServerReport {
    std::vector<EpochMetrics> epochs;  // loss is not known to the server and stays 0
    wire::ByteTotals setup;
    wire::ByteTotals evaluation;
    std::size_t eval_batches = 0;
};

struct ClientHooks {
    // After the client's optimizer step.
    std::function<void(std::size_t epoch, std::size_t batch, const nn::Sequential& layers)> on_step;
    // Split activation before it is sent, once per training batch.
    std::function<void(std::size_t epoch, std::size_t batch, const nn::Tensor& activation)> on_activation;
    // Logits as the client sees them, once per training batch.
    std::function<void(std::size_t epoch, std::size_t batch, const nn::Tensor& logits)> on_logits;
    // Called at each epoch end, after the byte counts are final.
    std::function<void(const EpochMetrics&)> on_epoch;
};

struct ServerHooks {
    std::function<void(std::size_t epoch, std::size_t batch, const nn::Linear& head)> on_step;
};

// Holds the convolutional stack, the softmax/loss and (encrypted mode) the
// secret key. Raw samples and labels never leave this object.
class ClientEngine {
public:
    // `key_seed` fixes the HE keys and encryption randomness; when unset they
    // come from the OS entropy source.
    ClientEngine(nn::ModelSpec spec, TrainConfig cfg, wire::Channel& channel,
                 std::optional<std::uint64_t> key_seed = std::nullopt);

    ClientReport run(const data::Dataset& train, const data::Dataset& test, const ClientHooks& hooks = {});

    const nn::Sequential& layers() const noexcept { return layers_; }
    // The agreed config, batches_per_epoch resolved.
    const TrainConfig& config() const noexcept { return cfg_; }

private:
    nn::ModelSpec spec_;
    TrainConfig cfg_;
    wire::Channel* ch_;
    std::optional<std::uint64_t> key_seed_;
    nn::Sequential layers_;
};

// Holds only the linear layer and, in encrypted mode, a public context that
// has no secret key to decrypt with.
class ServerEngine {
public:
    ServerEngine(nn::ModelSpec spec, TrainConfig cfg, wire::Channel& channel);

    ServerReport run(const ServerHooks& hooks = {});

    const nn::Linear& head() const;
    const TrainConfig& config() const noexcept { return cfg_; }

private:
    nn::ModelSpec spec_;
    TrainConfig cfg_;
    wire::Channel* ch_;
    std::optional<nn::Linear> head_;
};

struct LoopbackResult {
    ClientReport client;
    ServerReport server;
    std::vector<wire::TranscriptEntry> client_transcript;
    std::vector<wire::TranscriptEntry> server_transcript;
    nn::ModelParams params;  // final client convs and server head
};

struct LoopbackOptions {
    std::optional<std::uint64_t> key_seed;
    ClientHooks client_hooks;
    ServerHooks server_hooks;
    // Sees every frame on the client side.
    wire::FrameObserver observer;
};

// Both parties in one process over an in-memory pipe, the server on its own thread.
LoopbackResult run_loopback(const nn::ModelSpec& spec, const TrainConfig& cfg, const data::Dataset& train,
                            const data::Dataset& test, const LoopbackOptions& options = {});

}  // namespace hesplit::split
