#include <exception>
#include <thread>

#include "hesplit/split/engine.h"

namespace hesplit::split {

LoopbackResult run_loopback(const nn::ModelSpec& spec, const TrainConfig& cfg, const data::Dataset& train,
                            const data::Dataset& test, const LoopbackOptions& options) {
    auto [client_end, server_end] = wire::memory_pipe();
    wire::Channel cch(std::move(client_end), wire::Party::client);
    wire::Channel sch(std::move(server_end), wire::Party::server);
    if (options.observer) cch.transcript().set_observer(options.observer);

    auto server_cfg = cfg;
    server_cfg.batches_per_epoch = 0;  // the server learns N during SYNC
    ServerEngine server(spec, server_cfg, sch);
    ClientEngine client(spec, cfg, cch, options.key_seed);

    LoopbackResult out;
    std::exception_ptr server_error;
    std::thread t([&] {
        try {
            out.server = server.run(options.server_hooks);
        } catch (...) {
            server_error = std::current_exception();
            sch.close();
        }
    });
    std::exception_ptr client_error;
    try {
        out.client = client.run(train, test, options.client_hooks);
    } catch (...) {
        client_error = std::current_exception();
        cch.close();
    }
    t.join();
    // The side that failed first explains the failure; the other usually just lost its peer.
    if (client_error) {
        try {
            std::rethrow_exception(client_error);
        } catch (const TransportError&) {
            if (server_error) std::rethrow_exception(server_error);
            throw;
        }
    }
    if (server_error) std::rethrow_exception(server_error);

    out.client_transcript = cch.transcript().entries();
    out.server_transcript = sch.transcript().entries();
    for (const auto* conv : client.layers().conv_layers()) out.params.conv.push_back(conv->params());
    out.params.linear = server.head().params();
    return out;
}

}  // namespace hesplit::split
