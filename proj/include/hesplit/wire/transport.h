#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>

namespace hesplit::wire {

// Reliable byte stream. Failures raise TransportError carrying the number of
// bytes of the current call that did get through.
class Transport {
public:
    virtual ~Transport() = default;
    virtual void write_all(std::span<const std::uint8_t> data) = 0;
    virtual void read_exact(std::span<std::uint8_t> data) = 0;
    // Idempotent; the peer sees end-of-stream.
    virtual void close() = 0;
};

using TransportPtr = std::unique_ptr<Transport>;

// Two connected in-process endpoints.
std::pair<TransportPtr, TransportPtr> memory_pipe();

struct Endpoint {
    std::string host;
    std::uint16_t port = 0;
};

// "host:port"; raises ValueError on malformed input.
Endpoint parse_endpoint(const std::string& text);

class TcpListener {
public:
    explicit TcpListener(const Endpoint& at);
    ~TcpListener();
    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;

    // The bound port; differs from the request when that was 0.
    std::uint16_t port() const noexcept { return port_; }
    TransportPtr accept();

private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

// Retries refused connections until `timeout_ms` has passed.
TransportPtr tcp_connect(const Endpoint& to, int timeout_ms = 10000);

}  // namespace hesplit::wire
