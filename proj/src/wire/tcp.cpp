#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <thread>

#include "hesplit/error.h"
#include "hesplit/wire/transport.h"

namespace hesplit::wire {

namespace {

std::string os_error(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

class TcpTransport final : public Transport {
public:
    explicit TcpTransport(int fd) : fd_(fd) {
        int one = 1;
        ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    }
    ~TcpTransport() override {
        close();
    }

    void write_all(std::span<const std::uint8_t> data) override {
        std::size_t sent = 0;
        while (sent < data.size()) {
            if (fd_ < 0) throw TransportError("socket closed", sent);
            const auto n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw TransportError(os_error("send failed"), sent);
            }
            sent += static_cast<std::size_t>(n);
        }
    }

    void read_exact(std::span<std::uint8_t> data) override {
        std::size_t got = 0;
        while (got < data.size()) {
            if (fd_ < 0) throw TransportError("socket closed", got);
            const auto n = ::recv(fd_, data.data() + got, data.size() - got, 0);
            if (n == 0) throw TransportError("connection closed by peer", got);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw TransportError(os_error("recv failed"), got);
            }
            got += static_cast<std::size_t>(n);
        }
    }

    void close() override {
        if (fd_ >= 0) {
            ::shutdown(fd_, SHUT_RDWR);
            ::close(fd_);
            fd_ = -1;
        }
    }

private:
    int fd_;
};

struct AddrList {
    addrinfo* head = nullptr;
    ~AddrList() {
        if (head) ::freeaddrinfo(head);
    }
};

void resolve(const Endpoint& e, bool passive, AddrList& out) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    if (passive) hints.ai_flags = AI_PASSIVE;
    const std::string port = std::to_string(e.port);
    const int rc = ::getaddrinfo(e.host.empty() ? nullptr : e.host.c_str(), port.c_str(), &hints, &out.head);
    if (rc != 0) throw TransportError("cannot resolve " + e.host + ": " + ::gai_strerror(rc));
}

}  // namespace

Endpoint parse_endpoint(const std::string& text) {
    const auto colon = text.rfind(':');
    if (colon == std::string::npos || colon + 1 == text.size()) {
        throw ValueError("endpoint '" + text + "' is not host:port");
    }
    Endpoint e;
    e.host = text.substr(0, colon);
    if (e.host.size() >= 2 && e.host.front() == '[' && e.host.back() == ']') e.host = e.host.substr(1, e.host.size() - 2);
    const std::string port = text.substr(colon + 1);
    unsigned long v = 0;
    for (char c : port) {
        if (c < '0' || c > '9') throw ValueError("endpoint port '" + port + "' is not a number");
        v = v * 10 + static_cast<unsigned long>(c - '0');
        if (v > 65535) throw ValueError("endpoint port '" + port + "' out of range");
    }
    e.port = static_cast<std::uint16_t>(v);
    return e;
}

TcpListener::TcpListener(const Endpoint& at) {
    AddrList addrs;
    resolve(at, true, addrs);
    for (auto* a = addrs.head; a; a = a->ai_next) {
        const int fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
        if (fd < 0) continue;
        int one = 1;
        ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        if (::bind(fd, a->ai_addr, a->ai_addrlen) == 0 && ::listen(fd, 1) == 0) {
            fd_ = fd;
            break;
        }
        ::close(fd);
    }
    if (fd_ < 0) throw TransportError(os_error(("cannot listen on " + at.host + ":" + std::to_string(at.port)).c_str()));
    sockaddr_storage bound{};
    socklen_t len = sizeof bound;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.ss_family == AF_INET6 ? reinterpret_cast<sockaddr_in6*>(&bound)->sin6_port
                                              : reinterpret_cast<sockaddr_in*>(&bound)->sin_port);
}

TcpListener::~TcpListener() {
    if (fd_ >= 0) ::close(fd_);
}

TransportPtr TcpListener::accept() {
    for (;;) {
        const int fd = ::accept(fd_, nullptr, nullptr);
        if (fd >= 0) return std::make_unique<TcpTransport>(fd);
        if (errno != EINTR) throw TransportError(os_error("accept failed"));
    }
}

TransportPtr tcp_connect(const Endpoint& to, int timeout_ms) {
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    std::string last = "no address";
    for (;;) {
        AddrList addrs;
        resolve(to, false, addrs);
        for (auto* a = addrs.head; a; a = a->ai_next) {
            const int fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
            if (fd < 0) continue;
            if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) return std::make_unique<TcpTransport>(fd);
            last = os_error("connect failed");
            ::close(fd);
        }
        if (std::chrono::steady_clock::now() >= deadline) {
            throw TransportError(last + " (" + to.host + ":" + std::to_string(to.port) + ")");
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
}

}  // namespace hesplit::wire
