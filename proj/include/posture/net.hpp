#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace posture {

// Thin RAII wrapper over a connected TCP socket. All reads and writes take a
// deadline; a read returning zero bytes means the peer closed.
class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(Socket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
    Socket& operator=(Socket&& other) noexcept;
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    ~Socket();

    bool valid() const { return fd_ >= 0; }
    int fd() const { return fd_; }
    void close();

    // nullopt on timeout; empty vector on orderly close.
    std::optional<std::vector<uint8_t>> read_some(size_t max_len, std::chrono::milliseconds timeout);
    // Reads until exactly n bytes, close, or deadline. Returns what arrived.
    std::optional<std::vector<uint8_t>> read_exact(size_t n, std::chrono::milliseconds timeout);
    bool write_all(const uint8_t* data, size_t len, std::chrono::milliseconds timeout);
    bool write_all(const std::vector<uint8_t>& data, std::chrono::milliseconds timeout) {
        return write_all(data.data(), data.size(), timeout);
    }
    bool write_all(const std::string& data, std::chrono::milliseconds timeout) {
        return write_all(reinterpret_cast<const uint8_t*>(data.data()), data.size(), timeout);
    }

private:
    int fd_ = -1;
};

// nullopt if the connection could not be established within the timeout.
std::optional<Socket> tcp_connect(const std::string& host, int port,
                                  std::chrono::milliseconds timeout);

// Sets SIGPIPE to ignored, once. Peers closing mid-write are routine here and
// must surface as EPIPE, not process death; Socket uses MSG_NOSIGNAL but
// writes made by the TLS library do not.
void ignore_sigpipe();

// Listening socket bound to a specific address. port 0 picks an ephemeral port.
class Listener {
public:
    Listener() = default;
    Listener(Listener&& other) noexcept : fd_(other.fd_), port_(other.port_) { other.fd_ = -1; }
    Listener& operator=(Listener&& other) noexcept;
    Listener(const Listener&) = delete;
    ~Listener();

    static Listener bind(const std::string& ip, int port);
    bool valid() const { return fd_ >= 0; }
    int fd() const { return fd_; }
    int port() const { return port_; }
    void close();
    std::optional<Socket> accept(std::chrono::milliseconds timeout);

private:
    int fd_ = -1;
    int port_ = 0;
};

// Enforces a quiet period per host: the next connection to a host may only
// start once per_host_delay has elapsed since the previous connection to that
// host was closed.
class HostPacer {
public:
    explicit HostPacer(std::chrono::milliseconds per_host_delay) : delay_(per_host_delay) {}

    void wait_turn(const std::string& host);
    void note_closed(const std::string& host);

private:
    std::chrono::milliseconds delay_;
    std::mutex mu_;
    std::map<std::string, std::chrono::steady_clock::time_point> last_close_;
};

} // namespace posture
