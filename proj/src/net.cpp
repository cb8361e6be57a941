#include "posture/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <csignal>
#include <cstring>
#include <mutex>
#include <thread>

#include "posture/error.hpp"

namespace posture {

namespace {

using Clock = std::chrono::steady_clock;

int poll_one(int fd, short events, std::chrono::milliseconds timeout) {
    pollfd pfd{fd, events, 0};
    auto deadline = Clock::now() + timeout;
    for (;;) {
        auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
        if (left.count() < 0) left = std::chrono::milliseconds(0);
        int rc = ::poll(&pfd, 1, static_cast<int>(left.count()));
        if (rc < 0 && errno == EINTR) continue;
        return rc;
    }
}

void set_nonblocking(int fd) {
    int flags = fcntl(fd, F_GETFL, 0);
    fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

} // namespace

Socket& Socket::operator=(Socket&& other) noexcept {
    if (this != &other) {
        close();
        fd_ = other.fd_;
        other.fd_ = -1;
    }
    return *this;
}

Socket::~Socket() { close(); }

void Socket::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

std::optional<std::vector<uint8_t>> Socket::read_some(size_t max_len,
                                                      std::chrono::milliseconds timeout) {
    int rc = poll_one(fd_, POLLIN, timeout);
    if (rc <= 0) return std::nullopt;
    std::vector<uint8_t> buf(max_len);
    ssize_t n = ::recv(fd_, buf.data(), buf.size(), 0);
    if (n < 0) {
        // A peer that closes right after writing can surface as a reset on
        // loopback; for framing purposes that is still end-of-stream.
        if (errno == ECONNRESET || errno == EPIPE) return std::vector<uint8_t>{};
        return std::nullopt;
    }
    buf.resize(static_cast<size_t>(n));
    return buf;
}

std::optional<std::vector<uint8_t>> Socket::read_exact(size_t n,
                                                       std::chrono::milliseconds timeout) {
    std::vector<uint8_t> out;
    out.reserve(n);
    auto deadline = Clock::now() + timeout;
    while (out.size() < n) {
        auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
        if (left.count() <= 0) return std::nullopt;
        int rc = poll_one(fd_, POLLIN, left);
        if (rc <= 0) return std::nullopt;
        uint8_t chunk[4096];
        size_t want = std::min(n - out.size(), sizeof(chunk));
        ssize_t got = ::recv(fd_, chunk, want, 0);
        if (got < 0) {
            if (errno == ECONNRESET || errno == EPIPE) return out;
            return std::nullopt;
        }
        if (got == 0) return out; // closed mid-message; caller sees short read
        out.insert(out.end(), chunk, chunk + got);
    }
    return out;
}

bool Socket::write_all(const uint8_t* data, size_t len, std::chrono::milliseconds timeout) {
    size_t sent = 0;
    auto deadline = Clock::now() + timeout;
    while (sent < len) {
        auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
        if (left.count() <= 0) return false;
        int rc = poll_one(fd_, POLLOUT, left);
        if (rc <= 0) return false;
        ssize_t n = ::send(fd_, data + sent, len - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EAGAIN || errno == EWOULDBLOCK) continue;
            return false;
        }
        sent += static_cast<size_t>(n);
    }
    return true;
}

std::optional<Socket> tcp_connect(const std::string& host, int port,
                                  std::chrono::milliseconds timeout) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0)
        return std::nullopt;

    std::optional<Socket> result;
    for (addrinfo* ai = res; ai && !result; ai = ai->ai_next) {
        int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        set_nonblocking(fd);
        int rc = ::connect(fd, ai->ai_addr, ai->ai_addrlen);
        if (rc == 0) {
            result.emplace(fd);
            break;
        }
        if (errno != EINPROGRESS) {
            ::close(fd);
            continue;
        }
        if (poll_one(fd, POLLOUT, timeout) <= 0) {
            ::close(fd);
            continue;
        }
        int err = 0;
        socklen_t len = sizeof(err);
        getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
        if (err != 0) {
            ::close(fd);
            continue;
        }
        result.emplace(fd);
    }
    freeaddrinfo(res);
    return result;
}

Listener& Listener::operator=(Listener&& other) noexcept {
    if (this != &other) {
        close();
        fd_ = other.fd_;
        port_ = other.port_;
        other.fd_ = -1;
    }
    return *this;
}

Listener::~Listener() { close(); }

void Listener::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

Listener Listener::bind(const std::string& ip, int port) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) fail(Errc::IoError, "socket: " + std::string(strerror(errno)));
    int one = 1;
    setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<uint16_t>(port));
    if (inet_pton(AF_INET, ip.c_str(), &addr.sin_addr) != 1) {
        ::close(fd);
        fail(Errc::IoError, "bad address " + ip);
    }
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        int err = errno;
        ::close(fd);
        if (err == EADDRINUSE || err == EADDRNOTAVAIL)
            fail(Errc::PortExhaustion, ip + ":" + std::to_string(port) + ": " + strerror(err));
        fail(Errc::IoError, "bind " + ip + ":" + std::to_string(port) + ": " + strerror(err));
    }
    if (::listen(fd, 64) != 0) {
        int err = errno;
        ::close(fd);
        fail(Errc::IoError, "listen: " + std::string(strerror(err)));
    }
    socklen_t len = sizeof(addr);
    getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);

    Listener l;
    l.fd_ = fd;
    l.port_ = ntohs(addr.sin_port);
    set_nonblocking(fd);
    return l;
}

std::optional<Socket> Listener::accept(std::chrono::milliseconds timeout) {
    if (poll_one(fd_, POLLIN, timeout) <= 0) return std::nullopt;
    int fd = ::accept(fd_, nullptr, nullptr);
    if (fd < 0) return std::nullopt;
    return Socket(fd);
}

void HostPacer::wait_turn(const std::string& host) {
    Clock::time_point until;
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = last_close_.find(host);
        if (it == last_close_.end()) return;
        until = it->second + delay_;
    }
    auto now = Clock::now();
    if (until > now) std::this_thread::sleep_for(until - now);
}

void HostPacer::note_closed(const std::string& host) {
    std::lock_guard<std::mutex> lock(mu_);
    last_close_[host] = Clock::now();
}

void ignore_sigpipe() {
    static std::once_flag once;
    std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

} // namespace posture
