#include "posture/prober.hpp"

#include <poll.h>

#include <algorithm>
#include <chrono>

#include <openssl/err.h>
#include <openssl/ssl.h>
#include <openssl/x509.h>

#include "posture/error.hpp"
#include "posture/tls_wire.hpp"
#include "posture/util.hpp"

namespace posture {

namespace {

using Clock = std::chrono::steady_clock;

bool needs_more_bytes(const ProbeOutcome& outcome) {
    auto* m = std::get_if<MalformedResponse>(&outcome);
    if (!m) return false;
    return m->note.rfind("truncated", 0) == 0 ||
           m->note == "connection ended before server hello";
}

ProbeResult classify_stream(Socket& sock, ProtocolVersion version,
                            const std::vector<uint32_t>& offered,
                            std::chrono::milliseconds read_timeout) {
    std::vector<uint8_t> buf;
    auto deadline = Clock::now() + read_timeout;
    for (;;) {
        auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
        if (left.count() <= 0) {
            if (buf.empty()) {
                ProbeResult r;
                r.version = version;
                r.offered = offered;
                r.outcome = Timeout{};
                return r;
            }
            return parse_server_response(version, offered, buf);
        }
        auto chunk = sock.read_some(8192, left);
        if (!chunk) { // poll timed out
            if (buf.empty()) {
                ProbeResult r;
                r.version = version;
                r.offered = offered;
                r.outcome = Timeout{};
                return r;
            }
            return parse_server_response(version, offered, buf);
        }
        if (chunk->empty()) // orderly close
            return parse_server_response(version, offered, buf);
        buf.insert(buf.end(), chunk->begin(), chunk->end());
        ProbeResult r = parse_server_response(version, offered, buf);
        if (!needs_more_bytes(r.outcome)) return r;
    }
}

} // namespace

ProbeResult probe_version(const std::string& host, int port, ProtocolVersion version,
                          const std::vector<uint32_t>& ciphers, const ProbePolicy& policy,
                          HostPacer* pacer, HostBudget* budget, bool offer_deflate,
                          bool* connected) {
    auto hello = build_client_hello(version, ciphers, host, offer_deflate);
    if (connected) *connected = false;

    if (pacer) pacer->wait_turn(host);
    if (budget) ++budget->used;
    auto sock = tcp_connect(host, port, policy.connect_timeout);
    if (!sock) {
        if (pacer) pacer->note_closed(host);
        ProbeResult r;
        r.version = version;
        r.offered = ciphers;
        r.outcome = Timeout{};
        return r;
    }
    if (connected) *connected = true;

    ProbeResult r;
    if (!sock->write_all(hello, policy.read_timeout)) {
        r.version = version;
        r.offered = ciphers;
        r.outcome = Timeout{};
    } else {
        r = classify_stream(*sock, version, ciphers, policy.read_timeout);
    }
    sock->close();
    if (pacer) pacer->note_closed(host);
    return r;
}

std::set<uint32_t> enumerate_ciphers(const std::string& host, int port, ProtocolVersion version,
                                     const std::vector<uint32_t>& candidates,
                                     const ProbePolicy& policy, HostPacer* pacer,
                                     HostBudget* budget, std::string* annotation) {
    std::set<uint32_t> accepted;
    if (candidates.empty()) return accepted;

    bool any_connect = false;
    int connections = 0;
    auto can_probe = [&] {
        if (connections >= policy.max_probes_per_version) return false;
        if (budget && budget->exhausted()) return false;
        return true;
    };

    if (version == ProtocolVersion::SSL2) {
        if (!can_probe()) {
            if (annotation) *annotation = "probe budget exhausted";
            return accepted;
        }
        ++connections;
        bool connected = false;
        ProbeResult r = probe_version(host, port, version, candidates, policy, pacer, budget,
                                      false, &connected);
        any_connect = connected;
        for (uint32_t k : r.ssl2_kinds) accepted.insert(k);
        if (!any_connect) fail(Errc::Unreachable, host + ":" + std::to_string(port));
        return accepted;
    }

    int consecutive_refused = 0;
    for (uint32_t candidate : candidates) {
        if (!can_probe()) {
            if (annotation) *annotation = "probe budget exhausted";
            break;
        }
        ProbeResult r;
        for (int attempt = 0; attempt <= policy.retries; ++attempt) {
            if (!can_probe()) break;
            ++connections;
            bool connected = false;
            r = probe_version(host, port, version, {candidate}, policy, pacer, budget, false,
                              &connected);
            if (connected) {
                any_connect = true;
                consecutive_refused = 0;
            } else {
                ++consecutive_refused;
            }
            if (!std::holds_alternative<Timeout>(r.outcome)) break;
        }
        if (r.accepted()) accepted.insert(r.chosen());
        // A full candidate's worth of refused connects means the host is not
        // answering; walking the rest of the list would only burn pacer waits.
        if (consecutive_refused > policy.retries) {
            if (!any_connect) fail(Errc::Unreachable, host + ":" + std::to_string(port));
            if (annotation) *annotation = "host stopped answering mid-sweep";
            break;
        }
    }
    if (!any_connect) fail(Errc::Unreachable, host + ":" + std::to_string(port));
    return accepted;
}

ProtocolSupportMatrix enumerate_protocols(const std::string& host, int port,
                                          const CipherCatalog& catalog,
                                          const ProbePolicy& policy, HostPacer* pacer,
                                          HostBudget* budget) {
    auto started = Clock::now();
    ProtocolSupportMatrix matrix;
    HostPacer own_pacer(policy.per_host_delay);
    HostBudget own_budget{0, policy.max_probes_per_host};
    if (!pacer) pacer = &own_pacer;
    if (!budget) budget = &own_budget;
    int used_before = budget->used;

    bool any_connect = false;
    for (ProtocolVersion v : kAllVersions) {
        std::vector<uint32_t> candidates = catalog.suites_for_version(v);
        VersionSupport& slot = matrix.per_version.at(v);
        try {
            std::string note;
            auto accepted = enumerate_ciphers(host, port, v, candidates, policy, pacer, budget,
                                              &note);
            any_connect = true;
            slot.accepted_ciphers = std::move(accepted);
            slot.supported = !slot.accepted_ciphers.empty();
            slot.annotation = note;
        } catch (const Error& e) {
            if (e.code() != Errc::Unreachable) throw;
            slot.supported = false;
            slot.annotation = "unreachable";
        }
    }
    if (!any_connect) fail(Errc::Unreachable, host + ":" + std::to_string(port));

    // The compression question only makes sense where a 1.2 handshake exists.
    const VersionSupport& v12 = matrix.per_version.at(ProtocolVersion::TLS1_2);
    if (v12.supported && !budget->exhausted()) {
        std::vector<uint32_t> offer(v12.accepted_ciphers.begin(), v12.accepted_ciphers.end());
        ProbeResult r = probe_version(host, port, ProtocolVersion::TLS1_2, offer, policy, pacer,
                                      budget, true);
        matrix.compression_deflate = r.accepted() && r.compression == 1;
    }

    matrix.probe_count = budget->used - used_before;
    matrix.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - started);
    return matrix;
}

namespace {

RawChain fetch_plaintext_chain(const std::string& host, int port, ProtocolVersion version,
                               const std::vector<uint32_t>& offer, const ProbePolicy& policy,
                               HostPacer* pacer, HostBudget* budget) {
    auto hello = build_client_hello(version, offer, host);
    if (pacer) pacer->wait_turn(host);
    if (budget) ++budget->used;
    auto sock = tcp_connect(host, port, policy.connect_timeout);
    if (!sock) {
        if (pacer) pacer->note_closed(host);
        fail(Errc::Unreachable, host + ":" + std::to_string(port));
    }
    struct CloseGuard {
        Socket& s;
        HostPacer* p;
        const std::string& h;
        ~CloseGuard() {
            s.close();
            if (p) p->note_closed(h);
        }
    } guard{*sock, pacer, host};

    if (!sock->write_all(hello, policy.read_timeout))
        fail(Errc::NoChainPresented, "write failed before handshake");

    HandshakeBuffer hs;
    auto deadline = Clock::now() + policy.read_timeout;
    for (;;) {
        auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
        if (left.count() <= 0) fail(Errc::NoChainPresented, "timed out before certificate");
        TlsRecord rec;
        RecordReadStatus st = read_tls_record(*sock, left, rec);
        if (st == RecordReadStatus::Timeout || st == RecordReadStatus::Closed ||
            st == RecordReadStatus::Malformed)
            fail(Errc::NoChainPresented, "stream ended before certificate");
        if (rec.content_type == 21) {
            if (rec.payload.size() >= 2 && rec.payload[0] == 2)
                fail(Errc::NoChainPresented,
                     "fatal alert " + std::to_string(rec.payload[1]) + " before certificate");
            continue;
        }
        if (rec.content_type != 22) continue;
        hs.feed(rec.payload);
        while (auto msg = hs.next_message()) {
            if (msg->first == 11) { // Certificate
                auto certs = parse_certificate_body(msg->second);
                if (!certs || certs->empty()) fail(Errc::NoChainPresented, "empty certificate list");
                RawChain chain;
                chain.der_certificates = std::move(*certs);
                chain.retrieval_path = RetrievalPath::PlaintextCertificateMessage;
                return chain; // abandon handshake here, guard closes the socket
            }
            if (msg->first == 14) // ServerHelloDone without a Certificate
                fail(Errc::NoChainPresented, "handshake finished without certificate message");
        }
    }
}

RawChain fetch_tls13_chain(const std::string& host, int port, const ProbePolicy& policy,
                           HostPacer* pacer, HostBudget* budget) {
    ignore_sigpipe();
    if (pacer) pacer->wait_turn(host);
    if (budget) ++budget->used;
    auto sock = tcp_connect(host, port, policy.connect_timeout);
    if (!sock) {
        if (pacer) pacer->note_closed(host);
        fail(Errc::Unreachable, host + ":" + std::to_string(port));
    }

    SSL_CTX* ctx = SSL_CTX_new(TLS_client_method());
    if (!ctx) fail(Errc::Internal, "SSL_CTX_new failed");
    SSL_CTX_set_verify(ctx, SSL_VERIFY_NONE, nullptr);
    // An auditor has to finish handshakes with badly configured servers to
    // report on them; level 0 keeps short keys and SHA-1 chains observable.
    SSL_CTX_set_security_level(ctx, 0);
    SSL_CTX_set_min_proto_version(ctx, TLS1_3_VERSION);
    SSL* ssl = SSL_new(ctx);
    if (!ssl) {
        SSL_CTX_free(ctx);
        fail(Errc::Internal, "SSL_new failed");
    }
    SSL_set_tlsext_host_name(ssl, host.c_str());
    SSL_set_fd(ssl, sock->fd());

    auto cleanup = [&] {
        SSL_free(ssl);
        SSL_CTX_free(ctx);
        sock->close();
        if (pacer) pacer->note_closed(host);
    };

    auto deadline = Clock::now() + policy.read_timeout;
    int rc;
    while ((rc = SSL_connect(ssl)) != 1) {
        int err = SSL_get_error(ssl, rc);
        if (err != SSL_ERROR_WANT_READ && err != SSL_ERROR_WANT_WRITE) {
            cleanup();
            fail(Errc::HandshakeFailure, host + ":" + std::to_string(port));
        }
        auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
        if (left.count() <= 0) {
            cleanup();
            fail(Errc::HandshakeFailure, "handshake timeout");
        }
        pollfd pfd{sock->fd(), static_cast<short>(err == SSL_ERROR_WANT_READ ? POLLIN : POLLOUT),
                   0};
        poll(&pfd, 1, static_cast<int>(left.count()));
    }

    STACK_OF(X509)* peer_chain = SSL_get_peer_cert_chain(ssl);
    RawChain chain;
    chain.retrieval_path = RetrievalPath::CompletedHandshake;
    if (peer_chain) {
        for (int i = 0; i < sk_X509_num(peer_chain); ++i) {
            X509* cert = sk_X509_value(peer_chain, i);
            int len = i2d_X509(cert, nullptr);
            if (len <= 0) continue;
            std::vector<uint8_t> der(static_cast<size_t>(len));
            uint8_t* p = der.data();
            i2d_X509(cert, &p);
            chain.der_certificates.push_back(std::move(der));
        }
    }
    cleanup();
    if (chain.der_certificates.empty()) fail(Errc::NoChainPresented, "no peer chain");
    return chain;
}

} // namespace

RawChain fetch_certificate_chain(const std::string& host, int port,
                                 const ProtocolSupportMatrix& matrix, const ProbePolicy& policy,
                                 HostPacer* pacer, HostBudget* budget) {
    // Prefer the highest pre-1.3 version; its Certificate message is readable
    // without finishing the handshake.
    for (ProtocolVersion v : {ProtocolVersion::TLS1_2, ProtocolVersion::TLS1_1,
                              ProtocolVersion::TLS1_0, ProtocolVersion::SSL3}) {
        const VersionSupport& slot = matrix.per_version.at(v);
        if (!slot.supported) continue;
        std::vector<uint32_t> offer(slot.accepted_ciphers.begin(), slot.accepted_ciphers.end());
        return fetch_plaintext_chain(host, port, v, offer, policy, pacer, budget);
    }
    if (matrix.supports(ProtocolVersion::TLS1_3))
        return fetch_tls13_chain(host, port, policy, pacer, budget);
    if (matrix.supports(ProtocolVersion::SSL2)) {
        // v2 carries a single certificate inline in its ServerHello.
        const VersionSupport& slot = matrix.per_version.at(ProtocolVersion::SSL2);
        std::vector<uint32_t> offer(slot.accepted_ciphers.begin(), slot.accepted_ciphers.end());
        ProbeResult r = probe_version(host, port, ProtocolVersion::SSL2, offer, policy, pacer,
                                      budget);
        if (!r.ssl2_certificate.empty()) {
            RawChain chain;
            chain.der_certificates.push_back(r.ssl2_certificate);
            chain.retrieval_path = RetrievalPath::PlaintextCertificateMessage;
            return chain;
        }
        fail(Errc::NoChainPresented, "v2 hello carried no certificate");
    }
    fail(Errc::NoChainPresented, "no TLS support detected");
}

} // namespace posture
