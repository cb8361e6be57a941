#include "posture/simfleet.hpp"

#include <poll.h>
#include <unistd.h>

#include <atomic>
#include <cstring>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <openssl/err.h>
#include <openssl/pem.h>
#include <openssl/rand.h>
#include <openssl/ssl.h>

#include "posture/bytes.hpp"
#include "posture/error.hpp"
#include "posture/fleet_parse.hpp"
#include "posture/net.hpp"
#include "posture/util.hpp"

namespace posture {

const char* behavior_flag_name(BehaviorFlag f) {
    switch (f) {
    case BehaviorFlag::SlowResponder: return "SlowResponder";
    case BehaviorFlag::CloseOnHello: return "CloseOnHello";
    case BehaviorFlag::MalformedServerHello: return "MalformedServerHello";
    case BehaviorFlag::AcceptDeflate: return "AcceptDeflate";
    }
    return "?";
}

std::optional<BehaviorFlag> behavior_flag_from_name(const std::string& s) {
    for (auto f : {BehaviorFlag::SlowResponder, BehaviorFlag::CloseOnHello,
                   BehaviorFlag::MalformedServerHello, BehaviorFlag::AcceptDeflate})
        if (s == behavior_flag_name(f)) return f;
    return std::nullopt;
}

void validate_scenario(const ServerScenario& s, const CipherCatalog& catalog) {
    if (s.id.empty()) fail(Errc::ScenarioInvalid, "scenario without id");
    if (s.version_config.empty())
        fail(Errc::ScenarioInvalid, s.id + ": no versions configured");
    for (const auto& [version, ciphers] : s.version_config) {
        if (ciphers.empty())
            fail(Errc::ScenarioInvalid,
                 s.id + ": empty cipher set for " + version_name(version));
        for (uint32_t code : ciphers) {
            const CipherSuite* suite = catalog.find(code);
            if (!suite)
                fail(Errc::ScenarioInvalid,
                     s.id + ": unknown cipher " + hex_code(code));
            if (!suite->valid_for(version))
                fail(Errc::ScenarioInvalid, s.id + ": " + suite->iana_name +
                                                " is not a " + version_name(version) + " suite");
        }
    }
    if (s.tls13_only()) {
        // Served with a real TLS stack; a P-192 leaf has no TLS1.3 signature
        // scheme, and a PEM path carries no private key to serve with.
        if (s.chain_pem_path.empty() && s.chain_fixture.flaws.count(ChainIssueCode::WKY))
            fail(Errc::ScenarioInvalid,
                 s.id + ": TLS1.3-only cannot serve a weak-key fixture");
        if (!s.chain_pem_path.empty())
            fail(Errc::ScenarioInvalid, s.id + ": TLS1.3-only needs a generated fixture");
    }
    if (s.chain_pem_path.empty())
        expected_issues_for(s.chain_fixture); // throws if unsatisfiable
}

namespace {

std::string escape_banner(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '\r': out += "\\r"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\\': out += "\\\\"; break;
        default: out += c;
        }
    }
    return out;
}

std::string unescape_banner(const std::string& s) {
    std::string out;
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '\\' || i + 1 == s.size()) {
            out += s[i];
            continue;
        }
        switch (s[++i]) {
        case 'r': out += '\r'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case '\\': out += '\\'; break;
        default: out += '\\'; out += s[i];
        }
    }
    return out;
}

std::vector<std::string> split_any(const std::string& s, const std::string& seps) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (seps.find(c) != std::string::npos) {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

void parse_versions_field(ServerScenario& s, const std::string& value) {
    for (const auto& part : split(value, ';')) {
        auto p = trim(part);
        if (p.empty()) continue;
        auto colon = p.find(':');
        if (colon == std::string::npos)
            fail(Errc::SchemaError, s.id + ": bad versions entry '" + p + "'");
        auto v = version_from_name(trim(p.substr(0, colon)));
        if (!v) fail(Errc::SchemaError, s.id + ": unknown version in '" + p + "'");
        std::set<uint32_t> codes;
        for (const auto& tok : split(p.substr(colon + 1), '+')) {
            auto t = trim(tok);
            if (t.empty()) continue;
            codes.insert(parse_code_point(t, s.id));
        }
        if (codes.empty())
            fail(Errc::SchemaError, s.id + ": no ciphers for " + version_name(*v));
        s.version_config[*v] = std::move(codes);
    }
}

void parse_chain_field(ServerScenario& s, const std::string& value) {
    auto v = trim(value);
    if (starts_with(v, "pem:")) {
        s.chain_pem_path = trim(v.substr(4));
        return;
    }
    // flaws:SIG+WKY,depth:N -> the flaw-spec text form
    std::string flaws = "none";
    std::string depth;
    for (const auto& part : split(v, ',')) {
        auto p = trim(part);
        if (starts_with(p, "flaws:")) {
            flaws = trim(p.substr(6));
            for (char& c : flaws)
                if (c == '+') c = ',';
        } else if (starts_with(p, "depth:")) {
            depth = trim(p.substr(6));
        } else {
            fail(Errc::SchemaError, s.id + ": bad chain entry '" + p + "'");
        }
    }
    if (depth.empty()) fail(Errc::SchemaError, s.id + ": chain needs depth");
    s.chain_fixture = parse_flaw_spec("flaws=" + flaws + " depth=" + depth);
}

} // namespace

std::vector<ServerScenario> load_scenarios(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::IoError, "cannot open " + path);

    std::vector<ServerScenario> out;
    ServerScenario cur;
    bool open = false;
    auto flush = [&] {
        if (open) out.push_back(std::move(cur));
        cur = ServerScenario{};
        open = false;
    };

    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto t = trim(line);
        if (t.empty()) {
            flush();
            continue;
        }
        if (t[0] == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            fail(Errc::SchemaError, path + ": line without key=value: '" + t + "'");
        std::string key = trim(t.substr(0, eq));
        std::string value = t.substr(eq + 1);
        open = true;
        if (key == "id") {
            cur.id = trim(value);
        } else if (key == "versions") {
            parse_versions_field(cur, value);
        } else if (key == "chain") {
            parse_chain_field(cur, value);
        } else if (starts_with(key, "banner.")) {
            int port = static_cast<int>(parse_long(key.substr(7)));
            cur.banners[port] = unescape_banner(value);
        } else if (key == "flags") {
            for (const auto& name : split_any(value, "/+, ")) {
                auto f = behavior_flag_from_name(trim(name));
                if (!f) fail(Errc::SchemaError, cur.id + ": unknown flag '" + name + "'");
                cur.behavior_flags.insert(*f);
            }
        } else {
            fail(Errc::SchemaError, path + ": unknown key '" + key + "'");
        }
    }
    flush();
    if (out.empty()) fail(Errc::SchemaError, path + ": no scenarios");
    return out;
}

std::string scenario_to_text(const ServerScenario& s) {
    std::ostringstream o;
    o << "id=" << s.id << "\n";
    o << "versions=";
    bool first_v = true;
    for (const auto& [version, ciphers] : s.version_config) {
        if (!first_v) o << ";";
        first_v = false;
        o << version_name(version) << ":";
        bool first_c = true;
        for (uint32_t code : ciphers) {
            if (!first_c) o << "+";
            first_c = false;
            o << hex_code(code);
        }
    }
    o << "\n";
    if (!s.chain_pem_path.empty()) {
        o << "chain=pem:" << s.chain_pem_path << "\n";
    } else {
        o << "chain=flaws:";
        if (s.chain_fixture.flaws.empty()) {
            o << "none";
        } else {
            bool first = true;
            for (auto c : s.chain_fixture.flaws) {
                if (!first) o << "+";
                first = false;
                o << issue_code_name(c);
            }
        }
        o << ",depth:" << s.chain_fixture.depth << "\n";
    }
    for (const auto& [port, banner] : s.banners)
        o << "banner." << port << "=" << escape_banner(banner) << "\n";
    if (!s.behavior_flags.empty()) {
        o << "flags=";
        bool first = true;
        for (auto f : s.behavior_flags) {
            if (!first) o << "/";
            first = false;
            o << behavior_flag_name(f);
        }
        o << "\n";
    }
    return o.str();
}

void save_scenarios(const std::string& path, const std::vector<ServerScenario>& scenarios) {
    std::ofstream out(path);
    if (!out) fail(Errc::IoError, "cannot write " + path);
    bool first = true;
    for (const auto& s : scenarios) {
        if (!first) out << "\n";
        first = false;
        out << scenario_to_text(s);
    }
}

// ---------------------------------------------------------------------------
// Fleet runtime

namespace {

using Clock = std::chrono::steady_clock;
using Ms = std::chrono::milliseconds;

constexpr Ms kServeReadTimeout{2000};
constexpr Ms kServeWriteTimeout{2000};

std::string loopback_ip(size_t idx) {
    // A per-process 127/8 subrange so concurrently running harnesses cannot
    // collide on (address, declared-port) pairs.
    int salt = 64 + static_cast<int>(getpid() % 128);
    return "127." + std::to_string(salt) + "." + std::to_string(idx / 250) + "." +
           std::to_string(1 + idx % 250);
}

std::vector<uint8_t> der_from_pem_block(const std::string& pem) {
    auto blobs = pem_to_der_blocks(pem);
    if (blobs.size() != 1) fail(Errc::SchemaError, "expected one PEM certificate block");
    return blobs[0];
}

// --- mock response construction ---

std::vector<uint8_t> tls_record(uint8_t content_type, uint16_t version,
                                const std::vector<uint8_t>& payload) {
    ByteWriter w;
    w.u8(content_type);
    w.u16(version);
    w.u16(static_cast<uint16_t>(payload.size()));
    w.raw(payload);
    return w.buf;
}

std::vector<uint8_t> alert_record(uint16_t record_version, uint8_t code) {
    return tls_record(21, record_version, {2, code});
}

std::vector<uint8_t> handshake_message(uint8_t type, const std::vector<uint8_t>& body) {
    ByteWriter w;
    w.u8(type);
    w.u24(static_cast<uint32_t>(body.size()));
    w.raw(body);
    return w.buf;
}

std::vector<uint8_t> server_hello_body(uint16_t legacy_version, uint32_t cipher,
                                       uint8_t compression, bool tls13) {
    ByteWriter w;
    w.u16(legacy_version);
    uint8_t rnd[32];
    RAND_bytes(rnd, sizeof(rnd));
    w.raw(rnd, sizeof(rnd));
    w.u8(0); // no session id
    w.u16(static_cast<uint16_t>(cipher));
    w.u8(compression);
    if (tls13) {
        ByteWriter ext;
        ext.u16(0x002b); // supported_versions: the selected version
        ext.u16(2);
        ext.u16(0x0304);
        ext.u16(0x0033); // key_share: x25519 with an arbitrary point
        ext.u16(4 + 32);
        ext.u16(0x001d);
        ext.u16(32);
        RAND_bytes(rnd, sizeof(rnd));
        ext.raw(rnd, sizeof(rnd));
        w.u16(static_cast<uint16_t>(ext.buf.size()));
        w.raw(ext.buf);
    }
    return w.buf;
}

std::vector<uint8_t> certificate_body(const std::vector<std::vector<uint8_t>>& ders) {
    ByteWriter w;
    size_t total = w.mark();
    w.u24(0);
    for (const auto& der : ders) {
        w.u24(static_cast<uint32_t>(der.size()));
        w.raw(der);
    }
    w.patch_u24(total, static_cast<uint32_t>(w.buf.size() - total - 3));
    return w.buf;
}

std::vector<uint8_t> v2_server_hello(const std::vector<uint32_t>& kinds,
                                     const std::vector<uint8_t>& cert_der) {
    ByteWriter body;
    body.u8(4); // SERVER-HELLO
    body.u8(0); // session_id_hit
    body.u8(1); // certificate type X.509
    body.u16(0x0002);
    body.u16(static_cast<uint16_t>(cert_der.size()));
    body.u16(static_cast<uint16_t>(kinds.size() * 3));
    body.u16(16);
    body.raw(cert_der);
    for (uint32_t k : kinds) body.u24(k);
    uint8_t conn[16];
    RAND_bytes(conn, sizeof(conn));
    body.raw(conn, sizeof(conn));

    ByteWriter w;
    w.u16(static_cast<uint16_t>(0x8000 | body.buf.size()));
    w.raw(body.buf);
    return w.buf;
}

std::vector<uint8_t> v2_error_record() {
    ByteWriter body;
    body.u8(0);      // ERROR
    body.u16(0x0001); // NO-CIPHER-ERROR
    ByteWriter w;
    w.u16(static_cast<uint16_t>(0x8000 | body.buf.size()));
    w.raw(body.buf);
    return w.buf;
}

} // namespace

struct Fleet::Impl {
    struct Server {
        ServerScenario scenario;
        FleetEndpoint ep;
        FixtureChain fixture;
        std::vector<std::vector<uint8_t>> chain_der; // leaf first
        SSL_CTX* ctx13 = nullptr;
        Listener tls_listener;
        std::vector<std::pair<int, Listener>> banner_listeners;
        std::thread worker;
        mutable std::mutex mu;
        std::vector<ConnectionRecord> log;

        ~Server() {
            if (ctx13) SSL_CTX_free(ctx13);
        }

        void record(int port, size_t bytes_in, const std::string& response) {
            std::lock_guard<std::mutex> lock(mu);
            log.push_back({Clock::now(), port, bytes_in, response});
        }
        // Accept order equals log order: appended once at accept time, the
        // response tag patched in after handling.
        size_t note_accept(int port) {
            std::lock_guard<std::mutex> lock(mu);
            log.push_back({Clock::now(), port, 0, ""});
            return log.size() - 1;
        }
        void finish(size_t slot, size_t bytes_in, const std::string& response) {
            std::lock_guard<std::mutex> lock(mu);
            log[slot].bytes_in = bytes_in;
            log[slot].response = response;
        }
    };

    std::vector<std::unique_ptr<Server>> servers;
    std::atomic<bool> stop{false};
    bool running = false;

    void serve(Server& srv);
    std::pair<size_t, std::string> handle_tls(Server& srv, Socket& sock);
    std::pair<size_t, std::string> handle_tls13_real(Server& srv, Socket& sock);
    std::pair<size_t, std::string> handle_banner(Server& srv, Socket& sock,
                                                 const std::string& banner);
};

namespace {

SSL_CTX* make_tls13_ctx(const ServerScenario& sc, const FixtureChain& fixture,
                        const CipherCatalog& catalog) {
    SSL_CTX* ctx = SSL_CTX_new(TLS_server_method());
    if (!ctx) fail(Errc::Internal, "SSL_CTX_new failed");
    // Level 0 so fixture chains with short keys or SHA-1 signatures still
    // serve; the point is to present them, not to endorse them.
    SSL_CTX_set_security_level(ctx, 0);
    SSL_CTX_set_min_proto_version(ctx, TLS1_3_VERSION);
    SSL_CTX_set_max_proto_version(ctx, TLS1_3_VERSION);

    std::string names;
    for (uint32_t code : sc.version_config.at(ProtocolVersion::TLS1_3)) {
        if (!names.empty()) names += ":";
        names += catalog.lookup(code).iana_name;
    }
    if (SSL_CTX_set_ciphersuites(ctx, names.c_str()) != 1) {
        SSL_CTX_free(ctx);
        fail(Errc::ScenarioInvalid, sc.id + ": ciphersuites '" + names + "' rejected");
    }

    auto use_pem = [&](const std::string& pem, auto&& fn) {
        BIO* bio = BIO_new_mem_buf(pem.data(), static_cast<int>(pem.size()));
        bool ok = fn(bio);
        BIO_free(bio);
        if (!ok) {
            SSL_CTX_free(ctx);
            fail(Errc::Internal, sc.id + ": fixture PEM rejected by TLS stack");
        }
    };
    use_pem(fixture.chain_pem[0], [&](BIO* bio) {
        X509* x = PEM_read_bio_X509(bio, nullptr, nullptr, nullptr);
        if (!x) return false;
        bool ok = SSL_CTX_use_certificate(ctx, x) == 1;
        X509_free(x);
        return ok;
    });
    use_pem(fixture.leaf_key_pem, [&](BIO* bio) {
        EVP_PKEY* k = PEM_read_bio_PrivateKey(bio, nullptr, nullptr, nullptr);
        if (!k) return false;
        bool ok = SSL_CTX_use_PrivateKey(ctx, k) == 1;
        EVP_PKEY_free(k);
        return ok;
    });
    for (size_t i = 1; i < fixture.chain_pem.size(); ++i) {
        use_pem(fixture.chain_pem[i], [&](BIO* bio) {
            X509* x = PEM_read_bio_X509(bio, nullptr, nullptr, nullptr);
            if (!x) return false;
            // add_extra_chain_cert takes ownership
            return SSL_CTX_add_extra_chain_cert(ctx, x) == 1;
        });
    }
    if (SSL_CTX_check_private_key(ctx) != 1) {
        SSL_CTX_free(ctx);
        fail(Errc::Internal, sc.id + ": fixture key does not match leaf");
    }
    return ctx;
}

} // namespace

std::pair<size_t, std::string> Fleet::Impl::handle_tls13_real(Server& srv, Socket& sock) {
    SSL* ssl = SSL_new(srv.ctx13);
    if (!ssl) return {0, "tls13-error"};
    SSL_set_fd(ssl, sock.fd());
    auto deadline = Clock::now() + Ms{3000};
    bool established = false;
    for (;;) {
        int rc = SSL_accept(ssl);
        if (rc == 1) {
            established = true;
            break;
        }
        int err = SSL_get_error(ssl, rc);
        if (err != SSL_ERROR_WANT_READ && err != SSL_ERROR_WANT_WRITE) break;
        auto left = std::chrono::duration_cast<Ms>(deadline - Clock::now());
        if (left.count() <= 0) break;
        pollfd pfd{sock.fd(), static_cast<short>(err == SSL_ERROR_WANT_READ ? POLLIN : POLLOUT),
                   0};
        ::poll(&pfd, 1, static_cast<int>(left.count()));
        if (stop.load()) break;
    }
    ERR_clear_error();
    if (established) {
        // Let the peer read its fill; it closes once it has the chain.
        uint8_t scratch[512];
        auto idle = Clock::now() + Ms{1000};
        while (Clock::now() < idle && !stop.load()) {
            pollfd pfd{sock.fd(), POLLIN, 0};
            if (::poll(&pfd, 1, 50) <= 0) continue;
            int n = SSL_read(ssl, scratch, sizeof(scratch));
            if (n <= 0) break;
        }
        SSL_shutdown(ssl);
    }
    SSL_free(ssl);
    return {0, established ? "tls13-handshake" : "tls13-reject"};
}

std::pair<size_t, std::string> Fleet::Impl::handle_tls(Server& srv, Socket& sock) {
    const auto& sc = srv.scenario;
    bool real13 = sc.tls13_only() && !sc.behavior_flags.count(BehaviorFlag::CloseOnHello) &&
                  !sc.behavior_flags.count(BehaviorFlag::MalformedServerHello);
    if (real13) return handle_tls13_real(srv, sock);

    std::vector<uint8_t> buf;
    auto deadline = Clock::now() + kServeReadTimeout;
    for (;;) {
        size_t missing = client_hello_bytes_missing(buf);
        if (missing == 0) break;
        auto left = std::chrono::duration_cast<Ms>(deadline - Clock::now());
        if (left.count() <= 0) return {buf.size(), "hello-timeout"};
        auto chunk = sock.read_some(missing, left);
        if (!chunk) return {buf.size(), "hello-timeout"};
        if (chunk->empty()) return {buf.size(), "peer-closed"};
        buf.insert(buf.end(), chunk->begin(), chunk->end());
    }

    auto hello = parse_client_hello(buf);
    if (sc.behavior_flags.count(BehaviorFlag::CloseOnHello))
        return {buf.size(), "close-on-hello"};
    if (sc.behavior_flags.count(BehaviorFlag::SlowResponder))
        std::this_thread::sleep_for(Ms{kSlowResponderDelayMs});
    if (!hello) return {buf.size(), "unparseable-hello"};

    auto respond = [&](const std::vector<uint8_t>& bytes, const char* tag)
        -> std::pair<size_t, std::string> {
        sock.write_all(bytes, kServeWriteTimeout);
        return {buf.size(), tag};
    };

    if (hello->is_v2) {
        auto it = sc.version_config.find(ProtocolVersion::SSL2);
        if (it == sc.version_config.end()) return {buf.size(), "ssl2-close"};
        std::vector<uint32_t> kinds;
        for (uint32_t k : hello->ciphers)
            if (it->second.count(k)) kinds.push_back(k);
        if (kinds.empty()) return respond(v2_error_record(), "v2-error");
        return respond(v2_server_hello(kinds, srv.chain_der[0]), "v2-hello");
    }

    bool wants13 = false;
    for (uint16_t v : hello->supported_versions)
        if (v == 0x0304) wants13 = true;
    std::optional<ProtocolVersion> req;
    if (wants13)
        req = ProtocolVersion::TLS1_3;
    else
        req = version_from_wire(hello->body_version);

    uint16_t rv = hello->record_version ? hello->record_version : 0x0301;
    if (!req || !sc.version_config.count(*req))
        return respond(alert_record(rv, 70), "alert-70");

    const auto& configured = sc.version_config.at(*req);
    uint32_t chosen = 0;
    bool found = false;
    for (uint32_t c : hello->ciphers) {
        if (configured.count(c)) {
            chosen = c;
            found = true;
            break;
        }
    }
    if (sc.behavior_flags.count(BehaviorFlag::MalformedServerHello)) {
        chosen = 0x00FF; // never a real suite in any offer
        found = true;
    }
    if (!found) return respond(alert_record(rv, 40), "alert-40");

    bool tls13 = *req == ProtocolVersion::TLS1_3;
    uint16_t legacy = tls13 ? 0x0303 : wire_code(*req);
    uint8_t compression = 0;
    if (!tls13 && sc.behavior_flags.count(BehaviorFlag::AcceptDeflate)) {
        for (uint8_t m : hello->compressions)
            if (m == 1) compression = 1;
    }

    ByteWriter out;
    out.raw(tls_record(22, legacy,
                       handshake_message(2, server_hello_body(legacy, chosen, compression,
                                                              tls13))));
    if (!tls13) {
        ByteWriter flight;
        flight.raw(handshake_message(11, certificate_body(srv.chain_der)));
        flight.raw(handshake_message(14, {}));
        out.raw(tls_record(22, legacy, flight.buf));
    }
    return respond(out.buf, tls13 ? "server-hello-13" : "server-hello");
}

std::pair<size_t, std::string> Fleet::Impl::handle_banner(Server& srv, Socket& sock,
                                                          const std::string& banner) {
    (void)srv;
    size_t bytes_in = 0;
    if (starts_with(banner, "HTTP/")) {
        std::vector<uint8_t> buf;
        auto deadline = Clock::now() + kServeReadTimeout;
        while (Clock::now() < deadline) {
            auto chunk = sock.read_some(1024, Ms{100});
            if (chunk && chunk->empty()) break;
            if (chunk) {
                buf.insert(buf.end(), chunk->begin(), chunk->end());
                std::string s(buf.begin(), buf.end());
                if (s.find("\r\n\r\n") != std::string::npos) break;
            }
            if (stop.load()) break;
        }
        bytes_in = buf.size();
    }
    sock.write_all(banner, kServeWriteTimeout);
    return {bytes_in, "banner"};
}

void Fleet::Impl::serve(Server& srv) {
    std::vector<pollfd> fds;
    fds.push_back({srv.tls_listener.fd(), POLLIN, 0});
    for (auto& [port, listener] : srv.banner_listeners)
        fds.push_back({listener.fd(), POLLIN, 0});

    while (!stop.load()) {
        for (auto& p : fds) p.revents = 0;
        int rc = ::poll(fds.data(), fds.size(), 50);
        if (rc <= 0) continue;
        for (size_t i = 0; i < fds.size(); ++i) {
            if (!(fds[i].revents & POLLIN)) continue;
            bool is_tls = i == 0;
            Listener& l = is_tls ? srv.tls_listener : srv.banner_listeners[i - 1].second;
            auto sock = l.accept(Ms{0});
            if (!sock) continue;
            int declared_port = is_tls ? 0 : srv.banner_listeners[i - 1].first;
            size_t slot = srv.note_accept(declared_port);
            std::pair<size_t, std::string> result;
            try {
                if (is_tls)
                    result = handle_tls(srv, *sock);
                else
                    result = handle_banner(srv, *sock, srv.scenario.banners.at(declared_port));
            } catch (const std::exception& e) {
                result = {0, std::string("handler-error: ") + e.what()};
            }
            sock->close();
            srv.finish(slot, result.first, result.second);
        }
    }
}

Fleet::Fleet() : impl_(new Impl) {}
Fleet::Fleet(Fleet&&) noexcept = default;
Fleet& Fleet::operator=(Fleet&&) noexcept = default;

Fleet::~Fleet() { shutdown(); }

void Fleet::shutdown() {
    if (!impl_ || !impl_->running) return;
    impl_->stop.store(true);
    for (auto& srv : impl_->servers)
        if (srv->worker.joinable()) srv->worker.join();
    impl_->running = false;
}

Fleet Fleet::spawn(std::vector<ServerScenario> scenarios, const CipherCatalog& catalog) {
    ignore_sigpipe();
    Fleet fleet;
    auto& impl = *fleet.impl_;
    for (size_t i = 0; i < scenarios.size(); ++i) {
        validate_scenario(scenarios[i], catalog);
        auto srv = std::make_unique<Impl::Server>();
        srv->scenario = std::move(scenarios[i]);
        std::string ip = loopback_ip(i);

        if (!srv->scenario.chain_pem_path.empty()) {
            std::string pem = read_file(srv->scenario.chain_pem_path);
            srv->fixture.hostname = ip;
            for (const auto& der : pem_to_der_blocks(pem)) srv->chain_der.push_back(der);
            if (srv->chain_der.empty())
                fail(Errc::ScenarioInvalid,
                     srv->scenario.id + ": no certificates in " + srv->scenario.chain_pem_path);
            // keep the PEM blocks too so trust_store_pem stays meaningful
            srv->fixture.chain_pem = {pem};
        } else {
            srv->fixture = generate_fixture_chain(srv->scenario.chain_fixture, ip);
            for (const auto& pem : srv->fixture.chain_pem)
                srv->chain_der.push_back(der_from_pem_block(pem));
        }

        srv->ep.host = ip;
        srv->tls_listener = Listener::bind(ip, 0);
        srv->ep.tls_port = srv->tls_listener.port();
        for (const auto& [port, banner] : srv->scenario.banners) {
            (void)banner;
            srv->banner_listeners.emplace_back(port, Listener::bind(ip, port));
            srv->ep.banner_ports.push_back(port);
        }
        if (srv->scenario.tls13_only())
            srv->ctx13 = make_tls13_ctx(srv->scenario, srv->fixture, catalog);

        impl.servers.push_back(std::move(srv));
    }
    for (auto& srv : impl.servers)
        srv->worker = std::thread([&impl, s = srv.get()] { impl.serve(*s); });
    impl.running = true;
    return fleet;
}

size_t Fleet::size() const { return impl_->servers.size(); }

const ServerScenario& Fleet::scenario(size_t i) const { return impl_->servers.at(i)->scenario; }

const FleetEndpoint& Fleet::endpoint(size_t i) const { return impl_->servers.at(i)->ep; }

const FixtureChain& Fleet::fixture(size_t i) const { return impl_->servers.at(i)->fixture; }

int Fleet::connection_count(size_t i) const {
    auto& srv = *impl_->servers.at(i);
    std::lock_guard<std::mutex> lock(srv.mu);
    return static_cast<int>(srv.log.size());
}

std::vector<ConnectionRecord> Fleet::connection_log(size_t i) const {
    auto& srv = *impl_->servers.at(i);
    std::lock_guard<std::mutex> lock(srv.mu);
    return srv.log;
}

std::string Fleet::trust_store_pem() const {
    std::string out;
    for (const auto& srv : impl_->servers)
        for (const auto& pem : srv->fixture.store_pem) out += pem;
    return out;
}

RevocationData Fleet::revocations() const {
    RevocationData out;
    for (const auto& srv : impl_->servers) {
        const auto& r = srv->fixture.revocations;
        out.revoked.insert(r.revoked.begin(), r.revoked.end());
        out.covered_issuers.insert(r.covered_issuers.begin(), r.covered_issuers.end());
        out.blocklist.insert(r.blocklist.begin(), r.blocklist.end());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Seeded scenario generation

namespace {

struct BannerChoice {
    int port;
    std::string banner;
};

const std::vector<BannerChoice>& banner_pool() {
    static const std::vector<BannerChoice> pool = {
        {2222, "SSH-2.0-OpenSSH_7.4"},
        {2222, "SSH-2.0-OpenSSH_8.9p1 Ubuntu-3ubuntu0.1"},
        {8080, "HTTP/1.0 200 OK\r\nServer: Apache/2.4.52 (Unix)\r\n\r\n"},
        {8080, "HTTP/1.0 200 OK\r\nServer: Apache/2.4.41 (Unix)\r\n\r\n"},
        {8080, "HTTP/1.0 200 OK\r\nServer: Apache/2.4.58 (Unix)\r\n\r\n"},
        {8080, "HTTP/1.0 200 OK\r\nServer: nginx/1.18.0\r\n\r\n"},
        {2121, "220 ProFTPD 1.3.7e Server ready."},
        {2525, "220 mail.fixture.test ESMTP Postfix (3.6.4)"},
    };
    return pool;
}

} // namespace

std::vector<ScenarioWithTruth> random_scenarios(uint64_t seed, int n,
                                                const CipherCatalog& catalog,
                                                const std::vector<FingerprintRule>& rules,
                                                const NvdIndex& index) {
    if (n < 1) fail(Errc::SchemaError, "scenario count must be at least 1");
    std::mt19937 rng(static_cast<uint32_t>(seed ^ (seed >> 32)));
    auto pick = [&](int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(rng);
    };

    const std::vector<ProtocolVersion> v3plus = {
        ProtocolVersion::SSL3, ProtocolVersion::TLS1_0, ProtocolVersion::TLS1_1,
        ProtocolVersion::TLS1_2, ProtocolVersion::TLS1_3};

    auto corpus = fixture_corpus();

    std::vector<ScenarioWithTruth> out;
    for (int i = 0; i < n; ++i) {
        ScenarioWithTruth st;
        auto& sc = st.scenario;
        sc.id = "rand-" + std::to_string(i);

        // Version subset: always at least one v3+ family, SSLv2 sometimes on top.
        std::set<ProtocolVersion> versions;
        versions.insert(v3plus[static_cast<size_t>(pick(0, 4))]);
        for (auto v : v3plus)
            if (pick(0, 99) < 35) versions.insert(v);
        if (pick(0, 99) < 20) versions.insert(ProtocolVersion::SSL2);

        for (auto v : versions) {
            auto candidates = catalog.suites_for_version(v);
            std::set<uint32_t> chosen;
            int want = pick(1, 4);
            for (int k = 0; k < want; ++k)
                chosen.insert(candidates[static_cast<size_t>(
                    pick(0, static_cast<int>(candidates.size()) - 1))]);
            sc.version_config[v] = std::move(chosen);
        }

        // Fixture spec; TLS1.3-only scenarios are served by a real TLS stack
        // that cannot sign with a P-192 leaf, so resample those.
        for (;;) {
            FlawSpec spec;
            int roll = pick(0, 99);
            if (roll < 35) {
                spec = FlawSpec{{}, pick(1, 4)};
            } else {
                spec = corpus[static_cast<size_t>(
                    pick(0, static_cast<int>(corpus.size()) - 1))];
            }
            if (sc.tls13_only() && spec.flaws.count(ChainIssueCode::WKY)) continue;
            sc.chain_fixture = spec;
            break;
        }

        int n_banners = pick(0, 2);
        std::set<int> used_ports;
        for (int b = 0; b < n_banners; ++b) {
            const auto& choice = banner_pool()[static_cast<size_t>(
                pick(0, static_cast<int>(banner_pool().size()) - 1))];
            if (used_ports.count(choice.port)) continue;
            used_ports.insert(choice.port);
            sc.banners[choice.port] = choice.banner;
        }

        if (pick(0, 99) < 15 && sc.version_config.count(ProtocolVersion::TLS1_2))
            sc.behavior_flags.insert(BehaviorFlag::AcceptDeflate);

        validate_scenario(sc, catalog);

        auto& ex = st.expected;
        ex.versions = sc.version_config;
        ex.deflate = sc.behavior_flags.count(BehaviorFlag::AcceptDeflate) > 0 &&
                     sc.version_config.count(ProtocolVersion::TLS1_2) > 0;
        for (const auto& [version, ciphers] : sc.version_config) {
            (void)version;
            for (uint32_t code : ciphers) {
                switch (catalog.lookup(code).classification) {
                case Classification::Weak: ex.weak.insert(code); break;
                case Classification::Insecure: ex.insecure.insert(code); break;
                case Classification::Strong: break;
                }
            }
        }
        ex.chain_issues = expected_issues_for(sc.chain_fixture);
        ex.chain_trusted = true;
        for (const auto& issue : ex.chain_issues)
            if (issue_breaks_trust(issue.code)) ex.chain_trusted = false;
        for (const auto& [port, banner] : sc.banners) {
            auto fp = match_banner(rules, port, banner);
            if (!fp) continue;
            ex.services[port] = *fp;
            for (const auto& id : index.lookup(*fp)) ex.cve_ids.insert(id);
        }

        out.push_back(std::move(st));
    }
    return out;
}

} // namespace posture
