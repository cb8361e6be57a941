#include "posture/tls_wire.hpp"

#include <algorithm>
#include <cstring>

#include <openssl/rand.h>

#include "posture/bytes.hpp"
#include "posture/error.hpp"
#include "posture/util.hpp"

namespace posture {

namespace {

constexpr uint8_t kContentHandshake = 22;
constexpr uint8_t kContentAlert = 21;
constexpr uint8_t kHandshakeClientHello = 1;
constexpr uint8_t kHandshakeServerHello = 2;
constexpr uint16_t kExtServerName = 0x0000;
constexpr uint16_t kExtSupportedGroups = 0x000a;
constexpr uint16_t kExtSignatureAlgorithms = 0x000d;
constexpr uint16_t kExtSupportedVersions = 0x002b;
constexpr uint16_t kExtKeyShare = 0x0033;

std::vector<uint8_t> random_bytes(size_t n) {
    std::vector<uint8_t> out(n);
    RAND_bytes(out.data(), static_cast<int>(out.size()));
    return out;
}

bool is_ssl2_kind(uint32_t code) {
    for (uint32_t k : kSsl2CipherKinds)
        if (k == code) return true;
    return false;
}

void append_sni(ByteWriter& ext, const std::string& server_name) {
    ext.u16(kExtServerName);
    ext.u16(static_cast<uint16_t>(server_name.size() + 5));
    ext.u16(static_cast<uint16_t>(server_name.size() + 3)); // server_name_list
    ext.u8(0);                                              // host_name
    ext.u16(static_cast<uint16_t>(server_name.size()));
    ext.raw(server_name);
}

std::vector<uint8_t> build_ssl2_hello(const std::vector<uint32_t>& ciphers) {
    ByteWriter body;
    body.u8(1); // CLIENT-HELLO
    body.u16(0x0002);
    body.u16(static_cast<uint16_t>(ciphers.size() * 3));
    body.u16(0);  // session id
    body.u16(16); // challenge
    for (uint32_t c : ciphers) body.u24(c);
    body.raw(random_bytes(16));

    ByteWriter rec;
    rec.u16(static_cast<uint16_t>(0x8000 | body.buf.size()));
    rec.raw(body.buf);
    return rec.buf;
}

} // namespace

std::vector<uint8_t> build_client_hello(ProtocolVersion version,
                                        const std::vector<uint32_t>& ciphers,
                                        const std::string& server_name, bool offer_deflate) {
    if (ciphers.empty())
        fail(Errc::UnsupportedCombination, "empty cipher offer for " +
                                               std::string(version_name(version)));
    if (version == ProtocolVersion::SSL2) {
        for (uint32_t c : ciphers)
            if (!is_ssl2_kind(c))
                fail(Errc::UnsupportedCombination,
                     "cipher " + hex_code(c) + " is not an SSLv2 kind");
        if (offer_deflate)
            fail(Errc::UnsupportedCombination, "SSLv2 format has no compression field");
        return build_ssl2_hello(ciphers);
    }

    if (server_name.empty())
        fail(Errc::UnsupportedCombination, "SNI requires a server name");
    bool v13 = version == ProtocolVersion::TLS1_3;
    for (uint32_t c : ciphers) {
        if (c > 0xFFFF)
            fail(Errc::UnsupportedCombination, "cipher " + hex_code(c) + " needs SSLv2 format");
        bool thirteen_suite = c >= 0x1301 && c <= 0x1305;
        if (v13 != thirteen_suite)
            fail(Errc::UnsupportedCombination, "cipher " + hex_code(c) + " not valid for " +
                                                   std::string(version_name(version)));
    }

    ByteWriter body;
    body.u16(v13 ? 0x0303 : wire_code(version));
    body.raw(random_bytes(32));
    body.u8(0); // session id
    body.u16(static_cast<uint16_t>(ciphers.size() * 2));
    for (uint32_t c : ciphers) body.u16(static_cast<uint16_t>(c));
    if (offer_deflate) {
        body.u8(2);
        body.u8(1); // DEFLATE first, null fallback
        body.u8(0);
    } else {
        body.u8(1);
        body.u8(0);
    }

    ByteWriter ext;
    append_sni(ext, server_name);
    if (v13) {
        ext.u16(kExtSupportedVersions);
        ext.u16(3);
        ext.u8(2);
        ext.u16(0x0304);

        ext.u16(kExtSupportedGroups);
        ext.u16(6);
        ext.u16(4);
        ext.u16(0x001d); // x25519
        ext.u16(0x0017); // secp256r1

        ext.u16(kExtSignatureAlgorithms);
        ext.u16(18);
        ext.u16(16);
        for (uint16_t alg : {0x0403, 0x0804, 0x0401, 0x0503, 0x0805, 0x0501, 0x0806, 0x0601})
            ext.u16(alg);

        ext.u16(kExtKeyShare);
        ext.u16(38);
        ext.u16(36);
        ext.u16(0x001d);
        ext.u16(32);
        ext.raw(random_bytes(32)); // any 32 bytes is an x25519 point
    }
    body.u16(static_cast<uint16_t>(ext.buf.size()));
    body.raw(ext.buf);

    ByteWriter hs;
    hs.u8(kHandshakeClientHello);
    hs.u24(static_cast<uint32_t>(body.buf.size()));
    hs.raw(body.buf);

    ByteWriter rec;
    rec.u8(kContentHandshake);
    rec.u16(version == ProtocolVersion::SSL3 ? 0x0300 : 0x0301);
    rec.u16(static_cast<uint16_t>(hs.buf.size()));
    rec.raw(hs.buf);
    return rec.buf;
}

namespace {

ProbeResult parse_ssl2_response(const std::vector<uint32_t>& offered,
                                const std::vector<uint8_t>& bytes) {
    ProbeResult r;
    r.version = ProtocolVersion::SSL2;
    r.offered = offered;
    if (bytes.empty()) {
        r.outcome = RejectedClose{};
        return r;
    }
    if (bytes[0] == kContentAlert && bytes.size() >= 7) {
        // modern stack answering a v2 hello with a TLS alert
        if (bytes[5] == 2) {
            r.outcome = RejectedAlert{bytes[6]};
            return r;
        }
    }
    if (!(bytes[0] & 0x80)) {
        r.outcome = MalformedResponse{"not an SSLv2 record"};
        return r;
    }
    size_t rec_len = (static_cast<size_t>(bytes[0] & 0x7f) << 8) | bytes[1];
    if (bytes.size() < 2 + rec_len || rec_len < 1) {
        r.outcome = MalformedResponse{"truncated SSLv2 record"};
        return r;
    }
    try {
        ByteReader rd(bytes.data() + 2, rec_len);
        uint8_t msg_type = rd.u8();
        if (msg_type == 0) { // ERROR
            r.outcome = RejectedAlert{static_cast<uint8_t>(rd.u16() & 0xff)};
            return r;
        }
        if (msg_type != 4) { // SERVER-HELLO
            r.outcome = MalformedResponse{"unexpected SSLv2 message type"};
            return r;
        }
        rd.u8(); // session_id_hit
        rd.u8(); // certificate_type
        rd.u16(); // version
        uint16_t cert_len = rd.u16();
        uint16_t specs_len = rd.u16();
        uint16_t conn_len = rd.u16();
        r.ssl2_certificate = rd.bytes(cert_len);
        if (specs_len % 3 != 0) {
            r.outcome = MalformedResponse{"cipher spec length not a multiple of 3"};
            return r;
        }
        std::vector<uint32_t> advertised;
        for (uint16_t i = 0; i < specs_len; i += 3) advertised.push_back(rd.u24());
        rd.skip(conn_len);
        for (uint32_t c : offered)
            if (std::find(advertised.begin(), advertised.end(), c) != advertised.end())
                r.ssl2_kinds.push_back(c);
        if (r.ssl2_kinds.empty())
            r.outcome = RejectedClose{};
        else
            r.outcome = Accepted{r.ssl2_kinds.front()};
    } catch (const TruncatedInput&) {
        r.outcome = MalformedResponse{"truncated SSLv2 server hello"};
    }
    return r;
}

struct ServerHelloFields {
    uint16_t legacy_version = 0;
    uint32_t cipher = 0;
    int compression = -1;
    std::optional<uint16_t> supported_version;
};

bool parse_server_hello_body(const std::vector<uint8_t>& body, ServerHelloFields& out) {
    try {
        ByteReader rd(body.data(), body.size());
        out.legacy_version = rd.u16();
        rd.skip(32);
        uint8_t sid_len = rd.u8();
        rd.skip(sid_len);
        out.cipher = rd.u16();
        out.compression = rd.u8();
        if (!rd.done()) {
            uint16_t ext_len = rd.u16();
            ByteReader ext = rd.sub(ext_len);
            while (!ext.done()) {
                uint16_t type = ext.u16();
                uint16_t len = ext.u16();
                ByteReader val = ext.sub(len);
                if (type == kExtSupportedVersions && len == 2) out.supported_version = val.u16();
            }
        }
        return true;
    } catch (const TruncatedInput&) {
        return false;
    }
}

} // namespace

ProbeResult parse_server_response(ProtocolVersion version, const std::vector<uint32_t>& offered,
                                  const std::vector<uint8_t>& bytes) {
    if (version == ProtocolVersion::SSL2) return parse_ssl2_response(offered, bytes);

    ProbeResult r;
    r.version = version;
    r.offered = offered;
    if (bytes.empty()) {
        r.outcome = RejectedClose{};
        return r;
    }

    HandshakeBuffer hs;
    size_t pos = 0;
    bool saw_warning_only = true;
    while (pos < bytes.size()) {
        if (bytes.size() - pos < 5) {
            r.outcome = MalformedResponse{"truncated record header"};
            return r;
        }
        uint8_t type = bytes[pos];
        size_t len = (static_cast<size_t>(bytes[pos + 3]) << 8) | bytes[pos + 4];
        pos += 5;
        if (bytes.size() - pos < len) {
            r.outcome = MalformedResponse{"truncated record body"};
            return r;
        }
        std::vector<uint8_t> payload(bytes.begin() + pos, bytes.begin() + pos + len);
        pos += len;

        if (type == kContentAlert) {
            if (payload.size() < 2) {
                r.outcome = MalformedResponse{"short alert"};
                return r;
            }
            if (payload[0] == 2) {
                r.outcome = RejectedAlert{payload[1]};
                return r;
            }
            continue; // warning, keep reading
        }
        if (type != kContentHandshake) {
            r.outcome = MalformedResponse{"unexpected content type " + std::to_string(type)};
            return r;
        }
        saw_warning_only = false;
        hs.feed(payload);
        while (auto msg = hs.next_message()) {
            if (msg->first != kHandshakeServerHello) continue;
            ServerHelloFields f;
            if (!parse_server_hello_body(msg->second, f)) {
                r.outcome = MalformedResponse{"bad server hello"};
                return r;
            }
            r.compression = f.compression;
            if (version == ProtocolVersion::TLS1_3) {
                if (!f.supported_version || *f.supported_version != 0x0304) {
                    r.outcome = MalformedResponse{"version-downgrade"};
                    return r;
                }
            } else {
                uint16_t want = wire_code(version);
                if (f.legacy_version != want) {
                    r.outcome = MalformedResponse{f.legacy_version < want ? "version-downgrade"
                                                                          : "version mismatch"};
                    return r;
                }
            }
            if (std::find(offered.begin(), offered.end(), f.cipher) == offered.end()) {
                r.outcome = MalformedResponse{"cipher " + hex_code(f.cipher) +
                                              " outside the offered set"};
                return r;
            }
            r.outcome = Accepted{f.cipher};
            return r;
        }
    }
    if (saw_warning_only) {
        r.outcome = RejectedClose{};
        return r;
    }
    r.outcome = MalformedResponse{"connection ended before server hello"};
    return r;
}

RecordReadStatus read_tls_record(Socket& sock, std::chrono::milliseconds timeout, TlsRecord& out) {
    auto header = sock.read_exact(5, timeout);
    if (!header) return RecordReadStatus::Timeout;
    if (header->empty()) return RecordReadStatus::Closed;
    if (header->size() < 5) return RecordReadStatus::Malformed;
    out.content_type = (*header)[0];
    out.record_version = static_cast<uint16_t>(((*header)[1] << 8) | (*header)[2]);
    size_t len = (static_cast<size_t>((*header)[3]) << 8) | (*header)[4];
    if (len > (1u << 14) + 2048) return RecordReadStatus::Malformed;
    auto payload = sock.read_exact(len, timeout);
    if (!payload) return RecordReadStatus::Timeout;
    if (payload->size() < len) return RecordReadStatus::Malformed;
    out.payload = std::move(*payload);
    return RecordReadStatus::Ok;
}

std::optional<std::vector<std::vector<uint8_t>>> parse_certificate_body(
    const std::vector<uint8_t>& body) {
    try {
        ByteReader rd(body.data(), body.size());
        uint32_t total = rd.u24();
        ByteReader list = rd.sub(total);
        std::vector<std::vector<uint8_t>> certs;
        while (!list.done()) {
            uint32_t len = list.u24();
            certs.push_back(list.bytes(len));
        }
        return certs;
    } catch (const TruncatedInput&) {
        return std::nullopt;
    }
}

void HandshakeBuffer::feed(const std::vector<uint8_t>& record_payload) {
    buf_.insert(buf_.end(), record_payload.begin(), record_payload.end());
}

std::optional<std::pair<uint8_t, std::vector<uint8_t>>> HandshakeBuffer::next_message() {
    if (buf_.size() < 4) return std::nullopt;
    size_t len = (static_cast<size_t>(buf_[1]) << 16) | (static_cast<size_t>(buf_[2]) << 8) |
                 buf_[3];
    if (buf_.size() < 4 + len) return std::nullopt;
    uint8_t type = buf_[0];
    std::vector<uint8_t> body(buf_.begin() + 4, buf_.begin() + 4 + len);
    buf_.erase(buf_.begin(), buf_.begin() + 4 + len);
    return std::make_pair(type, std::move(body));
}

} // namespace posture
