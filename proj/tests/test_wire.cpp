#include <doctest.h>

#include <random>

#include "posture/bytes.hpp"
#include "posture/cipher_catalog.hpp"
#include "posture/fleet_parse.hpp"
#include "posture/tls_wire.hpp"
#include "posture/util.hpp"
#include "test_support.hpp"

using namespace posture;

namespace {

const CipherCatalog& shipped() {
    static CipherCatalog c = CipherCatalog::load(data_dir() + "/cipher_catalog.csv");
    return c;
}

// Server response builders, written from the RFC layouts rather than reusing
// any library helper, so the classifier is checked against a second opinion.
std::vector<uint8_t> record(uint8_t type, uint16_t ver, const std::vector<uint8_t>& payload) {
    ByteWriter w;
    w.u8(type);
    w.u16(ver);
    w.u16(static_cast<uint16_t>(payload.size()));
    w.raw(payload);
    return w.buf;
}

std::vector<uint8_t> handshake(uint8_t msg_type, const std::vector<uint8_t>& body) {
    ByteWriter w;
    w.u8(msg_type);
    w.u24(static_cast<uint32_t>(body.size()));
    w.raw(body);
    return w.buf;
}

std::vector<uint8_t> server_hello(uint16_t legacy, uint16_t cipher, uint8_t compression,
                                  std::optional<uint16_t> selected_version = std::nullopt) {
    ByteWriter b;
    b.u16(legacy);
    for (int i = 0; i < 32; ++i) b.u8(static_cast<uint8_t>(i));
    b.u8(0); // empty session id
    b.u16(cipher);
    b.u8(compression);
    ByteWriter ext;
    if (selected_version) {
        ext.u16(0x002b);
        ext.u16(2);
        ext.u16(*selected_version);
    }
    b.u16(static_cast<uint16_t>(ext.buf.size()));
    b.raw(ext.buf);
    return b.buf;
}

std::vector<uint8_t> alert(uint8_t level, uint8_t code) {
    return record(21, 0x0303, {level, code});
}

} // namespace

TEST_CASE("client hello round trips through the independent parser") {
    std::mt19937 rng(0x5eed);
    const auto& catalog = shipped();
    const char* names[] = {"gov.example", "a.b.c.example", "x.test"};

    for (int iter = 0; iter < 400; ++iter) {
        ProtocolVersion v = kAllVersions[rng() % 6];
        std::vector<uint32_t> pool;
        if (v == ProtocolVersion::SSL2) {
            pool.assign(std::begin(kSsl2CipherKinds), std::end(kSsl2CipherKinds));
        } else if (v == ProtocolVersion::TLS1_3) {
            pool = {0x1301, 0x1302, 0x1303, 0x1304, 0x1305};
        } else {
            for (uint32_t c : catalog.suites_for_version(v))
                if (c <= 0xFFFF && !(c >= 0x1301 && c <= 0x1305)) pool.push_back(c);
        }
        std::shuffle(pool.begin(), pool.end(), rng);
        size_t n = 1 + rng() % std::min<size_t>(pool.size(), 12);
        std::vector<uint32_t> offer(pool.begin(), pool.begin() + n);
        std::string sni = names[rng() % 3];
        bool deflate = v != ProtocolVersion::SSL2 && rng() % 4 == 0;

        auto hello = build_client_hello(v, offer, sni, deflate);
        auto parsed = parse_client_hello(hello);
        REQUIRE(parsed.has_value());
        CHECK(parsed->ciphers == offer); // exact content and order

        if (v == ProtocolVersion::SSL2) {
            CHECK(parsed->is_v2);
            CHECK(parsed->sni.empty());
        } else {
            CHECK_FALSE(parsed->is_v2);
            CHECK(parsed->sni == sni);
            uint16_t expect_record = v == ProtocolVersion::SSL3 ? 0x0300 : 0x0301;
            CHECK(parsed->record_version == expect_record);
            if (v == ProtocolVersion::TLS1_3) {
                CHECK(parsed->body_version == 0x0303);
                CHECK(parsed->supported_versions == std::vector<uint16_t>{0x0304});
                CHECK(parsed->has_key_share);
            } else {
                CHECK(parsed->body_version == wire_code(v));
                CHECK(parsed->supported_versions.empty());
                CHECK_FALSE(parsed->has_key_share);
            }
            auto expect_comp = deflate ? std::vector<uint8_t>{1, 0} : std::vector<uint8_t>{0};
            CHECK(parsed->compressions == expect_comp);
        }
    }
}

TEST_CASE("hello construction rejects impossible offers") {
    using V = ProtocolVersion;
    CHECK_EQ(code_of([] { build_client_hello(V::TLS1_2, {}, "x.test"); }),
             Errc::UnsupportedCombination);
    CHECK_EQ(code_of([] { build_client_hello(V::SSL2, {0xC02F}, "x.test"); }),
             Errc::UnsupportedCombination);
    CHECK_EQ(code_of([] { build_client_hello(V::SSL2, {0x010080}, "x.test", true); }),
             Errc::UnsupportedCombination);
    CHECK_EQ(code_of([] { build_client_hello(V::TLS1_2, {0x010080}, "x.test"); }),
             Errc::UnsupportedCombination);
    CHECK_EQ(code_of([] { build_client_hello(V::TLS1_2, {0x1301}, "x.test"); }),
             Errc::UnsupportedCombination);
    CHECK_EQ(code_of([] { build_client_hello(V::TLS1_3, {0xC02F}, "x.test"); }),
             Errc::UnsupportedCombination);
    CHECK_EQ(code_of([] { build_client_hello(V::TLS1_2, {0xC02F}, ""); }),
             Errc::UnsupportedCombination);
}

TEST_CASE("bytes_missing walks a hello to completion") {
    for (ProtocolVersion v : {ProtocolVersion::SSL2, ProtocolVersion::SSL3,
                              ProtocolVersion::TLS1_2, ProtocolVersion::TLS1_3}) {
        std::vector<uint32_t> offer =
            v == ProtocolVersion::SSL2 ? std::vector<uint32_t>{0x010080, 0x060040}
            : v == ProtocolVersion::TLS1_3 ? std::vector<uint32_t>{0x1301}
                                           : std::vector<uint32_t>{0xC02F, 0x002F};
        auto full = build_client_hello(v, offer, "walk.test");
        CHECK(client_hello_bytes_missing(full) == 0);
        REQUIRE(parse_client_hello(full).has_value());

        // grow from one byte, always by exactly what the parser asks for
        std::vector<uint8_t> got(full.begin(), full.begin() + 1);
        int rounds = 0;
        while (got.size() < full.size()) {
            size_t need = client_hello_bytes_missing(got);
            REQUIRE(need > 0);
            REQUIRE(got.size() + need <= full.size());
            got.insert(got.end(), full.begin() + got.size(), full.begin() + got.size() + need);
            REQUIRE(++rounds < 100);
        }
        CHECK(client_hello_bytes_missing(got) == 0);
        CHECK(parse_client_hello(got).has_value());
        // incomplete prefixes never parse
        std::vector<uint8_t> prefix(full.begin(), full.end() - 1);
        CHECK_FALSE(parse_client_hello(prefix).has_value());
    }
}

TEST_CASE("garbage never parses as a client hello") {
    std::mt19937 rng(99);
    for (int i = 0; i < 200; ++i) {
        std::vector<uint8_t> junk(rng() % 80);
        for (auto& b : junk) b = static_cast<uint8_t>(rng());
        auto parsed = parse_client_hello(junk); // must not crash; usually nullopt
        if (parsed) CHECK((parsed->is_v2 || parsed->record_version != 0));
    }
}

TEST_CASE("server hello accepted within the offer") {
    std::vector<uint32_t> offered{0xC02F, 0x009C};
    auto sh = record(22, 0x0303, handshake(2, server_hello(0x0303, 0xC02F, 0)));
    ProbeResult r = parse_server_response(ProtocolVersion::TLS1_2, offered, sh);
    REQUIRE(r.accepted());
    CHECK(r.chosen() == 0xC02F);
    CHECK(r.compression == 0);
}

TEST_CASE("server hello split across two records still parses") {
    auto msg = handshake(2, server_hello(0x0303, 0x009C, 0));
    std::vector<uint8_t> first(msg.begin(), msg.begin() + 9);
    std::vector<uint8_t> second(msg.begin() + 9, msg.end());
    auto bytes = record(22, 0x0303, first);
    auto rec2 = record(22, 0x0303, second);
    bytes.insert(bytes.end(), rec2.begin(), rec2.end());
    ProbeResult r = parse_server_response(ProtocolVersion::TLS1_2, {0x009C}, bytes);
    REQUIRE(r.accepted());
    CHECK(r.chosen() == 0x009C);
}

TEST_CASE("cipher outside the offer is a protocol violation, not acceptance") {
    auto sh = record(22, 0x0303, handshake(2, server_hello(0x0303, 0x0035, 0)));
    ProbeResult r = parse_server_response(ProtocolVersion::TLS1_2, {0xC02F}, sh);
    auto* m = std::get_if<MalformedResponse>(&r.outcome);
    REQUIRE(m != nullptr);
    CHECK(m->note.find("outside") != std::string::npos);
}

TEST_CASE("version mismatches are flagged in both directions") {
    SUBCASE("downgrade") {
        auto sh = record(22, 0x0301, handshake(2, server_hello(0x0301, 0xC02F, 0)));
        ProbeResult r = parse_server_response(ProtocolVersion::TLS1_2, {0xC02F}, sh);
        auto* m = std::get_if<MalformedResponse>(&r.outcome);
        REQUIRE(m != nullptr);
        CHECK(m->note == "version-downgrade");
    }
    SUBCASE("upgrade") {
        auto sh = record(22, 0x0303, handshake(2, server_hello(0x0303, 0x002F, 0)));
        ProbeResult r = parse_server_response(ProtocolVersion::TLS1_0, {0x002F}, sh);
        auto* m = std::get_if<MalformedResponse>(&r.outcome);
        REQUIRE(m != nullptr);
        CHECK(m->note == "version mismatch");
    }
}

TEST_CASE("1.3 acceptance requires the selected-version extension") {
    SUBCASE("present and 0x0304") {
        auto sh = record(22, 0x0303, handshake(2, server_hello(0x0303, 0x1301, 0, 0x0304)));
        ProbeResult r = parse_server_response(ProtocolVersion::TLS1_3, {0x1301}, sh);
        REQUIRE(r.accepted());
        CHECK(r.chosen() == 0x1301);
    }
    SUBCASE("absent means the server downgraded") {
        auto sh = record(22, 0x0303, handshake(2, server_hello(0x0303, 0x1301, 0)));
        ProbeResult r = parse_server_response(ProtocolVersion::TLS1_3, {0x1301}, sh);
        auto* m = std::get_if<MalformedResponse>(&r.outcome);
        REQUIRE(m != nullptr);
        CHECK(m->note == "version-downgrade");
    }
}

TEST_CASE("alert handling") {
    SUBCASE("fatal alert carries its code") {
        ProbeResult r = parse_server_response(ProtocolVersion::TLS1_2, {0xC02F}, alert(2, 70));
        auto* a = std::get_if<RejectedAlert>(&r.outcome);
        REQUIRE(a != nullptr);
        CHECK(a->alert_code == 70);
    }
    SUBCASE("warning then close is a rejection") {
        ProbeResult r = parse_server_response(ProtocolVersion::TLS1_2, {0xC02F}, alert(1, 112));
        CHECK(std::holds_alternative<RejectedClose>(r.outcome));
    }
    SUBCASE("warning then fatal reports the fatal code") {
        auto bytes = alert(1, 112);
        auto fatal = alert(2, 40);
        bytes.insert(bytes.end(), fatal.begin(), fatal.end());
        ProbeResult r = parse_server_response(ProtocolVersion::TLS1_2, {0xC02F}, bytes);
        auto* a = std::get_if<RejectedAlert>(&r.outcome);
        REQUIRE(a != nullptr);
        CHECK(a->alert_code == 40);
    }
    SUBCASE("immediate close") {
        ProbeResult r = parse_server_response(ProtocolVersion::TLS1_2, {0xC02F}, {});
        CHECK(std::holds_alternative<RejectedClose>(r.outcome));
    }
}

TEST_CASE("malformed responses are named, never accepted") {
    std::vector<uint32_t> offered{0xC02F};
    SUBCASE("truncated record header") {
        ProbeResult r = parse_server_response(ProtocolVersion::TLS1_2, offered, {22, 3});
        CHECK(std::holds_alternative<MalformedResponse>(r.outcome));
    }
    SUBCASE("plaintext http") {
        std::string text = "HTTP/1.1 400 Bad Request\r\n\r\n";
        std::vector<uint8_t> bytes(text.begin(), text.end());
        ProbeResult r = parse_server_response(ProtocolVersion::TLS1_2, offered, bytes);
        CHECK(std::holds_alternative<MalformedResponse>(r.outcome));
    }
    SUBCASE("handshake record without a complete server hello") {
        auto msg = handshake(2, server_hello(0x0303, 0xC02F, 0));
        msg.resize(msg.size() - 4);
        auto bytes = record(22, 0x0303, msg);
        ProbeResult r = parse_server_response(ProtocolVersion::TLS1_2, offered, bytes);
        auto* m = std::get_if<MalformedResponse>(&r.outcome);
        REQUIRE(m != nullptr);
        CHECK(m->note.find("before server hello") != std::string::npos);
    }
}

TEST_CASE("ssl2 response classification") {
    std::vector<uint32_t> offered{0x010080, 0x060040};

    auto v2_hello = [&](const std::vector<uint32_t>& advertised) {
        ByteWriter b;
        b.u8(4); // SERVER-HELLO
        b.u8(0);
        b.u8(1);
        b.u16(0x0002);
        std::vector<uint8_t> cert{0x30, 0x03, 0x02, 0x01, 0x05}; // any DER-ish bytes
        b.u16(static_cast<uint16_t>(cert.size()));
        b.u16(static_cast<uint16_t>(advertised.size() * 3));
        b.u16(16);
        b.raw(cert);
        for (uint32_t k : advertised) b.u24(k);
        for (int i = 0; i < 16; ++i) b.u8(0xAB);
        ByteWriter rec;
        rec.u16(static_cast<uint16_t>(0x8000 | b.buf.size()));
        rec.raw(b.buf);
        return rec.buf;
    };

    SUBCASE("hello advertising an intersection") {
        ProbeResult r = parse_server_response(ProtocolVersion::SSL2, offered,
                                              v2_hello({0x010080, 0x0700C0}));
        REQUIRE(r.accepted());
        CHECK(r.ssl2_kinds == std::vector<uint32_t>{0x010080});
        CHECK(r.ssl2_certificate.size() == 5);
    }
    SUBCASE("hello advertising nothing we offered") {
        ProbeResult r =
            parse_server_response(ProtocolVersion::SSL2, offered, v2_hello({0x0700C0}));
        CHECK(std::holds_alternative<RejectedClose>(r.outcome));
        CHECK(r.ssl2_kinds.empty());
    }
    SUBCASE("v2 ERROR with NO-CIPHER code") {
        ByteWriter b;
        b.u8(0);
        b.u16(0x0001);
        ByteWriter rec;
        rec.u16(static_cast<uint16_t>(0x8000 | b.buf.size()));
        rec.raw(b.buf);
        ProbeResult r = parse_server_response(ProtocolVersion::SSL2, offered, rec.buf);
        auto* a = std::get_if<RejectedAlert>(&r.outcome);
        REQUIRE(a != nullptr);
        CHECK(a->alert_code == 1);
    }
    SUBCASE("modern stack answering v2 with a TLS alert") {
        ProbeResult r = parse_server_response(ProtocolVersion::SSL2, offered, alert(2, 70));
        auto* a = std::get_if<RejectedAlert>(&r.outcome);
        REQUIRE(a != nullptr);
        CHECK(a->alert_code == 70);
    }
    SUBCASE("plain close") {
        ProbeResult r = parse_server_response(ProtocolVersion::SSL2, offered, {});
        CHECK(std::holds_alternative<RejectedClose>(r.outcome));
    }
}

TEST_CASE("certificate message body round trip") {
    std::vector<std::vector<uint8_t>> certs{{0x30, 0x01, 0xAA}, {0x30, 0x02, 0xBB, 0xCC}};
    ByteWriter b;
    size_t total = 0;
    for (const auto& c : certs) total += 3 + c.size();
    b.u24(static_cast<uint32_t>(total));
    for (const auto& c : certs) {
        b.u24(static_cast<uint32_t>(c.size()));
        b.raw(c);
    }
    auto parsed = parse_certificate_body(b.buf);
    REQUIRE(parsed.has_value());
    CHECK(*parsed == certs);

    b.buf.pop_back();
    CHECK_FALSE(parse_certificate_body(b.buf).has_value());
}

TEST_CASE("handshake buffer reassembles messages across feeds") {
    auto m1 = handshake(11, {1, 2, 3});
    auto m2 = handshake(14, {});
    std::vector<uint8_t> joined = m1;
    joined.insert(joined.end(), m2.begin(), m2.end());

    HandshakeBuffer buf;
    buf.feed({joined.begin(), joined.begin() + 2});
    CHECK_FALSE(buf.next_message().has_value());
    buf.feed({joined.begin() + 2, joined.end()});
    auto first = buf.next_message();
    REQUIRE(first.has_value());
    CHECK(first->first == 11);
    CHECK(first->second == std::vector<uint8_t>{1, 2, 3});
    auto second = buf.next_message();
    REQUIRE(second.has_value());
    CHECK(second->first == 14);
    CHECK(second->second.empty());
    CHECK_FALSE(buf.next_message().has_value());
}
