#include <doctest.h>

#include "posture/cipher_catalog.hpp"
#include "posture/util.hpp"
#include "test_support.hpp"

using namespace posture;

static const CipherCatalog& shipped() {
    static CipherCatalog c = CipherCatalog::load(data_dir() + "/cipher_catalog.csv");
    return c;
}

TEST_CASE("shipped catalog loads and covers the expected families") {
    const auto& c = shipped();
    CHECK(c.size() == 313);
    // spot checks across eras
    REQUIRE(c.find(0x1301) != nullptr);
    CHECK(c.find(0x1301)->iana_name == "TLS_AES_128_GCM_SHA256");
    CHECK(c.find(0x1301)->classification == Classification::Strong);
    REQUIRE(c.find(0x010080) != nullptr); // SSLv2 RC4_128_WITH_MD5
    CHECK(c.find(0x010080)->classification == Classification::Insecure);
    REQUIRE(c.find(0xC02F) != nullptr);
    CHECK(c.find(0xC02F)->kx == KeyExchange::ECDHE);
    CHECK(c.find(0xC02F)->bulk == Bulk::AES_GCM);
    CHECK(c.find(0xC02F)->effective_bits == 128);
    CHECK(c.lookup(0x00FF).iana_name == "TLS_EMPTY_RENEGOTIATION_INFO_SCSV");
    CHECK_EQ(code_of([&] { c.lookup(0xBEEF); }), Errc::UnknownCipher);
}

TEST_CASE("every catalog row agrees with the name-derived route") {
    // derive_suite_fields rebuilds kx/bulk/bits/mac/versions from the IANA
    // name alone; the shipped rows must agree field for field, so the CSV and
    // the parser check each other.
    for (const auto& [code, suite] : shipped().all()) {
        CipherSuite derived = derive_suite_fields(code, suite.iana_name);
        INFO(suite.iana_name);
        CHECK(derived.kx == suite.kx);
        CHECK(derived.bulk == suite.bulk);
        CHECK(derived.effective_bits == suite.effective_bits);
        CHECK(derived.mac == suite.mac);
        CHECK(derived.version_families == suite.version_families);
        CHECK(derived.classification == suite.classification);
    }
}

TEST_CASE("every catalog row agrees with rule-based classification") {
    for (const auto& [code, suite] : shipped().all()) {
        INFO(suite.iana_name);
        CHECK(classify_cipher(suite) == suite.classification);
    }
}

TEST_CASE("classification rules on hand-built suites") {
    CipherSuite s;
    s.iana_name = "synthetic";
    s.kx = KeyExchange::ECDHE;
    s.bulk = Bulk::AES_GCM;
    s.effective_bits = 256;
    s.mac = Mac::AEAD;
    CHECK(classify_cipher(s) == Classification::Strong);

    SUBCASE("anonymous kx is insecure") {
        s.kx = KeyExchange::ECDH_anon;
        CHECK(classify_cipher(s) == Classification::Insecure);
    }
    SUBCASE("null encryption is insecure") {
        s.bulk = Bulk::NULL_ENC;
        s.effective_bits = 0;
        CHECK(classify_cipher(s) == Classification::Insecure);
    }
    SUBCASE("rc4 is insecure") {
        s.bulk = Bulk::RC4;
        s.effective_bits = 128;
        CHECK(classify_cipher(s) == Classification::Insecure);
    }
    SUBCASE("export-strength bits are insecure") {
        s.bulk = Bulk::AES_CBC;
        s.effective_bits = 40;
        CHECK(classify_cipher(s) == Classification::Insecure);
    }
    SUBCASE("3des is weak") {
        s.bulk = Bulk::TripleDES;
        s.effective_bits = 112;
        s.mac = Mac::SHA1;
        CHECK(classify_cipher(s) == Classification::Weak);
    }
    SUBCASE("cbc with static rsa kx is weak") {
        s.kx = KeyExchange::RSA;
        s.bulk = Bulk::AES_CBC;
        s.effective_bits = 128;
        s.mac = Mac::SHA1;
        CHECK(classify_cipher(s) == Classification::Weak);
    }
}

TEST_CASE("kx predicates") {
    CHECK(kx_anonymous(KeyExchange::DH_anon));
    CHECK(kx_anonymous(KeyExchange::ECDH_anon));
    CHECK_FALSE(kx_anonymous(KeyExchange::ECDHE));
    CHECK(kx_forward_secret(KeyExchange::ECDHE));
    CHECK(kx_forward_secret(KeyExchange::DHE));
    CHECK_FALSE(kx_forward_secret(KeyExchange::RSA));
    CHECK_FALSE(kx_forward_secret(KeyExchange::ECDH));
}

TEST_CASE("suites_for_version is ordered and version-faithful") {
    const auto& c = shipped();
    for (auto v : kAllVersions) {
        auto suites = c.suites_for_version(v);
        CHECK(!suites.empty());
        for (size_t i = 1; i < suites.size(); ++i) CHECK(suites[i - 1] < suites[i]);
        for (uint32_t code : suites) CHECK(c.lookup(code).valid_for(v));
    }
    // SSLv2 kinds live only in the SSL2 family
    for (uint32_t kind : kSsl2CipherKinds) {
        const CipherSuite* s = c.find(kind);
        REQUIRE(s != nullptr);
        CHECK(s->version_families == std::set<ProtocolVersion>{ProtocolVersion::SSL2});
    }
    // TLS1.3 suite codes never leak into older version lists
    for (uint32_t code : c.suites_for_version(ProtocolVersion::TLS1_2))
        CHECK((code < 0x1301 || code > 0x1305));
}

TEST_CASE("loader rejects broken catalogs") {
    TempDir tmp;
    const std::string header = "code_point,iana_name,kx,bulk,effective_bits,mac,versions,classification\n";
    const std::string row =
        "0xC02F,TLS_ECDHE_RSA_WITH_AES_128_GCM_SHA256,ECDHE,AES_GCM,128,AEAD,TLS1_2,Strong\n";

    SUBCASE("duplicate code point") {
        write_file(tmp.file("dup.csv"), header + row + row);
        CHECK_EQ(code_of([&] { CipherCatalog::load(tmp.file("dup.csv")); }), Errc::SchemaError);
    }
    SUBCASE("bad enum value") {
        write_file(tmp.file("bad.csv"),
                   header + "0x0001,TLS_X,WARP_DRIVE,AES_GCM,128,AEAD,TLS1_2,Strong\n");
        CHECK_EQ(code_of([&] { CipherCatalog::load(tmp.file("bad.csv")); }), Errc::SchemaError);
    }
    SUBCASE("wrong column count") {
        write_file(tmp.file("cols.csv"), header + "0x0001,TLS_X,ECDHE\n");
        CHECK_EQ(code_of([&] { CipherCatalog::load(tmp.file("cols.csv")); }), Errc::SchemaError);
    }
    SUBCASE("missing file") {
        CHECK_EQ(code_of([&] { CipherCatalog::load(tmp.file("nope.csv")); }), Errc::IoError);
    }
}

TEST_CASE("count_weak_insecure tallies the union and flags unknowns") {
    const auto& c = shipped();
    ProtocolSupportMatrix m;
    auto& v12 = m.per_version.at(ProtocolVersion::TLS1_2);
    v12.supported = true;
    v12.accepted_ciphers = {0xC02F /*strong*/, 0x002F /*weak cbc*/, 0x0005 /*rc4, insecure*/};
    auto& v10 = m.per_version.at(ProtocolVersion::TLS1_0);
    v10.supported = true;
    v10.accepted_ciphers = {0x002F /*same weak suite again*/, 0x000A /*3des weak*/};

    WeakInsecureCount wi = count_weak_insecure(m, c);
    CHECK(wi.weak_set == std::set<uint32_t>{0x002F, 0x000A});
    CHECK(wi.insecure_set == std::set<uint32_t>{0x0005});
    CHECK(wi.weak_count == 2);
    CHECK(wi.insecure_count == 1);
    CHECK(wi.unknown_set.empty());

    v12.accepted_ciphers.insert(0xBEEF);
    wi = count_weak_insecure(m, c);
    CHECK(wi.unknown_set == std::set<uint32_t>{0xBEEF});
    CHECK(wi.weak_count == 2); // unknowns never counted either way
}
