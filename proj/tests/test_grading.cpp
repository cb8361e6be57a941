#include <doctest.h>

#include <random>

#include "posture/grading.hpp"
#include "posture/util.hpp"
#include "test_support.hpp"

using namespace posture;

namespace {

const CipherCatalog& shipped_catalog() {
    static CipherCatalog c = CipherCatalog::load(data_dir() + "/cipher_catalog.csv");
    return c;
}

const RatingGuide& shipped_guide() {
    static RatingGuide g = RatingGuide::load(data_dir() + "/rating_guide.txt");
    return g;
}

ProtocolSupportMatrix make_matrix(
    std::initializer_list<std::pair<ProtocolVersion, std::set<uint32_t>>> entries,
    bool deflate = false) {
    ProtocolSupportMatrix m;
    for (const auto& [v, ciphers] : entries) {
        m.per_version.at(v).supported = true;
        m.per_version.at(v).accepted_ciphers = ciphers;
    }
    m.compression_deflate = deflate;
    return m;
}

} // namespace

TEST_CASE("shipped guide carries the documented tables") {
    const auto& g = shipped_guide();
    CHECK(g.weight_protocol == 0.30);
    CHECK(g.weight_key_exchange == 0.30);
    CHECK(g.weight_cipher_strength == 0.40);
    CHECK(g.protocol_scores.at(ProtocolVersion::SSL2) == 0);
    CHECK(g.protocol_scores.at(ProtocolVersion::SSL3) == 50);
    CHECK(g.protocol_scores.at(ProtocolVersion::TLS1_0) == 70);
    CHECK(g.protocol_scores.at(ProtocolVersion::TLS1_2) == 100);
    CHECK(g.kx_scores.at(KeyExchange::ECDHE) == 100);
    CHECK(g.kx_scores.at(KeyExchange::RSA) == 80);
    CHECK(g.kx_scores.at(KeyExchange::ECDH_anon) == 0);
    CHECK(g.score_weak == 40);
    CHECK(g.score_strong_lt256 == 80);
    CHECK(g.score_strong_ge256 == 100);
    CHECK(g.cap_ssl3 == 64);
    CHECK(g.cap_deflate == 64);
    CHECK(g.band(80) == 'A');
    CHECK(g.band(79.999) == 'B');
    CHECK(g.band(65) == 'B');
    CHECK(g.band(64) == 'C');
    CHECK(g.band(0) == 'F');
}

TEST_CASE("modern 1.3 configuration grades 92 A") {
    auto m = make_matrix({{ProtocolVersion::TLS1_3, {0x1301, 0x1302}}});
    ServerGrade grade = grade_configuration(m, true, shipped_catalog(), shipped_guide());
    // protocol 100, kx 100, strength min(80, 100) = 80
    CHECK(grade.numeric_score == doctest::Approx(92.0));
    CHECK(grade.letter == 'A');
    CHECK(grade.caps_applied.empty());
}

TEST_CASE("legacy mix drags the score through the weakest suite") {
    auto m = make_matrix({{ProtocolVersion::TLS1_0, {0x002F}},
                          {ProtocolVersion::TLS1_2, {0x002F, 0xC02F}}});
    ServerGrade grade = grade_configuration(m, true, shipped_catalog(), shipped_guide());
    // protocol min(70,100)=70, kx min(RSA 80, ECDHE 100)=80, strength min(40,80)=40
    CHECK(grade.numeric_score == doctest::Approx(0.30 * 70 + 0.30 * 80 + 0.40 * 40));
    CHECK(grade.letter == 'C');
}

TEST_CASE("unknown suites score zero on both cipher axes") {
    auto m = make_matrix({{ProtocolVersion::TLS1_2, {0xC02F, 0xBEEF}}});
    ServerGrade grade = grade_configuration(m, true, shipped_catalog(), shipped_guide());
    CHECK(grade.numeric_score == doctest::Approx(0.30 * 100));
}

TEST_CASE("ssl3 and deflate caps") {
    SUBCASE("ssl3 caps an otherwise strong score") {
        auto m = make_matrix({{ProtocolVersion::SSL3, {0x0035}},
                              {ProtocolVersion::TLS1_2, {0xC02F}}});
        ServerGrade grade = grade_configuration(m, true, shipped_catalog(), shipped_guide());
        CHECK(grade.numeric_score == 64);
        CHECK(grade.letter == 'C');
        REQUIRE(grade.caps_applied.size() == 1);
        CHECK(grade.caps_applied[0] == "ssl3_supported");
    }
    SUBCASE("cap only fires when the score is above it") {
        auto m = make_matrix({{ProtocolVersion::SSL3, {0x0005}}});
        // rc4 is insecure: protocol 50, kx 80, strength 0 -> 39, below the cap
        ServerGrade grade = grade_configuration(m, true, shipped_catalog(), shipped_guide());
        CHECK(grade.numeric_score == doctest::Approx(39.0));
        CHECK(grade.caps_applied.empty());
    }
    SUBCASE("deflate caps too") {
        auto m = make_matrix({{ProtocolVersion::TLS1_2, {0xC02F}}}, true);
        ServerGrade grade = grade_configuration(m, true, shipped_catalog(), shipped_guide());
        CHECK(grade.numeric_score == 64);
        CHECK(grade.letter == 'C');
        REQUIRE(grade.caps_applied.size() == 1);
        CHECK(grade.caps_applied[0] == "deflate_accepted");
    }
}

TEST_CASE("letter overrides: T beats F beats bands") {
    auto ssl2_matrix = make_matrix({{ProtocolVersion::SSL2, {0x010080}},
                                    {ProtocolVersion::TLS1_2, {0xC02F}}});
    SUBCASE("ssl2 support forces F") {
        ServerGrade grade = grade_configuration(ssl2_matrix, true, shipped_catalog(), shipped_guide());
        CHECK(grade.letter == 'F');
    }
    SUBCASE("untrusted chain forces T even over ssl2") {
        ServerGrade grade =
            grade_configuration(ssl2_matrix, false, shipped_catalog(), shipped_guide());
        CHECK(grade.letter == 'T');
    }
    SUBCASE("grade_server takes trust from the chain report") {
        ChainReport chain;
        chain.trusted = false;
        auto m = make_matrix({{ProtocolVersion::TLS1_3, {0x1301}}});
        ServerGrade grade = grade_server(m, chain, shipped_catalog(), shipped_guide());
        CHECK(grade.letter == 'T');
        chain.trusted = true;
        CHECK(grade_server(m, chain, shipped_catalog(), shipped_guide()).letter == 'A');
    }
}

TEST_CASE("nothing supported grades zero") {
    ProtocolSupportMatrix m;
    ServerGrade grade = grade_configuration(m, true, shipped_catalog(), shipped_guide());
    CHECK(grade.numeric_score == 0);
    CHECK(grade.letter == 'F');
}

TEST_CASE("score monotonicity under cleanup and regression") {
    const auto& catalog = shipped_catalog();
    const auto& guide = shipped_guide();
    std::mt19937 rng(0xBADC0DE);

    auto random_matrix = [&] {
        ProtocolSupportMatrix m;
        for (auto v : kAllVersions) {
            if (rng() % 3) continue;
            auto pool = catalog.suites_for_version(v);
            auto& slot = m.per_version.at(v);
            slot.supported = true;
            int n = 1 + rng() % 4;
            for (int i = 0; i < n; ++i) slot.accepted_ciphers.insert(pool[rng() % pool.size()]);
        }
        m.compression_deflate = rng() % 8 == 0;
        return m;
    };

    for (int iter = 0; iter < 300; ++iter) {
        ProtocolSupportMatrix m = random_matrix();
        if (!m.any_supported()) continue;
        double base = grade_configuration(m, true, catalog, guide).numeric_score;

        // dropping every weak and insecure suite never lowers the score
        ProtocolSupportMatrix cleaned = m;
        for (auto& [v, slot] : cleaned.per_version) {
            std::set<uint32_t> keep;
            for (uint32_t c : slot.accepted_ciphers) {
                const CipherSuite* s = catalog.find(c);
                if (s && s->classification == Classification::Strong) keep.insert(c);
            }
            slot.accepted_ciphers = keep;
            if (keep.empty()) slot.supported = false;
        }
        if (cleaned.any_supported()) {
            double after = grade_configuration(cleaned, true, catalog, guide).numeric_score;
            CHECK(after >= base);
        }

        // switching on one more deprecated version never raises it
        ProtocolSupportMatrix regressed = m;
        for (auto v : {ProtocolVersion::SSL3, ProtocolVersion::TLS1_0}) {
            auto& slot = regressed.per_version.at(v);
            if (!slot.supported) {
                slot.supported = true;
                slot.accepted_ciphers.insert(catalog.suites_for_version(v).front());
                break;
            }
        }
        double after = grade_configuration(regressed, true, catalog, guide).numeric_score;
        CHECK(after <= base);
    }
}

TEST_CASE("guide loader rejects broken files") {
    TempDir tmp;
    SUBCASE("missing section") {
        write_file(tmp.file("g.txt"), "[weights]\nprotocol = 0.3\nkey_exchange = 0.3\n"
                                      "cipher_strength = 0.4\n");
        CHECK_EQ(code_of([&] { RatingGuide::load(tmp.file("g.txt")); }), Errc::SchemaError);
    }
    SUBCASE("stray line outside any section") {
        write_file(tmp.file("g.txt"), "protocol = 0.3\n");
        CHECK_EQ(code_of([&] { RatingGuide::load(tmp.file("g.txt")); }), Errc::SchemaError);
    }
    SUBCASE("bad number") {
        std::string text = read_file(data_dir() + "/rating_guide.txt");
        auto pos = text.find("ECDHE = 100");
        REQUIRE(pos != std::string::npos);
        text.replace(pos, 11, "ECDHE = lots");
        write_file(tmp.file("g.txt"), text);
        CHECK_EQ(code_of([&] { RatingGuide::load(tmp.file("g.txt")); }), Errc::SchemaError);
    }
    SUBCASE("unknown letter band") {
        std::string text = read_file(data_dir() + "/rating_guide.txt");
        auto pos = text.find("A = 80");
        REQUIRE(pos != std::string::npos);
        text.replace(pos, 6, "Z = 80");
        write_file(tmp.file("g.txt"), text);
        CHECK_EQ(code_of([&] { RatingGuide::load(tmp.file("g.txt")); }), Errc::SchemaError);
    }
}
