#include <doctest.h>

#include <random>

#include "posture/util.hpp"
#include "posture/versions.hpp"
#include "test_support.hpp"

using namespace posture;

TEST_CASE("hex round trip") {
    std::mt19937 rng(7);
    for (int i = 0; i < 50; ++i) {
        std::vector<uint8_t> data(rng() % 64);
        for (auto& b : data) b = static_cast<uint8_t>(rng());
        CHECK(from_hex(to_hex(data)) == data);
    }
    CHECK(to_hex(std::vector<uint8_t>{0x00, 0xff, 0x1a}) == "00ff1a");
    CHECK_EQ(code_of([] { from_hex("abc"); }), Errc::SchemaError);
    CHECK_EQ(code_of([] { from_hex("zz"); }), Errc::SchemaError);
}

TEST_CASE("hex_code renders 2-byte and 3-byte code points") {
    CHECK(hex_code(0x002F) == "0x002F");
    CHECK(hex_code(0x1301) == "0x1301");
    CHECK(hex_code(0x010080) == "0x010080");
}

TEST_CASE("sha256 known vector") {
    CHECK(sha256_hex(std::string("abc")) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex(std::string("")) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("base64 round trip incl. padding lengths") {
    std::mt19937 rng(11);
    for (size_t len = 0; len < 12; ++len) {
        std::vector<uint8_t> data(len);
        for (auto& b : data) b = static_cast<uint8_t>(rng());
        CHECK(b64_decode(b64_encode(data.data(), data.size())) == data);
    }
    // whitespace tolerated, as found in PEM bodies
    CHECK(b64_decode("aGVs\nbG8=") == std::vector<uint8_t>{'h', 'e', 'l', 'l', 'o'});
}

TEST_CASE("string helpers") {
    CHECK(trim("  a b \t") == "a b");
    CHECK(trim("") == "");
    CHECK(to_lower("AbC") == "abc");
    CHECK(split("a,b,,c", ',') == std::vector<std::string>{"a", "b", "", "c"});
    CHECK(split("", ',') == std::vector<std::string>{""});
    CHECK(join({"a", "b"}, "+") == "a+b");
    CHECK(starts_with("abc", "ab"));
    CHECK_FALSE(starts_with("a", "ab"));
    CHECK(ends_with("abc", "bc"));
    CHECK_FALSE(ends_with("c", "bc"));
}

TEST_CASE("parse_long strictness") {
    CHECK(parse_long("0") == 0);
    CHECK(parse_long("443") == 443);
    CHECK_EQ(code_of([] { parse_long(""); }), Errc::SchemaError);
    CHECK_EQ(code_of([] { parse_long("12x"); }), Errc::SchemaError);
    CHECK_EQ(code_of([] { parse_long("-3"); }), Errc::SchemaError);
    CHECK_EQ(code_of([] { parse_long("0x10"); }), Errc::SchemaError);
}

TEST_CASE("parse_code_point") {
    CHECK(parse_code_point("0x002F") == 0x002Fu);
    CHECK(parse_code_point("0x010080") == 0x010080u);
    CHECK(parse_code_point("0xc02f") == 0xC02Fu);
    CHECK_EQ(code_of([] { parse_code_point("002F"); }), Errc::SchemaError);
    CHECK_EQ(code_of([] { parse_code_point("0x"); }), Errc::SchemaError);
    CHECK_EQ(code_of([] { parse_code_point("0xGG"); }), Errc::SchemaError);
}

TEST_CASE("fmt_double survives text round trip") {
    for (double v : {0.0, 1.0 / 3.0, 92.0, 0.77, 1e-9, 123456.789}) {
        CHECK(std::stod(fmt_double(v)) == v);
    }
}

TEST_CASE("utc parse and format") {
    CHECK(parse_utc("1970-01-01") == 0);
    CHECK(parse_utc("2023-01-15") == 1673740800);
    CHECK(parse_utc("2023-01-15T00:00:00Z") == 1673740800);
    CHECK(parse_utc("2023-01-14T23:59:59Z") == 1673740799);
    CHECK(format_utc(1673740800) == "2023-01-15T00:00:00Z");
    // round trip across a spread of instants, incl. leap-year Feb 29
    for (int64_t t : {0L, 951782400L /* 2000-02-29 */, 1673740800L, 2000000000L}) {
        CHECK(parse_utc(format_utc(t)) == t);
    }
    CHECK_EQ(code_of([] { parse_utc("2023-13-01"); }), Errc::SchemaError);
    CHECK_EQ(code_of([] { parse_utc("not a date"); }), Errc::SchemaError);
}

TEST_CASE("file round trip") {
    TempDir tmp;
    write_file(tmp.file("x.txt"), "contents\n");
    CHECK(read_file(tmp.file("x.txt")) == "contents\n");
    CHECK_EQ(code_of([&] { read_file(tmp.file("missing.txt")); }), Errc::IoError);
}

TEST_CASE("version comparison basics") {
    CHECK(compare_versions("1.0", "1.0") == 0);
    CHECK(compare_versions("2", "10") < 0);
    CHECK(compare_versions("1.2", "1.10") < 0);
    CHECK(compare_versions("1.2.3", "1.2") > 0);
    CHECK(compare_versions("1.2", "1.2.0") == 0);
    CHECK(compare_versions("8.4", "8.4p1") < 0);
    CHECK(compare_versions("8.4p1", "8.4p2") < 0);
    CHECK(compare_versions("1a", "2") < 0);
    CHECK(compare_versions("2", "10") < 0);
    CHECK(compare_versions("10", "1a") > 0);
    CHECK_EQ(code_of([] { compare_versions("", "1"); }), Errc::MalformedVersion);
}

TEST_CASE("version comparison is a total order (fuzz)") {
    std::mt19937 rng(23);
    auto random_version = [&] {
        static const char* pool[] = {"0", "1", "2", "9", "10", "a", "p1", "1a", "rc2"};
        int segs = 1 + static_cast<int>(rng() % 3);
        std::string v;
        for (int i = 0; i < segs; ++i) {
            if (i) v += '.';
            v += pool[rng() % (sizeof(pool) / sizeof(pool[0]))];
        }
        return v;
    };
    for (int i = 0; i < 300; ++i) {
        std::string a = random_version(), b = random_version(), c = random_version();
        int ab = compare_versions(a, b);
        int ba = compare_versions(b, a);
        CHECK(ab == -ba);
        CHECK(compare_versions(a, a) == 0);
        // transitivity across the triple
        int bc = compare_versions(b, c);
        int ac = compare_versions(a, c);
        if (ab <= 0 && bc <= 0) CHECK(ac <= 0);
        if (ab >= 0 && bc >= 0) CHECK(ac >= 0);
    }
}
