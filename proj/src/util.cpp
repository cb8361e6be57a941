#include "posture/util.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "posture/error.hpp"

namespace posture {

const char* errc_name(Errc c) {
    switch (c) {
    case Errc::SchemaError: return "SchemaError";
    case Errc::InvariantViolation: return "InvariantViolation";
    case Errc::UnsupportedCombination: return "UnsupportedCombination";
    case Errc::UnknownCipher: return "UnknownCipher";
    case Errc::Unreachable: return "Unreachable";
    case Errc::NoChainPresented: return "NoChainPresented";
    case Errc::HandshakeFailure: return "HandshakeFailure";
    case Errc::EmptyChain: return "EmptyChain";
    case Errc::DerSyntaxError: return "DerSyntaxError";
    case Errc::UnsatisfiableSpec: return "UnsatisfiableSpec";
    case Errc::BandMismatch: return "BandMismatch";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::MalformedVersion: return "MalformedVersion";
    case Errc::DuplicateDomain: return "DuplicateDomain";
    case Errc::RegionMismatch: return "RegionMismatch";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::UnknownRun: return "UnknownRun";
    case Errc::ConfigError: return "ConfigError";
    case Errc::IoError: return "IoError";
    case Errc::PortExhaustion: return "PortExhaustion";
    case Errc::ScenarioInvalid: return "ScenarioInvalid";
    case Errc::Internal: return "Internal";
    }
    return "Error";
}

static const char* kHexDigits = "0123456789abcdef";

std::string to_hex(const uint8_t* data, size_t len) {
    std::string out;
    out.reserve(len * 2);
    for (size_t i = 0; i < len; ++i) {
        out.push_back(kHexDigits[data[i] >> 4]);
        out.push_back(kHexDigits[data[i] & 0x0F]);
    }
    return out;
}

std::string to_hex(const std::vector<uint8_t>& data) { return to_hex(data.data(), data.size()); }

std::string hex_code(uint32_t code) {
    char buf[16];
    snprintf(buf, sizeof(buf), code > 0xFFFF ? "0x%06X" : "0x%04X", code);
    return buf;
}

static int hex_val(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

std::vector<uint8_t> from_hex(const std::string& hex) {
    if (hex.size() % 2 != 0) fail(Errc::SchemaError, "odd-length hex string");
    std::vector<uint8_t> out(hex.size() / 2);
    for (size_t i = 0; i < out.size(); ++i) {
        int hi = hex_val(hex[2 * i]), lo = hex_val(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) fail(Errc::SchemaError, "bad hex digit in '" + hex + "'");
        out[i] = static_cast<uint8_t>(hi << 4 | lo);
    }
    return out;
}

std::string sha256_hex(const uint8_t* data, size_t len) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int digest_len = 0;
    if (!EVP_Digest(data, len, digest, &digest_len, EVP_sha256(), nullptr))
        fail(Errc::Internal, "EVP_Digest failed");
    return to_hex(digest, digest_len);
}

std::string sha256_hex(const std::vector<uint8_t>& data) { return sha256_hex(data.data(), data.size()); }

std::string sha256_hex(const std::string& data) {
    return sha256_hex(reinterpret_cast<const uint8_t*>(data.data()), data.size());
}

static const char* kB64 = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string b64_encode(const uint8_t* data, size_t len) {
    std::string out;
    out.reserve((len + 2) / 3 * 4);
    for (size_t i = 0; i < len; i += 3) {
        uint32_t chunk = static_cast<uint32_t>(data[i]) << 16;
        if (i + 1 < len) chunk |= static_cast<uint32_t>(data[i + 1]) << 8;
        if (i + 2 < len) chunk |= data[i + 2];
        out.push_back(kB64[chunk >> 18 & 0x3F]);
        out.push_back(kB64[chunk >> 12 & 0x3F]);
        out.push_back(i + 1 < len ? kB64[chunk >> 6 & 0x3F] : '=');
        out.push_back(i + 2 < len ? kB64[chunk & 0x3F] : '=');
    }
    return out;
}

std::vector<uint8_t> b64_decode(const std::string& text) {
    static int table[256];
    static bool init = [] {
        for (int& v : table) v = -1;
        for (int i = 0; i < 64; ++i) table[static_cast<unsigned char>(kB64[i])] = i;
        return true;
    }();
    (void)init;

    std::vector<uint8_t> out;
    uint32_t acc = 0;
    int bits = 0;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c)) || c == '=') continue;
        int v = table[static_cast<unsigned char>(c)];
        if (v < 0) fail(Errc::SchemaError, "invalid base64 character");
        acc = acc << 6 | static_cast<uint32_t>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<uint8_t>(acc >> bits));
        }
    }
    return out;
}

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

bool starts_with(const std::string& s, const std::string& prefix) {
    return s.size() >= prefix.size() && s.compare(0, prefix.size(), prefix) == 0;
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(Errc::IoError, "cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) fail(Errc::IoError, "cannot write " + path);
    f << content;
    if (!f) fail(Errc::IoError, "short write to " + path);
}

long parse_long(const std::string& s, const std::string& what) {
    if (s.empty()) fail(Errc::SchemaError, what + ": empty integer");
    for (char c : s)
        if (!std::isdigit(static_cast<unsigned char>(c)))
            fail(Errc::SchemaError, what + ": not an integer: '" + s + "'");
    try {
        return std::stol(s);
    } catch (const std::exception&) {
        fail(Errc::SchemaError, what + ": integer out of range: '" + s + "'");
    }
}

uint32_t parse_code_point(const std::string& s, const std::string& what) {
    if (!starts_with(s, "0x") || s.size() < 3 || s.size() > 10)
        fail(Errc::SchemaError, what + ": expected hex like 0x002F, got '" + s + "'");
    uint32_t v = 0;
    for (size_t i = 2; i < s.size(); ++i) {
        char c = static_cast<char>(std::tolower(static_cast<unsigned char>(s[i])));
        int digit;
        if (c >= '0' && c <= '9')
            digit = c - '0';
        else if (c >= 'a' && c <= 'f')
            digit = 10 + (c - 'a');
        else
            fail(Errc::SchemaError, what + ": bad hex digit in '" + s + "'");
        v = (v << 4) | static_cast<uint32_t>(digit);
    }
    return v;
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int64_t unix_now() {
    return std::chrono::duration_cast<std::chrono::seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

// Days since 1970-01-01 for a proleptic Gregorian date.
static int64_t days_from_civil(int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

static void civil_from_days(int64_t z, int64_t& y, unsigned& m, unsigned& d) {
    z += 719468;
    const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y += m <= 2;
}

int64_t parse_utc(const std::string& s) {
    int year, mon, day, hour = 0, min = 0, sec = 0;
    char t = 0, z = 0;
    int n = std::sscanf(s.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d%c", &year, &mon, &day, &t, &hour,
                        &min, &sec, &z);
    bool date_only = (n == 3);
    bool full = (n >= 7 && (t == 'T' || t == ' '));
    if (!date_only && !full) fail(Errc::SchemaError, "bad timestamp '" + s + "'");
    if (mon < 1 || mon > 12 || day < 1 || day > 31 || hour > 23 || min > 59 || sec > 60)
        fail(Errc::SchemaError, "bad timestamp '" + s + "'");
    return days_from_civil(year, static_cast<unsigned>(mon), static_cast<unsigned>(day)) * 86400 +
           hour * 3600 + min * 60 + sec;
}

std::string format_utc(int64_t t) {
    int64_t days = t / 86400;
    int64_t rem = t % 86400;
    if (rem < 0) {
        rem += 86400;
        days -= 1;
    }
    int64_t y;
    unsigned m, d;
    civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ",
                  static_cast<long long>(y), m, d, static_cast<long long>(rem / 3600),
                  static_cast<long long>(rem / 60 % 60), static_cast<long long>(rem % 60));
    return buf;
}

} // namespace posture
