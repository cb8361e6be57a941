#include "posture/der.hpp"

#include <cstdio>

#include "posture/error.hpp"
#include "posture/util.hpp"

namespace posture {

[[noreturn]] static void bad(size_t offset, const std::string& why) {
    fail(Errc::DerSyntaxError, why + " at offset " + std::to_string(offset));
}

DerNode DerCursor::next() {
    if (pos_ >= len_) bad(offset(), "unexpected end of DER");
    DerNode n;
    n.offset = offset();
    n.tag = p_[pos_];
    if ((n.tag & 0x1F) == 0x1F) bad(n.offset, "multi-byte DER tags unsupported");
    size_t i = pos_ + 1;
    if (i >= len_) bad(n.offset, "missing DER length");
    size_t body_len = 0;
    uint8_t first = p_[i++];
    if (first < 0x80) {
        body_len = first;
    } else {
        size_t n_octets = first & 0x7F;
        if (n_octets == 0 || n_octets > 4) bad(n.offset, "bad DER length form");
        if (i + n_octets > len_) bad(n.offset, "truncated DER length");
        for (size_t k = 0; k < n_octets; ++k) body_len = body_len << 8 | p_[i++];
        if (body_len < 0x80) bad(n.offset, "non-minimal DER length");
    }
    if (i + body_len > len_) bad(n.offset, "DER body exceeds buffer");
    n.body = p_ + i;
    n.body_len = body_len;
    n.full_len = (i - pos_) + body_len;
    pos_ = i + body_len;
    return n;
}

DerNode DerCursor::expect(uint8_t universal_tag) {
    size_t at = offset();
    DerNode n = next();
    if (!n.is_universal(universal_tag))
        bad(at, "expected universal tag " + std::to_string(universal_tag) + ", got " +
                    std::to_string(n.tag));
    return n;
}

DerNode DerCursor::expect_context(uint8_t tag_n) {
    size_t at = offset();
    DerNode n = next();
    if (!n.is_context(tag_n)) bad(at, "expected context tag [" + std::to_string(tag_n) + "]");
    return n;
}

bool DerCursor::peek_context(uint8_t tag_n, DerNode& out) {
    if (done()) return false;
    size_t save = pos_;
    DerNode n = next();
    if (n.is_context(tag_n)) {
        out = n;
        return true;
    }
    pos_ = save;
    return false;
}

bool DerCursor::peek_universal(uint8_t tag, DerNode& out) {
    if (done()) return false;
    size_t save = pos_;
    DerNode n = next();
    if (n.is_universal(tag)) {
        out = n;
        return true;
    }
    pos_ = save;
    return false;
}

std::string der_oid_to_string(const DerNode& oid) {
    if (oid.body_len == 0) bad(oid.offset, "empty OID");
    std::string out;
    uint64_t acc = 0;
    bool first_arc = true;
    for (size_t i = 0; i < oid.body_len; ++i) {
        uint8_t b = oid.body[i];
        acc = acc << 7 | (b & 0x7F);
        if (acc > (1ull << 56)) bad(oid.offset, "oversized OID arc");
        if (b & 0x80) continue;
        if (first_arc) {
            uint64_t x = acc < 80 ? acc / 40 : 2;
            uint64_t y = acc - x * 40;
            out = std::to_string(x) + "." + std::to_string(y);
            first_arc = false;
        } else {
            out += "." + std::to_string(acc);
        }
        acc = 0;
    }
    if (acc != 0 || (oid.body[oid.body_len - 1] & 0x80)) bad(oid.offset, "truncated OID arc");
    return out;
}

std::string der_integer_hex(const DerNode& n) {
    if (n.body_len == 0) bad(n.offset, "empty INTEGER");
    if (n.body[0] & 0x80) bad(n.offset, "negative INTEGER where non-negative required");
    size_t i = 0;
    while (i + 1 < n.body_len && n.body[i] == 0) ++i;
    std::string hex = to_hex(n.body + i, n.body_len - i);
    // strip one leading nibble-zero for canonical form, keep at least one digit
    size_t nz = 0;
    while (nz + 1 < hex.size() && hex[nz] == '0') ++nz;
    return hex.substr(nz);
}

int der_integer_bits(const DerNode& n) {
    size_t i = 0;
    while (i < n.body_len && n.body[i] == 0) ++i;
    if (i == n.body_len) return 0;
    int bits = static_cast<int>((n.body_len - i - 1) * 8);
    uint8_t top = n.body[i];
    while (top) {
        ++bits;
        top >>= 1;
    }
    return bits;
}

int64_t der_parse_time(const DerNode& n) {
    std::string s(reinterpret_cast<const char*>(n.body), n.body_len);
    int year, mon, day, hour, min, sec;
    if (n.is_universal(kDerUtcTime)) {
        if (s.size() != 13 || s.back() != 'Z') bad(n.offset, "bad UTCTime '" + s + "'");
        if (std::sscanf(s.c_str(), "%2d%2d%2d%2d%2d%2d", &year, &mon, &day, &hour, &min, &sec) != 6)
            bad(n.offset, "bad UTCTime '" + s + "'");
        year += year >= 50 ? 1900 : 2000;
    } else if (n.is_universal(kDerGeneralizedTime)) {
        if (s.size() != 15 || s.back() != 'Z') bad(n.offset, "bad GeneralizedTime '" + s + "'");
        if (std::sscanf(s.c_str(), "%4d%2d%2d%2d%2d%2d", &year, &mon, &day, &hour, &min, &sec) != 6)
            bad(n.offset, "bad GeneralizedTime '" + s + "'");
    } else {
        bad(n.offset, "expected a time type");
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", year, mon, day, hour, min, sec);
    return parse_utc(buf);
}

std::string der_string_value(const DerNode& n) {
    switch (n.tag_number()) {
    case kDerUtf8String:
    case kDerPrintableString:
    case kDerT61String:
    case kDerIa5String:
        return std::string(reinterpret_cast<const char*>(n.body), n.body_len);
    default:
        // Uncommon string types are surfaced as hex rather than dropped.
        return "#" + to_hex(n.body, n.body_len);
    }
}

} // namespace posture
