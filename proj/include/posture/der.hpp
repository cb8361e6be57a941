#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace posture {

// Minimal DER reader, enough for X.509. All failures throw
// Errc::DerSyntaxError with a byte offset.
struct DerNode {
    uint8_t tag = 0;        // full identifier octet (class | constructed | number)
    const uint8_t* body = nullptr;
    size_t body_len = 0;
    size_t full_len = 0;    // header + body
    size_t offset = 0;      // position of the identifier octet in the outer buffer

    bool constructed() const { return (tag & 0x20) != 0; }
    uint8_t tag_number() const { return tag & 0x1F; }
    bool is_context(uint8_t n) const { return (tag & 0xC0) == 0x80 && tag_number() == n; }
    bool is_universal(uint8_t n) const { return (tag & 0xC0) == 0x00 && tag_number() == n; }
    std::vector<uint8_t> bytes() const { return {body, body + body_len}; }
};

// DER universal tags used by X.509.
inline constexpr uint8_t kDerBoolean = 0x01;
inline constexpr uint8_t kDerInteger = 0x02;
inline constexpr uint8_t kDerBitString = 0x03;
inline constexpr uint8_t kDerOctetString = 0x04;
inline constexpr uint8_t kDerNull = 0x05;
inline constexpr uint8_t kDerOid = 0x06;
inline constexpr uint8_t kDerUtf8String = 0x0C;
inline constexpr uint8_t kDerSequence = 0x10;
inline constexpr uint8_t kDerSet = 0x11;
inline constexpr uint8_t kDerPrintableString = 0x13;
inline constexpr uint8_t kDerT61String = 0x14;
inline constexpr uint8_t kDerIa5String = 0x16;
inline constexpr uint8_t kDerUtcTime = 0x17;
inline constexpr uint8_t kDerGeneralizedTime = 0x18;

class DerCursor {
public:
    DerCursor(const uint8_t* data, size_t len, size_t base_offset = 0)
        : p_(data), len_(len), base_(base_offset) {}
    explicit DerCursor(const std::vector<uint8_t>& v) : DerCursor(v.data(), v.size()) {}
    explicit DerCursor(const DerNode& n) : DerCursor(n.body, n.body_len, n.offset) {}

    bool done() const { return pos_ == len_; }
    size_t offset() const { return base_ + pos_; }

    DerNode next();                  // any node
    DerNode expect(uint8_t universal_tag);
    DerNode expect_context(uint8_t n);
    // Consumes and returns the node if it matches, else leaves the cursor put.
    bool peek_context(uint8_t n, DerNode& out);
    bool peek_universal(uint8_t tag, DerNode& out);

private:
    const uint8_t* p_;
    size_t len_;
    size_t pos_ = 0;
    size_t base_;
};

std::string der_oid_to_string(const DerNode& oid);
// Non-negative INTEGER as lowercase hex with leading zero octets stripped
// ("0" for zero). Negative integers rejected.
std::string der_integer_hex(const DerNode& n);
int der_integer_bits(const DerNode& n);
int64_t der_parse_time(const DerNode& n); // UTCTime or GeneralizedTime to unix seconds
std::string der_string_value(const DerNode& n);

} // namespace posture
