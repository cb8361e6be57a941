#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace posture {

// Thrown on out-of-bounds reads; wire parsers map it to MalformedResponse.
struct TruncatedInput : std::runtime_error {
    TruncatedInput() : std::runtime_error("truncated input") {}
};

struct ByteWriter {
    std::vector<uint8_t> buf;

    void u8(uint8_t v) { buf.push_back(v); }
    void u16(uint16_t v) {
        buf.push_back(static_cast<uint8_t>(v >> 8));
        buf.push_back(static_cast<uint8_t>(v));
    }
    void u24(uint32_t v) {
        buf.push_back(static_cast<uint8_t>(v >> 16));
        buf.push_back(static_cast<uint8_t>(v >> 8));
        buf.push_back(static_cast<uint8_t>(v));
    }
    void raw(const uint8_t* p, size_t n) { buf.insert(buf.end(), p, p + n); }
    void raw(const std::vector<uint8_t>& v) { raw(v.data(), v.size()); }
    void raw(const std::string& s) {
        raw(reinterpret_cast<const uint8_t*>(s.data()), s.size());
    }

    // Patches a length placeholder after the fact. mark() before the body,
    // then patch_u16/u24 with the number of bytes written since.
    size_t mark() const { return buf.size(); }
    void patch_u16(size_t at, uint16_t v) {
        buf[at] = static_cast<uint8_t>(v >> 8);
        buf[at + 1] = static_cast<uint8_t>(v);
    }
    void patch_u24(size_t at, uint32_t v) {
        buf[at] = static_cast<uint8_t>(v >> 16);
        buf[at + 1] = static_cast<uint8_t>(v >> 8);
        buf[at + 2] = static_cast<uint8_t>(v);
    }
};

struct ByteReader {
    const uint8_t* p;
    size_t len;
    size_t pos = 0;

    ByteReader(const uint8_t* data, size_t n) : p(data), len(n) {}
    explicit ByteReader(const std::vector<uint8_t>& v) : p(v.data()), len(v.size()) {}

    size_t remaining() const { return len - pos; }
    bool done() const { return pos == len; }

    void need(size_t n) const {
        if (remaining() < n) throw TruncatedInput{};
    }
    uint8_t u8() {
        need(1);
        return p[pos++];
    }
    uint16_t u16() {
        need(2);
        uint16_t v = static_cast<uint16_t>(p[pos] << 8 | p[pos + 1]);
        pos += 2;
        return v;
    }
    uint32_t u24() {
        need(3);
        uint32_t v = static_cast<uint32_t>(p[pos] << 16 | p[pos + 1] << 8 | p[pos + 2]);
        pos += 3;
        return v;
    }
    std::vector<uint8_t> bytes(size_t n) {
        need(n);
        std::vector<uint8_t> out(p + pos, p + pos + n);
        pos += n;
        return out;
    }
    void skip(size_t n) {
        need(n);
        pos += n;
    }
    ByteReader sub(size_t n) {
        need(n);
        ByteReader r(p + pos, n);
        pos += n;
        return r;
    }
};

} // namespace posture
