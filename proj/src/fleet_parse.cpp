#include "posture/fleet_parse.hpp"

namespace posture {

namespace {

// Cursor with failure latching: any out-of-bounds read flips `ok` and every
// later read returns zero, so callers check once at the end.
struct Cursor {
    const uint8_t* p;
    size_t len;
    size_t pos = 0;
    bool ok = true;

    bool have(size_t n) {
        if (len - pos < n) ok = false;
        return ok;
    }
    uint8_t u8() {
        if (!have(1)) return 0;
        return p[pos++];
    }
    uint16_t u16() {
        if (!have(2)) return 0;
        uint16_t v = static_cast<uint16_t>((p[pos] << 8) | p[pos + 1]);
        pos += 2;
        return v;
    }
    uint32_t u24() {
        if (!have(3)) return 0;
        uint32_t v = (static_cast<uint32_t>(p[pos]) << 16) |
                     (static_cast<uint32_t>(p[pos + 1]) << 8) | p[pos + 2];
        pos += 3;
        return v;
    }
    void skip(size_t n) {
        if (have(n)) pos += n;
    }
    std::string str(size_t n) {
        if (!have(n)) return {};
        std::string s(reinterpret_cast<const char*>(p + pos), n);
        pos += n;
        return s;
    }
};

std::optional<ParsedClientHello> parse_v2(const std::vector<uint8_t>& bytes) {
    size_t rec_len = (static_cast<size_t>(bytes[0] & 0x7f) << 8) | bytes[1];
    if (bytes.size() < 2 + rec_len) return std::nullopt;
    Cursor c{bytes.data() + 2, rec_len};
    ParsedClientHello h;
    h.is_v2 = true;
    if (c.u8() != 1) return std::nullopt; // CLIENT-HELLO
    h.body_version = c.u16();
    uint16_t spec_len = c.u16();
    uint16_t sid_len = c.u16();
    uint16_t challenge_len = c.u16();
    if (spec_len % 3 != 0) return std::nullopt;
    for (uint16_t i = 0; i < spec_len; i += 3) h.ciphers.push_back(c.u24());
    c.skip(sid_len);
    c.skip(challenge_len);
    if (!c.ok) return std::nullopt;
    return h;
}

} // namespace

std::optional<ParsedClientHello> parse_client_hello(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 2) return std::nullopt;
    if (bytes[0] & 0x80) return parse_v2(bytes);

    if (bytes.size() < 5) return std::nullopt;
    if (bytes[0] != 22) return std::nullopt; // handshake record
    ParsedClientHello h;
    h.record_version = static_cast<uint16_t>((bytes[1] << 8) | bytes[2]);
    size_t rec_len = (static_cast<size_t>(bytes[3]) << 8) | bytes[4];
    if (bytes.size() < 5 + rec_len) return std::nullopt;

    Cursor c{bytes.data() + 5, rec_len};
    if (c.u8() != 1) return std::nullopt; // client_hello
    uint32_t body_len = c.u24();
    if (!c.have(body_len)) return std::nullopt;

    h.body_version = c.u16();
    c.skip(32); // random
    uint8_t sid_len = c.u8();
    c.skip(sid_len);
    uint16_t cipher_len = c.u16();
    if (cipher_len % 2 != 0) return std::nullopt;
    for (uint16_t i = 0; i < cipher_len; i += 2) h.ciphers.push_back(c.u16());
    uint8_t comp_len = c.u8();
    for (uint8_t i = 0; i < comp_len; ++i) h.compressions.push_back(c.u8());

    if (c.ok && c.pos < 4 + body_len) {
        uint16_t ext_total = c.u16();
        size_t ext_end = c.pos + ext_total;
        while (c.ok && c.pos < ext_end) {
            uint16_t type = c.u16();
            uint16_t len = c.u16();
            size_t value_end = c.pos + len;
            if (type == 0x0000) { // server_name
                c.u16();          // list length
                uint8_t name_type = c.u8();
                uint16_t name_len = c.u16();
                if (name_type == 0) h.sni = c.str(name_len);
            } else if (type == 0x002b) { // supported_versions
                uint8_t list_len = c.u8();
                if (list_len % 2 != 0) return std::nullopt;
                for (uint8_t i = 0; i < list_len; i += 2)
                    h.supported_versions.push_back(c.u16());
            } else if (type == 0x0033) {
                h.has_key_share = true;
            }
            if (!c.ok || c.pos > value_end) return std::nullopt;
            c.pos = value_end;
        }
    }
    if (!c.ok) return std::nullopt;
    return h;
}

size_t client_hello_bytes_missing(const std::vector<uint8_t>& bytes) {
    if (bytes.empty()) return 1;
    if (bytes[0] & 0x80) {
        if (bytes.size() < 2) return 2 - bytes.size();
        size_t need = 2 + ((static_cast<size_t>(bytes[0] & 0x7f) << 8) | bytes[1]);
        return bytes.size() >= need ? 0 : need - bytes.size();
    }
    if (bytes.size() < 5) return 5 - bytes.size();
    size_t need = 5 + ((static_cast<size_t>(bytes[3]) << 8) | bytes[4]);
    return bytes.size() >= need ? 0 : need - bytes.size();
}

} // namespace posture
