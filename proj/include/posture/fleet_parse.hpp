#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace posture {

// ClientHello parsing for the mock fleet. Deliberately self-contained: this
// reimplements wire reading from scratch so that fleet-side parsing shares no
// code with the scanner's hello builder and round-trip tests mean something.

struct ParsedClientHello {
    bool is_v2 = false;
    uint16_t record_version = 0; // v3+ only
    uint16_t body_version = 0;   // hello body version field
    std::vector<uint32_t> ciphers; // offer order preserved
    std::vector<uint8_t> compressions;
    std::string sni;
    std::vector<uint16_t> supported_versions; // empty when extension absent
    bool has_key_share = false;
};

// nullopt when the bytes are not a complete, well-formed hello.
std::optional<ParsedClientHello> parse_client_hello(const std::vector<uint8_t>& bytes);

// Bytes still needed before parse_client_hello can succeed, 0 when a whole
// message is present (or the prefix is already invalid).
size_t client_hello_bytes_missing(const std::vector<uint8_t>& bytes);

} // namespace posture
