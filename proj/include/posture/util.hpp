#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace posture {

std::string to_hex(const uint8_t* data, size_t len);
std::string to_hex(const std::vector<uint8_t>& data);
std::vector<uint8_t> from_hex(const std::string& hex);
// Cipher code point rendering: 4 hex digits, 6 for the 3-byte SSLv2 kinds.
std::string hex_code(uint32_t code);

std::string sha256_hex(const uint8_t* data, size_t len);
std::string sha256_hex(const std::vector<uint8_t>& data);
std::string sha256_hex(const std::string& data);

std::string b64_encode(const uint8_t* data, size_t len);
std::vector<uint8_t> b64_decode(const std::string& text); // ignores whitespace

std::string trim(const std::string& s);
std::string to_lower(std::string s);
std::vector<std::string> split(const std::string& s, char sep);
std::string join(const std::vector<std::string>& parts, const std::string& sep);
bool starts_with(const std::string& s, const std::string& prefix);
bool ends_with(const std::string& s, const std::string& suffix);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Parses a strict non-negative decimal integer; Errc::SchemaError otherwise.
long parse_long(const std::string& s, const std::string& what = "number");

// "0x..." hex code point as used in the catalog and scenario files.
uint32_t parse_code_point(const std::string& s, const std::string& what = "code point");

// %.17g keeps doubles bit-exact through a text round trip.
std::string fmt_double(double v);

int64_t unix_now();

// "YYYY-MM-DD" or "YYYY-MM-DDThh:mm:ssZ" to unix seconds (UTC, proleptic Gregorian).
int64_t parse_utc(const std::string& s);
std::string format_utc(int64_t t);

} // namespace posture
