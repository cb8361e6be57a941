#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "posture/net.hpp"
#include "posture/tls_types.hpp"

namespace posture {

// Hello construction and response classification, byte-level only. Nothing in
// here touches a socket except read_tls_record, which pulls one record off an
// already-connected stream.

std::vector<uint8_t> build_client_hello(ProtocolVersion version,
                                        const std::vector<uint32_t>& ciphers,
                                        const std::string& server_name,
                                        bool offer_deflate = false);

ProbeResult parse_server_response(ProtocolVersion version, const std::vector<uint32_t>& offered,
                                  const std::vector<uint8_t>& bytes);

struct TlsRecord {
    uint8_t content_type = 0;
    uint16_t record_version = 0;
    std::vector<uint8_t> payload;
};

enum class RecordReadStatus { Ok, Closed, Timeout, Malformed };

RecordReadStatus read_tls_record(Socket& sock, std::chrono::milliseconds timeout, TlsRecord& out);

// Certificate handshake message (type 11) body → DER blobs, leaf first.
std::optional<std::vector<std::vector<uint8_t>>> parse_certificate_body(
    const std::vector<uint8_t>& body);

// Incremental handshake-message splitter fed from record payloads.
class HandshakeBuffer {
public:
    void feed(const std::vector<uint8_t>& record_payload);
    // nullopt until a complete message is buffered. first = message type.
    std::optional<std::pair<uint8_t, std::vector<uint8_t>>> next_message();

private:
    std::vector<uint8_t> buf_;
};

} // namespace posture
