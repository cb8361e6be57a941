#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace posture {

enum class ProtocolVersion { SSL2, SSL3, TLS1_0, TLS1_1, TLS1_2, TLS1_3 };

inline constexpr ProtocolVersion kAllVersions[] = {
    ProtocolVersion::SSL2,   ProtocolVersion::SSL3,   ProtocolVersion::TLS1_0,
    ProtocolVersion::TLS1_1, ProtocolVersion::TLS1_2, ProtocolVersion::TLS1_3,
};

uint16_t wire_code(ProtocolVersion v);
bool deprecated(ProtocolVersion v);
const char* version_name(ProtocolVersion v);
std::optional<ProtocolVersion> version_from_name(const std::string& name);
std::optional<ProtocolVersion> version_from_wire(uint16_t code);

struct ProbePolicy {
    std::chrono::milliseconds connect_timeout{5000};
    std::chrono::milliseconds read_timeout{5000};
    std::chrono::milliseconds per_host_delay{250};
    int retries = 1;
    int max_probes_per_version = 400;
    int max_probes_per_host = 2000;
};

// Mutable per-host probe accounting shared across the probe passes for one
// endpoint. Connections stop when the budget is exhausted.
struct HostBudget {
    int used = 0;
    int limit = 0;
    bool exhausted() const { return limit > 0 && used >= limit; }
};

struct Accepted {
    uint32_t chosen_cipher = 0;
};
struct RejectedAlert {
    uint8_t alert_code = 0;
};
struct RejectedClose {};
struct Timeout {};
struct MalformedResponse {
    std::string note;
};

using ProbeOutcome = std::variant<Accepted, RejectedAlert, RejectedClose, Timeout, MalformedResponse>;

const char* outcome_name(const ProbeOutcome& o);

struct ProbeResult {
    ProtocolVersion version = ProtocolVersion::TLS1_2;
    std::vector<uint32_t> offered;
    ProbeOutcome outcome = RejectedClose{};
    // SSL2 only: every cipher kind the v2 ServerHello advertised (the v2
    // handshake answers the whole offer in one round trip), plus the
    // certificate the hello carried inline.
    std::vector<uint32_t> ssl2_kinds;
    std::vector<uint8_t> ssl2_certificate;
    // Compression method echoed in the ServerHello, -1 when none was parsed.
    int compression = -1;

    bool accepted() const { return std::holds_alternative<Accepted>(outcome); }
    uint32_t chosen() const { return std::get<Accepted>(outcome).chosen_cipher; }
};

struct VersionSupport {
    bool supported = false;
    // Ordered by code point; "ordered set" semantics.
    std::set<uint32_t> accepted_ciphers;
    std::string annotation; // per-version probe trouble, empty when clean
};

struct ProtocolSupportMatrix {
    std::map<ProtocolVersion, VersionSupport> per_version;
    bool compression_deflate = false;
    int probe_count = 0;
    std::chrono::milliseconds elapsed{0};

    ProtocolSupportMatrix() {
        for (auto v : kAllVersions) per_version[v];
    }
    bool supports(ProtocolVersion v) const {
        auto it = per_version.find(v);
        return it != per_version.end() && it->second.supported;
    }
    std::set<uint32_t> accepted_union() const {
        std::set<uint32_t> out;
        for (const auto& [v, s] : per_version)
            out.insert(s.accepted_ciphers.begin(), s.accepted_ciphers.end());
        return out;
    }
    bool any_supported() const {
        for (const auto& [v, s] : per_version)
            if (s.supported) return true;
        return false;
    }
};

enum class RetrievalPath { PlaintextCertificateMessage, CompletedHandshake };

struct RawChain {
    std::vector<std::vector<uint8_t>> der_certificates; // leaf first
    RetrievalPath retrieval_path = RetrievalPath::PlaintextCertificateMessage;
};

// SSLv2 cipher kinds, normalized 3-byte integers.
inline constexpr uint32_t kSsl2CipherKinds[] = {
    0x010080, 0x020080, 0x030080, 0x040080, 0x050080, 0x060040, 0x0700C0,
};

} // namespace posture
