#include "posture/tls_types.hpp"

namespace posture {

uint16_t wire_code(ProtocolVersion v) {
    switch (v) {
    case ProtocolVersion::SSL2: return 0x0002;
    case ProtocolVersion::SSL3: return 0x0300;
    case ProtocolVersion::TLS1_0: return 0x0301;
    case ProtocolVersion::TLS1_1: return 0x0302;
    case ProtocolVersion::TLS1_2: return 0x0303;
    case ProtocolVersion::TLS1_3: return 0x0304;
    }
    return 0;
}

bool deprecated(ProtocolVersion v) {
    return v == ProtocolVersion::SSL2 || v == ProtocolVersion::SSL3 ||
           v == ProtocolVersion::TLS1_0 || v == ProtocolVersion::TLS1_1;
}

const char* version_name(ProtocolVersion v) {
    switch (v) {
    case ProtocolVersion::SSL2: return "SSL2";
    case ProtocolVersion::SSL3: return "SSL3";
    case ProtocolVersion::TLS1_0: return "TLS1_0";
    case ProtocolVersion::TLS1_1: return "TLS1_1";
    case ProtocolVersion::TLS1_2: return "TLS1_2";
    case ProtocolVersion::TLS1_3: return "TLS1_3";
    }
    return "?";
}

std::optional<ProtocolVersion> version_from_name(const std::string& name) {
    for (auto v : kAllVersions)
        if (name == version_name(v)) return v;
    return std::nullopt;
}

std::optional<ProtocolVersion> version_from_wire(uint16_t code) {
    for (auto v : kAllVersions)
        if (wire_code(v) == code) return v;
    return std::nullopt;
}

const char* outcome_name(const ProbeOutcome& o) {
    struct Visitor {
        const char* operator()(const Accepted&) const { return "Accepted"; }
        const char* operator()(const RejectedAlert&) const { return "RejectedAlert"; }
        const char* operator()(const RejectedClose&) const { return "RejectedClose"; }
        const char* operator()(const Timeout&) const { return "Timeout"; }
        const char* operator()(const MalformedResponse&) const { return "MalformedResponse"; }
    };
    return std::visit(Visitor{}, o);
}

} // namespace posture
