#pragma once

#include <set>
#include <string>
#include <vector>

#include "posture/cipher_catalog.hpp"
#include "posture/net.hpp"
#include "posture/tls_types.hpp"

namespace posture {

// One connection, one ClientHello, one classified response. Connect failures
// surface as Timeout outcomes; `connected` reports whether TCP came up.
ProbeResult probe_version(const std::string& host, int port, ProtocolVersion version,
                          const std::vector<uint32_t>& ciphers, const ProbePolicy& policy,
                          HostPacer* pacer = nullptr, HostBudget* budget = nullptr,
                          bool offer_deflate = false, bool* connected = nullptr);

// One probe per candidate (single v2 exchange for SSL2). Throws Unreachable
// only when not a single TCP connection succeeded.
std::set<uint32_t> enumerate_ciphers(const std::string& host, int port, ProtocolVersion version,
                                     const std::vector<uint32_t>& candidates,
                                     const ProbePolicy& policy, HostPacer* pacer = nullptr,
                                     HostBudget* budget = nullptr,
                                     std::string* annotation = nullptr);

ProtocolSupportMatrix enumerate_protocols(const std::string& host, int port,
                                          const CipherCatalog& catalog,
                                          const ProbePolicy& policy, HostPacer* pacer = nullptr,
                                          HostBudget* budget = nullptr);

RawChain fetch_certificate_chain(const std::string& host, int port,
                                 const ProtocolSupportMatrix& matrix, const ProbePolicy& policy,
                                 HostPacer* pacer = nullptr, HostBudget* budget = nullptr);

} // namespace posture
