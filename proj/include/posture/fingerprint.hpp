#pragma once

#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "posture/net.hpp"
#include "posture/nvd.hpp"
#include "posture/tls_types.hpp"

namespace posture {

struct FingerprintRule {
    std::string pattern;
    std::regex re;
    std::string vendor;
    std::string product;
    int version_group = 1;
};

std::vector<FingerprintRule> load_fingerprint_rules(const std::string& path);

// First rule whose pattern occurs in the banner wins.
std::optional<ServiceFingerprint> match_banner(const std::vector<FingerprintRule>& rules,
                                               int port, const std::string& banner);

extern const std::vector<int> kDefaultProbePorts;

bool is_web_port(int port);

// Connects to each port once. Web ports get a HEAD request, everything else a
// passive banner read. Ports that refuse, time out, or match no rule are left
// out of the result.
std::vector<ServiceFingerprint> fingerprint_services(const std::string& host,
                                                     const std::vector<int>& ports,
                                                     const ProbePolicy& policy,
                                                     const std::vector<FingerprintRule>& rules,
                                                     HostPacer* pacer = nullptr,
                                                     HostBudget* budget = nullptr);

} // namespace posture
