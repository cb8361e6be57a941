#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "posture/chain_validation.hpp"
#include "posture/dataset.hpp"
#include "posture/grading.hpp"
#include "posture/nvd.hpp"
#include "posture/tls_types.hpp"

namespace posture {

enum class DomainStatus { Complete, Partial, Unreachable, Skipped };
const char* domain_status_name(DomainStatus s);
DomainStatus domain_status_from_name(const std::string& s);

struct CveHit {
    std::string id;
    Severity severity = Severity::None;
    double score = 0.0;

    bool operator<(const CveHit& o) const { return id < o.id; }
};

struct ServiceReport {
    ServiceFingerprint fingerprint;
    std::vector<std::string> cve_ids;
};

struct DomainPostureReport {
    ScanTarget target;
    DomainStatus status = DomainStatus::Skipped;
    int64_t scanned_at = 0;

    bool matrix_done = false;
    ProtocolSupportMatrix matrix;
    std::set<uint32_t> weak_ciphers;
    std::set<uint32_t> insecure_ciphers;

    bool chain_done = false;
    ChainReport chain;
    std::string chain_path; // retrieval path name, empty when no chain

    bool vuln_done = false;
    std::vector<ServiceReport> services;
    std::set<CveHit> cves; // distinct over all services

    std::optional<ServerGrade> grade;
    std::string annotation; // per-domain trouble note

    int weak_count() const { return static_cast<int>(weak_ciphers.size()); }
    int insecure_count() const { return static_cast<int>(insecure_ciphers.size()); }
    int cve_count() const { return static_cast<int>(cves.size()); }
};

std::string report_to_json(const DomainPostureReport& report);
DomainPostureReport report_from_json(const std::string& line);

std::vector<DomainPostureReport> load_report_log(const std::string& path);

} // namespace posture
