#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace posture {

enum class Severity { None, Low, Medium, High, Critical };

inline constexpr Severity kAllSeverities[] = {Severity::None, Severity::Low, Severity::Medium,
                                              Severity::High, Severity::Critical};

const char* severity_name(Severity s);
std::optional<Severity> severity_from_name(const std::string& s);

// CVSS v3 qualitative bands. Errc::OutOfRange outside [0, 10].
Severity severity_band(double score);

struct VersionRange {
    std::optional<std::string> start_incl;
    std::optional<std::string> start_excl;
    std::optional<std::string> end_incl;
    std::optional<std::string> end_excl;

    bool unbounded() const {
        return !start_incl && !start_excl && !end_incl && !end_excl;
    }
};

struct MatchCriterion {
    std::string cpe_prefix;            // "cpe:2.3:a:vendor:product" or longer
    std::string vendor;                // parsed from the prefix
    std::string product;
    std::optional<std::string> exact_version; // version component in the prefix, if pinned
    VersionRange range;
};

struct CveRecord {
    std::string id; // CVE-YYYY-NNNN+
    double base_score = 0;
    Severity severity = Severity::None;
    int64_t published = 0;
    std::vector<MatchCriterion> matches;
};

struct ServiceFingerprint {
    int port = 0;
    std::string transport = "TCP";
    std::string banner;
    std::string vendor;
    std::string product;
    std::string version;
    std::string cpe; // cpe:2.3:a:<vendor>:<product>:<version>:*:*:*:*:*:*:*

    std::string display() const { return vendor + " " + product; }
};

ServiceFingerprint make_fingerprint(int port, const std::string& banner,
                                    const std::string& vendor, const std::string& product,
                                    const std::string& version);

class NvdIndex {
public:
    static NvdIndex load(const std::vector<std::string>& paths); // JSON Lines files

    // Sorted, de-duplicated CVE ids matching the fingerprint's vendor:product
    // and version. Unparseable versions fall back to exact-string matching.
    std::vector<std::string> lookup(const ServiceFingerprint& fp) const;

    const CveRecord* record(const std::string& id) const;
    const std::map<std::string, CveRecord>& records() const { return records_; }
    size_t size() const { return records_.size(); }

private:
    std::map<std::string, CveRecord> records_;
    std::map<std::string, std::vector<std::pair<std::string, size_t>>>
        by_vendor_product_; // "vendor:product" -> (cve id, criterion index)
};

// True when `version` satisfies the criterion's range / exact pin, using
// compare_versions; malformed versions degrade to exact string comparison.
bool criterion_version_match(const MatchCriterion& c, const std::string& version);

struct DomainExposure {
    std::vector<std::pair<ServiceFingerprint, std::vector<std::string>>> services;
    std::set<std::string> matched_ids;
};

struct ExposureReport {
    std::map<std::string, DomainExposure> domains;
    int total_distinct_cves = 0;
    std::map<Severity, int> severity_histogram; // over the distinct union
};

ExposureReport build_exposure_report(
    const std::map<std::string, std::vector<ServiceFingerprint>>& fingerprints,
    const NvdIndex& index);

// Converts an official feed document (either the legacy "CVE_Items" array
// shape or the newer "vulnerabilities" array shape) into snapshot JSON Lines.
// Returns the number of records emitted; records without a CVSS v3 base score
// are skipped.
size_t convert_nvd_feed(const std::string& feed_json, const std::string& out_path);

} // namespace posture
