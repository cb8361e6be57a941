#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "posture/x509_parse.hpp"

namespace posture {

enum class ChainIssueCode { SIG, HNM, NAF, NBF, RVK, BLK, UCA, INC, SLF, WKY };

inline constexpr ChainIssueCode kAllIssueCodes[] = {
    ChainIssueCode::SIG, ChainIssueCode::HNM, ChainIssueCode::NAF, ChainIssueCode::NBF,
    ChainIssueCode::RVK, ChainIssueCode::BLK, ChainIssueCode::UCA, ChainIssueCode::INC,
    ChainIssueCode::SLF, ChainIssueCode::WKY,
};

const char* issue_code_name(ChainIssueCode c);
std::optional<ChainIssueCode> issue_code_from_name(const std::string& s);

// Issue codes that break chain trust; SIG/HNM/SLF/WKY degrade quality but a
// chain carrying only those still anchors to the store.
bool issue_breaks_trust(ChainIssueCode c);

struct ChainIssue {
    ChainIssueCode code;
    size_t certificate_index = 0;
    std::string detail;

    bool operator<(const ChainIssue& o) const {
        if (code != o.code) return code < o.code;
        return certificate_index < o.certificate_index;
    }
    bool operator==(const ChainIssue& o) const {
        return code == o.code && certificate_index == o.certificate_index;
    }
};

struct ChainReport {
    std::vector<CertificateRecord> chain; // leaf first
    std::vector<ChainIssue> issues;       // sorted by (code, index), unique
    bool trusted = false;
    int64_t evaluated_at = 0;
    std::optional<std::string> trust_anchor; // subject DN of the matched root

    std::set<ChainIssueCode> issue_codes() const {
        std::set<ChainIssueCode> out;
        for (const auto& i : issues) out.insert(i.code);
        return out;
    }
    bool has(ChainIssueCode c) const { return issue_codes().count(c) > 0; }
};

class TrustStore {
public:
    static TrustStore load_dir(const std::string& dir); // every *.pem file
    static TrustStore from_pem(const std::string& pem_text);

    void add(const CertificateRecord& root);
    const CertificateRecord* by_subject(const std::vector<uint8_t>& dn_der) const;
    bool contains_digest(const std::string& der_digest_hex) const;
    size_t size() const { return roots_.size(); }
    const std::vector<CertificateRecord>& roots() const { return roots_; }

private:
    std::vector<CertificateRecord> roots_;
};

struct RevocationData {
    // (issuer DN hash, lowercase serial hex); issuer DN hash = SHA-256 hex of
    // the rendered issuer DN string.
    std::set<std::pair<std::string, std::string>> revoked;
    std::set<std::string> covered_issuers; // issuer DN hashes with CRL coverage
    std::set<std::string> blocklist;       // SPKI SHA-256 digests, lowercase hex

    // Either path may be empty (treated as no data of that kind).
    static RevocationData load(const std::string& crl_csv_path,
                               const std::string& blocklist_path);
};

std::string issuer_dn_hash(const std::string& rendered_dn);

enum class RevocationStatus { Good, Revoked, Blocklisted, Unknown };

RevocationStatus check_revocation(const CertificateRecord& cert, const RevocationData& rev);

struct CertPolicy {
    int min_rsa_bits = 2048; // also applies to DSA
    int min_ec_bits = 224;
};

// Wildcards: single '*' as the leftmost label only, matching exactly one label.
bool hostname_matches(const std::string& pattern, const std::string& hostname);

ChainReport validate_chain(const std::vector<CertificateRecord>& chain,
                           const std::string& hostname, const TrustStore& store,
                           const RevocationData& revocations, int64_t at,
                           const CertPolicy& policy = {});

} // namespace posture
