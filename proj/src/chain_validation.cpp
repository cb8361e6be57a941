#include "posture/chain_validation.hpp"

#include <algorithm>
#include <filesystem>

#include <openssl/evp.h>
#include <openssl/x509.h>

#include "posture/csv.hpp"
#include "posture/error.hpp"
#include "posture/util.hpp"

namespace posture {

const char* issue_code_name(ChainIssueCode c) {
    switch (c) {
    case ChainIssueCode::SIG: return "SIG";
    case ChainIssueCode::HNM: return "HNM";
    case ChainIssueCode::NAF: return "NAF";
    case ChainIssueCode::NBF: return "NBF";
    case ChainIssueCode::RVK: return "RVK";
    case ChainIssueCode::BLK: return "BLK";
    case ChainIssueCode::UCA: return "UCA";
    case ChainIssueCode::INC: return "INC";
    case ChainIssueCode::SLF: return "SLF";
    case ChainIssueCode::WKY: return "WKY";
    }
    return "?";
}

std::optional<ChainIssueCode> issue_code_from_name(const std::string& s) {
    for (auto c : kAllIssueCodes)
        if (s == issue_code_name(c)) return c;
    return std::nullopt;
}

bool issue_breaks_trust(ChainIssueCode c) {
    switch (c) {
    case ChainIssueCode::UCA:
    case ChainIssueCode::INC:
    case ChainIssueCode::RVK:
    case ChainIssueCode::BLK:
    case ChainIssueCode::NAF:
    case ChainIssueCode::NBF:
        return true;
    default:
        return false;
    }
}

TrustStore TrustStore::load_dir(const std::string& dir) {
    TrustStore store;
    std::error_code ec;
    std::filesystem::directory_iterator it(dir, ec);
    if (ec) fail(Errc::IoError, "cannot open trust store directory " + dir);
    std::vector<std::string> files;
    for (const auto& entry : it)
        if (entry.path().extension() == ".pem") files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
    for (const auto& f : files)
        for (const auto& der : pem_to_der_blocks(read_file(f)))
            store.add(parse_certificate(der));
    return store;
}

TrustStore TrustStore::from_pem(const std::string& pem_text) {
    TrustStore store;
    for (const auto& der : pem_to_der_blocks(pem_text)) store.add(parse_certificate(der));
    return store;
}

void TrustStore::add(const CertificateRecord& root) { roots_.push_back(root); }

const CertificateRecord* TrustStore::by_subject(const std::vector<uint8_t>& dn_der) const {
    for (const auto& r : roots_)
        if (r.subject_der == dn_der) return &r;
    return nullptr;
}

bool TrustStore::contains_digest(const std::string& der_digest_hex) const {
    for (const auto& r : roots_)
        if (r.der_digest_hex == der_digest_hex) return true;
    return false;
}

std::string issuer_dn_hash(const std::string& rendered_dn) { return sha256_hex(rendered_dn); }

RevocationData RevocationData::load(const std::string& crl_csv_path,
                                    const std::string& blocklist_path) {
    RevocationData out;
    if (!crl_csv_path.empty()) {
        static const std::vector<std::string> header = {"issuer_dn_hash", "serial_hex"};
        for (const auto& row : read_csv_file(crl_csv_path, header)) {
            out.revoked.emplace(to_lower(row[0]), to_lower(row[1]));
            out.covered_issuers.insert(to_lower(row[0]));
        }
    }
    if (!blocklist_path.empty()) {
        for (const auto& line : split(read_file(blocklist_path), '\n')) {
            std::string t = trim(line);
            if (t.empty() || t[0] == '#') continue;
            out.blocklist.insert(to_lower(t));
        }
    }
    return out;
}

RevocationStatus check_revocation(const CertificateRecord& cert, const RevocationData& rev) {
    if (rev.blocklist.count(cert.spki_digest_hex)) return RevocationStatus::Blocklisted;
    std::string ih = issuer_dn_hash(cert.issuer);
    if (rev.revoked.count({ih, to_lower(cert.serial_hex)})) return RevocationStatus::Revoked;
    if (!rev.covered_issuers.count(ih)) return RevocationStatus::Unknown;
    return RevocationStatus::Good;
}

bool hostname_matches(const std::string& pattern, const std::string& hostname) {
    std::string pat = to_lower(trim(pattern));
    std::string host = to_lower(trim(hostname));
    if (pat.empty() || host.empty()) return false;
    if (starts_with(pat, "*.")) {
        auto pat_rest = pat.substr(2);
        auto dot = host.find('.');
        if (dot == std::string::npos || dot == 0) return false;
        return host.substr(dot + 1) == pat_rest;
    }
    return pat == host;
}

// True when `subject`'s signature verifies under `issuer`'s public key.
// A false result covers both bad signatures and algorithms the local crypto
// stack cannot verify; callers treat either as a broken link.
static bool verify_link_signature(const CertificateRecord& subject,
                                  const CertificateRecord& issuer) {
    const unsigned char* p = subject.der.data();
    X509* subject_x509 = d2i_X509(nullptr, &p, static_cast<long>(subject.der.size()));
    if (!subject_x509) return false;
    p = issuer.der.data();
    X509* issuer_x509 = d2i_X509(nullptr, &p, static_cast<long>(issuer.der.size()));
    if (!issuer_x509) {
        X509_free(subject_x509);
        return false;
    }
    EVP_PKEY* key = X509_get_pubkey(issuer_x509);
    bool ok = key != nullptr && X509_verify(subject_x509, key) == 1;
    if (key) EVP_PKEY_free(key);
    X509_free(issuer_x509);
    X509_free(subject_x509);
    return ok;
}

namespace {

struct WalkResult {
    bool anchored = false;
    std::optional<std::string> anchor_subject;
    std::vector<ChainIssue> issues;
    std::set<size_t> path; // presented-chain indices on the trust path
};

WalkResult walk_to_anchor(const std::vector<CertificateRecord>& chain, const TrustStore& store) {
    WalkResult out;
    size_t current = 0;
    out.path.insert(0);
    for (;;) {
        const CertificateRecord& cert = chain[current];
        if (cert.self_signed()) {
            if (store.contains_digest(cert.der_digest_hex)) {
                out.anchored = true;
                out.anchor_subject = cert.subject;
            } else {
                out.issues.push_back({ChainIssueCode::UCA, current,
                                      "self-signed root '" + cert.subject + "' not in trust store"});
            }
            return out;
        }
        // Prefer an issuer from the presented chain, then the store.
        const CertificateRecord* issuer = nullptr;
        size_t issuer_index = 0;
        for (size_t j = 0; j < chain.size(); ++j) {
            if (j == current || out.path.count(j)) continue;
            if (chain[j].subject_der == cert.issuer_der) {
                issuer = &chain[j];
                issuer_index = j;
                break;
            }
        }
        bool issuer_in_store = false;
        if (!issuer) {
            issuer = store.by_subject(cert.issuer_der);
            issuer_in_store = issuer != nullptr;
        }
        if (!issuer) {
            out.issues.push_back({ChainIssueCode::INC, current,
                                  "no certificate for issuer '" + cert.issuer + "'"});
            return out;
        }
        if (!verify_link_signature(cert, *issuer)) {
            out.issues.push_back({ChainIssueCode::INC, current,
                                  "signature by '" + issuer->subject + "' failed to verify"});
            return out;
        }
        if (issuer_in_store) {
            out.anchored = true;
            out.anchor_subject = issuer->subject;
            return out;
        }
        current = issuer_index;
        out.path.insert(current);
    }
}

} // namespace

ChainReport validate_chain(const std::vector<CertificateRecord>& chain,
                           const std::string& hostname, const TrustStore& store,
                           const RevocationData& revocations, int64_t at,
                           const CertPolicy& policy) {
    if (chain.empty()) fail(Errc::EmptyChain, "cannot validate an empty chain");

    ChainReport report;
    report.chain = chain;
    report.evaluated_at = at;
    std::vector<ChainIssue> issues;

    WalkResult walk = walk_to_anchor(chain, store);
    for (auto& i : walk.issues) issues.push_back(std::move(i));
    report.trust_anchor = walk.anchor_subject;

    for (size_t i = 0; i < chain.size(); ++i) {
        const CertificateRecord& cert = chain[i];

        // Insecure signature screen. Trust anchors are trusted by identity:
        // a terminal self-signed certificate or a store member is exempt.
        bool anchor_like = (cert.self_signed() && store.contains_digest(cert.der_digest_hex)) ||
                           (cert.self_signed() && walk.path.count(i));
        if (!anchor_like && signature_algorithm_insecure(cert.signature_algorithm))
            issues.push_back({ChainIssueCode::SIG, i,
                              std::string(signature_algorithm_name(cert.signature_algorithm)) +
                                  " signature"});

        if (at > cert.not_after)
            issues.push_back({ChainIssueCode::NAF, i, "expired " + format_utc(cert.not_after)});
        if (at < cert.not_before)
            issues.push_back(
                {ChainIssueCode::NBF, i, "not valid before " + format_utc(cert.not_before)});

        RevocationStatus rs = check_revocation(cert, revocations);
        if (rs == RevocationStatus::Revoked)
            issues.push_back({ChainIssueCode::RVK, i, "serial " + cert.serial_hex + " revoked"});
        else if (rs == RevocationStatus::Blocklisted)
            issues.push_back({ChainIssueCode::BLK, i, "public key blocklisted"});

        bool weak_key = false;
        switch (cert.key_algorithm) {
        case KeyAlgorithm::RSA:
        case KeyAlgorithm::DSA:
            weak_key = cert.key_bits < policy.min_rsa_bits;
            break;
        case KeyAlgorithm::EC:
            weak_key = cert.key_bits < policy.min_ec_bits;
            break;
        }
        if (weak_key)
            issues.push_back({ChainIssueCode::WKY, i,
                              std::string(key_algorithm_name(cert.key_algorithm)) + " " +
                                  std::to_string(cert.key_bits) + " bits"});
    }

    const CertificateRecord& leaf = chain[0];
    bool host_ok;
    if (!leaf.subject_alt_names.empty()) {
        host_ok = std::any_of(leaf.subject_alt_names.begin(), leaf.subject_alt_names.end(),
                              [&](const std::string& san) { return hostname_matches(san, hostname); });
    } else {
        host_ok = !leaf.subject_cn.empty() && hostname_matches(leaf.subject_cn, hostname);
    }
    if (!host_ok)
        issues.push_back({ChainIssueCode::HNM, 0, "no name covers '" + hostname + "'"});

    if (leaf.self_signed()) issues.push_back({ChainIssueCode::SLF, 0, "leaf is self-signed"});

    std::sort(issues.begin(), issues.end());
    issues.erase(std::unique(issues.begin(), issues.end()), issues.end());
    report.issues = std::move(issues);

    report.trusted = true;
    for (const auto& i : report.issues)
        if (issue_breaks_trust(i.code)) report.trusted = false;
    return report;
}

} // namespace posture
