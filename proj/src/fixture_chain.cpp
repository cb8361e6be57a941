#include "posture/fixture_chain.hpp"

#include <atomic>
#include <cstring>

#include <openssl/bio.h>
#include <openssl/evp.h>
#include <openssl/pem.h>
#include <openssl/x509.h>
#include <openssl/x509v3.h>

#include "posture/error.hpp"
#include "posture/util.hpp"

namespace posture {

FlawSpec parse_flaw_spec(const std::string& text) {
    FlawSpec spec;
    spec.depth = 0;
    bool saw_flaws = false;
    std::string normalized = text;
    for (char& c : normalized)
        if (c == ';') c = ' ';
    for (const auto& tok : split(normalized, ' ')) {
        auto t = trim(tok);
        if (t.empty()) continue;
        if (starts_with(t, "flaws=")) {
            saw_flaws = true;
            std::string list = t.substr(6);
            if (list == "none" || list.empty()) continue;
            for (const auto& name : split(list, ',')) {
                auto code = issue_code_from_name(trim(name));
                if (!code) fail(Errc::SchemaError, "unknown chain issue code '" + name + "'");
                spec.flaws.insert(*code);
            }
        } else if (starts_with(t, "depth=")) {
            spec.depth = static_cast<int>(parse_long(t.substr(6)));
        } else {
            fail(Errc::SchemaError, "unrecognized flaw spec token '" + t + "'");
        }
    }
    if (!saw_flaws || spec.depth == 0)
        fail(Errc::SchemaError, "flaw spec needs both flaws= and depth=: '" + text + "'");
    return spec;
}

std::string flaw_spec_to_string(const FlawSpec& spec) {
    std::string out = "flaws=";
    if (spec.flaws.empty()) {
        out += "none";
    } else {
        bool first = true;
        for (auto c : spec.flaws) {
            if (!first) out += ",";
            out += issue_code_name(c);
            first = false;
        }
    }
    out += " depth=" + std::to_string(spec.depth);
    return out;
}

namespace {

constexpr int64_t kDay = 86400;

struct OwnedCert {
    X509* cert = nullptr;
    EVP_PKEY* key = nullptr;

    ~OwnedCert() {
        if (cert) X509_free(cert);
        if (key) EVP_PKEY_free(key);
    }
    OwnedCert() = default;
    OwnedCert(OwnedCert&& o) noexcept : cert(o.cert), key(o.key) {
        o.cert = nullptr;
        o.key = nullptr;
    }
    OwnedCert(const OwnedCert&) = delete;
};

EVP_PKEY* gen_key(bool weak) {
    EVP_PKEY* key = EVP_EC_gen(weak ? "P-192" : "P-256");
    if (!key) fail(Errc::Internal, "EC key generation failed");
    return key;
}

void set_name(X509_NAME* name, const std::string& cn) {
    X509_NAME_add_entry_by_txt(name, "O", MBSTRING_ASC,
                               reinterpret_cast<const unsigned char*>("Posture Fixtures"), -1, -1,
                               0);
    X509_NAME_add_entry_by_txt(name, "CN", MBSTRING_ASC,
                               reinterpret_cast<const unsigned char*>(cn.c_str()), -1, -1, 0);
}

std::atomic<int64_t> g_serial{0x0b01};
// Roots get distinct subjects so chains from many fixtures can share one
// trust store without subject-DN collisions.
std::atomic<int64_t> g_root_id{1};

struct CertParams {
    std::string cn;
    bool ca = false;
    bool weak_key = false;
    bool sha1_signature = false;
    int64_t not_before = kFixtureValidationAt - 30 * kDay;
    int64_t not_after = kFixtureValidationAt + 365 * kDay;
    std::string san; // leaf only, e.g. "DNS:fixture.test"
};

OwnedCert make_cert(const CertParams& p, X509* issuer_cert, EVP_PKEY* issuer_key) {
    OwnedCert out;
    out.key = gen_key(p.weak_key);
    out.cert = X509_new();
    if (!out.cert) fail(Errc::Internal, "X509_new failed");

    X509_set_version(out.cert, 2);
    ASN1_INTEGER_set_int64(X509_get_serialNumber(out.cert), g_serial++);

    X509_NAME* subject = X509_NAME_new();
    set_name(subject, p.cn);
    X509_set_subject_name(out.cert, subject);
    if (issuer_cert)
        X509_set_issuer_name(out.cert, X509_get_subject_name(issuer_cert));
    else
        X509_set_issuer_name(out.cert, subject);
    X509_NAME_free(subject);

    ASN1_TIME* t = ASN1_TIME_new();
    ASN1_TIME_set(t, static_cast<time_t>(p.not_before));
    X509_set1_notBefore(out.cert, t);
    ASN1_TIME_set(t, static_cast<time_t>(p.not_after));
    X509_set1_notAfter(out.cert, t);
    ASN1_TIME_free(t);

    X509_set_pubkey(out.cert, out.key);

    X509V3_CTX ctx;
    X509V3_set_ctx_nodb(&ctx);
    X509V3_set_ctx(&ctx, issuer_cert ? issuer_cert : out.cert, out.cert, nullptr, nullptr, 0);
    if (p.ca) {
        X509_EXTENSION* ex = X509V3_EXT_conf_nid(nullptr, &ctx, NID_basic_constraints,
                                                 "critical,CA:TRUE");
        if (!ex) fail(Errc::Internal, "basicConstraints extension failed");
        X509_add_ext(out.cert, ex, -1);
        X509_EXTENSION_free(ex);
    }
    if (!p.san.empty()) {
        X509_EXTENSION* ex = X509V3_EXT_conf_nid(nullptr, &ctx, NID_subject_alt_name,
                                                 p.san.c_str());
        if (!ex) fail(Errc::Internal, "subjectAltName extension failed");
        X509_add_ext(out.cert, ex, -1);
        X509_EXTENSION_free(ex);
    }

    EVP_PKEY* signer = issuer_key ? issuer_key : out.key;
    if (!X509_sign(out.cert, signer, p.sha1_signature ? EVP_sha1() : EVP_sha256()))
        fail(Errc::Internal, "X509_sign failed");
    return out;
}

std::string cert_to_pem(X509* cert) {
    BIO* bio = BIO_new(BIO_s_mem());
    PEM_write_bio_X509(bio, cert);
    char* data = nullptr;
    long len = BIO_get_mem_data(bio, &data);
    std::string pem(data, static_cast<size_t>(len));
    BIO_free(bio);
    return pem;
}

std::string key_to_pem(EVP_PKEY* key) {
    BIO* bio = BIO_new(BIO_s_mem());
    PEM_write_bio_PrivateKey(bio, key, nullptr, nullptr, 0, nullptr, nullptr);
    char* data = nullptr;
    long len = BIO_get_mem_data(bio, &data);
    std::string pem(data, static_cast<size_t>(len));
    BIO_free(bio);
    return pem;
}

void check_satisfiable(const FlawSpec& spec) {
    auto has = [&](ChainIssueCode c) { return spec.flaws.count(c) > 0; };
    if (spec.depth < 1 || spec.depth > 4)
        fail(Errc::UnsatisfiableSpec, "depth must be 1-4, got " + std::to_string(spec.depth));
    if (has(ChainIssueCode::SLF)) {
        if (spec.depth != 1)
            fail(Errc::UnsatisfiableSpec, "SLF requires depth 1");
        if (has(ChainIssueCode::SIG))
            fail(Errc::UnsatisfiableSpec,
                 "a self-signed leaf that anchors is exempt from the signature screen");
        if (has(ChainIssueCode::INC))
            fail(Errc::UnsatisfiableSpec, "a self-signed leaf is its own issuer");
    }
    if (has(ChainIssueCode::UCA) && has(ChainIssueCode::INC))
        fail(Errc::UnsatisfiableSpec,
             "an untrusted anchor needs a complete walk; INC breaks the walk first");
    if (has(ChainIssueCode::UCA) && !has(ChainIssueCode::SLF) && spec.depth < 2)
        fail(Errc::UnsatisfiableSpec, "UCA without SLF needs the untrusted root presented");
    if (has(ChainIssueCode::INC) && spec.depth < 2)
        fail(Errc::UnsatisfiableSpec, "INC needs an intermediate to omit");
    if (has(ChainIssueCode::NAF) && has(ChainIssueCode::NBF) && spec.depth < 2)
        fail(Errc::UnsatisfiableSpec, "NAF and NBF need separate certificates");
}

} // namespace

std::set<ChainIssue> expected_issues_for(const FlawSpec& spec) {
    check_satisfiable(spec);
    bool slf = spec.flaws.count(ChainIssueCode::SLF) > 0;
    bool nbf_on_intermediate =
        spec.flaws.count(ChainIssueCode::NAF) > 0 && spec.flaws.count(ChainIssueCode::NBF) > 0;
    std::set<ChainIssue> out;
    for (ChainIssueCode code : spec.flaws) {
        size_t index = 0;
        if (code == ChainIssueCode::UCA && !slf) index = static_cast<size_t>(spec.depth) - 1;
        if (code == ChainIssueCode::NBF && nbf_on_intermediate) index = 1;
        out.insert(ChainIssue{code, index, ""});
    }
    return out;
}

FixtureChain generate_fixture_chain(const FlawSpec& spec, const std::string& hostname) {
    check_satisfiable(spec);
    auto has = [&](ChainIssueCode c) { return spec.flaws.count(c) > 0; };

    FixtureChain fx;
    fx.hostname = hostname;

    bool slf = has(ChainIssueCode::SLF);
    bool uca = has(ChainIssueCode::UCA);
    bool inc = has(ChainIssueCode::INC);
    bool nbf_on_intermediate = has(ChainIssueCode::NAF) && has(ChainIssueCode::NBF);

    CertParams leaf_params;
    leaf_params.cn = fx.hostname;
    leaf_params.weak_key = has(ChainIssueCode::WKY);
    leaf_params.sha1_signature = has(ChainIssueCode::SIG);
    leaf_params.san =
        has(ChainIssueCode::HNM) ? "DNS:mismatch.invalid" : "DNS:" + fx.hostname;
    if (has(ChainIssueCode::NAF)) leaf_params.not_after = kFixtureValidationAt - kDay;
    if (has(ChainIssueCode::NBF) && !nbf_on_intermediate)
        leaf_params.not_before = kFixtureValidationAt + kDay;

    std::vector<OwnedCert> presented; // leaf first

    if (slf) {
        OwnedCert leaf = make_cert(leaf_params, nullptr, nullptr);
        if (!uca) fx.store_pem.push_back(cert_to_pem(leaf.cert));
        fx.leaf_key_pem = key_to_pem(leaf.key);
        presented.push_back(std::move(leaf));
    } else {
        // CA certs sitting between the leaf and the root slot. INC builds one
        // extra so the direct issuer can be omitted from the presented list;
        // UCA reserves a presented slot for the root itself.
        int n_cas = spec.depth - 1;
        if (inc) n_cas = spec.depth;
        if (uca) n_cas = spec.depth - 2;
        // NBF lands on whichever cert ends up at presented index 1.
        int nbf_ca = inc ? 2 : 1;

        CertParams root_params;
        root_params.cn = "Posture Fixture Root " + std::to_string(g_root_id++);
        root_params.ca = true;
        if (nbf_on_intermediate && n_cas == 0)
            root_params.not_before = kFixtureValidationAt + kDay;
        OwnedCert root = make_cert(root_params, nullptr, nullptr);

        std::vector<OwnedCert> cas; // top-down: cas[0] is signed by the root
        for (int i = n_cas; i >= 1; --i) {
            CertParams p;
            p.cn = "Posture Fixture CA " + std::to_string(i);
            p.ca = true;
            if (nbf_on_intermediate && i == nbf_ca) p.not_before = kFixtureValidationAt + kDay;
            X509* signer_cert = cas.empty() ? root.cert : cas.back().cert;
            EVP_PKEY* signer_key = cas.empty() ? root.key : cas.back().key;
            cas.push_back(make_cert(p, signer_cert, signer_key));
        }
        // cas back() is the leaf's direct issuer
        X509* leaf_signer_cert = cas.empty() ? root.cert : cas.back().cert;
        EVP_PKEY* leaf_signer_key = cas.empty() ? root.key : cas.back().key;
        OwnedCert leaf = make_cert(leaf_params, leaf_signer_cert, leaf_signer_key);
        fx.leaf_key_pem = key_to_pem(leaf.key);

        presented.push_back(std::move(leaf));
        // presented order: leaf, then CAs bottom-up (closest issuer first)
        for (auto it = cas.rbegin(); it != cas.rend(); ++it) {
            if (inc && it == cas.rbegin()) continue; // omit the direct issuer
            presented.push_back(std::move(*it));
        }
        if (uca)
            presented.push_back(std::move(root));
        else
            fx.store_pem.push_back(cert_to_pem(root.cert));
    }

    for (auto& oc : presented) fx.chain_pem.push_back(cert_to_pem(oc.cert));

    // Derive revocation rows and the expected set from the presented bytes,
    // through the same parser validation will use.
    std::string joined;
    for (const auto& pem : fx.chain_pem) joined += pem;
    RawChain raw;
    raw.der_certificates = pem_to_der_blocks(joined);
    ParsedChain parsed = parse_chain(raw);
    if (parsed.records.size() != fx.chain_pem.size())
        fail(Errc::Internal, "fixture chain failed to re-parse: " + parsed.error_detail);
    const CertificateRecord& leaf_rec = parsed.records.front();

    if (has(ChainIssueCode::RVK)) {
        std::string hash = issuer_dn_hash(leaf_rec.issuer);
        fx.revocations.revoked.insert({hash, leaf_rec.serial_hex});
        fx.revocations.covered_issuers.insert(hash);
    }
    if (has(ChainIssueCode::BLK)) fx.revocations.blocklist.insert(leaf_rec.spki_digest_hex);

    if (presented.size() != static_cast<size_t>(spec.depth))
        fail(Errc::Internal, "fixture topology produced wrong presented length");
    fx.expected = expected_issues_for(spec);
    return fx;
}

std::vector<FlawSpec> fixture_corpus() {
    std::vector<FlawSpec> corpus;
    auto depth_for = [](const std::set<ChainIssueCode>& flaws) {
        if (flaws.count(ChainIssueCode::SLF)) return 1;
        if (flaws == std::set<ChainIssueCode>{ChainIssueCode::SIG, ChainIssueCode::HNM}) return 3;
        return 2;
    };
    for (ChainIssueCode a : kAllIssueCodes) {
        FlawSpec s;
        s.flaws = {a};
        s.depth = depth_for(s.flaws);
        corpus.push_back(s);
    }
    for (size_t i = 0; i < std::size(kAllIssueCodes); ++i) {
        for (size_t j = i + 1; j < std::size(kAllIssueCodes); ++j) {
            FlawSpec s;
            s.flaws = {kAllIssueCodes[i], kAllIssueCodes[j]};
            s.depth = depth_for(s.flaws);
            bool bad_pair =
                (s.flaws.count(ChainIssueCode::SLF) &&
                 (s.flaws.count(ChainIssueCode::SIG) || s.flaws.count(ChainIssueCode::INC))) ||
                (s.flaws.count(ChainIssueCode::UCA) && s.flaws.count(ChainIssueCode::INC));
            if (bad_pair) continue;
            corpus.push_back(s);
        }
    }
    return corpus;
}

} // namespace posture
