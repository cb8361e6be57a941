#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "posture/tls_types.hpp"

namespace posture {

enum class KeyExchange { RSA, DHE, ECDHE, DH, ECDH, DH_anon, ECDH_anon, PSK, NULL_KX };
enum class Bulk {
    NULL_ENC,
    RC4,
    RC2,
    DES,
    TripleDES,
    AES_CBC,
    AES_GCM,
    AES_CCM,
    CHACHA20,
    CAMELLIA,
    ARIA,
    SEED,
    IDEA,
    EXPORT_grade,
};
enum class Mac { NONE, MD5, SHA1, SHA256, SHA384, AEAD };
enum class Classification { Strong, Weak, Insecure };

const char* kx_name(KeyExchange v);
const char* bulk_name(Bulk v);
const char* mac_name(Mac v);
const char* classification_name(Classification v);
std::optional<KeyExchange> kx_from_name(const std::string& s);
std::optional<Bulk> bulk_from_name(const std::string& s);
std::optional<Mac> mac_from_name(const std::string& s);
std::optional<Classification> classification_from_name(const std::string& s);

bool kx_anonymous(KeyExchange kx);
bool kx_forward_secret(KeyExchange kx);

struct CipherSuite {
    uint32_t code_point = 0; // 2-byte id, or normalized 3-byte SSLv2 kind
    std::string iana_name;
    KeyExchange kx = KeyExchange::RSA;
    Bulk bulk = Bulk::NULL_ENC;
    int effective_bits = 0;
    Mac mac = Mac::NONE;
    std::set<ProtocolVersion> version_families;
    Classification classification = Classification::Insecure;

    bool valid_for(ProtocolVersion v) const { return version_families.count(v) > 0; }
};

// Rule-based classification; the shipped catalog agrees with it row for row.
Classification classify_cipher(const CipherSuite& suite);

// Derives kx/bulk/bits/mac/versions/classification from the IANA name alone.
// Exists as an independent second route for validating catalog data.
CipherSuite derive_suite_fields(uint32_t code_point, const std::string& iana_name);

class CipherCatalog {
public:
    static CipherCatalog load(const std::string& path);

    const CipherSuite* find(uint32_t code_point) const;
    const CipherSuite& lookup(uint32_t code_point) const; // Errc::UnknownCipher if absent

    // Ordered by code point.
    std::vector<uint32_t> suites_for_version(ProtocolVersion v) const;
    const std::map<uint32_t, CipherSuite>& all() const { return suites_; }
    size_t size() const { return suites_.size(); }

private:
    std::map<uint32_t, CipherSuite> suites_;
};

struct WeakInsecureCount {
    int weak_count = 0;
    int insecure_count = 0;
    std::set<uint32_t> weak_set;
    std::set<uint32_t> insecure_set;
    // Unknown code points are reported here, never silently dropped and never
    // counted as weak or insecure.
    std::set<uint32_t> unknown_set;
};

WeakInsecureCount count_weak_insecure(const ProtocolSupportMatrix& matrix,
                                      const CipherCatalog& catalog);

} // namespace posture
