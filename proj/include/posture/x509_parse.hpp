#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "posture/tls_types.hpp"

namespace posture {

enum class KeyAlgorithm { RSA, EC, DSA };
enum class SignatureAlgorithm {
    MD5_RSA,
    SHA1_RSA,
    SHA256_RSA,
    SHA384_RSA,
    SHA512_RSA,
    SHA1_ECDSA,
    SHA256_ECDSA,
    SHA384_ECDSA,
    SHA512_ECDSA,
    SHA1_DSA,
    SHA256_DSA,
    Other,
};

const char* key_algorithm_name(KeyAlgorithm a);
const char* signature_algorithm_name(SignatureAlgorithm a);
bool signature_algorithm_insecure(SignatureAlgorithm a); // MD5_* / SHA1_*

struct CertificateRecord {
    std::string subject_cn;                     // empty when absent
    std::vector<std::string> subject_alt_names; // dNSName entries only
    std::string subject;                        // rendered DN
    std::string issuer;                         // rendered DN
    std::string serial_hex;                     // non-negative, lowercase hex
    int64_t not_before = 0;
    int64_t not_after = 0;
    KeyAlgorithm key_algorithm = KeyAlgorithm::RSA;
    int key_bits = 0;
    SignatureAlgorithm signature_algorithm = SignatureAlgorithm::Other;
    bool is_ca = false;
    std::string spki_digest_hex; // SHA-256 of the SubjectPublicKeyInfo DER
    std::string der_digest_hex;  // SHA-256 of the whole certificate DER
    std::vector<uint8_t> der;
    std::vector<uint8_t> subject_der;
    std::vector<uint8_t> issuer_der;

    bool self_signed() const { return subject_der == issuer_der; }
};

// Throws Errc::DerSyntaxError (with byte offset) on malformed input.
CertificateRecord parse_certificate(const std::vector<uint8_t>& der);

struct ParsedChain {
    std::vector<CertificateRecord> records; // parseable prefix, order preserved
    std::optional<size_t> error_index;      // first blob that failed to parse
    std::string error_detail;
};

ParsedChain parse_chain(const RawChain& raw); // Errc::EmptyChain when raw has no blobs

std::vector<std::vector<uint8_t>> pem_to_der_blocks(const std::string& pem_text);
std::string der_to_pem(const std::vector<uint8_t>& der);

} // namespace posture
