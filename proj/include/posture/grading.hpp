#pragma once

#include <map>
#include <string>
#include <vector>

#include "posture/chain_validation.hpp"
#include "posture/cipher_catalog.hpp"
#include "posture/tls_types.hpp"

namespace posture {

// Scoring tables loaded from the rating-guide data file. All sub-scores use
// weakest-link (minimum) semantics over the observed set.
struct RatingGuide {
    double weight_protocol = 0.30;
    double weight_key_exchange = 0.30;
    double weight_cipher_strength = 0.40;

    std::map<ProtocolVersion, double> protocol_scores;
    std::map<KeyExchange, double> kx_scores;
    double score_insecure = 0;
    double score_weak = 40;
    double score_strong_lt256 = 80;
    double score_strong_ge256 = 100;

    // Sorted descending by threshold; letter applies when score >= threshold.
    std::vector<std::pair<char, double>> letter_bands;

    double cap_ssl3 = 64;
    double cap_deflate = 64;

    static RatingGuide load(const std::string& path);

    char band(double numeric_score) const;
};

struct ServerGrade {
    double numeric_score = 0;
    char letter = 'F'; // A..F, or T when the chain is untrusted
    std::vector<std::string> caps_applied;
};

ServerGrade grade_server(const ProtocolSupportMatrix& matrix, const ChainReport& chain,
                         const CipherCatalog& catalog, const RatingGuide& guide);

// Grading core without a chain report; used when only configuration quality is
// wanted. chain_trusted toggles the T override.
ServerGrade grade_configuration(const ProtocolSupportMatrix& matrix, bool chain_trusted,
                                const CipherCatalog& catalog, const RatingGuide& guide);

} // namespace posture
