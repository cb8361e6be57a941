#include "posture/grading.hpp"

#include <algorithm>

#include "posture/error.hpp"
#include "posture/util.hpp"

namespace posture {

namespace {

// key = value lines grouped under [section] headers; '#' starts a comment.
std::map<std::string, std::map<std::string, std::string>> parse_sections(const std::string& text) {
    std::map<std::string, std::map<std::string, std::string>> out;
    std::string section;
    for (const auto& raw_line : split(text, '\n')) {
        std::string line = raw_line;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos || section.empty())
            fail(Errc::SchemaError, "rating guide: stray line '" + line + "'");
        out[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

double to_score(const std::string& v, const std::string& what) {
    try {
        size_t used = 0;
        double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        fail(Errc::SchemaError, "rating guide: bad number for " + what + ": '" + v + "'");
    }
}

} // namespace

RatingGuide RatingGuide::load(const std::string& path) {
    auto sections = parse_sections(read_file(path));
    auto need = [&](const std::string& name) -> std::map<std::string, std::string>& {
        auto it = sections.find(name);
        if (it == sections.end()) fail(Errc::SchemaError, "rating guide: missing [" + name + "]");
        return it->second;
    };

    RatingGuide g;
    auto& weights = need("weights");
    g.weight_protocol = to_score(weights.at("protocol"), "weights.protocol");
    g.weight_key_exchange = to_score(weights.at("key_exchange"), "weights.key_exchange");
    g.weight_cipher_strength = to_score(weights.at("cipher_strength"), "weights.cipher_strength");

    for (const auto& [k, v] : need("protocol_scores")) {
        auto ver = version_from_name(k);
        if (!ver) fail(Errc::SchemaError, "rating guide: unknown protocol '" + k + "'");
        g.protocol_scores[*ver] = to_score(v, "protocol_scores." + k);
    }
    for (auto v : kAllVersions)
        if (!g.protocol_scores.count(v))
            fail(Errc::SchemaError, std::string("rating guide: no protocol score for ") + version_name(v));

    for (const auto& [k, v] : need("key_exchange_scores")) {
        auto kx = kx_from_name(k);
        if (!kx) fail(Errc::SchemaError, "rating guide: unknown key exchange '" + k + "'");
        g.kx_scores[*kx] = to_score(v, "key_exchange_scores." + k);
    }

    auto& cs = need("cipher_strength_scores");
    g.score_insecure = to_score(cs.at("Insecure"), "cipher_strength_scores.Insecure");
    g.score_weak = to_score(cs.at("Weak"), "cipher_strength_scores.Weak");
    g.score_strong_lt256 = to_score(cs.at("Strong_lt256"), "cipher_strength_scores.Strong_lt256");
    g.score_strong_ge256 = to_score(cs.at("Strong_ge256"), "cipher_strength_scores.Strong_ge256");

    for (const auto& [k, v] : need("letter_bands")) {
        if (k.size() != 1 || k[0] < 'A' || k[0] > 'F')
            fail(Errc::SchemaError, "rating guide: bad letter band '" + k + "'");
        g.letter_bands.emplace_back(k[0], to_score(v, "letter_bands." + k));
    }
    std::sort(g.letter_bands.begin(), g.letter_bands.end(),
              [](const auto& a, const auto& b) { return a.second > b.second; });
    if (g.letter_bands.empty()) fail(Errc::SchemaError, "rating guide: no letter bands");

    auto& caps = need("caps");
    g.cap_ssl3 = to_score(caps.at("ssl3_supported"), "caps.ssl3_supported");
    g.cap_deflate = to_score(caps.at("deflate_accepted"), "caps.deflate_accepted");
    return g;
}

char RatingGuide::band(double numeric_score) const {
    for (const auto& [letter, threshold] : letter_bands)
        if (numeric_score >= threshold) return letter;
    return letter_bands.back().first;
}

ServerGrade grade_configuration(const ProtocolSupportMatrix& matrix, bool chain_trusted,
                                const CipherCatalog& catalog, const RatingGuide& guide) {
    ServerGrade grade;

    double protocol_score = 0;
    bool any_version = false;
    for (const auto& [version, support] : matrix.per_version) {
        if (!support.supported) continue;
        double s = guide.protocol_scores.at(version);
        protocol_score = any_version ? std::min(protocol_score, s) : s;
        any_version = true;
    }
    if (!any_version) protocol_score = 0;

    double kx_score = 0;
    double cipher_score = 0;
    bool any_cipher = false;
    for (uint32_t cp : matrix.accepted_union()) {
        const CipherSuite* suite = catalog.find(cp);
        double kxs = 0, cs = 0; // unknown suites score zero on both axes
        if (suite) {
            auto it = guide.kx_scores.find(suite->kx);
            kxs = it == guide.kx_scores.end() ? 0 : it->second;
            switch (suite->classification) {
            case Classification::Insecure: cs = guide.score_insecure; break;
            case Classification::Weak: cs = guide.score_weak; break;
            case Classification::Strong:
                cs = suite->effective_bits >= 256 ? guide.score_strong_ge256
                                                  : guide.score_strong_lt256;
                break;
            }
        }
        if (!any_cipher) {
            kx_score = kxs;
            cipher_score = cs;
            any_cipher = true;
        } else {
            kx_score = std::min(kx_score, kxs);
            cipher_score = std::min(cipher_score, cs);
        }
    }

    grade.numeric_score = guide.weight_protocol * protocol_score +
                          guide.weight_key_exchange * kx_score +
                          guide.weight_cipher_strength * cipher_score;

    if (matrix.supports(ProtocolVersion::SSL3) && grade.numeric_score > guide.cap_ssl3) {
        grade.numeric_score = guide.cap_ssl3;
        grade.caps_applied.push_back("ssl3_supported");
    }
    if (matrix.compression_deflate && grade.numeric_score > guide.cap_deflate) {
        grade.numeric_score = guide.cap_deflate;
        grade.caps_applied.push_back("deflate_accepted");
    }

    if (!chain_trusted) {
        grade.letter = 'T';
        grade.caps_applied.push_back("untrusted_chain");
    } else if (matrix.supports(ProtocolVersion::SSL2)) {
        grade.letter = 'F';
        grade.caps_applied.push_back("ssl2_supported");
    } else {
        grade.letter = guide.band(grade.numeric_score);
    }
    return grade;
}

ServerGrade grade_server(const ProtocolSupportMatrix& matrix, const ChainReport& chain,
                         const CipherCatalog& catalog, const RatingGuide& guide) {
    return grade_configuration(matrix, chain.trusted, catalog, guide);
}

} // namespace posture
