#include "posture/cipher_catalog.hpp"

#include <algorithm>

#include "posture/csv.hpp"
#include "posture/error.hpp"
#include "posture/util.hpp"

namespace posture {

const char* kx_name(KeyExchange v) {
    switch (v) {
    case KeyExchange::RSA: return "RSA";
    case KeyExchange::DHE: return "DHE";
    case KeyExchange::ECDHE: return "ECDHE";
    case KeyExchange::DH: return "DH";
    case KeyExchange::ECDH: return "ECDH";
    case KeyExchange::DH_anon: return "DH_anon";
    case KeyExchange::ECDH_anon: return "ECDH_anon";
    case KeyExchange::PSK: return "PSK";
    case KeyExchange::NULL_KX: return "NULL_KX";
    }
    return "?";
}

const char* bulk_name(Bulk v) {
    switch (v) {
    case Bulk::NULL_ENC: return "NULL_ENC";
    case Bulk::RC4: return "RC4";
    case Bulk::RC2: return "RC2";
    case Bulk::DES: return "DES";
    case Bulk::TripleDES: return "TripleDES";
    case Bulk::AES_CBC: return "AES_CBC";
    case Bulk::AES_GCM: return "AES_GCM";
    case Bulk::AES_CCM: return "AES_CCM";
    case Bulk::CHACHA20: return "CHACHA20";
    case Bulk::CAMELLIA: return "CAMELLIA";
    case Bulk::ARIA: return "ARIA";
    case Bulk::SEED: return "SEED";
    case Bulk::IDEA: return "IDEA";
    case Bulk::EXPORT_grade: return "EXPORT_grade";
    }
    return "?";
}

const char* mac_name(Mac v) {
    switch (v) {
    case Mac::NONE: return "NONE";
    case Mac::MD5: return "MD5";
    case Mac::SHA1: return "SHA1";
    case Mac::SHA256: return "SHA256";
    case Mac::SHA384: return "SHA384";
    case Mac::AEAD: return "AEAD";
    }
    return "?";
}

const char* classification_name(Classification v) {
    switch (v) {
    case Classification::Strong: return "Strong";
    case Classification::Weak: return "Weak";
    case Classification::Insecure: return "Insecure";
    }
    return "?";
}

template <typename T, size_t N>
static std::optional<T> enum_from_name(const std::string& s, const T (&values)[N],
                                       const char* (*name_fn)(T)) {
    for (T v : values)
        if (s == name_fn(v)) return v;
    return std::nullopt;
}

std::optional<KeyExchange> kx_from_name(const std::string& s) {
    static constexpr KeyExchange all[] = {
        KeyExchange::RSA,     KeyExchange::DHE,       KeyExchange::ECDHE,
        KeyExchange::DH,      KeyExchange::ECDH,      KeyExchange::DH_anon,
        KeyExchange::ECDH_anon, KeyExchange::PSK,     KeyExchange::NULL_KX,
    };
    return enum_from_name(s, all, kx_name);
}

std::optional<Bulk> bulk_from_name(const std::string& s) {
    static constexpr Bulk all[] = {
        Bulk::NULL_ENC, Bulk::RC4,      Bulk::RC2,     Bulk::DES,  Bulk::TripleDES,
        Bulk::AES_CBC,  Bulk::AES_GCM,  Bulk::AES_CCM, Bulk::CHACHA20,
        Bulk::CAMELLIA, Bulk::ARIA,     Bulk::SEED,    Bulk::IDEA, Bulk::EXPORT_grade,
    };
    return enum_from_name(s, all, bulk_name);
}

std::optional<Mac> mac_from_name(const std::string& s) {
    static constexpr Mac all[] = {Mac::NONE, Mac::MD5, Mac::SHA1, Mac::SHA256, Mac::SHA384, Mac::AEAD};
    return enum_from_name(s, all, mac_name);
}

std::optional<Classification> classification_from_name(const std::string& s) {
    static constexpr Classification all[] = {Classification::Strong, Classification::Weak,
                                             Classification::Insecure};
    return enum_from_name(s, all, classification_name);
}

bool kx_anonymous(KeyExchange kx) {
    return kx == KeyExchange::DH_anon || kx == KeyExchange::ECDH_anon || kx == KeyExchange::NULL_KX;
}

bool kx_forward_secret(KeyExchange kx) {
    return kx == KeyExchange::DHE || kx == KeyExchange::ECDHE;
}

static bool is_cbc_family(Bulk b) {
    switch (b) {
    case Bulk::AES_CBC:
    case Bulk::CAMELLIA:
    case Bulk::ARIA:
    case Bulk::SEED:
    case Bulk::IDEA:
    case Bulk::RC2:
        return true;
    default:
        return false;
    }
}

Classification classify_cipher(const CipherSuite& s) {
    if (s.bulk == Bulk::NULL_ENC || kx_anonymous(s.kx) || s.effective_bits < 112)
        return Classification::Insecure;
    if (s.bulk == Bulk::RC4 || s.bulk == Bulk::DES || s.bulk == Bulk::EXPORT_grade)
        return Classification::Insecure;
    if (s.bulk == Bulk::TripleDES || s.effective_bits < 128) return Classification::Weak;
    if (is_cbc_family(s.bulk) && s.mac == Mac::SHA1) return Classification::Weak;
    if (!kx_forward_secret(s.kx)) return Classification::Weak;
    return Classification::Strong;
}

static bool name_contains(const std::string& name, const std::string& needle) {
    return name.find(needle) != std::string::npos;
}

CipherSuite derive_suite_fields(uint32_t code_point, const std::string& name) {
    CipherSuite s;
    s.code_point = code_point;
    s.iana_name = name;

    // Key exchange from the name prefix.
    if (starts_with(name, "SSL_CK_")) {
        s.kx = KeyExchange::RSA;
    } else if (starts_with(name, "TLS_AES_") || starts_with(name, "TLS_CHACHA20_")) {
        s.kx = KeyExchange::ECDHE; // TLS1.3 always negotiates ephemeral (EC)DH
    } else {
        static const std::pair<const char*, KeyExchange> prefixes[] = {
            {"TLS_ECDHE_PSK_", KeyExchange::ECDHE}, {"TLS_DHE_PSK_", KeyExchange::DHE},
            {"TLS_PSK_DHE_", KeyExchange::DHE},     {"TLS_RSA_PSK_", KeyExchange::RSA},
            {"TLS_PSK_", KeyExchange::PSK},         {"TLS_ECDHE_", KeyExchange::ECDHE},
            {"TLS_ECDH_anon_", KeyExchange::ECDH_anon}, {"TLS_ECDH_", KeyExchange::ECDH},
            {"TLS_DHE_", KeyExchange::DHE},         {"TLS_DH_anon_", KeyExchange::DH_anon},
            {"TLS_DH_", KeyExchange::DH},           {"TLS_RSA_", KeyExchange::RSA},
        };
        bool matched = false;
        for (const auto& [prefix, kx] : prefixes) {
            if (starts_with(name, prefix)) {
                s.kx = kx;
                matched = true;
                break;
            }
        }
        if (!matched) {
            if (name == "TLS_NULL_WITH_NULL_NULL") s.kx = KeyExchange::NULL_KX;
            else fail(Errc::SchemaError, "unrecognized suite name: " + name);
        }
    }

    // Bulk cipher and effective strength.
    if (name_contains(name, "EXPORT")) {
        s.bulk = Bulk::EXPORT_grade;
        s.effective_bits = 40;
    } else if (name_contains(name, "_WITH_NULL_") || name == "TLS_NULL_WITH_NULL_NULL") {
        s.bulk = Bulk::NULL_ENC;
        s.effective_bits = 0;
    } else if (name_contains(name, "3DES_EDE") || name_contains(name, "DES_192_EDE3")) {
        s.bulk = Bulk::TripleDES;
        s.effective_bits = 112;
    } else if (name_contains(name, "DES_64") || name_contains(name, "_DES_CBC_")) {
        s.bulk = Bulk::DES;
        s.effective_bits = 56;
    } else if (name_contains(name, "RC4_128")) {
        s.bulk = Bulk::RC4;
        s.effective_bits = 128;
    } else if (name_contains(name, "RC2_128")) {
        s.bulk = Bulk::RC2;
        s.effective_bits = 128;
    } else if (name_contains(name, "IDEA")) {
        s.bulk = Bulk::IDEA;
        s.effective_bits = 128;
    } else if (name_contains(name, "SEED")) {
        s.bulk = Bulk::SEED;
        s.effective_bits = 128;
    } else if (name_contains(name, "CHACHA20")) {
        s.bulk = Bulk::CHACHA20;
        s.effective_bits = 256;
    } else {
        bool found = false;
        for (const char* algo : {"AES", "CAMELLIA", "ARIA"}) {
            for (int bits : {128, 256}) {
                if (!name_contains(name, std::string(algo) + "_" + std::to_string(bits))) continue;
                s.effective_bits = bits;
                if (std::string(algo) == "AES") {
                    if (name_contains(name, "_GCM")) s.bulk = Bulk::AES_GCM;
                    else if (name_contains(name, "_CCM")) s.bulk = Bulk::AES_CCM;
                    else s.bulk = Bulk::AES_CBC;
                } else {
                    s.bulk = std::string(algo) == "CAMELLIA" ? Bulk::CAMELLIA : Bulk::ARIA;
                }
                found = true;
                break;
            }
            if (found) break;
        }
        if (!found) fail(Errc::SchemaError, "unrecognized bulk cipher in: " + name);
    }

    // MAC / hash suffix.
    if (name == "TLS_NULL_WITH_NULL_NULL") s.mac = Mac::NONE;
    else if (name_contains(name, "_GCM") || name_contains(name, "_CCM") ||
             name_contains(name, "POLY1305"))
        s.mac = Mac::AEAD;
    else if (ends_with(name, "_MD5")) s.mac = Mac::MD5;
    else if (ends_with(name, "_SHA")) s.mac = Mac::SHA1;
    else if (ends_with(name, "_SHA256")) s.mac = Mac::SHA256;
    else if (ends_with(name, "_SHA384")) s.mac = Mac::SHA384;
    else fail(Errc::SchemaError, "unrecognized MAC suffix in: " + name);

    // Version families.
    if (starts_with(name, "SSL_CK_")) {
        s.version_families = {ProtocolVersion::SSL2};
    } else if ((code_point & 0xFF00) == 0x1300) {
        s.version_families = {ProtocolVersion::TLS1_3};
    } else if (s.mac == Mac::AEAD || s.mac == Mac::SHA256 || s.mac == Mac::SHA384) {
        s.version_families = {ProtocolVersion::TLS1_2};
    } else {
        s.version_families = {ProtocolVersion::SSL3, ProtocolVersion::TLS1_0,
                              ProtocolVersion::TLS1_1, ProtocolVersion::TLS1_2};
    }

    s.classification = classify_cipher(s);
    return s;
}

static void check_invariants(const CipherSuite& s, const std::string& context) {
    auto violation = [&](const std::string& why) {
        fail(Errc::InvariantViolation, context + " " + s.iana_name + ": " + why);
    };
    bool must_be_insecure =
        s.bulk == Bulk::NULL_ENC || kx_anonymous(s.kx) || s.effective_bits < 112;
    if (must_be_insecure && s.classification != Classification::Insecure)
        violation("null/anonymous/sub-112-bit suite not marked Insecure");
    if (s.effective_bits >= 112 && s.effective_bits < 128 &&
        s.classification == Classification::Strong)
        violation("112..127-bit suite marked Strong");
    if (s.classification == Classification::Strong) {
        if (s.effective_bits < 128) violation("Strong suite below 128 bits");
        if (s.bulk == Bulk::RC4 || s.bulk == Bulk::DES || s.bulk == Bulk::EXPORT_grade ||
            s.bulk == Bulk::NULL_ENC)
            violation("Strong suite with broken bulk cipher");
    }
    if (s.version_families.empty()) violation("empty version family set");
}

CipherCatalog CipherCatalog::load(const std::string& path) {
    static const std::vector<std::string> header = {
        "code_point", "iana_name", "kx", "bulk", "effective_bits", "mac", "versions",
        "classification"};
    auto rows = read_csv_file(path, header);

    CipherCatalog cat;
    for (size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        std::string context = path + " row " + std::to_string(i + 2) + ":";
        CipherSuite s;
        if (!starts_with(r[0], "0x"))
            fail(Errc::SchemaError, context + " code_point must be hex like 0x002F");
        s.code_point = static_cast<uint32_t>(std::stoul(r[0].substr(2), nullptr, 16));
        s.iana_name = r[1];
        auto kx = kx_from_name(r[2]);
        auto bulk = bulk_from_name(r[3]);
        auto mac = mac_from_name(r[5]);
        auto cls = classification_from_name(r[7]);
        if (!kx) fail(Errc::SchemaError, context + " unknown kx '" + r[2] + "'");
        if (!bulk) fail(Errc::SchemaError, context + " unknown bulk '" + r[3] + "'");
        if (!mac) fail(Errc::SchemaError, context + " unknown mac '" + r[5] + "'");
        if (!cls) fail(Errc::SchemaError, context + " unknown classification '" + r[7] + "'");
        s.kx = *kx;
        s.bulk = *bulk;
        s.mac = *mac;
        s.classification = *cls;
        s.effective_bits = static_cast<int>(parse_long(r[4], context + " effective_bits"));
        for (const auto& token : split(r[6], '+')) {
            auto v = version_from_name(token);
            if (!v) fail(Errc::SchemaError, context + " unknown version '" + token + "'");
            s.version_families.insert(*v);
        }
        check_invariants(s, context);
        if (!cat.suites_.emplace(s.code_point, s).second)
            fail(Errc::SchemaError, context + " duplicate code point " + r[0]);
    }
    return cat;
}

const CipherSuite* CipherCatalog::find(uint32_t code_point) const {
    auto it = suites_.find(code_point);
    return it == suites_.end() ? nullptr : &it->second;
}

const CipherSuite& CipherCatalog::lookup(uint32_t code_point) const {
    const CipherSuite* s = find(code_point);
    if (!s) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "0x%04X", code_point);
        fail(Errc::UnknownCipher, std::string("no catalog entry for ") + buf);
    }
    return *s;
}

std::vector<uint32_t> CipherCatalog::suites_for_version(ProtocolVersion v) const {
    std::vector<uint32_t> out;
    for (const auto& [cp, s] : suites_)
        if (s.valid_for(v)) out.push_back(cp);
    return out;
}

WeakInsecureCount count_weak_insecure(const ProtocolSupportMatrix& matrix,
                                      const CipherCatalog& catalog) {
    WeakInsecureCount out;
    for (uint32_t cp : matrix.accepted_union()) {
        const CipherSuite* s = catalog.find(cp);
        if (!s) {
            out.unknown_set.insert(cp);
            continue;
        }
        if (s->classification == Classification::Weak) out.weak_set.insert(cp);
        else if (s->classification == Classification::Insecure) out.insecure_set.insert(cp);
    }
    out.weak_count = static_cast<int>(out.weak_set.size());
    out.insecure_count = static_cast<int>(out.insecure_set.size());
    return out;
}

} // namespace posture
