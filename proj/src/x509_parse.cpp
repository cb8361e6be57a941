#include "posture/x509_parse.hpp"

#include <map>

#include "posture/der.hpp"
#include "posture/error.hpp"
#include "posture/util.hpp"

namespace posture {

const char* key_algorithm_name(KeyAlgorithm a) {
    switch (a) {
    case KeyAlgorithm::RSA: return "RSA";
    case KeyAlgorithm::EC: return "EC";
    case KeyAlgorithm::DSA: return "DSA";
    }
    return "?";
}

const char* signature_algorithm_name(SignatureAlgorithm a) {
    switch (a) {
    case SignatureAlgorithm::MD5_RSA: return "MD5_RSA";
    case SignatureAlgorithm::SHA1_RSA: return "SHA1_RSA";
    case SignatureAlgorithm::SHA256_RSA: return "SHA256_RSA";
    case SignatureAlgorithm::SHA384_RSA: return "SHA384_RSA";
    case SignatureAlgorithm::SHA512_RSA: return "SHA512_RSA";
    case SignatureAlgorithm::SHA1_ECDSA: return "SHA1_ECDSA";
    case SignatureAlgorithm::SHA256_ECDSA: return "SHA256_ECDSA";
    case SignatureAlgorithm::SHA384_ECDSA: return "SHA384_ECDSA";
    case SignatureAlgorithm::SHA512_ECDSA: return "SHA512_ECDSA";
    case SignatureAlgorithm::SHA1_DSA: return "SHA1_DSA";
    case SignatureAlgorithm::SHA256_DSA: return "SHA256_DSA";
    case SignatureAlgorithm::Other: return "Other";
    }
    return "?";
}

bool signature_algorithm_insecure(SignatureAlgorithm a) {
    switch (a) {
    case SignatureAlgorithm::MD5_RSA:
    case SignatureAlgorithm::SHA1_RSA:
    case SignatureAlgorithm::SHA1_ECDSA:
    case SignatureAlgorithm::SHA1_DSA:
        return true;
    default:
        return false;
    }
}

static SignatureAlgorithm sig_alg_from_oid(const std::string& oid) {
    static const std::map<std::string, SignatureAlgorithm> table = {
        {"1.2.840.113549.1.1.4", SignatureAlgorithm::MD5_RSA},
        {"1.2.840.113549.1.1.5", SignatureAlgorithm::SHA1_RSA},
        {"1.2.840.113549.1.1.11", SignatureAlgorithm::SHA256_RSA},
        {"1.2.840.113549.1.1.12", SignatureAlgorithm::SHA384_RSA},
        {"1.2.840.113549.1.1.13", SignatureAlgorithm::SHA512_RSA},
        {"1.2.840.10045.4.1", SignatureAlgorithm::SHA1_ECDSA},
        {"1.2.840.10045.4.3.2", SignatureAlgorithm::SHA256_ECDSA},
        {"1.2.840.10045.4.3.3", SignatureAlgorithm::SHA384_ECDSA},
        {"1.2.840.10045.4.3.4", SignatureAlgorithm::SHA512_ECDSA},
        {"1.2.840.10040.4.3", SignatureAlgorithm::SHA1_DSA},
        {"2.16.840.1.101.3.4.3.2", SignatureAlgorithm::SHA256_DSA},
    };
    auto it = table.find(oid);
    return it == table.end() ? SignatureAlgorithm::Other : it->second;
}

static std::string dn_attr_name(const std::string& oid) {
    static const std::map<std::string, std::string> table = {
        {"2.5.4.3", "CN"},  {"2.5.4.6", "C"},   {"2.5.4.7", "L"},
        {"2.5.4.8", "ST"},  {"2.5.4.10", "O"},  {"2.5.4.11", "OU"},
        {"2.5.4.5", "serialNumber"},            {"0.9.2342.19200300.100.1.25", "DC"},
        {"1.2.840.113549.1.9.1", "emailAddress"},
    };
    auto it = table.find(oid);
    return it == table.end() ? oid : it->second;
}

// Renders an RDNSequence as "CN=x, O=y"; also reports the first CN value.
static std::string render_dn(const DerNode& name, std::string* cn_out) {
    std::vector<std::string> parts;
    DerCursor rdns(name);
    while (!rdns.done()) {
        DerNode rdn = rdns.next(); // SET of AttributeTypeAndValue
        DerCursor atvs(rdn);
        while (!atvs.done()) {
            DerNode atv = atvs.next();
            DerCursor c(atv);
            DerNode type = c.expect(kDerOid);
            DerNode value = c.next();
            std::string oid = der_oid_to_string(type);
            std::string text = der_string_value(value);
            parts.push_back(dn_attr_name(oid) + "=" + text);
            if (oid == "2.5.4.3" && cn_out && cn_out->empty()) *cn_out = text;
        }
    }
    return join(parts, ", ");
}

static void parse_spki(const DerNode& spki, CertificateRecord& rec) {
    DerCursor c(spki);
    DerNode alg = c.expect(kDerSequence);
    DerNode key = c.expect(kDerBitString);

    DerCursor algc(alg);
    std::string alg_oid = der_oid_to_string(algc.expect(kDerOid));

    // BIT STRING payload: first octet = unused-bit count.
    if (key.body_len < 2 || key.body[0] != 0)
        fail(Errc::DerSyntaxError, "bad public key BIT STRING at offset " + std::to_string(key.offset));
    const uint8_t* key_bytes = key.body + 1;
    size_t key_len = key.body_len - 1;

    if (alg_oid == "1.2.840.113549.1.1.1") {
        rec.key_algorithm = KeyAlgorithm::RSA;
        DerCursor kc(key_bytes, key_len, key.offset + 1);
        DerNode rsa_seq = kc.expect(kDerSequence);
        DerCursor rc(rsa_seq);
        rec.key_bits = der_integer_bits(rc.expect(kDerInteger));
    } else if (alg_oid == "1.2.840.10045.2.1") {
        rec.key_algorithm = KeyAlgorithm::EC;
        static const std::map<std::string, int> curves = {
            {"1.2.840.10045.3.1.1", 192}, {"1.3.132.0.33", 224}, {"1.2.840.10045.3.1.7", 256},
            {"1.3.132.0.34", 384},        {"1.3.132.0.35", 521},
        };
        DerNode curve;
        DerCursor ac(alg);
        ac.expect(kDerOid); // algorithm, already read above
        if (ac.peek_universal(kDerOid, curve)) {
            auto it = curves.find(der_oid_to_string(curve));
            rec.key_bits = it == curves.end() ? 0 : it->second;
        }
    } else if (alg_oid == "1.2.840.10040.4.1") {
        rec.key_algorithm = KeyAlgorithm::DSA;
        DerCursor ac(alg);
        ac.expect(kDerOid);
        DerNode params;
        if (ac.peek_universal(kDerSequence, params)) {
            DerCursor pc(params);
            rec.key_bits = der_integer_bits(pc.expect(kDerInteger)); // p
        }
    } else {
        fail(Errc::DerSyntaxError, "unsupported public key algorithm " + alg_oid);
    }
}

static void parse_extensions(const DerNode& exts_wrapper, CertificateRecord& rec) {
    DerCursor wc(exts_wrapper);
    DerNode exts = wc.expect(kDerSequence);
    DerCursor ec(exts);
    while (!ec.done()) {
        DerNode ext = ec.next();
        DerCursor xc(ext);
        std::string oid = der_oid_to_string(xc.expect(kDerOid));
        DerNode maybe_critical;
        xc.peek_universal(kDerBoolean, maybe_critical);
        DerNode value = xc.expect(kDerOctetString);

        if (oid == "2.5.29.17") { // subjectAltName
            DerCursor vc(value.body, value.body_len, value.offset);
            DerNode names = vc.expect(kDerSequence);
            DerCursor nc(names);
            while (!nc.done()) {
                DerNode gn = nc.next();
                if ((gn.tag & 0xC0) == 0x80 && gn.tag_number() == 2) // dNSName, IA5String
                    rec.subject_alt_names.emplace_back(reinterpret_cast<const char*>(gn.body),
                                                       gn.body_len);
            }
        } else if (oid == "2.5.29.19") { // basicConstraints
            DerCursor vc(value.body, value.body_len, value.offset);
            DerNode bc = vc.expect(kDerSequence);
            DerCursor bcc(bc);
            DerNode ca_flag;
            if (bcc.peek_universal(kDerBoolean, ca_flag))
                rec.is_ca = ca_flag.body_len == 1 && ca_flag.body[0] != 0;
        }
    }
}

CertificateRecord parse_certificate(const std::vector<uint8_t>& der) {
    CertificateRecord rec;
    rec.der = der;
    rec.der_digest_hex = sha256_hex(der);

    DerCursor top(der);
    DerNode cert = top.expect(kDerSequence);
    if (!top.done()) fail(Errc::DerSyntaxError, "trailing bytes after certificate");

    DerCursor cc(cert);
    DerNode tbs = cc.expect(kDerSequence);
    DerNode sig_alg = cc.expect(kDerSequence);
    cc.expect(kDerBitString); // signatureValue; verified elsewhere

    DerCursor sac(sig_alg);
    rec.signature_algorithm = sig_alg_from_oid(der_oid_to_string(sac.expect(kDerOid)));

    DerCursor tc(tbs);
    DerNode version_wrapper;
    tc.peek_context(0, version_wrapper); // optional [0] version

    rec.serial_hex = der_integer_hex(tc.expect(kDerInteger));
    tc.expect(kDerSequence); // tbs signature algorithm (outer one is authoritative)

    DerNode issuer = tc.expect(kDerSequence);
    rec.issuer_der.assign(issuer.body - (issuer.full_len - issuer.body_len),
                          issuer.body + issuer.body_len);
    rec.issuer = render_dn(issuer, nullptr);

    DerNode validity = tc.expect(kDerSequence);
    DerCursor vc(validity);
    rec.not_before = der_parse_time(vc.next());
    rec.not_after = der_parse_time(vc.next());

    DerNode subject = tc.expect(kDerSequence);
    rec.subject_der.assign(subject.body - (subject.full_len - subject.body_len),
                           subject.body + subject.body_len);
    rec.subject = render_dn(subject, &rec.subject_cn);

    DerNode spki = tc.expect(kDerSequence);
    rec.spki_digest_hex = sha256_hex(spki.body - (spki.full_len - spki.body_len), spki.full_len);
    parse_spki(spki, rec);

    // Optional [1] issuerUniqueID, [2] subjectUniqueID, [3] extensions.
    DerNode opt;
    tc.peek_context(1, opt);
    tc.peek_context(2, opt);
    if (tc.peek_context(3, opt)) parse_extensions(opt, rec);

    if (rec.not_before >= rec.not_after)
        fail(Errc::DerSyntaxError, "certificate validity window is empty or inverted");
    if (rec.key_bits <= 0 && rec.key_algorithm != KeyAlgorithm::EC)
        fail(Errc::DerSyntaxError, "certificate public key has no measurable size");
    return rec;
}

ParsedChain parse_chain(const RawChain& raw) {
    if (raw.der_certificates.empty()) fail(Errc::EmptyChain, "no certificates presented");
    ParsedChain out;
    for (size_t i = 0; i < raw.der_certificates.size(); ++i) {
        try {
            out.records.push_back(parse_certificate(raw.der_certificates[i]));
        } catch (const Error& e) {
            out.error_index = i;
            out.error_detail = e.what();
            break;
        }
    }
    return out;
}

std::vector<std::vector<uint8_t>> pem_to_der_blocks(const std::string& pem_text) {
    std::vector<std::vector<uint8_t>> out;
    static const std::string begin = "-----BEGIN CERTIFICATE-----";
    static const std::string end = "-----END CERTIFICATE-----";
    size_t pos = 0;
    while (true) {
        size_t b = pem_text.find(begin, pos);
        if (b == std::string::npos) break;
        size_t e = pem_text.find(end, b);
        if (e == std::string::npos) fail(Errc::SchemaError, "unterminated PEM block");
        out.push_back(b64_decode(pem_text.substr(b + begin.size(), e - b - begin.size())));
        pos = e + end.size();
    }
    return out;
}

std::string der_to_pem(const std::vector<uint8_t>& der) {
    std::string b64 = b64_encode(der.data(), der.size());
    std::string out = "-----BEGIN CERTIFICATE-----\n";
    for (size_t i = 0; i < b64.size(); i += 64) out += b64.substr(i, 64) + "\n";
    out += "-----END CERTIFICATE-----\n";
    return out;
}

} // namespace posture
