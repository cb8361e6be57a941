#include "posture/report.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "posture/error.hpp"
#include "posture/util.hpp"

namespace posture {

using nlohmann::json;

const char* domain_status_name(DomainStatus s) {
    switch (s) {
    case DomainStatus::Complete: return "Complete";
    case DomainStatus::Partial: return "Partial";
    case DomainStatus::Unreachable: return "Unreachable";
    case DomainStatus::Skipped: return "Skipped";
    }
    return "?";
}

DomainStatus domain_status_from_name(const std::string& s) {
    for (auto v : {DomainStatus::Complete, DomainStatus::Partial, DomainStatus::Unreachable,
                   DomainStatus::Skipped})
        if (s == domain_status_name(v)) return v;
    fail(Errc::SchemaError, "unknown status '" + s + "'");
}

namespace {

json hex_list(const std::set<uint32_t>& codes) {
    json out = json::array();
    for (uint32_t c : codes) out.push_back(hex_code(c));
    return out;
}

std::set<uint32_t> parse_hex_list(const json& arr) {
    std::set<uint32_t> out;
    for (const auto& v : arr)
        out.insert(static_cast<uint32_t>(std::stoul(v.get<std::string>(), nullptr, 16)));
    return out;
}

} // namespace

std::string report_to_json(const DomainPostureReport& r) {
    json j;
    j["domain"] = r.target.domain;
    j["port"] = r.target.port;
    j["region"] = region_name(r.target.region);
    j["sub_region"] = r.target.sub_region;
    j["income"] = income_name(r.target.income);
    j["status"] = domain_status_name(r.status);
    j["scanned_at"] = r.scanned_at;
    if (!r.annotation.empty()) j["annotation"] = r.annotation;

    j["dims"] = {{"matrix", r.matrix_done}, {"chain", r.chain_done}, {"vuln", r.vuln_done}};

    if (r.matrix_done) {
        json versions = json::object();
        for (ProtocolVersion v : kAllVersions)
            versions[version_name(v)] = hex_list(r.matrix.per_version.at(v).accepted_ciphers);
        j["matrix"] = {{"versions", versions},
                       {"deflate", r.matrix.compression_deflate},
                       {"probe_count", r.matrix.probe_count},
                       {"elapsed_ms", r.matrix.elapsed.count()}};
        j["ciphers"] = {{"weak", hex_list(r.weak_ciphers)},
                        {"insecure", hex_list(r.insecure_ciphers)}};
    }
    if (r.chain_done) {
        json issues = json::array();
        for (const auto& issue : r.chain.issues)
            issues.push_back({{"code", issue_code_name(issue.code)},
                              {"index", issue.certificate_index}});
        j["chain"] = {{"issues", issues},
                      {"trusted", r.chain.trusted},
                      {"length", r.chain.chain.size()},
                      {"path", r.chain_path},
                      {"evaluated_at", r.chain.evaluated_at}};
    }
    if (r.vuln_done) {
        json services = json::array();
        for (const auto& s : r.services) {
            services.push_back({{"port", s.fingerprint.port},
                                {"vendor", s.fingerprint.vendor},
                                {"product", s.fingerprint.product},
                                {"version", s.fingerprint.version},
                                {"cpe", s.fingerprint.cpe},
                                {"cves", s.cve_ids}});
        }
        json cves = json::array();
        for (const auto& hit : r.cves)
            cves.push_back({{"id", hit.id},
                            {"severity", severity_name(hit.severity)},
                            {"score", hit.score}});
        j["vuln"] = {{"services", services}, {"cves", cves}};
    }
    if (r.grade) {
        j["grade"] = {{"score", r.grade->numeric_score},
                      {"letter", std::string(1, r.grade->letter)},
                      {"caps", r.grade->caps_applied}};
    }
    return j.dump();
}

DomainPostureReport report_from_json(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        fail(Errc::SchemaError, std::string("report line: ") + e.what());
    }
    DomainPostureReport r;
    try {
        r.target.domain = j.at("domain").get<std::string>();
        r.target.port = j.at("port").get<int>();
        r.target.region = region_from_name(j.at("region").get<std::string>());
        r.target.sub_region = j.at("sub_region").get<std::string>();
        r.target.income = income_from_name(j.at("income").get<std::string>());
        r.status = domain_status_from_name(j.at("status").get<std::string>());
        r.scanned_at = j.at("scanned_at").get<int64_t>();
        r.annotation = j.value("annotation", "");

        const json& dims = j.at("dims");
        r.matrix_done = dims.at("matrix").get<bool>();
        r.chain_done = dims.at("chain").get<bool>();
        r.vuln_done = dims.at("vuln").get<bool>();

        if (r.matrix_done) {
            const json& m = j.at("matrix");
            for (ProtocolVersion v : kAllVersions) {
                auto& slot = r.matrix.per_version.at(v);
                slot.accepted_ciphers = parse_hex_list(m.at("versions").at(version_name(v)));
                slot.supported = !slot.accepted_ciphers.empty();
            }
            r.matrix.compression_deflate = m.at("deflate").get<bool>();
            r.matrix.probe_count = m.at("probe_count").get<int>();
            r.matrix.elapsed = std::chrono::milliseconds(m.at("elapsed_ms").get<int64_t>());
            r.weak_ciphers = parse_hex_list(j.at("ciphers").at("weak"));
            r.insecure_ciphers = parse_hex_list(j.at("ciphers").at("insecure"));
        }
        if (r.chain_done) {
            const json& c = j.at("chain");
            for (const auto& entry : c.at("issues")) {
                auto code = issue_code_from_name(entry.at("code").get<std::string>());
                if (!code) fail(Errc::SchemaError, "bad issue code in report");
                r.chain.issues.push_back(
                    ChainIssue{*code, entry.at("index").get<size_t>(), ""});
            }
            r.chain.trusted = c.at("trusted").get<bool>();
            r.chain.evaluated_at = c.at("evaluated_at").get<int64_t>();
            r.chain_path = c.at("path").get<std::string>();
            // chain certificate records themselves are not round-tripped;
            // aggregation only needs issue codes and the trusted flag
        }
        if (r.vuln_done) {
            const json& v = j.at("vuln");
            for (const auto& s : v.at("services")) {
                ServiceReport sr;
                sr.fingerprint.port = s.at("port").get<int>();
                sr.fingerprint.vendor = s.at("vendor").get<std::string>();
                sr.fingerprint.product = s.at("product").get<std::string>();
                sr.fingerprint.version = s.at("version").get<std::string>();
                sr.fingerprint.cpe = s.at("cpe").get<std::string>();
                for (const auto& id : s.at("cves")) sr.cve_ids.push_back(id.get<std::string>());
                r.services.push_back(std::move(sr));
            }
            for (const auto& hit : v.at("cves")) {
                CveHit h;
                h.id = hit.at("id").get<std::string>();
                auto sev = severity_from_name(hit.at("severity").get<std::string>());
                if (!sev) fail(Errc::SchemaError, "bad severity in report");
                h.severity = *sev;
                h.score = hit.at("score").get<double>();
                r.cves.insert(std::move(h));
            }
        }
        if (j.contains("grade")) {
            ServerGrade g;
            g.numeric_score = j["grade"].at("score").get<double>();
            g.letter = j["grade"].at("letter").get<std::string>().at(0);
            for (const auto& cap : j["grade"].at("caps"))
                g.caps_applied.push_back(cap.get<std::string>());
            r.grade = std::move(g);
        }
    } catch (const json::exception& e) {
        fail(Errc::SchemaError, std::string("report shape: ") + e.what());
    }
    return r;
}

std::vector<DomainPostureReport> load_report_log(const std::string& path) {
    std::istringstream in(read_file(path));
    std::vector<DomainPostureReport> reports;
    std::map<std::string, size_t> by_domain;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto r = report_from_json(line);
        auto it = by_domain.find(r.target.domain);
        if (it != by_domain.end()) {
            // resumed runs append a fresh line for a re-scanned domain
            reports[it->second] = std::move(r);
        } else {
            by_domain[r.target.domain] = reports.size();
            reports.push_back(std::move(r));
        }
    }
    return reports;
}

} // namespace posture
