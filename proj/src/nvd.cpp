#include "posture/nvd.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "posture/error.hpp"
#include "posture/util.hpp"
#include "posture/versions.hpp"

namespace posture {

using nlohmann::json;

const char* severity_name(Severity s) {
    switch (s) {
    case Severity::None: return "None";
    case Severity::Low: return "Low";
    case Severity::Medium: return "Medium";
    case Severity::High: return "High";
    case Severity::Critical: return "Critical";
    }
    return "?";
}

std::optional<Severity> severity_from_name(const std::string& s) {
    for (auto v : kAllSeverities)
        if (s == severity_name(v)) return v;
    return std::nullopt;
}

Severity severity_band(double score) {
    if (!(score >= 0.0) || score > 10.0)
        fail(Errc::OutOfRange, "CVSS score " + fmt_double(score) + " outside [0, 10]");
    if (score == 0.0) return Severity::None;
    if (score < 4.0) return Severity::Low;
    if (score < 7.0) return Severity::Medium;
    if (score < 9.0) return Severity::High;
    return Severity::Critical;
}

ServiceFingerprint make_fingerprint(int port, const std::string& banner,
                                    const std::string& vendor, const std::string& product,
                                    const std::string& version) {
    ServiceFingerprint fp;
    fp.port = port;
    fp.banner = banner;
    fp.vendor = vendor;
    fp.product = product;
    fp.version = version;
    fp.cpe = "cpe:2.3:a:" + vendor + ":" + product + ":" + version + ":*:*:*:*:*:*:*";
    return fp;
}

static bool valid_cve_id(const std::string& id) {
    // CVE-YYYY-NNNN with at least four digits in the tail
    if (id.size() < 13 || id.compare(0, 4, "CVE-") != 0 || id[8] != '-') return false;
    for (size_t i = 4; i < 8; ++i)
        if (!std::isdigit(static_cast<unsigned char>(id[i]))) return false;
    for (size_t i = 9; i < id.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(id[i]))) return false;
    return true;
}

static MatchCriterion parse_criterion(const json& m, const std::string& context) {
    MatchCriterion c;
    if (!m.contains("cpe_prefix") || !m["cpe_prefix"].is_string())
        fail(Errc::SchemaError, context + ": match without cpe_prefix");
    c.cpe_prefix = m["cpe_prefix"].get<std::string>();
    auto parts = split(c.cpe_prefix, ':');
    if (parts.size() < 5 || parts[0] != "cpe" || parts[1] != "2.3")
        fail(Errc::SchemaError, context + ": bad cpe_prefix '" + c.cpe_prefix + "'");
    c.vendor = parts[3];
    c.product = parts[4];
    if (parts.size() > 5 && !parts[5].empty() && parts[5] != "*") c.exact_version = parts[5];

    auto bound = [&](const char* key) -> std::optional<std::string> {
        if (!m.contains(key)) return std::nullopt;
        if (!m[key].is_string()) fail(Errc::SchemaError, context + ": non-string " + key);
        return m[key].get<std::string>();
    };
    c.range.start_incl = bound("ver_start_incl");
    c.range.start_excl = bound("ver_start_excl");
    c.range.end_incl = bound("ver_end_incl");
    c.range.end_excl = bound("ver_end_excl");

    auto lo = c.range.start_incl ? c.range.start_incl : c.range.start_excl;
    auto hi = c.range.end_incl ? c.range.end_incl : c.range.end_excl;
    if (lo && hi && compare_versions(*lo, *hi) > 0)
        fail(Errc::SchemaError, context + ": inverted version range " + *lo + " > " + *hi);
    return c;
}

NvdIndex NvdIndex::load(const std::vector<std::string>& paths) {
    NvdIndex index;
    for (const auto& path : paths) {
        std::istringstream in(read_file(path));
        std::string line;
        size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            std::string context = path + ":" + std::to_string(line_no);
            json j;
            try {
                j = json::parse(line);
            } catch (const json::exception& e) {
                fail(Errc::SchemaError, context + ": " + e.what());
            }
            CveRecord rec;
            if (!j.contains("id") || !j["id"].is_string() ||
                !valid_cve_id(j["id"].get<std::string>()))
                fail(Errc::SchemaError, context + ": missing or malformed CVE id");
            rec.id = j["id"].get<std::string>();
            if (!j.contains("base_score") || !j["base_score"].is_number())
                fail(Errc::SchemaError, context + ": missing base_score");
            rec.base_score = j["base_score"].get<double>();
            Severity banded = severity_band(rec.base_score); // OutOfRange on bad scores
            if (j.contains("severity")) {
                auto stored = severity_from_name(j["severity"].get<std::string>());
                if (!stored) fail(Errc::SchemaError, context + ": unknown severity");
                if (*stored != banded)
                    fail(Errc::BandMismatch, context + ": severity '" +
                                                 std::string(severity_name(*stored)) +
                                                 "' contradicts score " + fmt_double(rec.base_score));
            }
            rec.severity = banded;
            if (j.contains("published")) rec.published = parse_utc(j["published"].get<std::string>());
            if (j.contains("matches")) {
                if (!j["matches"].is_array()) fail(Errc::SchemaError, context + ": matches not a list");
                for (const auto& m : j["matches"]) rec.matches.push_back(parse_criterion(m, context));
            }
            if (index.records_.count(rec.id))
                fail(Errc::SchemaError, context + ": duplicate record for " + rec.id);
            for (size_t ci = 0; ci < rec.matches.size(); ++ci) {
                const auto& c = rec.matches[ci];
                index.by_vendor_product_[c.vendor + ":" + c.product].emplace_back(rec.id, ci);
            }
            index.records_.emplace(rec.id, std::move(rec));
        }
    }
    return index;
}

bool criterion_version_match(const MatchCriterion& c, const std::string& version) {
    auto cmp = [&](const std::string& a, const std::string& b, bool& ok) {
        try {
            ok = true;
            return compare_versions(a, b);
        } catch (const Error&) {
            ok = false;
            return 0;
        }
    };
    bool ok = true;
    if (c.exact_version) {
        int r = cmp(version, *c.exact_version, ok);
        if (!ok) return version == *c.exact_version; // exact-string fallback
        if (r != 0) return false;
    }
    if (c.range.start_incl) {
        int r = cmp(version, *c.range.start_incl, ok);
        if (!ok) return version == *c.range.start_incl;
        if (r < 0) return false;
    }
    if (c.range.start_excl) {
        int r = cmp(version, *c.range.start_excl, ok);
        if (!ok) return false;
        if (r <= 0) return false;
    }
    if (c.range.end_incl) {
        int r = cmp(version, *c.range.end_incl, ok);
        if (!ok) return version == *c.range.end_incl;
        if (r > 0) return false;
    }
    if (c.range.end_excl) {
        int r = cmp(version, *c.range.end_excl, ok);
        if (!ok) return false;
        if (r >= 0) return false;
    }
    return true;
}

std::vector<std::string> NvdIndex::lookup(const ServiceFingerprint& fp) const {
    std::set<std::string> hits;
    auto it = by_vendor_product_.find(fp.vendor + ":" + fp.product);
    if (it != by_vendor_product_.end()) {
        for (const auto& [id, ci] : it->second) {
            const CveRecord& rec = records_.at(id);
            if (criterion_version_match(rec.matches[ci], fp.version)) hits.insert(id);
        }
    }
    return {hits.begin(), hits.end()};
}

const CveRecord* NvdIndex::record(const std::string& id) const {
    auto it = records_.find(id);
    return it == records_.end() ? nullptr : &it->second;
}

ExposureReport build_exposure_report(
    const std::map<std::string, std::vector<ServiceFingerprint>>& fingerprints,
    const NvdIndex& index) {
    ExposureReport report;
    std::set<std::string> global;
    for (const auto& [domain, fps] : fingerprints) {
        DomainExposure exp;
        for (const auto& fp : fps) {
            auto ids = index.lookup(fp);
            exp.matched_ids.insert(ids.begin(), ids.end());
            exp.services.emplace_back(fp, std::move(ids));
        }
        global.insert(exp.matched_ids.begin(), exp.matched_ids.end());
        report.domains.emplace(domain, std::move(exp));
    }
    report.total_distinct_cves = static_cast<int>(global.size());
    for (auto s : kAllSeverities) report.severity_histogram[s] = 0;
    for (const auto& id : global) {
        const CveRecord* rec = index.record(id);
        if (rec) ++report.severity_histogram[rec->severity];
    }
    return report;
}

// Feed conversion. Two document shapes are understood:
//  - legacy: {"CVE_Items": [{"cve": {...}, "impact": {...}, "configurations": {...}}]}
//  - current: {"vulnerabilities": [{"cve": {..., "metrics": ..., "configurations": ...}}]}
namespace {

void emit_record(std::ostream& out, const std::string& id, double score,
                 const std::string& published, const std::vector<json>& criteria) {
    json rec;
    rec["id"] = id;
    rec["base_score"] = score;
    rec["severity"] = severity_name(severity_band(score));
    if (!published.empty()) rec["published"] = published.substr(0, 10);
    rec["matches"] = criteria;
    out << rec.dump() << "\n";
}

std::optional<json> criterion_from_cpe_match(const json& m) {
    std::string uri;
    if (m.contains("criteria")) uri = m["criteria"].get<std::string>();
    else if (m.contains("cpe23Uri")) uri = m["cpe23Uri"].get<std::string>();
    else return std::nullopt;
    if (m.contains("vulnerable") && !m["vulnerable"].get<bool>()) return std::nullopt;

    auto parts = split(uri, ':');
    if (parts.size() < 6 || parts[0] != "cpe") return std::nullopt;
    json c;
    std::string prefix = "cpe:2.3:" + parts[2] + ":" + parts[3] + ":" + parts[4];
    if (parts[5] != "*" && !parts[5].empty() && parts[5] != "-") prefix += ":" + parts[5];
    c["cpe_prefix"] = prefix;
    auto copy_bound = [&](const char* feed_key, const char* out_key) {
        if (m.contains(feed_key)) c[out_key] = m[feed_key].get<std::string>();
    };
    copy_bound("versionStartIncluding", "ver_start_incl");
    copy_bound("versionStartExcluding", "ver_start_excl");
    copy_bound("versionEndIncluding", "ver_end_incl");
    copy_bound("versionEndExcluding", "ver_end_excl");
    return c;
}

void collect_criteria(const json& configurations, std::vector<json>& out) {
    // Both shapes bottom out in objects bearing cpe23Uri/criteria fields.
    if (configurations.is_object()) {
        if (configurations.contains("cpe23Uri") || configurations.contains("criteria")) {
            if (auto c = criterion_from_cpe_match(configurations)) out.push_back(*c);
            return;
        }
        for (const auto& [key, value] : configurations.items()) {
            if (key == "cpe_match" || key == "cpeMatch" || key == "nodes" || key == "children" ||
                key == "configurations")
                collect_criteria(value, out);
        }
    } else if (configurations.is_array()) {
        for (const auto& item : configurations) collect_criteria(item, out);
    }
}

} // namespace

size_t convert_nvd_feed(const std::string& feed_json, const std::string& out_path) {
    json doc;
    try {
        doc = json::parse(feed_json);
    } catch (const json::exception& e) {
        fail(Errc::SchemaError, std::string("feed parse: ") + e.what());
    }

    std::ofstream out(out_path, std::ios::trunc);
    if (!out) fail(Errc::IoError, "cannot write " + out_path);

    size_t emitted = 0;
    auto handle_legacy_item = [&](const json& item) {
        if (!item.contains("cve")) return;
        std::string id = item["cve"]["CVE_data_meta"]["ID"].get<std::string>();
        if (!item.contains("impact") || !item["impact"].contains("baseMetricV3")) return;
        double score = item["impact"]["baseMetricV3"]["cvssV3"]["baseScore"].get<double>();
        std::string published = item.value("publishedDate", "");
        std::vector<json> criteria;
        if (item.contains("configurations")) collect_criteria(item["configurations"], criteria);
        emit_record(out, id, score, published, criteria);
        ++emitted;
    };
    auto handle_current_item = [&](const json& wrapper) {
        if (!wrapper.contains("cve")) return;
        const json& cve = wrapper["cve"];
        std::string id = cve["id"].get<std::string>();
        double score = -1;
        if (cve.contains("metrics")) {
            for (const char* key : {"cvssMetricV31", "cvssMetricV30"}) {
                if (cve["metrics"].contains(key) && !cve["metrics"][key].empty()) {
                    score = cve["metrics"][key][0]["cvssData"]["baseScore"].get<double>();
                    break;
                }
            }
        }
        if (score < 0) return;
        std::string published = cve.value("published", "");
        std::vector<json> criteria;
        if (cve.contains("configurations")) collect_criteria(cve["configurations"], criteria);
        emit_record(out, id, score, published, criteria);
        ++emitted;
    };

    try {
        if (doc.contains("CVE_Items")) {
            for (const auto& item : doc["CVE_Items"]) handle_legacy_item(item);
        } else if (doc.contains("vulnerabilities")) {
            for (const auto& item : doc["vulnerabilities"]) handle_current_item(item);
        } else {
            fail(Errc::SchemaError, "feed document has neither CVE_Items nor vulnerabilities");
        }
    } catch (const json::exception& e) {
        fail(Errc::SchemaError, std::string("feed structure: ") + e.what());
    }
    return emitted;
}

} // namespace posture
