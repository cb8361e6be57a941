#include "posture/fingerprint.hpp"

#include <algorithm>

#include "posture/csv.hpp"
#include "posture/error.hpp"
#include "posture/util.hpp"

namespace posture {

const std::vector<int> kDefaultProbePorts = {21,  22,  25,  80,  110, 143, 443,
                                             465, 587, 993, 995, 8080, 8443};

bool is_web_port(int port) {
    switch (port) {
    case 80:
    case 443:
    case 8000:
    case 8080:
    case 8443:
    case 8888:
        return true;
    default:
        return false;
    }
}

std::vector<FingerprintRule> load_fingerprint_rules(const std::string& path) {
    auto rows = read_csv_file(path, {"pattern", "vendor", "product", "version_group_index"});
    std::vector<FingerprintRule> rules;
    rules.reserve(rows.size());
    for (const auto& row : rows) {
        FingerprintRule r;
        r.pattern = row[0];
        try {
            r.re = std::regex(row[0]);
        } catch (const std::regex_error& e) {
            fail(Errc::SchemaError, path + ": bad pattern '" + row[0] + "': " + e.what());
        }
        r.vendor = row[1];
        r.product = row[2];
        r.version_group = static_cast<int>(parse_long(row[3]));
        if (r.version_group < 0 || static_cast<size_t>(r.version_group) > r.re.mark_count())
            fail(Errc::SchemaError, path + ": group index " + row[3] + " out of range for '" +
                                        row[0] + "'");
        rules.push_back(std::move(r));
    }
    if (rules.empty()) fail(Errc::SchemaError, path + ": no rules");
    return rules;
}

std::optional<ServiceFingerprint> match_banner(const std::vector<FingerprintRule>& rules,
                                               int port, const std::string& banner) {
    for (const auto& rule : rules) {
        std::smatch m;
        if (!std::regex_search(banner, m, rule.re)) continue;
        std::string version = m[static_cast<size_t>(rule.version_group)].str();
        auto fp = make_fingerprint(port, banner, rule.vendor, rule.product, version);
        return fp;
    }
    return std::nullopt;
}

std::vector<ServiceFingerprint> fingerprint_services(const std::string& host,
                                                     const std::vector<int>& ports,
                                                     const ProbePolicy& policy,
                                                     const std::vector<FingerprintRule>& rules,
                                                     HostPacer* pacer, HostBudget* budget) {
    std::vector<ServiceFingerprint> out;
    for (int port : ports) {
        if (budget && budget->exhausted()) break;
        if (pacer) pacer->wait_turn(host);
        if (budget) ++budget->used;
        auto sock = tcp_connect(host, port, policy.connect_timeout);
        if (!sock) {
            if (pacer) pacer->note_closed(host);
            continue;
        }
        if (is_web_port(port)) {
            std::string req = "HEAD / HTTP/1.0\r\nHost: " + host + "\r\n\r\n";
            if (!sock->write_all(req, policy.read_timeout)) {
                sock->close();
                if (pacer) pacer->note_closed(host);
                continue;
            }
        }
        std::string banner;
        auto first = sock->read_some(4096, policy.read_timeout);
        if (first && !first->empty()) {
            banner.assign(first->begin(), first->end());
            // headers may straggle across segments; grab one more if pending
            auto more = sock->read_some(4096, std::chrono::milliseconds(20));
            if (more && !more->empty()) banner.append(more->begin(), more->end());
        }
        sock->close();
        if (pacer) pacer->note_closed(host);
        if (banner.empty()) continue;
        if (auto fp = match_banner(rules, port, banner)) out.push_back(std::move(*fp));
    }
    return out;
}

} // namespace posture
