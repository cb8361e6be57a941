#include "posture/aggregate.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "posture/csv.hpp"
#include "posture/error.hpp"
#include "posture/util.hpp"

namespace posture {

const char* grouping_name(Grouping g) {
    switch (g) {
    case Grouping::ByRegion: return "region";
    case Grouping::BySubRegion: return "sub-region";
    case Grouping::ByIncome: return "income";
    case Grouping::Global: return "global";
    }
    return "?";
}

Grouping grouping_from_name(const std::string& s) {
    if (s == "region") return Grouping::ByRegion;
    if (s == "sub-region" || s == "sub_region") return Grouping::BySubRegion;
    if (s == "income") return Grouping::ByIncome;
    if (s == "global") return Grouping::Global;
    fail(Errc::SchemaError, "unknown grouping '" + s + "'");
}

Dist quartiles(std::vector<int> values) {
    Dist d;
    if (values.empty()) return d;
    std::sort(values.begin(), values.end());
    size_t n = values.size();
    auto at = [&](size_t k) { return values[k * (n - 1) / 4]; };
    d.min = at(0);
    d.q1 = at(1);
    d.median = at(2);
    d.q3 = at(3);
    d.max = at(4);
    return d;
}

namespace {

std::string group_key(const DomainPostureReport& r, Grouping g) {
    switch (g) {
    case Grouping::ByRegion: return region_name(r.target.region);
    case Grouping::BySubRegion: return r.target.sub_region;
    case Grouping::ByIncome: return income_name(r.target.income);
    case Grouping::Global: return "Global";
    }
    return "Global";
}

constexpr int kTopCveCount = 20;

std::vector<CveRank> rank_cves_over(const std::vector<const DomainPostureReport*>& reports,
                                    int n) {
    std::map<std::string, std::pair<Severity, int>> counts; // id → (severity, domains)
    for (const auto* r : reports) {
        if (!r->vuln_done) continue;
        for (const auto& hit : r->cves) {
            auto [it, inserted] = counts.try_emplace(hit.id, hit.severity, 0);
            ++it->second.second;
        }
    }
    std::vector<CveRank> ranked;
    ranked.reserve(counts.size());
    for (const auto& [id, sc] : counts) ranked.push_back({id, sc.first, sc.second});
    std::sort(ranked.begin(), ranked.end(), [](const CveRank& a, const CveRank& b) {
        if (a.domains_exposed != b.domains_exposed) return a.domains_exposed > b.domains_exposed;
        return a.id < b.id;
    });
    if (static_cast<int>(ranked.size()) > n) ranked.resize(static_cast<size_t>(n));
    return ranked;
}

} // namespace

AggregateStats aggregate(const std::vector<DomainPostureReport>& reports, Grouping grouping) {
    if (reports.empty()) fail(Errc::EmptyInput, "no reports to aggregate");

    std::map<std::string, std::vector<const DomainPostureReport*>> buckets;
    for (const auto& r : reports) buckets[group_key(r, grouping)].push_back(&r);

    AggregateStats stats;
    stats.grouping = grouping;
    for (auto& [key, members] : buckets) {
        GroupStats g;
        g.n = static_cast<int>(members.size());

        std::vector<int> weak_counts, insecure_counts, vuln_counts;
        int with_weak = 0, with_insecure = 0, with_issue = 0, exposed = 0;
        std::map<ProtocolVersion, int> version_support;
        std::map<ChainIssueCode, int> issue_domains;
        for (ProtocolVersion v : kAllVersions) version_support[v] = 0;
        for (ChainIssueCode c : kAllIssueCodes) issue_domains[c] = 0;

        for (const auto* r : members) {
            if (r->status == DomainStatus::Unreachable) ++g.unreachable;
            if (r->matrix_done) {
                ++g.d1_n;
                for (ProtocolVersion v : kAllVersions)
                    if (r->matrix.supports(v)) ++version_support[v];
                weak_counts.push_back(r->weak_count());
                insecure_counts.push_back(r->insecure_count());
                if (r->weak_count() > 0) ++with_weak;
                if (r->insecure_count() > 0) ++with_insecure;
            }
            if (r->chain_done) {
                ++g.d2_n;
                if (!r->chain.issues.empty()) ++with_issue;
                for (ChainIssueCode c : r->chain.issue_codes()) ++issue_domains[c];
            }
            if (r->vuln_done) {
                ++g.d3_n;
                vuln_counts.push_back(r->cve_count());
                if (r->cve_count() > 0) ++exposed;
            }
        }

        for (ProtocolVersion v : kAllVersions)
            g.protocol_support_share[v] =
                g.d1_n == 0 ? 0.0 : static_cast<double>(version_support[v]) / g.d1_n;
        g.share_with_weak = g.d1_n == 0 ? 0.0 : static_cast<double>(with_weak) / g.d1_n;
        g.share_with_insecure = g.d1_n == 0 ? 0.0 : static_cast<double>(with_insecure) / g.d1_n;
        g.weak_count_distribution = quartiles(weak_counts);
        g.insecure_count_distribution = quartiles(insecure_counts);

        g.chain_issue_share = g.d2_n == 0 ? 0.0 : static_cast<double>(with_issue) / g.d2_n;
        for (ChainIssueCode c : kAllIssueCodes)
            g.chain_issue_share_by_code[c] =
                g.d2_n == 0 ? 0.0 : static_cast<double>(issue_domains[c]) / g.d2_n;

        g.share_exposed = g.d3_n == 0 ? 0.0 : static_cast<double>(exposed) / g.d3_n;
        g.vuln_count_distribution = quartiles(vuln_counts);
        g.top_cves = rank_cves_over(members, kTopCveCount);

        stats.groups.emplace(key, std::move(g));
    }
    return stats;
}

std::vector<CveRank> rank_top_cves(const std::vector<DomainPostureReport>& reports, int n) {
    std::vector<const DomainPostureReport*> ptrs;
    ptrs.reserve(reports.size());
    for (const auto& r : reports) ptrs.push_back(&r);
    return rank_cves_over(ptrs, n);
}

namespace {

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) fail(Errc::IoError, "cannot write " + path);
    out << content;
    if (!out) fail(Errc::IoError, "write failed: " + path);
}

std::string dist_cells(const Dist& d) {
    return csv_row({std::to_string(d.min), std::to_string(d.q1), std::to_string(d.median),
                    std::to_string(d.q3), std::to_string(d.max)});
}

} // namespace

void emit_reports(const AggregateStats& stats, const std::vector<DomainPostureReport>& reports,
                  const std::string& out_dir) {
    if (reports.empty()) fail(Errc::EmptyInput, "no reports to emit");
    std::filesystem::create_directories(out_dir);
    auto path = [&](const char* name) { return out_dir + "/" + name; };
    std::string grouping = grouping_name(stats.grouping);

    {
        std::string body;
        for (const auto& r : reports) body += report_to_json(r) + "\n";
        write_text(path("reports.jsonl"), body);
    }
    {
        std::string body = csv_row({"grouping", "group", "n", "unreachable", "matrix_n", "chain_n",
                                    "vuln_n", "share_with_weak", "share_with_insecure",
                                    "chain_issue_share", "share_exposed"}) +
                           "\n";
        for (const auto& [key, g] : stats.groups)
            body += csv_row({grouping, key, std::to_string(g.n), std::to_string(g.unreachable),
                             std::to_string(g.d1_n), std::to_string(g.d2_n),
                             std::to_string(g.d3_n), fmt_double(g.share_with_weak),
                             fmt_double(g.share_with_insecure), fmt_double(g.chain_issue_share),
                             fmt_double(g.share_exposed)}) +
                    "\n";
        write_text(path("groups.csv"), body);
    }
    {
        std::string body = csv_row({"grouping", "group", "version", "share"}) + "\n";
        for (const auto& [key, g] : stats.groups)
            for (ProtocolVersion v : kAllVersions)
                body += csv_row({grouping, key, version_name(v),
                                 fmt_double(g.protocol_support_share.at(v))}) +
                        "\n";
        write_text(path("fig_protocols.csv"), body);
    }
    {
        std::string body =
            csv_row({"grouping", "group", "kind", "min", "q1", "median", "q3", "max"}) + "\n";
        for (const auto& [key, g] : stats.groups) {
            body += csv_row({grouping, key, "weak"}) + "," +
                    dist_cells(g.weak_count_distribution) + "\n";
            body += csv_row({grouping, key, "insecure"}) + "," +
                    dist_cells(g.insecure_count_distribution) + "\n";
        }
        write_text(path("fig_cipher_dist.csv"), body);
    }
    {
        std::string body = csv_row({"grouping", "group", "code", "share"}) + "\n";
        for (const auto& [key, g] : stats.groups)
            for (ChainIssueCode c : kAllIssueCodes)
                body += csv_row({grouping, key, issue_code_name(c),
                                 fmt_double(g.chain_issue_share_by_code.at(c))}) +
                        "\n";
        write_text(path("fig_chain_issues.csv"), body);
    }
    {
        std::string body =
            csv_row({"grouping", "group", "min", "q1", "median", "q3", "max", "share_exposed"}) +
            "\n";
        for (const auto& [key, g] : stats.groups)
            body += csv_row({grouping, key}) + "," + dist_cells(g.vuln_count_distribution) + "," +
                    fmt_double(g.share_exposed) + "\n";
        write_text(path("fig_vuln_dist.csv"), body);
    }
    {
        // ranked over all reports, not per group: the table is a global view
        auto ranked = rank_top_cves(reports, kTopCveCount);
        std::string body = csv_row({"rank", "id", "severity", "domains_exposed"}) + "\n";
        int rank = 1;
        for (const auto& row : ranked)
            body += csv_row({std::to_string(rank++), row.id, severity_name(row.severity),
                             std::to_string(row.domains_exposed)}) +
                    "\n";
        write_text(path("table_top_cves.csv"), body);
    }
}

} // namespace posture
