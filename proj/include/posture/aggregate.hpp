#pragma once

#include <map>
#include <string>
#include <vector>

#include "posture/report.hpp"

namespace posture {

enum class Grouping { ByRegion, BySubRegion, ByIncome, Global };
const char* grouping_name(Grouping g);
Grouping grouping_from_name(const std::string& s); // accepts the CLI spellings

// Five-number summary, lower-interpolation convention: the k-th quartile is
// the sorted element at floor(k*(n-1)/4).
struct Dist {
    int min = 0, q1 = 0, median = 0, q3 = 0, max = 0;

    bool operator==(const Dist&) const = default;
};

Dist quartiles(std::vector<int> values);

struct CveRank {
    std::string id;
    Severity severity = Severity::None;
    int domains_exposed = 0;

    bool operator==(const CveRank&) const = default;
};

struct GroupStats {
    int n = 0;           // every dataset row in the group
    int unreachable = 0;
    int d1_n = 0; // matrix dimension completed
    int d2_n = 0; // chain dimension completed
    int d3_n = 0; // vuln dimension completed

    std::map<ProtocolVersion, double> protocol_support_share; // of d1_n
    double share_with_weak = 0.0;                             // of d1_n
    double share_with_insecure = 0.0;
    Dist weak_count_distribution;
    Dist insecure_count_distribution;

    double chain_issue_share = 0.0; // any issue, of d2_n
    std::map<ChainIssueCode, double> chain_issue_share_by_code;

    double share_exposed = 0.0; // ≥1 CVE, of d3_n
    Dist vuln_count_distribution;
    std::vector<CveRank> top_cves;
};

struct AggregateStats {
    Grouping grouping = Grouping::Global;
    std::map<std::string, GroupStats> groups;
};

AggregateStats aggregate(const std::vector<DomainPostureReport>& reports, Grouping grouping);

std::vector<CveRank> rank_top_cves(const std::vector<DomainPostureReport>& reports, int n);

// Writes reports.jsonl, groups.csv and the plot-data CSVs into out_dir.
void emit_reports(const AggregateStats& stats, const std::vector<DomainPostureReport>& reports,
                  const std::string& out_dir);

} // namespace posture
