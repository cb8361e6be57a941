#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iterator>
#include <random>

#include "posture/aggregate.hpp"
#include "posture/dataset.hpp"
#include "posture/report.hpp"
#include "posture/util.hpp"
#include "test_support.hpp"

using namespace posture;

namespace {

const SubregionTable& subregions() {
    static SubregionTable t = SubregionTable::load(data_dir() + "/un_subregions.csv");
    return t;
}

// Independent five-number summary with the same documented convention.
Dist oracle_quartiles(std::vector<int> v) {
    Dist d;
    if (v.empty()) return d;
    std::sort(v.begin(), v.end());
    size_t n = v.size();
    d.min = v.front();
    d.q1 = v[1 * (n - 1) / 4];
    d.median = v[2 * (n - 1) / 4];
    d.q3 = v[3 * (n - 1) / 4];
    d.max = v.back();
    return d;
}

// Second route over one bucket, written as filter-then-count passes instead of
// the production single sweep.
GroupStats oracle_group(const std::vector<const DomainPostureReport*>& members) {
    GroupStats g;
    g.n = static_cast<int>(members.size());
    g.unreachable = static_cast<int>(std::count_if(members.begin(), members.end(), [](auto* r) {
        return r->status == DomainStatus::Unreachable;
    }));

    std::vector<const DomainPostureReport*> m1, m2, m3;
    for (auto* r : members) {
        if (r->matrix_done) m1.push_back(r);
        if (r->chain_done) m2.push_back(r);
        if (r->vuln_done) m3.push_back(r);
    }
    g.d1_n = static_cast<int>(m1.size());
    g.d2_n = static_cast<int>(m2.size());
    g.d3_n = static_cast<int>(m3.size());

    auto share_of = [](int hits, int base) {
        return base == 0 ? 0.0 : static_cast<double>(hits) / base;
    };
    for (ProtocolVersion v : kAllVersions) {
        int hits = static_cast<int>(std::count_if(
            m1.begin(), m1.end(), [&](auto* r) { return r->matrix.supports(v); }));
        g.protocol_support_share[v] = share_of(hits, g.d1_n);
    }
    std::vector<int> weak, insecure, vulns;
    for (auto* r : m1) weak.push_back(r->weak_count());
    for (auto* r : m1) insecure.push_back(r->insecure_count());
    for (auto* r : m3) vulns.push_back(r->cve_count());
    g.share_with_weak = share_of(
        static_cast<int>(std::count_if(weak.begin(), weak.end(), [](int c) { return c > 0; })),
        g.d1_n);
    g.share_with_insecure =
        share_of(static_cast<int>(
                     std::count_if(insecure.begin(), insecure.end(), [](int c) { return c > 0; })),
                 g.d1_n);
    g.weak_count_distribution = oracle_quartiles(weak);
    g.insecure_count_distribution = oracle_quartiles(insecure);

    g.chain_issue_share = share_of(static_cast<int>(std::count_if(m2.begin(), m2.end(),
                                                                  [](auto* r) {
                                                                      return !r->chain.issues
                                                                                  .empty();
                                                                  })),
                                   g.d2_n);
    for (ChainIssueCode c : kAllIssueCodes) {
        int hits = static_cast<int>(
            std::count_if(m2.begin(), m2.end(), [&](auto* r) { return r->chain.has(c); }));
        g.chain_issue_share_by_code[c] = share_of(hits, g.d2_n);
    }

    g.share_exposed = share_of(
        static_cast<int>(std::count_if(vulns.begin(), vulns.end(), [](int c) { return c > 0; })),
        g.d3_n);
    g.vuln_count_distribution = oracle_quartiles(vulns);

    std::map<std::string, CveRank> by_id;
    for (auto* r : m3)
        for (const auto& hit : r->cves) {
            auto& rank = by_id.try_emplace(hit.id, CveRank{hit.id, hit.severity, 0}).first->second;
            ++rank.domains_exposed;
        }
    for (const auto& [id, rank] : by_id) g.top_cves.push_back(rank);
    std::stable_sort(g.top_cves.begin(), g.top_cves.end(), [](const auto& a, const auto& b) {
        return a.domains_exposed > b.domains_exposed;
    });
    // ties broken by id: stable sort over the map's id order already did that
    if (g.top_cves.size() > 20) g.top_cves.resize(20);
    return g;
}

bool same_group(const GroupStats& a, const GroupStats& b) {
    return a.n == b.n && a.unreachable == b.unreachable && a.d1_n == b.d1_n &&
           a.d2_n == b.d2_n && a.d3_n == b.d3_n &&
           a.protocol_support_share == b.protocol_support_share &&
           a.share_with_weak == b.share_with_weak &&
           a.share_with_insecure == b.share_with_insecure &&
           a.weak_count_distribution == b.weak_count_distribution &&
           a.insecure_count_distribution == b.insecure_count_distribution &&
           a.chain_issue_share == b.chain_issue_share &&
           a.chain_issue_share_by_code == b.chain_issue_share_by_code &&
           a.share_exposed == b.share_exposed &&
           a.vuln_count_distribution == b.vuln_count_distribution && a.top_cves == b.top_cves;
}

bool same_stats(const AggregateStats& a, const AggregateStats& b) {
    if (a.grouping != b.grouping || a.groups.size() != b.groups.size()) return false;
    for (const auto& [key, g] : a.groups) {
        auto it = b.groups.find(key);
        if (it == b.groups.end() || !same_group(g, it->second)) return false;
    }
    return true;
}

const std::pair<Region, const char*> kPlaces[] = {
    {Region::Africa, "Eastern Africa"},   {Region::Africa, "Northern Africa"},
    {Region::Americas, "Caribbean"},      {Region::Americas, "South America"},
    {Region::Asia, "Eastern Asia"},       {Region::Asia, "Central Asia"},
    {Region::Europe, "Northern Europe"},  {Region::Europe, "Western Europe"},
    {Region::Oceania, "Melanesia"},       {Region::Oceania, "Polynesia"},
};

const CveHit kCvePool[] = {
    {"CVE-2018-10001", Severity::High, 7.2},     {"CVE-2019-20002", Severity::Medium, 5.0},
    {"CVE-2020-30003", Severity::Critical, 9.8}, {"CVE-2021-40004", Severity::Low, 3.1},
    {"CVE-2022-50005", Severity::High, 8.1},     {"CVE-2023-60006", Severity::Medium, 6.5},
};

bool hits_equal(const std::set<CveHit>& x, const std::set<CveHit>& y) {
    return std::equal(x.begin(), x.end(), y.begin(), y.end(),
                      [](const CveHit& p, const CveHit& q) {
                          return p.id == q.id && p.severity == q.severity && p.score == q.score;
                      });
}

std::vector<DomainPostureReport> random_reports(uint32_t seed, size_t count) {
    std::mt19937 rng(seed);
    auto coin = [&](double p) { return std::uniform_real_distribution<>(0, 1)(rng) < p; };
    auto pick = [&](int n) { return std::uniform_int_distribution<>(0, n - 1)(rng); };

    std::vector<DomainPostureReport> out;
    out.reserve(count);
    for (size_t i = 0; i < count; ++i) {
        DomainPostureReport r;
        const auto& place = kPlaces[pick(static_cast<int>(std::size(kPlaces)))];
        r.target.domain = "host" + std::to_string(i) + ".test";
        r.target.port = 443;
        r.target.region = place.first;
        r.target.sub_region = place.second;
        r.target.income = kAllIncomes[pick(4)];
        r.scanned_at = 1700000000 + static_cast<int64_t>(i);

        if (coin(0.12)) {
            r.status = DomainStatus::Unreachable;
            out.push_back(std::move(r));
            continue;
        }
        r.matrix_done = coin(0.9);
        r.chain_done = coin(0.85);
        r.vuln_done = coin(0.8);
        r.status = (r.matrix_done && r.chain_done && r.vuln_done) ? DomainStatus::Complete
                                                                  : DomainStatus::Partial;
        if (r.matrix_done) {
            bool any = false;
            for (ProtocolVersion v : kAllVersions) {
                if (!coin(0.4)) continue;
                any = true;
                auto& vs = r.matrix.per_version[v];
                vs.supported = true;
                for (int k = 0, kn = 1 + pick(3); k < kn; ++k)
                    vs.accepted_ciphers.insert(0xC000u + static_cast<uint32_t>(pick(64)));
            }
            if (!any) {
                auto& vs = r.matrix.per_version[ProtocolVersion::TLS1_2];
                vs.supported = true;
                vs.accepted_ciphers.insert(0xC02Fu);
            }
            r.matrix.probe_count = 100 + pick(500);
            for (int k = 0, kn = pick(4); k < kn; ++k)
                r.weak_ciphers.insert(static_cast<uint32_t>(pick(32)));
            for (int k = 0, kn = pick(3); k < kn; ++k)
                r.insecure_ciphers.insert(0x100u + static_cast<uint32_t>(pick(32)));
        }
        if (r.chain_done) {
            r.chain.evaluated_at = r.scanned_at;
            for (ChainIssueCode c : kAllIssueCodes)
                if (coin(0.12)) r.chain.issues.push_back({c, 0, ""});
            std::sort(r.chain.issues.begin(), r.chain.issues.end());
            r.chain.trusted = r.chain.issues.empty();
        }
        if (r.vuln_done) {
            for (const auto& hit : kCvePool)
                if (coin(0.3)) r.cves.insert(hit);
        }
        if (coin(0.5)) r.grade = ServerGrade{61.0, 'C', {}};
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace

TEST_CASE("sub-region table covers the un geoscheme") {
    const auto& t = subregions();
    CHECK(t.entries().size() == 22);
    CHECK(t.known("Northern Europe"));
    CHECK(t.region_of("Northern Europe") == Region::Europe);
    CHECK(t.region_of("Melanesia") == Region::Oceania);
    CHECK(t.region_of("Caribbean") == Region::Americas);
    CHECK_FALSE(t.known("Atlantis"));
    CHECK_EQ(code_of([&] { t.region_of("Atlantis"); }), Errc::SchemaError);
    int per_region[5] = {};
    for (const auto& [sub, region] : t.entries()) ++per_region[static_cast<int>(region)];
    CHECK(per_region[static_cast<int>(Region::Africa)] == 5);
    CHECK(per_region[static_cast<int>(Region::Europe)] == 4);
    CHECK(per_region[static_cast<int>(Region::Oceania)] == 4);
}

TEST_CASE("region and income names round-trip") {
    for (Region r : kAllRegions) CHECK(region_from_name(region_name(r)) == r);
    for (Income i : kAllIncomes) CHECK(income_from_name(income_name(i)) == i);
    CHECK_EQ(code_of([] { region_from_name("Pangaea"); }), Errc::SchemaError);
    CHECK_EQ(code_of([] { income_from_name("Stratospheric"); }), Errc::SchemaError);
}

TEST_CASE("fqdn validation") {
    CHECK(valid_fqdn("gov.example"));
    CHECK(valid_fqdn("a.b-c.example"));
    CHECK(valid_fqdn("xn--bcher-kva.example"));
    CHECK(valid_fqdn("localhost"));
    CHECK(valid_fqdn("127.0.0.1")); // digit-only labels are fine, addresses pass
    CHECK(valid_fqdn(std::string(63, 'a') + ".example"));

    CHECK_FALSE(valid_fqdn(""));
    CHECK_FALSE(valid_fqdn("."));
    CHECK_FALSE(valid_fqdn(".example"));
    CHECK_FALSE(valid_fqdn("example."));
    CHECK_FALSE(valid_fqdn("a..b"));
    CHECK_FALSE(valid_fqdn("-a.example"));
    CHECK_FALSE(valid_fqdn("a-.example"));
    CHECK_FALSE(valid_fqdn("a_b.example"));
    CHECK_FALSE(valid_fqdn("white space.example"));
    CHECK_FALSE(valid_fqdn(std::string(64, 'a') + ".example"));
    std::string long_but_legal_labels = std::string(63, 'a') + "." + std::string(63, 'b') + "." +
                                        std::string(63, 'c') + "." + std::string(63, 'd') + ".ex";
    CHECK_FALSE(valid_fqdn(long_but_legal_labels)); // 258 chars total
}

TEST_CASE("bundled dataset loads") {
    auto targets = load_dataset(data_dir() + "/sample_dataset.csv", subregions());
    REQUIRE(targets.size() == 14);
    CHECK(targets[0].domain == "portal.nairobi.example");
    CHECK(targets[0].port == 443);
    CHECK(targets[0].region == Region::Africa);
    CHECK(targets[0].sub_region == "Eastern Africa");
    CHECK(targets[0].income == Income::LowerMiddle);
    CHECK(targets[8].port == 8443);
    CHECK(targets[13].region == Region::Oceania);
}

TEST_CASE("dataset loader faults carry the offending row number") {
    TempDir tmp;
    const std::string header = "domain,port,region,sub_region,income\n";
    const std::string good = "a.test,443,Europe,Northern Europe,High\n";
    auto load = [&](const std::string& body) {
        write_file(tmp.file("d.csv"), header + body);
        return load_dataset(tmp.file("d.csv"), subregions());
    };
    auto message_of = [&](const std::string& body) -> std::string {
        try {
            load(body);
        } catch (const Error& e) {
            return e.what();
        }
        return "";
    };

    SUBCASE("bad domain") {
        CHECK_EQ(code_of([&] { load(good + "bad_domain,443,Europe,Northern Europe,High\n"); }),
                 Errc::SchemaError);
        CHECK(message_of(good + "bad_domain,443,Europe,Northern Europe,High\n")
                  .find("row 3") != std::string::npos);
    }
    SUBCASE("duplicate domain") {
        CHECK_EQ(code_of([&] { load(good + good); }), Errc::DuplicateDomain);
    }
    SUBCASE("unparseable port") {
        CHECK_EQ(code_of([&] { load("a.test,https,Europe,Northern Europe,High\n"); }),
                 Errc::SchemaError);
    }
    SUBCASE("port out of range") {
        CHECK_EQ(code_of([&] { load("a.test,70000,Europe,Northern Europe,High\n"); }),
                 Errc::SchemaError);
        CHECK_EQ(code_of([&] { load("a.test,0,Europe,Northern Europe,High\n"); }),
                 Errc::SchemaError);
    }
    SUBCASE("unknown region") {
        CHECK_EQ(code_of([&] { load("a.test,443,Pangaea,Northern Europe,High\n"); }),
                 Errc::SchemaError);
    }
    SUBCASE("unknown sub-region") {
        CHECK_EQ(code_of([&] { load("a.test,443,Europe,Atlantis,High\n"); }), Errc::SchemaError);
    }
    SUBCASE("sub-region in the wrong region") {
        CHECK_EQ(code_of([&] { load("a.test,443,Africa,Northern Europe,High\n"); }),
                 Errc::RegionMismatch);
        CHECK(message_of("a.test,443,Africa,Northern Europe,High\n").find("row 2") !=
              std::string::npos);
    }
}

TEST_CASE("quartiles use the lower-interpolation convention") {
    CHECK(quartiles({}) == Dist{0, 0, 0, 0, 0});
    CHECK(quartiles({7}) == Dist{7, 7, 7, 7, 7});
    CHECK(quartiles({3, 1}) == Dist{1, 1, 1, 1, 3}); // (n-1)=1: indexes 0,0,0,0,1
    CHECK(quartiles({1, 2, 3, 4}) == Dist{1, 1, 2, 3, 4});
    CHECK(quartiles({10, 20, 30, 40, 50}) == Dist{10, 20, 30, 40, 50});
    CHECK(quartiles({50, 10, 40, 30, 20}) == Dist{10, 20, 30, 40, 50}); // order-free
    CHECK(quartiles({1, 1, 1, 1, 1, 9}) == Dist{1, 1, 1, 1, 9});
    std::vector<int> hundred;
    for (int i = 0; i <= 100; ++i) hundred.push_back(i);
    CHECK(quartiles(hundred) == Dist{0, 25, 50, 75, 100});

    std::mt19937 rng(71);
    for (int round = 0; round < 200; ++round) {
        std::vector<int> v(1 + rng() % 40);
        for (auto& x : v) x = static_cast<int>(rng() % 20);
        CHECK(quartiles(v) == oracle_quartiles(v));
    }
}

TEST_CASE("aggregate equals an independent recomputation") {
    auto reports = random_reports(20260817, 400);
    for (Grouping g : {Grouping::ByRegion, Grouping::BySubRegion, Grouping::ByIncome,
                       Grouping::Global}) {
        AggregateStats stats = aggregate(reports, g);

        std::map<std::string, std::vector<const DomainPostureReport*>> buckets;
        for (const auto& r : reports) {
            std::string key;
            switch (g) {
            case Grouping::ByRegion: key = region_name(r.target.region); break;
            case Grouping::BySubRegion: key = r.target.sub_region; break;
            case Grouping::ByIncome: key = income_name(r.target.income); break;
            case Grouping::Global: key = "Global"; break;
            }
            buckets[key].push_back(&r);
        }
        REQUIRE(stats.groups.size() == buckets.size());
        for (const auto& [key, members] : buckets) {
            INFO(grouping_name(g), " / ", key);
            REQUIRE(stats.groups.count(key) == 1);
            CHECK(same_group(stats.groups.at(key), oracle_group(members)));
        }
    }
    CHECK_EQ(code_of([] { aggregate({}, Grouping::Global); }), Errc::EmptyInput);
}

TEST_CASE("aggregate is permutation invariant") {
    auto reports = random_reports(97, 250);
    auto shuffled = reports;
    std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937(5));
    for (Grouping g : {Grouping::ByRegion, Grouping::ByIncome, Grouping::Global})
        CHECK(same_stats(aggregate(reports, g), aggregate(shuffled, g)));
}

TEST_CASE("group marginals add up on a census-shaped corpus") {
    // Row counts per region and per income class, both summing to 3068.
    const std::pair<Region, int> region_counts[] = {{Region::Africa, 429},
                                                    {Region::Americas, 269},
                                                    {Region::Asia, 1261},
                                                    {Region::Europe, 918},
                                                    {Region::Oceania, 191}};
    const std::pair<Income, int> income_counts[] = {{Income::High, 1233},
                                                    {Income::UpperMiddle, 762},
                                                    {Income::LowerMiddle, 861},
                                                    {Income::Low, 212}};
    std::vector<Income> income_column;
    for (const auto& [inc, n] : income_counts)
        income_column.insert(income_column.end(), static_cast<size_t>(n), inc);
    std::shuffle(income_column.begin(), income_column.end(), std::mt19937(3068));

    std::vector<DomainPostureReport> reports;
    size_t i = 0;
    for (const auto& [region, n] : region_counts) {
        for (int k = 0; k < n; ++k, ++i) {
            DomainPostureReport r;
            r.target.domain = "m" + std::to_string(i) + ".test";
            r.target.region = region;
            for (const auto& place : kPlaces)
                if (place.first == region) { r.target.sub_region = place.second; break; }
            r.target.income = income_column[i];
            r.status = i % 13 == 0 ? DomainStatus::Unreachable : DomainStatus::Partial;
            if (r.status != DomainStatus::Unreachable) {
                r.matrix_done = i % 7 != 0;
                r.chain_done = i % 5 != 0;
                r.vuln_done = i % 3 != 0;
                if (r.matrix_done && r.chain_done && r.vuln_done)
                    r.status = DomainStatus::Complete;
                if (r.matrix_done && i % 2 == 0) r.weak_ciphers.insert(0x000Au);
                if (r.vuln_done && i % 4 == 0)
                    r.cves.insert({"CVE-2020-0001", Severity::High, 7.5});
            }
            reports.push_back(std::move(r));
        }
    }
    REQUIRE(reports.size() == 3068);

    AggregateStats global = aggregate(reports, Grouping::Global);
    REQUIRE(global.groups.size() == 1);
    const GroupStats& all = global.groups.at("Global");
    CHECK(all.n == 3068);

    AggregateStats by_region = aggregate(reports, Grouping::ByRegion);
    REQUIRE(by_region.groups.size() == 5);
    for (const auto& [region, n] : region_counts)
        CHECK(by_region.groups.at(region_name(region)).n == n);

    AggregateStats by_income = aggregate(reports, Grouping::ByIncome);
    REQUIRE(by_income.groups.size() == 4);
    for (const auto& [inc, n] : income_counts) CHECK(by_income.groups.at(income_name(inc)).n == n);

    // Disaggregated counts must recombine into the global figures exactly.
    for (const AggregateStats* split : {&by_region, &by_income}) {
        int n = 0, unreachable = 0, d1 = 0, d2 = 0, d3 = 0;
        double weak_hits = 0, exposed_hits = 0;
        for (const auto& [key, g] : split->groups) {
            n += g.n;
            unreachable += g.unreachable;
            d1 += g.d1_n;
            d2 += g.d2_n;
            d3 += g.d3_n;
            weak_hits += g.share_with_weak * g.d1_n;
            exposed_hits += g.share_exposed * g.d3_n;
        }
        CHECK(n == all.n);
        CHECK(unreachable == all.unreachable);
        CHECK(d1 == all.d1_n);
        CHECK(d2 == all.d2_n);
        CHECK(d3 == all.d3_n);
        CHECK(std::llround(weak_hits) == std::llround(all.share_with_weak * all.d1_n));
        CHECK(std::llround(exposed_hits) == std::llround(all.share_exposed * all.d3_n));
    }
}

TEST_CASE("cve ranking orders by reach then id") {
    std::vector<DomainPostureReport> reports;
    auto add = [&](std::initializer_list<const char*> ids) {
        DomainPostureReport r;
        r.target.domain = "r" + std::to_string(reports.size()) + ".test";
        r.vuln_done = true;
        r.status = DomainStatus::Complete;
        for (const char* id : ids) r.cves.insert({id, Severity::High, 7.5});
        reports.push_back(std::move(r));
    };
    add({"CVE-2020-0002", "CVE-2020-0001"});
    add({"CVE-2020-0002", "CVE-2020-0003"});
    add({"CVE-2020-0002"});
    add({"CVE-2020-0001"});

    auto ranked = rank_top_cves(reports, 10);
    REQUIRE(ranked.size() == 3);
    CHECK(ranked[0] == CveRank{"CVE-2020-0002", Severity::High, 3});
    CHECK(ranked[1] == CveRank{"CVE-2020-0001", Severity::High, 2});
    CHECK(ranked[2] == CveRank{"CVE-2020-0003", Severity::High, 1});
    CHECK(rank_top_cves(reports, 2).size() == 2);

    DomainPostureReport skipped;
    skipped.vuln_done = false; // dimension never ran, its hits must not count
    skipped.cves.insert({"CVE-2020-0009", Severity::Low, 2.0});
    reports.push_back(skipped);
    CHECK(rank_top_cves(reports, 10).size() == 3);
}

TEST_CASE("report emission round-trips through the file set") {
    TempDir tmp;
    auto reports = random_reports(424242, 25);
    AggregateStats stats = aggregate(reports, Grouping::ByRegion);
    emit_reports(stats, reports, tmp.path());

    for (const char* name : {"reports.jsonl", "groups.csv", "fig_protocols.csv",
                             "fig_cipher_dist.csv", "fig_chain_issues.csv", "fig_vuln_dist.csv",
                             "table_top_cves.csv"})
        CHECK(std::filesystem::exists(tmp.file(name)));

    auto reloaded = load_report_log(tmp.file("reports.jsonl"));
    REQUIRE(reloaded.size() == reports.size());
    for (size_t i = 0; i < reports.size(); ++i) {
        const auto& a = reports[i];
        const auto& b = reloaded[i];
        INFO(a.target.domain);
        CHECK(b.target.domain == a.target.domain);
        CHECK(b.target.region == a.target.region);
        CHECK(b.target.sub_region == a.target.sub_region);
        CHECK(b.target.income == a.target.income);
        CHECK(b.status == a.status);
        CHECK(b.scanned_at == a.scanned_at);
        CHECK(b.matrix_done == a.matrix_done);
        CHECK(b.chain_done == a.chain_done);
        CHECK(b.vuln_done == a.vuln_done);
        CHECK(b.weak_ciphers == a.weak_ciphers);
        CHECK(b.insecure_ciphers == a.insecure_ciphers);
        for (ProtocolVersion v : kAllVersions) {
            CHECK(b.matrix.supports(v) == a.matrix.supports(v));
            CHECK(b.matrix.per_version.at(v).accepted_ciphers ==
                  a.matrix.per_version.at(v).accepted_ciphers);
        }
        CHECK(b.chain.issues == a.chain.issues);
        CHECK(b.chain.trusted == a.chain.trusted);
        CHECK(hits_equal(b.cves, a.cves));
        REQUIRE(b.grade.has_value() == a.grade.has_value());
        if (a.grade) {
            CHECK(b.grade->letter == a.grade->letter);
            CHECK(b.grade->numeric_score == a.grade->numeric_score);
        }
    }

    // Aggregating the reloaded log reproduces the stats of the originals.
    CHECK(same_stats(aggregate(reloaded, Grouping::ByRegion), stats));

    std::string groups_csv = read_file(tmp.file("groups.csv"));
    CHECK(groups_csv.find("share_with_weak") != std::string::npos);
    CHECK(static_cast<size_t>(std::count(groups_csv.begin(), groups_csv.end(), '\n')) ==
          stats.groups.size() + 1);
}
