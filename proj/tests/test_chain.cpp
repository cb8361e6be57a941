#include <doctest.h>

#include "posture/fixture_chain.hpp"
#include "posture/util.hpp"
#include "test_support.hpp"

using namespace posture;

namespace {

struct Prepared {
    std::vector<CertificateRecord> records;
    TrustStore store;
    FixtureChain fx;
};

Prepared prepare(const FlawSpec& spec, const std::string& hostname = "fixture.test") {
    Prepared p;
    p.fx = generate_fixture_chain(spec, hostname);
    for (const auto& pem : p.fx.chain_pem)
        for (const auto& der : pem_to_der_blocks(pem)) p.records.push_back(parse_certificate(der));
    for (const auto& pem : p.fx.store_pem)
        for (const auto& der : pem_to_der_blocks(pem)) p.store.add(parse_certificate(der));
    return p;
}

std::set<ChainIssue> as_set(const std::vector<ChainIssue>& v) { return {v.begin(), v.end()}; }

} // namespace

TEST_CASE("pristine chains validate clean and anchored") {
    for (int depth : {1, 2, 3, 4}) {
        if (depth == 1) continue; // a bare self-signed leaf is the SLF fixture's job
        Prepared p = prepare(FlawSpec{{}, depth});
        ChainReport report = validate_chain(p.records, p.fx.hostname, p.store, p.fx.revocations,
                                            kFixtureValidationAt);
        INFO("depth ", depth);
        CHECK(report.issues.empty());
        CHECK(report.trusted);
        REQUIRE(report.trust_anchor.has_value());
        CHECK(report.chain.size() == static_cast<size_t>(depth));
    }
}

TEST_CASE("the full fixture corpus closes: observed issues equal the manufactured ones") {
    auto corpus = fixture_corpus();
    CHECK(corpus.size() == 52); // 10 singles + 42 satisfiable pairs
    for (const auto& spec : corpus) {
        Prepared p = prepare(spec);
        ChainReport report = validate_chain(p.records, p.fx.hostname, p.store, p.fx.revocations,
                                            kFixtureValidationAt);
        INFO(flaw_spec_to_string(spec));
        CHECK(as_set(report.issues) == p.fx.expected);

        bool breaks = false;
        for (const auto& issue : report.issues)
            if (issue_breaks_trust(issue.code)) breaks = true;
        CHECK(report.trusted == !breaks);
    }
}

TEST_CASE("both expectation routes agree for every corpus spec") {
    for (const auto& spec : fixture_corpus()) {
        INFO(flaw_spec_to_string(spec));
        CHECK(expected_issues_for(spec) == generate_fixture_chain(spec).expected);
    }
}

TEST_CASE("unsatisfiable flaw combinations are refused by both routes") {
    std::vector<FlawSpec> bad = {
        {{ChainIssueCode::SLF, ChainIssueCode::SIG}, 1},
        {{ChainIssueCode::SLF, ChainIssueCode::INC}, 1},
        {{ChainIssueCode::UCA, ChainIssueCode::INC}, 3},
        {{ChainIssueCode::NAF, ChainIssueCode::NBF}, 1},
    };
    for (const auto& spec : bad) {
        INFO(flaw_spec_to_string(spec));
        CHECK_EQ(code_of([&] { generate_fixture_chain(spec); }), Errc::UnsatisfiableSpec);
        CHECK_EQ(code_of([&] { expected_issues_for(spec); }), Errc::UnsatisfiableSpec);
    }
    // the expired/not-yet-valid pair is fine once two certificates exist
    auto both = expected_issues_for(FlawSpec{{ChainIssueCode::NAF, ChainIssueCode::NBF}, 2});
    CHECK(both == std::set<ChainIssue>{{ChainIssueCode::NAF, 0, ""},
                                       {ChainIssueCode::NBF, 1, ""}});
}

TEST_CASE("validity issues carry the instant in their detail") {
    Prepared p = prepare(FlawSpec{{ChainIssueCode::NAF}, 2});
    ChainReport report =
        validate_chain(p.records, p.fx.hostname, p.store, p.fx.revocations, kFixtureValidationAt);
    REQUIRE(report.issues.size() == 1);
    CHECK(report.issues[0].code == ChainIssueCode::NAF);
    CHECK(report.issues[0].certificate_index == 0);
    CHECK(report.issues[0].detail.find("2023-01-14T00:00:00Z") != std::string::npos);
}

TEST_CASE("the evaluation instant decides validity, not the wall clock") {
    Prepared p = prepare(FlawSpec{{}, 2});
    auto at = [&](int64_t t) {
        return validate_chain(p.records, p.fx.hostname, p.store, p.fx.revocations, t);
    };
    CHECK(at(kFixtureValidationAt).issues.empty());
    // a year past the leaf's shelf life
    ChainReport late = at(kFixtureValidationAt + 2 * 365 * 86400);
    CHECK(late.has(ChainIssueCode::NAF));
    CHECK_FALSE(late.trusted);
    // before anything was issued
    ChainReport early = at(kFixtureValidationAt - 90 * 86400);
    CHECK(early.has(ChainIssueCode::NBF));
}

TEST_CASE("an empty trust store turns a pristine chain into UCA") {
    Prepared p = prepare(FlawSpec{{}, 2});
    TrustStore empty;
    ChainReport report =
        validate_chain(p.records, p.fx.hostname, empty, p.fx.revocations, kFixtureValidationAt);
    CHECK(report.has(ChainIssueCode::UCA));
    CHECK_FALSE(report.trusted);
    CHECK_FALSE(report.trust_anchor.has_value());
}

TEST_CASE("the wrong hostname fires HNM at the leaf only") {
    Prepared p = prepare(FlawSpec{{}, 2});
    ChainReport report = validate_chain(p.records, "someone-else.test", p.store,
                                        p.fx.revocations, kFixtureValidationAt);
    REQUIRE(report.issues.size() == 1);
    CHECK(report.issues[0].code == ChainIssueCode::HNM);
    CHECK(report.issues[0].certificate_index == 0);
    CHECK(report.trusted); // name mismatch degrades, it does not break anchoring
}

TEST_CASE("hostname matching rules") {
    CHECK(hostname_matches("gov.example", "gov.example"));
    CHECK(hostname_matches("GOV.Example", "gov.EXAMPLE"));
    CHECK(hostname_matches("*.gov.example", "portal.gov.example"));
    CHECK_FALSE(hostname_matches("*.gov.example", "a.portal.gov.example"));
    CHECK_FALSE(hostname_matches("*.gov.example", "gov.example"));
    CHECK_FALSE(hostname_matches("portal.*.example", "portal.gov.example"));
    CHECK_FALSE(hostname_matches("", "gov.example"));
    CHECK_FALSE(hostname_matches("*.example", ".example"));
}

TEST_CASE("revocation statuses") {
    Prepared p = prepare(FlawSpec{{ChainIssueCode::RVK}, 2});
    const CertificateRecord& leaf = p.records[0];
    CHECK(check_revocation(leaf, p.fx.revocations) == RevocationStatus::Revoked);

    // same issuer coverage, different serial: good
    CertificateRecord sibling = leaf;
    sibling.serial_hex = "deadbeef";
    CHECK(check_revocation(sibling, p.fx.revocations) == RevocationStatus::Good);

    // no CRL coverage at all: unknown
    RevocationData none;
    CHECK(check_revocation(leaf, none) == RevocationStatus::Unknown);

    Prepared b = prepare(FlawSpec{{ChainIssueCode::BLK}, 2});
    CHECK(check_revocation(b.records[0], b.fx.revocations) == RevocationStatus::Blocklisted);
}

TEST_CASE("weak key thresholds follow the policy") {
    Prepared p = prepare(FlawSpec{{}, 2});
    CertPolicy strict;
    strict.min_ec_bits = 384; // raise the bar above the fixtures' P-256
    ChainReport report = validate_chain(p.records, p.fx.hostname, p.store, p.fx.revocations,
                                        kFixtureValidationAt, strict);
    CHECK(report.has(ChainIssueCode::WKY));

    CertPolicy lax;
    lax.min_ec_bits = 160;
    Prepared weak = prepare(FlawSpec{{ChainIssueCode::WKY}, 2});
    ChainReport lax_report = validate_chain(weak.records, weak.fx.hostname, weak.store,
                                            weak.fx.revocations, kFixtureValidationAt, lax);
    CHECK_FALSE(lax_report.has(ChainIssueCode::WKY));
}

TEST_CASE("issue lists are sorted and unique") {
    for (const auto& spec : fixture_corpus()) {
        Prepared p = prepare(spec);
        ChainReport report = validate_chain(p.records, p.fx.hostname, p.store, p.fx.revocations,
                                            kFixtureValidationAt);
        for (size_t i = 1; i < report.issues.size(); ++i) {
            CHECK(report.issues[i - 1] < report.issues[i]);
        }
    }
}

TEST_CASE("issue_breaks_trust partition") {
    CHECK(issue_breaks_trust(ChainIssueCode::NAF));
    CHECK(issue_breaks_trust(ChainIssueCode::NBF));
    CHECK(issue_breaks_trust(ChainIssueCode::RVK));
    CHECK(issue_breaks_trust(ChainIssueCode::BLK));
    CHECK(issue_breaks_trust(ChainIssueCode::UCA));
    CHECK(issue_breaks_trust(ChainIssueCode::INC));
    CHECK_FALSE(issue_breaks_trust(ChainIssueCode::SIG));
    CHECK_FALSE(issue_breaks_trust(ChainIssueCode::HNM));
    CHECK_FALSE(issue_breaks_trust(ChainIssueCode::SLF));
    CHECK_FALSE(issue_breaks_trust(ChainIssueCode::WKY));
}

TEST_CASE("flaw spec text round trip") {
    for (const auto& spec : fixture_corpus()) {
        FlawSpec back = parse_flaw_spec(flaw_spec_to_string(spec));
        CHECK(back.flaws == spec.flaws);
        CHECK(back.depth == spec.depth);
    }
    FlawSpec none = parse_flaw_spec("flaws=none depth=3");
    CHECK(none.flaws.empty());
    CHECK(none.depth == 3);
    CHECK_EQ(code_of([] { parse_flaw_spec("flaws=XYZ depth=2"); }), Errc::SchemaError);
    CHECK_EQ(code_of([] { parse_flaw_spec("depth=2"); }), Errc::SchemaError);
}
